"""Shared independent oracles for the test suite.

These deliberately avoid the library's own vectorized code paths: SINRs are
recomputed with explicit per-component scalar arithmetic, and gradients are
checked against central finite differences.
"""

import math

import numpy as np

from mmwnoma.neural import MlpParams, backward, forward


def scalar_sinr_pair(h1, h2, w1, w2, p1, p2, noise_var):
    """SIC SINR pair via plain python loops (no numpy reductions)."""

    def mag2_conj_dot(h, w):
        re = 0.0
        im = 0.0
        for hk, wk in zip(h, w):
            a, b = float(hk.real), float(hk.imag)
            c, d = float(wk.real), float(wk.imag)
            re += a * c + b * d
            im += a * d - b * c
        return re * re + im * im

    sinr1 = mag2_conj_dot(h1, w1) * p1 / (mag2_conj_dot(h1, w2) * p2 + noise_var)
    sinr2 = mag2_conj_dot(h2, w2) * p2 / noise_var
    return sinr1, sinr2


def scalar_rates(sinr1, sinr2):
    return math.log2(1.0 + sinr1), math.log2(1.0 + sinr2)


def random_unit_complex(rng, n):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def flat_params(params: MlpParams) -> np.ndarray:
    chunks = []
    for w, b in zip(params.weights, params.biases):
        chunks.append(w.ravel())
        chunks.append(b.ravel())
    return np.concatenate(chunks)


def set_flat_params(params: MlpParams, flat: np.ndarray) -> None:
    pos = 0
    for w, b in zip(params.weights, params.biases):
        w[...] = flat[pos : pos + w.size].reshape(w.shape)
        pos += w.size
        b[...] = flat[pos : pos + b.size]
        pos += b.size


def flat_grads(grads) -> np.ndarray:
    chunks = []
    for dw, db in zip(grads.d_weights, grads.d_biases):
        chunks.append(dw.ravel())
        chunks.append(db.ravel())
    return np.concatenate(chunks)


def finite_difference_param_grads(loss_fn, params: MlpParams, h: float = 1e-5) -> np.ndarray:
    """Central differences of a scalar loss over every parameter entry."""
    theta = flat_params(params)
    fd = np.empty_like(theta)
    for i in range(theta.size):
        bump = theta.copy()
        bump[i] = theta[i] + h
        set_flat_params(params, bump)
        up = loss_fn()
        bump[i] = theta[i] - h
        set_flat_params(params, bump)
        down = loss_fn()
        fd[i] = (up - down) / (2.0 * h)
    set_flat_params(params, theta)
    return fd


def gradcheck_max_relative_error(params: MlpParams, x: np.ndarray, probe: np.ndarray, h: float = 1e-5):
    """Compare backprop grads of loss = probe . forward(x) to central FD.

    Relative error uses max(|analytic|, |fd|, 1e-6) as denominator so that
    near-zero gradients are compared absolutely.
    """

    def loss_fn():
        y, _ = forward(params, x)
        return float(np.dot(probe, y))

    y, cache = forward(params, x)
    grads, _ = backward(params, cache, probe)
    analytic = flat_grads(grads)
    fd = finite_difference_param_grads(loss_fn, params, h)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), 1e-6)
    return float(np.max(np.abs(analytic - fd) / denom))


def finite_difference_input_grad(params: MlpParams, x: np.ndarray, probe: np.ndarray, h: float = 1e-5):
    fd = np.empty_like(x)
    for i in range(x.size):
        up = x.copy()
        up[i] += h
        down = x.copy()
        down[i] -= h
        y_up, _ = forward(params, up)
        y_down, _ = forward(params, down)
        fd[i] = (np.dot(probe, y_up) - np.dot(probe, y_down)) / (2.0 * h)
    return fd
