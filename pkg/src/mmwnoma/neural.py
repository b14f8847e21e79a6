"""Minimal dense-network engine: forward pass, exact backprop, Adam.

Only what the actor/critic pair needs: fixed MLP topologies with relu, tanh,
or identity activations, float64 throughout, no autodiff framework. The
backward pass also returns the gradient with respect to the network input,
which the policy update needs to differentiate the Q-head through the action.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "tanh", "identity")

CHECKPOINT_MAGIC = b"MLPCKPT1"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class LayerSpec:
    """One dense layer: width in, width out, activation tag."""

    in_width: int
    out_width: int
    activation: str

    def __post_init__(self) -> None:
        if self.in_width < 1 or self.out_width < 1:
            raise ValueError(f"layer widths must be >= 1, got {self.in_width}x{self.out_width}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}, expected one of {ACTIVATIONS}")


@dataclass
class MlpParams:
    """Weights/biases per layer. W has shape (out, in), b shape (out,)."""

    specs: tuple[LayerSpec, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    version: int = 1

    def __post_init__(self) -> None:
        if not self.specs:
            raise ValueError("network needs at least one layer")
        for a, b in zip(self.specs, self.specs[1:]):
            if a.out_width != b.in_width:
                raise ValueError(f"layer widths do not chain: {a.out_width} -> {b.in_width}")
        if len(self.weights) != len(self.specs) or len(self.biases) != len(self.specs):
            raise ValueError("one weight matrix and bias vector required per layer")
        for spec, w, b in zip(self.specs, self.weights, self.biases):
            if w.shape != (spec.out_width, spec.in_width):
                raise ValueError(f"weight shape {w.shape} != ({spec.out_width}, {spec.in_width})")
            if b.shape != (spec.out_width,):
                raise ValueError(f"bias shape {b.shape} != ({spec.out_width},)")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError("parameters must be finite")

    @property
    def in_width(self) -> int:
        return self.specs[0].in_width

    @property
    def out_width(self) -> int:
        return self.specs[-1].out_width

    def copy(self) -> "MlpParams":
        return MlpParams(
            specs=self.specs,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            version=self.version,
        )


@dataclass
class MlpGrads:
    """Parameter gradients shaped exactly like the MlpParams they belong to."""

    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]


@dataclass
class ForwardCache:
    """Per-layer inputs and pre-activations from one forward call."""

    inputs: list[np.ndarray]
    preacts: list[np.ndarray]
    squeezed: bool


def _activate(tag: str, z: np.ndarray) -> np.ndarray:
    if tag == "relu":
        return np.maximum(z, 0.0)
    if tag == "tanh":
        return np.tanh(z)
    return z


def _activate_grad(tag: str, z: np.ndarray) -> np.ndarray:
    if tag == "relu":
        return (z > 0.0).astype(float)
    if tag == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    return np.ones_like(z)


def forward(params: MlpParams, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Run the network on a vector (in,) or batch (B, in).

    Returns the output with matching leading shape and a cache sufficient
    for an exact backward pass.
    """
    x = np.asarray(x, dtype=float)
    squeezed = x.ndim == 1
    xb = x[None, :] if squeezed else x
    if xb.ndim != 2 or xb.shape[1] != params.in_width:
        raise ValueError(f"input width {xb.shape} does not match network input {params.in_width}")
    inputs, preacts = [], []
    for spec, w, b in zip(params.specs, params.weights, params.biases):
        inputs.append(xb)
        z = xb @ w.T + b
        preacts.append(z)
        xb = _activate(spec.activation, z)
    y = xb[0] if squeezed else xb
    return y, ForwardCache(inputs=inputs, preacts=preacts, squeezed=squeezed)


def backward(
    params: MlpParams,
    cache: ForwardCache,
    grad_out: np.ndarray,
) -> tuple[MlpGrads, np.ndarray]:
    """Exact gradients of a scalar loss given d(loss)/d(output).

    Returns parameter gradients (summed over the batch) and the gradient
    with respect to the network input. The cache must come from a matching
    forward call; mismatched shapes are rejected.
    """
    if len(cache.inputs) != len(params.specs):
        raise ValueError("cache depth does not match network depth")
    for spec, xin, z in zip(params.specs, cache.inputs, cache.preacts):
        if xin.shape[1] != spec.in_width or z.shape[1] != spec.out_width:
            raise ValueError("stale cache: layer shapes do not match parameters")
    g = np.asarray(grad_out, dtype=float)
    if cache.squeezed:
        g = g[None, :]
    if g.shape != cache.preacts[-1].shape:
        raise ValueError(f"grad_out shape {g.shape} != output shape {cache.preacts[-1].shape}")
    d_weights = [np.empty(0)] * len(params.specs)
    d_biases = [np.empty(0)] * len(params.specs)
    for i in reversed(range(len(params.specs))):
        spec = params.specs[i]
        dz = g * _activate_grad(spec.activation, cache.preacts[i])
        d_weights[i] = dz.T @ cache.inputs[i]
        d_biases[i] = dz.sum(axis=0)
        g = dz @ params.weights[i]
    grad_in = g[0] if cache.squeezed else g
    return MlpGrads(d_weights=d_weights, d_biases=d_biases), grad_in


@dataclass
class AdamState:
    """Adam moment accumulators and step counter for one parameter set."""

    lr: float
    beta1: float
    beta2: float
    eps: float
    step: int
    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]


def adam_init(
    params: MlpParams,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    return AdamState(
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
        step=0,
        m_w=[np.zeros_like(w) for w in params.weights],
        v_w=[np.zeros_like(w) for w in params.weights],
        m_b=[np.zeros_like(b) for b in params.biases],
        v_b=[np.zeros_like(b) for b in params.biases],
    )


def adam_step(params: MlpParams, grads: MlpGrads, state: AdamState) -> tuple[MlpParams, AdamState]:
    """One bias-corrected Adam update, in place on params and state."""
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    packs = (
        (params.weights, grads.d_weights, state.m_w, state.v_w),
        (params.biases, grads.d_biases, state.m_b, state.v_b),
    )
    for arrays, darrays, ms, vs in packs:
        if len(darrays) != len(arrays):
            raise ValueError("gradient structure does not match parameters")
        for p, g, m_acc, v_acc in zip(arrays, darrays, ms, vs):
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
            m_acc *= state.beta1
            m_acc += (1.0 - state.beta1) * g
            v_acc *= state.beta2
            v_acc += (1.0 - state.beta2) * g * g
            p -= state.lr * (m_acc / c1) / (np.sqrt(v_acc / c2) + state.eps)
    return params, state


def _init_layer(rng: np.random.Generator, spec: LayerSpec, scale: float | None) -> tuple[np.ndarray, np.ndarray]:
    # Fan-in uniform init; the output layer gets a small fixed range so the
    # initial policy/value estimates start near zero.
    limit = scale if scale is not None else 1.0 / np.sqrt(spec.in_width)
    w = rng.uniform(-limit, limit, size=(spec.out_width, spec.in_width))
    b = rng.uniform(-limit, limit, size=spec.out_width)
    return w, b


def build_mlp(
    widths: list[int],
    hidden_activation: str = "relu",
    output_activation: str = "identity",
    rng: np.random.Generator | int | None = None,
    final_scale: float | None = 3e-3,
) -> MlpParams:
    """Dense network through the given widths (input, hidden..., output)."""
    if len(widths) < 2:
        raise ValueError("need at least input and output widths")
    rng = np.random.default_rng(rng)
    specs = []
    for i, (win, wout) in enumerate(zip(widths, widths[1:])):
        last = i == len(widths) - 2
        specs.append(LayerSpec(win, wout, output_activation if last else hidden_activation))
    weights, biases = [], []
    for i, spec in enumerate(specs):
        w, b = _init_layer(rng, spec, final_scale if i == len(specs) - 1 else None)
        weights.append(w)
        biases.append(b)
    return MlpParams(specs=tuple(specs), weights=weights, biases=biases)


def actor_dims(n_antennas: int) -> tuple[int, int]:
    """(state width, action width) = (4N+1, 4N+2)."""
    return 4 * n_antennas + 1, 4 * n_antennas + 2


def build_actor(
    n_antennas: int,
    hidden_width: int = 128,
    rng: np.random.Generator | int | None = None,
    output_activation: str = "tanh",
) -> MlpParams:
    """Policy net: state (4N+1) -> 4 hidden relu layers -> action (4N+2).

    The output layer squashes to (-1, 1) by default: the projection is
    scale-invariant in the beamformer parts, so an unbounded output lets the
    critic reward pure magnitude growth and training diverges. identity is
    available for experiments.
    """
    s_dim, a_dim = actor_dims(n_antennas)
    return build_mlp([s_dim, *([hidden_width] * 4), a_dim], rng=rng, output_activation=output_activation)


def build_critic(
    n_antennas: int,
    hidden_width: int = 128,
    rng: np.random.Generator | int | None = None,
) -> MlpParams:
    """Q net: concatenated state+action (8N+3) -> 3 hidden relu layers -> scalar."""
    s_dim, a_dim = actor_dims(n_antennas)
    return build_mlp([s_dim + a_dim, *([hidden_width] * 3), 1], rng=rng)


def save_checkpoint(path, networks: dict[str, MlpParams]) -> None:
    """Write named networks to a self-describing little-endian binary file."""
    header = {
        "format": "mmwnoma-mlp-checkpoint",
        "version": CHECKPOINT_VERSION,
        "dtype": "float64",
        "byte_order": "little",
        "networks": [
            {
                "name": name,
                "params_version": net.version,
                "layers": [
                    {"in": s.in_width, "out": s.out_width, "activation": s.activation}
                    for s in net.specs
                ],
            }
            for name, net in networks.items()
        ],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for net in networks.values():
            for w, b in zip(net.weights, net.biases):
                f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
                f.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_checkpoint(path) -> dict[str, MlpParams]:
    """Read a checkpoint written by save_checkpoint."""
    with open(path, "rb") as f:
        magic = f.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"not a checkpoint file: bad magic {magic!r}")
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen).decode("utf-8"))
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header.get('version')}")
        out: dict[str, MlpParams] = {}
        for entry in header["networks"]:
            specs, weights, biases = [], [], []
            for layer in entry["layers"]:
                spec = LayerSpec(layer["in"], layer["out"], layer["activation"])
                specs.append(spec)
                w_bytes = f.read(8 * spec.out_width * spec.in_width)
                weights.append(
                    np.frombuffer(w_bytes, dtype="<f8").astype(float).reshape(spec.out_width, spec.in_width)
                )
                b_bytes = f.read(8 * spec.out_width)
                biases.append(np.frombuffer(b_bytes, dtype="<f8").astype(float))
            out[entry["name"]] = MlpParams(
                specs=tuple(specs),
                weights=weights,
                biases=biases,
                version=entry.get("params_version", 1),
            )
        trailing = f.read(1)
        if trailing:
            raise ValueError("checkpoint has trailing bytes; file is corrupt")
    return out
