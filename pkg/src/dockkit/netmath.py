"""Toy-scale numeric reference for the fusion network's forward math.

Covers the pyramid-pooling head, MLP-similarity cross-attention with residual
layer norm, the causal autoregressive decoders, orientation normalisation and
the weighted L1 docking loss with its subgradient. Weights come from seeded
generators; nothing here is trained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import Trajectory
from .errors import InvalidArgumentError, ShapeError

LOSS_ALPHA = 0.63
LOSS_BETA = 0.37
LN_EPS = 1e-5

RGB, DEPTH, FUSED = "rgb", "depth", "fused"


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FeatureGrid:
    """H x W x C feature map (stand-in for the RGB backbone output)."""

    data: np.ndarray

    def __post_init__(self):
        a = _frozen(self.data)
        if a.ndim != 3 or min(a.shape) < 1:
            raise ShapeError(f"feature grid must be H x W x C, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidArgumentError("feature grid entries must be finite")
        object.__setattr__(self, "data", a)

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True, eq=False)
class FeatureSet:
    rows: np.ndarray
    role: str

    def __post_init__(self):
        a = _frozen(self.rows)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ShapeError(f"feature set must be N x d with N, d >= 1, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidArgumentError("feature entries must be finite")
        if self.role not in (RGB, DEPTH, FUSED):
            raise InvalidArgumentError(f"unknown feature role {self.role!r}")
        object.__setattr__(self, "rows", a)


_ACTIVATIONS = {
    "relu": lambda x: np.maximum(x, 0.0),
    "tanh": np.tanh,
    "linear": lambda x: x,
}


@dataclass(frozen=True, eq=False)
class MLPSpec:
    """Fully connected stack; ``activation`` follows every layer but the last.

    ``weights[k]`` has shape ``(in_k, out_k)`` and rows are treated as samples.
    """

    weights: tuple
    biases: tuple
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in _ACTIVATIONS:
            raise InvalidArgumentError(f"unknown activation {self.activation!r}")
        if len(self.weights) == 0 or len(self.weights) != len(self.biases):
            raise ShapeError("need one bias per weight matrix and at least one layer")
        ws = tuple(_frozen(w) for w in self.weights)
        bs = tuple(_frozen(b).reshape(-1) for b in self.biases)
        for k, (w, b) in enumerate(zip(ws, bs)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ShapeError(f"layer {k}: weight {w.shape} inconsistent with bias {b.shape}")
            if k and ws[k - 1].shape[1] != w.shape[0]:
                raise ShapeError(f"layer {k} input {w.shape[0]} != previous output {ws[k - 1].shape[1]}")
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)

    @property
    def widths(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def in_width(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_width(self) -> int:
        return self.weights[-1].shape[1]

    def __call__(self, x) -> np.ndarray:
        h = np.asarray(x, dtype=float)
        if h.shape[-1] != self.in_width:
            raise ShapeError(f"MLP expects input width {self.in_width}, got {h.shape[-1]}")
        act = _ACTIVATIONS[self.activation]
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if k < last:
                h = act(h)
        return h

    @classmethod
    def seeded(cls, widths: Sequence[int], seed, activation: str = "relu") -> "MLPSpec":
        """Glorot-uniform weights and small biases from a seeded generator."""
        rng = np.random.default_rng(seed)
        ws, bs = [], []
        for a, b in zip(widths[:-1], widths[1:]):
            lim = math.sqrt(6.0 / (a + b))
            ws.append(rng.uniform(-lim, lim, size=(a, b)))
            bs.append(rng.uniform(-0.1, 0.1, size=b))
        return cls(tuple(ws), tuple(bs), activation)

    @classmethod
    def identity(cls, n: int) -> "MLPSpec":
        return cls((np.eye(n),), (np.zeros(n),), "linear")

    @classmethod
    def constant(cls, widths: Sequence[int], bias: float = 0.0, activation: str = "relu") -> "MLPSpec":
        """Zero weights everywhere; the output is ``bias`` in every unit."""
        ws = [np.zeros((a, b)) for a, b in zip(widths[:-1], widths[1:])]
        bs = [np.zeros(b) for b in widths[1:]]
        bs[-1] = np.full(widths[-1], float(bias))
        return cls(tuple(ws), tuple(bs), activation)


def _bin_edges(n: int, bins: int) -> list[tuple[int, int]]:
    # adaptive average pooling bin layout
    return [((i * n) // bins, -((-(i + 1) * n) // bins)) for i in range(bins)]


def pyramid_pool(grid: FeatureGrid, scales: Sequence[int] = (1, 2, 3, 6)) -> np.ndarray:
    """Average-pool the grid into s x s bins per scale and concatenate.

    Layout: scales in order, bins row-major within a scale, channels
    innermost.
    """
    H, W, C = grid.shape
    out = []
    for s in scales:
        if int(s) != s or s < 1:
            raise InvalidArgumentError(f"scale must be a positive integer, got {s!r}")
        if s > min(H, W):
            raise InvalidArgumentError(f"scale {s} exceeds grid size {H}x{W}")
        for r0, r1 in _bin_edges(H, s):
            for c0, c1 in _bin_edges(W, s):
                out.append(grid.data[r0:r1, c0:c1, :].mean(axis=(0, 1)))
    return np.concatenate(out)


def fap_head(grid: FeatureGrid, scales: Sequence[int], mlp: MLPSpec) -> np.ndarray:
    """Pyramid-pooled descriptor projected through the head MLP."""
    f = pyramid_pool(grid, scales)
    if f.shape[0] != mlp.in_width:
        raise ShapeError(f"pooled vector has {f.shape[0]} entries, MLP expects {mlp.in_width}")
    return mlp(f)


def row_softmax(scores) -> np.ndarray:
    """Softmax along the last axis with per-row max subtraction.

    Entries equal to ``-inf`` get exactly zero weight.
    """
    s = np.asarray(scores, dtype=float)
    m = np.max(s, axis=-1, keepdims=True)
    e = np.exp(s - m)
    return e / np.sum(e, axis=-1, keepdims=True)


def pairwise_scores(Q: np.ndarray, K: np.ndarray, phi: MLPSpec) -> np.ndarray:
    """phi([Q_i, K_j]) for every query/key pair, shape (N, M)."""
    N, d = Q.shape
    M = K.shape[0]
    if phi.in_width != 2 * d or phi.out_width != 1:
        raise ShapeError(f"phi must map {2 * d} -> 1, got {phi.in_width} -> {phi.out_width}")
    pairs = np.concatenate(
        [np.broadcast_to(Q[:, None, :], (N, M, d)), np.broadcast_to(K[None, :, :], (N, M, d))], axis=2
    )
    return phi(pairs)[..., 0]


@dataclass(frozen=True, eq=False)
class AttentionOutput:
    matrix: np.ndarray
    fused: np.ndarray


@dataclass(frozen=True, eq=False)
class CrossAttentionWeights:
    W_q: np.ndarray
    W_k: np.ndarray
    W_v: np.ndarray
    phi: MLPSpec

    @classmethod
    def seeded(cls, d_depth: int, d_rgb: int, d: int, seed) -> "CrossAttentionWeights":
        rng = np.random.default_rng(seed)
        W_q = rng.normal(0.0, 1.0 / math.sqrt(d_depth), size=(d_depth, d))
        W_k = rng.normal(0.0, 1.0 / math.sqrt(d_rgb), size=(d_rgb, d))
        W_v = rng.normal(0.0, 1.0 / math.sqrt(d_rgb), size=(d_rgb, d))
        phi = MLPSpec.seeded([2 * d, 2 * d, 1], rng, activation="tanh")
        return cls(W_q, W_k, W_v, phi)


def cross_attention(fd: FeatureSet, fr: FeatureSet, W_q, W_k, W_v, phi: MLPSpec) -> AttentionOutput:
    """Depth queries attend over RGB keys/values with an MLP similarity."""
    W_q, W_k, W_v = (np.asarray(w, dtype=float) for w in (W_q, W_k, W_v))
    if W_q.shape[0] != fd.rows.shape[1] or W_k.shape[0] != fr.rows.shape[1] or W_v.shape[0] != fr.rows.shape[1]:
        raise ShapeError("projection input widths do not match the feature widths")
    if not (W_q.shape[1] == W_k.shape[1] == W_v.shape[1]):
        raise ShapeError("projections must share the latent width d")
    Q = fd.rows @ W_q
    K = fr.rows @ W_k
    V = fr.rows @ W_v
    A = row_softmax(pairwise_scores(Q, K, phi))
    return AttentionOutput(A, A @ V)


def layer_norm(x, eps: float = LN_EPS) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    mu = x.mean(axis=-1, keepdims=True)
    c = x - mu
    var = np.mean(c * c, axis=-1, keepdims=True)
    denom = np.sqrt(var + eps)
    with np.errstate(invalid="ignore", divide="ignore"):
        y = c / denom
    return np.where(denom > 0, y, 0.0)


def residual_layernorm(fr: FeatureSet, fcross, eps: float = LN_EPS) -> FeatureSet:
    fcross = np.asarray(fcross, dtype=float)
    if fr.rows.shape != fcross.shape:
        raise ShapeError(f"residual shapes differ: {fr.rows.shape} vs {fcross.shape}")
    if not eps >= 0:
        raise InvalidArgumentError("eps must be non-negative")
    return FeatureSet(layer_norm(fr.rows + fcross, eps), FUSED)


def fuse(fd: FeatureSet, fr: FeatureSet, weights: CrossAttentionWeights, eps: float = LN_EPS) -> FeatureSet:
    att = cross_attention(fd, fr, weights.W_q, weights.W_k, weights.W_v, weights.phi)
    return residual_layernorm(fr, att.fused, eps)


# ---------------------------------------------------------------- decoder

POSITION, ORIENTATION = "position", "orientation"


def sinusoidal_table(length: int, d: int) -> np.ndarray:
    pos = np.arange(length)[:, None]
    i = np.arange(d)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / d)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))


def causal_mask(T: int) -> np.ndarray:
    """T x T additive mask: 0 on and below the diagonal, -inf above."""
    m = np.zeros((T, T))
    m[np.triu_indices(T, k=1)] = -np.inf
    return m


def normalize_orientation(raw) -> np.ndarray:
    """L2-normalise 2-vectors row-wise; a zero vector maps to (1, 0)."""
    raw = np.asarray(raw, dtype=float)
    n = np.linalg.norm(raw, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = raw / n
    fallback = np.zeros_like(raw)
    fallback[..., 0] = 1.0
    return np.where(n > 0, out, fallback)


@dataclass(frozen=True, eq=False)
class DecoderWeights:
    """Single-block, single-head decoder over a fused context."""

    kind: str
    e_start: np.ndarray
    W_in: np.ndarray
    b_in: np.ndarray
    pos_table: np.ndarray
    self_qkvo: tuple
    cross_qkvo: tuple
    ff: MLPSpec
    W_out: np.ndarray
    b_out: np.ndarray
    eps: float = LN_EPS

    @property
    def d(self) -> int:
        return self.W_in.shape[1]

    @property
    def max_steps(self) -> int:
        return self.pos_table.shape[0]

    @classmethod
    def seeded(cls, kind: str, d: int, max_steps: int, seed) -> "DecoderWeights":
        if kind not in (POSITION, ORIENTATION):
            raise InvalidArgumentError(f"unknown decoder kind {kind!r}")
        rng = np.random.default_rng(seed)
        s = 1.0 / math.sqrt(d)

        def mat(a, b, scale):
            return rng.normal(0.0, scale, size=(a, b))

        e_start = rng.normal(0.0, 1.0, size=2)
        W_in = mat(2, d, 1.0)
        b_in = rng.normal(0.0, 0.1, size=d)
        self_qkvo = tuple(mat(d, d, s) for _ in range(4))
        cross_qkvo = tuple(mat(d, d, s) for _ in range(4))
        ff = MLPSpec.seeded([d, 2 * d, d], rng, activation="relu")
        W_out = mat(d, 2, s)
        b_out = rng.normal(0.0, 0.1, size=2)
        return cls(kind, e_start, W_in, b_in, sinusoidal_table(max_steps, d), self_qkvo, cross_qkvo, ff, W_out, b_out)


def _attend(x, keys_src, qkvo, mask=None):
    W_q, W_k, W_v, W_o = qkvo
    q = x @ W_q
    k = keys_src @ W_k
    v = keys_src @ W_v
    s = (q @ k.T) / math.sqrt(q.shape[1])
    if mask is not None:
        s = s + mask
    return (row_softmax(s) @ v) @ W_o


def decoder_forward(weights: DecoderWeights, tokens, context: FeatureSet) -> np.ndarray:
    """Run the decoder block on a full input-token sequence (parallel mode).

    Row t of the output depends only on tokens 0..t through the causal mask.
    Orientation decoders return unit vectors.
    """
    tokens = np.asarray(tokens, dtype=float).reshape(-1, 2)
    T = tokens.shape[0]
    if T < 1:
        raise InvalidArgumentError("need at least one input token")
    if T > weights.max_steps:
        raise InvalidArgumentError(f"sequence length {T} exceeds positional table {weights.max_steps}")
    C = context.rows
    if C.shape[1] != weights.d:
        raise ShapeError(f"context width {C.shape[1]} != decoder width {weights.d}")
    # pad to the table length so every call runs identically shaped matmuls;
    # the causal mask keeps padded rows out of the real ones
    L = weights.max_steps
    padded = np.zeros((L, 2))
    padded[:T] = tokens
    h = padded @ weights.W_in + weights.b_in + weights.pos_table
    h = layer_norm(h + _attend(h, h, weights.self_qkvo, causal_mask(L)), weights.eps)
    h = layer_norm(h + _attend(h, C, weights.cross_qkvo), weights.eps)
    h = layer_norm(h + weights.ff(h), weights.eps)
    out = (h @ weights.W_out + weights.b_out)[:T]
    if weights.kind == ORIENTATION:
        out = normalize_orientation(out)
    return out


@dataclass(frozen=True)
class DecoderState:
    """Autoregressive state: outputs generated so far and the start token."""

    prefix: tuple
    e_start: tuple

    @property
    def step(self) -> int:
        return len(self.prefix) + 1

    def tokens(self) -> np.ndarray:
        return np.array([self.e_start, *self.prefix], dtype=float).reshape(-1, 2)

    def advance(self, y) -> "DecoderState":
        return DecoderState(self.prefix + (tuple(float(c) for c in y),), self.e_start)

    @classmethod
    def initial(cls, weights: DecoderWeights) -> "DecoderState":
        return cls((), tuple(float(c) for c in weights.e_start))


def _check_context(context: FeatureSet):
    if context is None or context.rows.shape[0] == 0:
        raise InvalidArgumentError("decoder context is empty")
    if context.role != FUSED:
        raise InvalidArgumentError(f"decoder context must be fused features, got {context.role!r}")


def decode_step(state: DecoderState, context: FeatureSet, weights: DecoderWeights) -> np.ndarray:
    """Output for step ``state.step`` given the start token and the prefix."""
    _check_context(context)
    return decoder_forward(weights, state.tokens(), context)[-1]


def decode_sequential(weights: DecoderWeights, context: FeatureSet, T: int) -> np.ndarray:
    if int(T) != T or T < 1:
        raise InvalidArgumentError(f"T must be a positive integer, got {T!r}")
    state = DecoderState.initial(weights)
    out = []
    for _ in range(T):
        y = decode_step(state, context, weights)
        out.append(y)
        state = state.advance(y)
    return np.array(out)


def decode_teacher_forced(weights: DecoderWeights, context: FeatureSet, targets) -> np.ndarray:
    """Parallel decode with ground-truth tokens shifted right behind the start token."""
    _check_context(context)
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    tokens = np.vstack([weights.e_start[None, :], targets[:-1]])
    return decoder_forward(weights, tokens, context)


@dataclass(frozen=True, eq=False)
class DualDecoderWeights:
    position: DecoderWeights
    orientation: DecoderWeights

    @classmethod
    def seeded(cls, d: int, max_steps: int, seed: int) -> "DualDecoderWeights":
        ss = np.random.SeedSequence(seed).spawn(2)
        return cls(
            DecoderWeights.seeded(POSITION, d, max_steps, ss[0]),
            DecoderWeights.seeded(ORIENTATION, d, max_steps, ss[1]),
        )


def decode_trajectory(context: FeatureSet, T: int, weights: DualDecoderWeights) -> Trajectory:
    """Run both decoders autoregressively over the shared fused context."""
    if int(T) != T or T < 1:
        raise InvalidArgumentError(f"T must be a positive integer, got {T!r}")
    pos = decode_sequential(weights.position, context, T)
    ori = decode_sequential(weights.orientation, context, T)
    return Trajectory(pos, ori, norm_tol=1e-9)


# ---------------------------------------------------------------- loss

def _as_arrays(traj):
    if isinstance(traj, Trajectory):
        return traj.positions, traj.orientations
    p, o = traj
    return np.asarray(p, dtype=float), np.asarray(o, dtype=float)


def docking_loss(pred, gt, alpha: float = LOSS_ALPHA, beta: float = LOSS_BETA) -> float:
    """alpha * mean L1 position error + beta * mean L1 orientation-vector error.

    ``pred`` and ``gt`` are Trajectories or ``(positions, orientations)``
    array pairs; the latter allows non-unit predicted vectors.
    """
    pp, po = _as_arrays(pred)
    gp, go = _as_arrays(gt)
    if pp.shape != gp.shape or po.shape != go.shape or pp.shape[0] != po.shape[0]:
        raise ShapeError(f"prediction {pp.shape}/{po.shape} vs ground truth {gp.shape}/{go.shape}")
    if alpha < 0 or beta < 0:
        raise InvalidArgumentError("loss weights must be non-negative")
    n = pp.shape[0]
    pos = np.sum(np.abs(gp - pp)) / n
    ori = np.sum(np.abs(go - po)) / n
    return float(alpha * pos + beta * ori)


def docking_loss_grad(pred, gt, alpha: float = LOSS_ALPHA, beta: float = LOSS_BETA):
    """Subgradient of :func:`docking_loss` w.r.t. predicted positions and orientations.

    Uses sign(0) = 0 at the kinks.
    """
    pp, po = _as_arrays(pred)
    gp, go = _as_arrays(gt)
    if pp.shape != gp.shape or po.shape != go.shape:
        raise ShapeError("prediction and ground truth shapes differ")
    n = pp.shape[0]
    return alpha * np.sign(pp - gp) / n, beta * np.sign(po - go) / n


def finite_diff_gradient(f: Callable[[np.ndarray], float], x, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    if not h > 0:
        raise InvalidArgumentError("step h must be positive")
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise InvalidArgumentError(f"function value is not finite near coordinate {i}")
        gf[i] = (fp - fm) / (2.0 * h)
    return g
