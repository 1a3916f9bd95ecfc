import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dockkit.core import Trajectory
from dockkit.errors import InvalidArgumentError, ShapeError
from dockkit.netmath import (
    LOSS_ALPHA,
    LOSS_BETA,
    CrossAttentionWeights,
    DecoderState,
    DecoderWeights,
    DualDecoderWeights,
    FeatureGrid,
    FeatureSet,
    MLPSpec,
    cross_attention,
    decode_sequential,
    decode_step,
    decode_teacher_forced,
    decode_trajectory,
    decoder_forward,
    docking_loss,
    docking_loss_grad,
    fap_head,
    finite_diff_gradient,
    fuse,
    normalize_orientation,
    pyramid_pool,
    residual_layernorm,
    row_softmax,
)


# ------------------------------------------------------------ scalar oracles

def scalar_pool(data, scales):
    H, W, C = len(data), len(data[0]), len(data[0][0])
    out = []
    for s in scales:
        for i in range(s):
            r0, r1 = math.floor(i * H / s), math.ceil((i + 1) * H / s)
            for j in range(s):
                c0, c1 = math.floor(j * W / s), math.ceil((j + 1) * W / s)
                for c in range(C):
                    vals = [data[r][q][c] for r in range(r0, r1) for q in range(c0, c1)]
                    out.append(sum(vals) / len(vals))
    return out


def scalar_mlp(mlp, x):
    act = {"relu": lambda t: max(t, 0.0), "tanh": math.tanh, "linear": lambda t: t}[mlp.activation]
    h = list(x)
    for k, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        nxt = []
        for o in range(w.shape[1]):
            acc = b[o]
            for i in range(w.shape[0]):
                acc += h[i] * w[i, o]
            nxt.append(act(acc) if k < len(mlp.weights) - 1 else acc)
        h = nxt
    return h


def matvec_rows(X, W):
    return [[sum(row[i] * W[i, o] for i in range(len(row))) for o in range(W.shape[1])] for row in X]


def scalar_cross_attention(fd, fr, cw):
    Q = matvec_rows(fd.tolist(), cw.W_q)
    K = matvec_rows(fr.tolist(), cw.W_k)
    V = matvec_rows(fr.tolist(), cw.W_v)
    A, F = [], []
    for q in Q:
        scores = [scalar_mlp(cw.phi, q + k)[0] for k in K]
        m = max(scores)
        e = [math.exp(s - m) for s in scores]
        z = sum(e)
        a = [x / z for x in e]
        A.append(a)
        F.append([sum(a[j] * V[j][c] for j in range(len(V))) for c in range(len(V[0]))])
    return np.array(A), np.array(F)


def feats(rng, n, d, role):
    return FeatureSet(rng.normal(size=(n, d)), role)


# ------------------------------------------------------------ pooling / FAP

def test_pool_examples():
    g = FeatureGrid(np.array([[1.0, 2.0], [3.0, 4.0]])[:, :, None])
    np.testing.assert_array_equal(pyramid_pool(g, [1]), [2.5])
    np.testing.assert_array_equal(pyramid_pool(g, [1, 2]), [2.5, 1, 2, 3, 4])
    const = FeatureGrid(np.full((6, 6, 3), 7.0))
    np.testing.assert_allclose(pyramid_pool(const, [1, 2, 3, 6]), 7.0, rtol=1e-15)
    with pytest.raises(InvalidArgumentError):
        pyramid_pool(g, [3])


def test_pool_matches_scalar_oracle(rng):
    for shape in [(8, 8, 4), (7, 5, 2), (6, 9, 3)]:
        data = rng.normal(size=shape)
        scales = [s for s in (1, 2, 3, 4) if s <= min(shape[:2])]
        np.testing.assert_allclose(
            pyramid_pool(FeatureGrid(data), scales), scalar_pool(data.tolist(), scales), atol=1e-12
        )


def test_fap_examples():
    const = FeatureGrid(np.full((2, 2, 1), 3.0))
    np.testing.assert_array_equal(fap_head(const, [1, 2], MLPSpec.identity(5)), [3.0] * 5)
    np.testing.assert_array_equal(fap_head(const, [1, 2], MLPSpec.constant([5, 4, 3], bias=0.25)), [0.25] * 3)
    with pytest.raises(ShapeError):
        fap_head(const, [1], MLPSpec.identity(5))


def test_fap_matches_scalar_oracle(rng):
    for seed in range(5):
        data = rng.normal(size=(2, 2, 3))
        mlp = MLPSpec.seeded([15, 10, 6], seed)
        expected = scalar_mlp(mlp, scalar_pool(data.tolist(), [1, 2]))
        np.testing.assert_allclose(fap_head(FeatureGrid(data), [1, 2], mlp), expected, atol=1e-9)
    data = rng.normal(size=(8, 8, 4))
    mlp = MLPSpec.seeded([4 * 50, 16, 8], 99, activation="tanh")
    expected = scalar_mlp(mlp, scalar_pool(data.tolist(), [1, 2, 3, 6]))
    np.testing.assert_allclose(fap_head(FeatureGrid(data), [1, 2, 3, 6], mlp), expected, atol=1e-9)


# ------------------------------------------------------------ attention

def test_single_key_attention(rng):
    fd, fr = feats(rng, 4, 3, "depth"), feats(rng, 1, 5, "rgb")
    cw = CrossAttentionWeights.seeded(3, 5, 6, 1)
    out = cross_attention(fd, fr, cw.W_q, cw.W_k, cw.W_v, cw.phi)
    np.testing.assert_array_equal(out.matrix, np.ones((4, 1)))
    np.testing.assert_allclose(out.fused, np.repeat(fr.rows @ cw.W_v, 4, axis=0), atol=1e-15)


def test_constant_phi_gives_uniform_attention(rng):
    fd, fr = feats(rng, 3, 4, "depth"), feats(rng, 5, 4, "rgb")
    cw = CrossAttentionWeights.seeded(4, 4, 6, 2)
    phi = MLPSpec.constant([12, 12, 1], bias=3.7, activation="tanh")
    out = cross_attention(fd, fr, cw.W_q, cw.W_k, cw.W_v, phi)
    np.testing.assert_allclose(out.matrix, 0.2, atol=1e-15)


def test_attention_matches_bruteforce(rng):
    for seed in range(6):
        fd, fr = feats(rng, 2, 5, "depth"), feats(rng, 3, 7, "rgb")
        cw = CrossAttentionWeights.seeded(5, 7, 4, seed)
        out = cross_attention(fd, fr, cw.W_q, cw.W_k, cw.W_v, cw.phi)
        A, F = scalar_cross_attention(fd.rows, fr.rows, cw)
        np.testing.assert_allclose(out.matrix, A, atol=1e-12)
        np.testing.assert_allclose(out.fused, F, atol=1e-12)


def test_attention_shape_errors(rng):
    fd, fr = feats(rng, 2, 5, "depth"), feats(rng, 3, 7, "rgb")
    cw = CrossAttentionWeights.seeded(5, 7, 4, 0)
    with pytest.raises(ShapeError):
        cross_attention(fr, fd, cw.W_q, cw.W_k, cw.W_v, cw.phi)
    with pytest.raises(ShapeError):
        cross_attention(fd, fr, cw.W_q, cw.W_k, cw.W_v, MLPSpec.seeded([6, 6, 1], 0, "tanh"))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 8), st.integers(1, 8))
def test_attention_rows_stochastic(seed, n, m):
    rng = np.random.default_rng(seed)
    fd, fr = FeatureSet(rng.normal(size=(n, 3)) * 10, "depth"), FeatureSet(rng.normal(size=(m, 4)) * 10, "rgb")
    cw = CrossAttentionWeights.seeded(3, 4, 5, seed)
    A = cross_attention(fd, fr, cw.W_q, cw.W_k, cw.W_v, cw.phi).matrix
    assert np.all((A >= 0) & (A <= 1))
    np.testing.assert_allclose(A.sum(axis=1), 1.0, atol=1e-9)


def test_softmax_shift_invariance_and_overflow(rng):
    s = rng.normal(size=(5, 7))
    c = rng.normal(size=(5, 1)) * 100
    np.testing.assert_allclose(row_softmax(s + c), row_softmax(s), atol=1e-15)
    big = row_softmax(np.array([[1000.0, 1000.0, -1000.0]]))
    np.testing.assert_array_equal(big, [[0.5, 0.5, 0.0]])
    masked = row_softmax(np.array([[0.3, -np.inf]]))
    assert masked[0, 1] == 0.0 and masked[0, 0] == 1.0


# ------------------------------------------------------------ layer norm

def test_layernorm_examples():
    fr = FeatureSet([[1.0, 2.0, 3.0]], "rgb")
    y = residual_layernorm(fr, np.zeros((1, 3)), eps=0.0).rows
    r = math.sqrt(1.5)
    np.testing.assert_allclose(y, [[-r, 0.0, r]], atol=1e-15)
    assert y[0, 0] == pytest.approx(-1.2247448713915890)
    const = residual_layernorm(FeatureSet([[4.0, 4.0, 4.0]], "rgb"), np.zeros((1, 3)), eps=0.0).rows
    np.testing.assert_array_equal(const, 0.0)
    const = residual_layernorm(FeatureSet([[4.0, 4.0, 4.0]], "rgb"), np.zeros((1, 3))).rows
    np.testing.assert_array_equal(const, 0.0)
    assert residual_layernorm(fr, np.zeros((1, 3))).role == "fused"
    with pytest.raises(ShapeError):
        residual_layernorm(fr, np.zeros((1, 4)))


def test_layernorm_stats_and_shift(rng):
    fr = feats(rng, 16, 32, "rgb")
    fc = rng.normal(size=(16, 32))
    y = residual_layernorm(fr, fc, eps=1e-9).rows
    np.testing.assert_allclose(y.mean(axis=1), 0.0, atol=1e-9)
    np.testing.assert_allclose(y.var(axis=1), 1.0, atol=1e-6)
    shifted = residual_layernorm(fr, fc + rng.normal(size=(16, 1)) * 5, eps=1e-9).rows
    np.testing.assert_allclose(shifted, y, atol=1e-9)


def test_fuse_end_to_end(rng):
    fd, fr = feats(rng, 16, 6, "depth"), feats(rng, 16, 32, "rgb")
    cw = CrossAttentionWeights.seeded(6, 32, 32, 4)
    out = fuse(fd, fr, cw)
    _, F = scalar_cross_attention(fd.rows, fr.rows, cw)
    x = fr.rows + F
    mu = x.mean(axis=1, keepdims=True)
    expect = (x - mu) / np.sqrt(((x - mu) ** 2).mean(axis=1, keepdims=True) + 1e-5)
    np.testing.assert_allclose(out.rows, expect, atol=1e-9)


# ------------------------------------------------------------ decoder

D, STEPS = 16, 8


@pytest.fixture
def context(rng):
    return FeatureSet(rng.normal(size=(12, D)), "fused")


@pytest.fixture(params=["position", "orientation"])
def dec(request):
    return DecoderWeights.seeded(request.param, D, STEPS, 7)


def test_decoder_causality_bitwise(dec, context, rng):
    tokens = rng.normal(size=(STEPS, 2))
    base = decoder_forward(dec, tokens, context)
    for t in range(STEPS - 1):
        pert = tokens.copy()
        pert[t + 1 :] += rng.normal(size=pert[t + 1 :].shape) * 10
        out = decoder_forward(dec, pert, context)
        assert np.array_equal(out[: t + 1], base[: t + 1])


def test_first_step_ignores_targets(dec, context, rng):
    targets = rng.normal(size=(STEPS, 2))
    a = decode_teacher_forced(dec, context, targets)
    b = decode_teacher_forced(dec, context, targets + 5.0)
    assert np.array_equal(a[0], b[0])
    s1 = decode_step(DecoderState.initial(dec), context, dec)
    assert np.array_equal(s1, a[0])


def test_teacher_forced_equals_sequential(dec, context):
    for T in (1, 5, STEPS):
        seq = decode_sequential(dec, context, T)
        assert np.array_equal(decode_teacher_forced(dec, context, seq), seq)


def test_decoding_is_deterministic(context):
    a = decode_trajectory(context, STEPS, DualDecoderWeights.seeded(D, STEPS, 3))
    b = decode_trajectory(context, STEPS, DualDecoderWeights.seeded(D, STEPS, 3))
    assert a == b


def test_decode_trajectory_outputs(context):
    w = DualDecoderWeights.seeded(D, STEPS, 11)
    one = decode_trajectory(context, 1, w)
    assert len(one) == 1
    traj = decode_trajectory(context, STEPS, w)
    norms = np.hypot(traj.orientations[:, 0], traj.orientations[:, 1])
    np.testing.assert_allclose(norms, 1.0, atol=1e-9)
    assert not np.array_equal(w.position.W_in, w.orientation.W_in)
    with pytest.raises(InvalidArgumentError):
        decode_trajectory(context, 0, w)


def test_decode_rejects_bad_context(dec, context):
    with pytest.raises(InvalidArgumentError):
        decode_step(DecoderState.initial(dec), FeatureSet(context.rows, "rgb"), dec)


def test_decoder_state_step_index(dec):
    s = DecoderState.initial(dec)
    assert s.step == 1
    s = s.advance([1.0, 2.0]).advance([3.0, 4.0])
    assert s.step == len(s.prefix) + 1 == 3
    assert s.tokens().shape == (3, 2)


def test_normalize_orientation_examples():
    np.testing.assert_allclose(normalize_orientation([3.0, 4.0]), [0.6, 0.8], atol=1e-15)
    np.testing.assert_array_equal(normalize_orientation([0.0, 0.0]), [1.0, 0.0])


# ------------------------------------------------------------ loss

def traj(pos, ori):
    return Trajectory(np.array(pos, float), np.array(ori, float))


def test_loss_examples():
    gt = traj([[0, 0]], [[1, 0]])
    assert docking_loss(gt, gt) == 0.0
    assert (LOSS_ALPHA, LOSS_BETA) == (0.63, 0.37)
    assert docking_loss(traj([[1, 0]], [[1, 0]]), gt) == pytest.approx(0.63, abs=1e-15)
    assert docking_loss(traj([[0, 0]], [[0, 1]]), gt) == pytest.approx(0.74, abs=1e-15)
    with pytest.raises(ShapeError):
        docking_loss(traj([[0, 0], [1, 1]], [[1, 0], [1, 0]]), gt)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.01, 100))
def test_loss_properties(seed, k):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 10))
    gp, go = rng.normal(size=(n, 2)), rng.normal(size=(n, 2))
    ep, eo = rng.normal(size=(n, 2)), rng.normal(size=(n, 2))
    loss = docking_loss((gp + ep, go + eo), (gp, go))
    assert loss > 0
    assert docking_loss((gp, go), (gp, go)) == 0.0
    scaled = docking_loss((gp + k * ep, go + k * eo), (gp, go))
    assert scaled == pytest.approx(k * loss, rel=1e-9)


def test_finite_diff_examples():
    g = finite_diff_gradient(lambda x: float(x[0] ** 2), [3.0], h=1e-5)
    assert abs(g[0] - 6.0) < 1e-6
    np.testing.assert_array_equal(finite_diff_gradient(lambda x: 4.0, np.zeros(5)), np.zeros(5))
    with pytest.raises(InvalidArgumentError):
        finite_diff_gradient(lambda x: 1.0, [0.0], h=0.0)
    with pytest.raises(InvalidArgumentError):
        finite_diff_gradient(lambda x: math.inf, [0.0])


def test_loss_grad_single_coordinate():
    n = 4
    gp, go = np.zeros((n, 2)), np.tile([1.0, 0.0], (n, 1))
    pp = gp + 0.3
    g = finite_diff_gradient(lambda x: docking_loss((x, go), (gp, go)), pp)
    np.testing.assert_allclose(g, LOSS_ALPHA / n, atol=1e-6)
    pp[1, 0] = -0.4
    g = finite_diff_gradient(lambda x: docking_loss((x, go), (gp, go)), pp)
    assert abs(g[1, 0] + LOSS_ALPHA / n) < 1e-6


def test_loss_grad_matches_finite_differences(rng):
    for _ in range(100):
        n = int(rng.integers(1, 8))
        gp, go = rng.normal(size=(n, 2)), rng.normal(size=(n, 2))
        # keep every coordinate at least 1e-3 from its kink
        ep = rng.uniform(1e-3, 1, size=(n, 2)) * rng.choice([-1, 1], size=(n, 2))
        eo = rng.uniform(1e-3, 1, size=(n, 2)) * rng.choice([-1, 1], size=(n, 2))
        pp, po = gp + ep, go + eo
        ap, ao = docking_loss_grad((pp, po), (gp, go))
        fp = finite_diff_gradient(lambda x: docking_loss((x, po), (gp, go)), pp)
        fo = finite_diff_gradient(lambda x: docking_loss((pp, x), (gp, go)), po)
        np.testing.assert_allclose(fp, ap, rtol=1e-4)
        np.testing.assert_allclose(fo, ao, rtol=1e-4)


def test_loss_grad_at_kink_is_zero():
    p = np.zeros((2, 2))
    o = np.tile([1.0, 0.0], (2, 1))
    gp, go = docking_loss_grad((p, o), (p, o))
    assert np.all(gp == 0) and np.all(go == 0)
