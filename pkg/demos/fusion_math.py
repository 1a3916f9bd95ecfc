"""
Fusion network math at toy scale
================================

Seeded weights, no training: pyramid pooling, MLP-similarity cross
attention, the two causal decoders and the weighted L1 loss.
"""

import numpy as np

from dockkit.core import Trajectory
from dockkit.netmath import (
    CrossAttentionWeights,
    DualDecoderWeights,
    FeatureGrid,
    FeatureSet,
    MLPSpec,
    cross_attention,
    decode_trajectory,
    docking_loss,
    docking_loss_grad,
    fap_head,
    fuse,
)

rng = np.random.default_rng(0)

# %%
# Image branch: an 8x8x4 feature map pooled at 1, 2, 3 and 6 bins per side.
grid = FeatureGrid(rng.normal(size=(8, 8, 4)))
pooled_len = 4 * (1 + 4 + 9 + 36)
head = MLPSpec.seeded([pooled_len, 64, 32], seed=1)
z = fap_head(grid, [1, 2, 3, 6], head)
print("FAP embedding:", z.shape)

# %%
# Depth tokens attend over RGB tokens; rows of the attention matrix are
# probability distributions.
depth_tokens = FeatureSet(rng.normal(size=(16, 8)), "depth")
rgb_tokens = FeatureSet(rng.normal(size=(16, 32)), "rgb")
w = CrossAttentionWeights.seeded(8, 32, 32, seed=2)
att = cross_attention(depth_tokens, rgb_tokens, w.W_q, w.W_k, w.W_v, w.phi)
print("attention row sums:", np.round(att.matrix.sum(axis=1)[:4], 12), "...")

fused = fuse(depth_tokens, rgb_tokens, w)
print("fused row mean / std: %.1e / %.4f" % (fused.rows.mean(axis=1).max(), fused.rows.std(axis=1).mean()))

# %%
# Two independent decoders read the same fused context.
decoders = DualDecoderWeights.seeded(32, 8, seed=3)
pred = decode_trajectory(fused, 8, decoders)
print("orientation norms:", np.round(np.hypot(*pred.orientations.T), 12))

# %%
# Loss against a straight-line target, and its subgradient.
target = Trajectory(np.stack([np.linspace(2, 0, 8), np.zeros(8)], 1), np.tile([-1.0, 0.0], (8, 1)))
print("loss: %.4f" % docking_loss(pred, target))
g_pos, g_ori = docking_loss_grad(pred, target)
print("position subgradient entries:", sorted({float(x) for x in np.round(np.abs(g_pos).ravel(), 6)}))
