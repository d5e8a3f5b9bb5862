"""Grouped channel weighting for multi-scale feature stacks.

Reference array math only: pool the stacked features globally, map the pooled
vector to per-group logits, softmax within each group, and rescale each
group's channels by its weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GroupingError, ShapeError


@dataclass(frozen=True)
class FeatureStack:
    """m scale groups of (c/m, H, W) features sharing one spatial grid."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 4:
            raise ShapeError(f"feature stack must be (m, c/m, H, W), got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ShapeError("non-finite feature values")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_concat(cls, concat, m: int) -> "FeatureStack":
        """Split a concatenated (c, H, W) feature map into m equal groups."""
        arr = np.asarray(concat, dtype=np.float64)
        if arr.ndim != 3:
            raise ShapeError(f"expected (c, H, W) features, got shape {arr.shape}")
        if m < 1:
            raise GroupingError(f"need at least one group, got m={m}")
        c = arr.shape[0]
        if c % m != 0:
            raise GroupingError(f"{c} channels do not divide into {m} groups")
        return cls(arr.reshape(m, c // m, arr.shape[1], arr.shape[2]))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def group_channels(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.m * self.group_channels

    def concat(self) -> np.ndarray:
        """The stack as one (c, H, W) map, groups in order."""
        m, g, h, w = self.values.shape
        return self.values.reshape(m * g, h, w)


def global_pool_embed(stack: FeatureStack, embed, activation: str = "relu") -> np.ndarray:
    """Spatial-mean pool the concatenated stack, then embed and rectify.

    embed must be a (c, c) matrix; activation is "relu" or "identity".
    Returns the length-c descriptor vector.
    """
    pooled = stack.concat().mean(axis=(1, 2))
    embed = np.asarray(embed, dtype=np.float64)
    c = stack.channels
    if embed.shape != (c, c):
        raise ShapeError(f"embed matrix must be ({c}, {c}), got shape {embed.shape}")
    w = embed @ pooled
    if activation == "relu":
        return np.maximum(w, 0.0)
    if activation == "identity":
        return w
    raise ValueError(f"unknown activation {activation!r}")


@dataclass(frozen=True)
class GroupWeights:
    """Per-group channel weights; each of the m rows sums to 1."""

    weights: np.ndarray

    def __post_init__(self):
        arr = np.array(self.weights, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeError(f"weights must be (m, c/m), got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "weights", arr)


def group_softmax(w, per_group_maps) -> GroupWeights:
    """Map the descriptor to one softmax distribution per group.

    Each of the m maps is a (c/m, c) matrix producing that group's logits
    from the length-c descriptor; the softmax is taken within the group.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1:
        raise ShapeError(f"descriptor must be a vector, got shape {w.shape}")
    maps = [np.asarray(mp, dtype=np.float64) for mp in per_group_maps]
    m = len(maps)
    if m < 1:
        raise GroupingError("need at least one group map")
    c = w.shape[0]
    if c % m != 0:
        raise GroupingError(f"{c}-channel descriptor does not divide into {m} groups")
    g = c // m
    rows = []
    for mp in maps:
        if mp.shape != (g, c):
            raise ShapeError(f"group map must be ({g}, {c}), got shape {mp.shape}")
        logits = mp @ w
        logits = logits - logits.max()  # overflow-safe softmax
        e = np.exp(logits)
        rows.append(e / e.sum())
    return GroupWeights(np.stack(rows))


def apply_weights(stack: FeatureStack, weights: GroupWeights) -> np.ndarray:
    """Scale channel j of group i by weights[i, j]; returns the (c, H, W) concat."""
    wv = weights.weights
    if wv.shape != (stack.m, stack.group_channels):
        raise ShapeError(
            f"weights shape {wv.shape} does not match stack ({stack.m}, {stack.group_channels})"
        )
    scaled = stack.values * wv[:, :, None, None]
    m, g, h, w = scaled.shape
    return scaled.reshape(m * g, h, w)
