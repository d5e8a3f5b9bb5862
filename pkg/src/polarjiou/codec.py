"""Training-target construction for anchor-free detection (center heatmaps,
sub-cell offsets, box parameters), the loss terms defined on those targets,
and the inverse decode from heatmap peaks back to detections."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boxes import OrientedBox, canonicalize, encode_offset, phi_distance
from .errors import InvalidLossError, OutOfImageError, ShapeError
from .oracle import Detection

DEFAULT_MU = 5.0
DEFAULT_ALPHA = 4.0
DEFAULT_GAMMA = 2.0
DEFAULT_PEAK_K = 100
DEFAULT_PEAK_THRESHOLD = 0.3

# Predicted heatmap probabilities are clamped into [PT_CLAMP, 1 - PT_CLAMP]
# before any log.
PT_CLAMP = 1e-7


@dataclass(frozen=True)
class HeatmapTarget:
    """Per-class center heatmap at output stride.

    values[c, y, x] in [0, 1] is the pointwise max over per-object Gaussians;
    every positive (an object's center cell, listed in input order in
    `positives` as (class, cell_x, cell_y)) holds exactly 1.
    """

    values: np.ndarray
    positives: tuple

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 3:
            raise ShapeError(f"heatmap must be (C, H, W), got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "positives", tuple(self.positives))

    @property
    def num_classes(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


def gaussian_sigma(box: OrientedBox, stride: int) -> float:
    """Object-adaptive kernel width in grid cells: the short side spans about
    +-3 sigma at output stride, floored at one cell."""
    return max(1.0, min(2.0 * box.r1, 2.0 * box.r2) / (6.0 * stride))


def render_heatmap(objects, num_classes: int, height: int, width: int, stride: int) -> HeatmapTarget:
    """Render per-class center heatmaps for (box, class) pairs.

    Each object stamps a Gaussian centered on its output-grid cell with the
    object-adaptive sigma; overlaps combine by pointwise max, so the result
    does not depend on object order, and center cells are set to exactly 1.
    """
    values = np.zeros((num_classes, height, width))
    positives = []
    ys = np.arange(height, dtype=np.float64)[:, None]
    xs = np.arange(width, dtype=np.float64)[None, :]
    for box, cls in objects:
        if not 0 <= cls < num_classes:
            raise ShapeError(f"class {cls} outside [0, {num_classes})")
        off = encode_offset(box.cx, box.cy, stride)
        if off.cell_x >= width or off.cell_y >= height:
            raise OutOfImageError(
                f"center cell ({off.cell_x}, {off.cell_y}) outside {width}x{height} grid"
            )
        sigma = gaussian_sigma(box, stride)
        g = np.exp(-((xs - off.cell_x) ** 2 + (ys - off.cell_y) ** 2) / (2.0 * sigma * sigma))
        np.maximum(values[cls], g, out=values[cls])
        positives.append((int(cls), off.cell_x, off.cell_y))
    for cls, cx, cy in positives:
        values[cls, cy, cx] = 1.0
    return HeatmapTarget(values=values, positives=tuple(positives))


@dataclass(frozen=True)
class RegressionTarget:
    """Per-positive regression rows (phi, r1, r2, dx, dy), aligned with `cells`."""

    cells: tuple
    tuples: np.ndarray

    def __post_init__(self):
        arr = np.array(self.tuples, dtype=np.float64).reshape(-1, 5)
        if arr.shape[0] != len(self.cells):
            raise ShapeError(f"{arr.shape[0]} rows for {len(self.cells)} cells")
        arr.setflags(write=False)
        object.__setattr__(self, "tuples", arr)
        object.__setattr__(self, "cells", tuple(self.cells))


@dataclass(frozen=True)
class EncodedTargets:
    """Everything the decoder needs: heatmap plus dense offset/parameter maps.

    offset_map is (2, H, W) holding (dx, dy) and param_map is (3, H, W)
    holding (phi, r1, r2), both written only at positive cells.
    """

    heatmap: HeatmapTarget
    regression: RegressionTarget
    offset_map: np.ndarray
    param_map: np.ndarray


def encode_targets(objects, num_classes: int, height: int, width: int, stride: int) -> EncodedTargets:
    """Build all training targets for (box, class) pairs on one output grid."""
    objects = list(objects)
    heatmap = render_heatmap(objects, num_classes, height, width, stride)
    offset_map = np.zeros((2, height, width))
    param_map = np.zeros((3, height, width))
    rows = np.zeros((len(objects), 5))
    for i, (box, _) in enumerate(objects):
        off = encode_offset(box.cx, box.cy, stride)
        offset_map[:, off.cell_y, off.cell_x] = (off.dx, off.dy)
        param_map[:, off.cell_y, off.cell_x] = (box.phi, box.r1, box.r2)
        rows[i] = (box.phi, box.r1, box.r2, off.dx, off.dy)
    regression = RegressionTarget(cells=heatmap.positives, tuples=rows)
    return EncodedTargets(heatmap, regression, offset_map, param_map)


def focal_loss(pred, target: HeatmapTarget, alpha: float = DEFAULT_ALPHA,
               gamma: float = DEFAULT_GAMMA) -> float:
    """Center-heatmap focal loss.

    Positive cells (target exactly 1) contribute (1 - pt)^gamma * log(pt);
    every other cell contributes (1 - y)^alpha * pt^gamma * log(1 - pt),
    down-weighted near peaks by the soft target y.  The sum is negated and
    divided by the positive count, floored at one.
    """
    pred = np.asarray(pred, dtype=np.float64)
    y = target.values
    if pred.shape != y.shape:
        raise ShapeError(f"pred shape {pred.shape} vs target shape {y.shape}")
    pt = np.clip(pred, PT_CLAMP, 1.0 - PT_CLAMP)
    pos = y == 1.0
    n_pos = max(int(np.count_nonzero(pos)), 1)
    pos_term = np.sum((1.0 - pt[pos]) ** gamma * np.log(pt[pos]))
    neg = ~pos
    neg_term = np.sum((1.0 - y[neg]) ** alpha * pt[neg] ** gamma * np.log1p(-pt[neg]))
    return float(-(pos_term + neg_term) / n_pos)


def smooth_l1(pred_tuple, target_tuple) -> float:
    """SmoothL1 over 5-component regression tuples (phi, r1, r2, dx, dy).

    Each component difference d costs 0.5*d^2 below 1 and |d| - 0.5 above;
    components are summed and, for (N, 5) inputs, rows are averaged.
    """
    p = np.asarray(pred_tuple, dtype=np.float64)
    t = np.asarray(target_tuple, dtype=np.float64)
    if p.shape != t.shape or p.ndim not in (1, 2) or p.shape[-1] != 5:
        raise ShapeError(f"expected matching (..., 5) tuples, got {p.shape} vs {t.shape}")
    d = np.abs(p - t)
    per_row = np.where(d < 1.0, 0.5 * d * d, d - 0.5).sum(axis=-1)
    return float(np.mean(per_row))


@dataclass(frozen=True)
class LossReport:
    """Weighted combination of the three loss terms, components kept separate."""

    classification: float
    jiou: float
    regression: float
    mu: float
    total: float


def total_loss(cla: float, jiou: float, reg: float, mu: float = DEFAULT_MU) -> LossReport:
    """total = cla + mu * jiou + reg."""
    parts = (cla, jiou, reg, mu)
    if not all(math.isfinite(v) for v in parts):
        raise InvalidLossError(f"non-finite loss components {parts}")
    return LossReport(float(cla), float(jiou), float(reg), float(mu),
                      float(cla + mu * jiou + reg))


@dataclass(frozen=True)
class Peak:
    """A heatmap cell that dominates its 3x3 neighborhood."""

    category: int
    cell_x: int
    cell_y: int
    score: float


def extract_peaks(heatmap, k: int = DEFAULT_PEAK_K,
                  threshold: float = DEFAULT_PEAK_THRESHOLD):
    """Cells that dominate their 3x3 neighborhood with score >= threshold, top-k.

    On plateaus of equal values the row-major-first cell wins: a peak must
    strictly exceed the neighbors that precede it in row-major order and
    weakly exceed the rest.  Results are sorted by descending score with
    (category, cell_y, cell_x) as the deterministic tie-break.
    """
    heat = np.asarray(heatmap, dtype=np.float64)
    if heat.ndim != 3:
        raise ShapeError(f"expected a (C, H, W) heatmap, got shape {heat.shape}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not 0.0 <= threshold < 1.0:
        raise ValueError(f"threshold must be in [0, 1), got {threshold}")
    c, h, w = heat.shape
    padded = np.full((c, h + 2, w + 2), -np.inf)
    padded[:, 1:-1, 1:-1] = heat

    def shifted(dy, dx):
        return padded[:, 1 + dy:1 + dy + h, 1 + dx:1 + dx + w]

    is_peak = heat >= threshold
    for dy, dx in ((-1, -1), (-1, 0), (-1, 1), (0, -1)):
        is_peak &= heat > shifted(dy, dx)
    for dy, dx in ((0, 1), (1, -1), (1, 0), (1, 1)):
        is_peak &= heat >= shifted(dy, dx)

    cats, ys, xs = np.nonzero(is_peak)
    peaks = [
        Peak(int(ci), int(xi), int(yi), float(heat[ci, yi, xi]))
        for ci, yi, xi in zip(cats, ys, xs)
    ]
    peaks.sort(key=lambda p: (-p.score, p.category, p.cell_y, p.cell_x))
    return peaks[:k]


def decode_detections(peaks, offset_map, param_map, stride: int):
    """Detections from peaks plus the dense maps.

    The center is (cell + offset) * stride; (phi, r1, r2) are read at the
    peak cell and canonicalized.
    """
    off = np.asarray(offset_map, dtype=np.float64)
    par = np.asarray(param_map, dtype=np.float64)
    if off.ndim != 3 or off.shape[0] != 2:
        raise ShapeError(f"offset map must be (2, H, W), got shape {off.shape}")
    if par.ndim != 3 or par.shape[0] != 3 or par.shape[1:] != off.shape[1:]:
        raise ShapeError(
            f"param map must be (3, H, W) aligned with offsets, got shape {par.shape}"
        )
    detections = []
    for p in peaks:
        dx, dy = off[:, p.cell_y, p.cell_x]
        phi, r1, r2 = par[:, p.cell_y, p.cell_x]
        box = canonicalize(OrientedBox(
            (p.cell_x + dx) * stride, (p.cell_y + dy) * stride, r1, r2, phi,
        ))
        detections.append(Detection(box=box, score=p.score, category=p.category))
    return detections


def encode_decode_roundtrip(objects, num_classes: int, height: int, width: int, stride: int):
    """Drive encode -> peak extraction -> decode on noiseless targets.

    Objects are canonicalized, encoded together, and matched back to decoded
    detections by center cell.  Returns (field_errors, detections): an
    (N, 5) array of absolute errors in (cx, cy, r1, r2, phi) per object,
    with NaN rows for objects whose cell produced no detection (e.g. cell
    collisions), and the decoded detections.
    """
    objects = [(canonicalize(box), cls) for box, cls in objects]
    enc = encode_targets(objects, num_classes, height, width, stride)
    peaks = extract_peaks(enc.heatmap.values, k=max(len(objects), 1),
                          threshold=DEFAULT_PEAK_THRESHOLD)
    detections = decode_detections(peaks, enc.offset_map, enc.param_map, stride)
    by_cell = {}
    for det, peak in zip(detections, peaks):
        by_cell[(peak.category, peak.cell_x, peak.cell_y)] = det
    errors = np.full((len(objects), 5), np.nan)
    for i, ((box, cls), cell) in enumerate(zip(objects, enc.heatmap.positives)):
        det = by_cell.get(cell)
        if det is None:
            continue
        errors[i] = (
            abs(det.box.cx - box.cx),
            abs(det.box.cy - box.cy),
            abs(det.box.r1 - box.r1),
            abs(det.box.r2 - box.r2),
            phi_distance(det.box.phi, box.phi),
        )
    return errors, detections
