"""Ground-truth geometry: exact rotated-rectangle IoU via polygon clipping,
Monte-Carlo IoU estimates for ellipses and rectangles, and greedy rotated NMS."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boxes import OrientedBox, decode_corners
from .errors import InsufficientSamplesError, InvalidBoxError

# Intersections smaller than this are treated as empty; it keeps touching
# boxes and clipping slivers from producing noise IoU.
MIN_OVERLAP_AREA = 1e-12

MIN_MC_SAMPLES = 10_000


def _cross(a, b, p):
    return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])


def _intersect(p, q, dp, dq):
    t = dp / (dp - dq)
    return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))


def _clip_halfplane(poly, a, b):
    """Keep the part of a convex polygon on the interior side of edge a->b.

    Decoded corners wind so that the interior has non-negative cross product
    against every directed edge.
    """
    out = []
    m = len(poly)
    for i in range(m):
        p, q = poly[i], poly[(i + 1) % m]
        dp = _cross(a, b, p)
        dq = _cross(a, b, q)
        if dp >= 0.0:
            out.append(p)
            if dq < 0.0:
                out.append(_intersect(p, q, dp, dq))
        elif dq >= 0.0:
            out.append(_intersect(p, q, dp, dq))
    return out


def _shoelace_abs(poly) -> float:
    if len(poly) < 3:
        return 0.0
    acc = 0.0
    m = len(poly)
    for i in range(m):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % m]
        acc += x0 * y1 - x1 * y0
    return abs(acc) / 2.0


def exact_rect_iou(a: OrientedBox, b: OrientedBox) -> float:
    """Exact IoU of two rotated rectangles (half-plane clipping + shoelace area)."""
    poly = [tuple(p) for p in decode_corners(a).corners]
    clip = [tuple(p) for p in decode_corners(b).corners]
    for i in range(4):
        if not poly:
            break
        poly = _clip_halfplane(poly, clip[i], clip[(i + 1) % 4])
    inter = _shoelace_abs(poly)
    if inter < MIN_OVERLAP_AREA:
        return 0.0
    area_a = 4.0 * a.r1 * a.r2
    area_b = 4.0 * b.r1 * b.r2
    return float(inter / (area_a + area_b - inter))


def _to_frame(box: OrientedBox, pts: np.ndarray):
    """Point coordinates in the box frame (origin at center, x along r1)."""
    dx = pts[:, 0] - box.cx
    dy = pts[:, 1] - box.cy
    c, s = math.cos(box.phi), math.sin(box.phi)
    return c * dx + s * dy, -s * dx + c * dy


def _ellipse_contains(box: OrientedBox, pts: np.ndarray) -> np.ndarray:
    u, v = _to_frame(box, pts)
    u /= box.r1
    v /= box.r2
    return u * u + v * v <= 1.0


def _rect_contains(box: OrientedBox, pts: np.ndarray) -> np.ndarray:
    u, v = _to_frame(box, pts)
    return (np.abs(u) <= box.r1) & (np.abs(v) <= box.r2)


def _ellipse_aabb(box: OrientedBox):
    c, s = math.cos(box.phi), math.sin(box.phi)
    ex = math.hypot(box.r1 * c, box.r2 * s)
    ey = math.hypot(box.r1 * s, box.r2 * c)
    return (box.cx - ex, box.cy - ey), (box.cx + ex, box.cy + ey)


def _rect_aabb(box: OrientedBox):
    pts = decode_corners(box).corners
    return tuple(pts.min(axis=0)), tuple(pts.max(axis=0))


def _mc_iou(a, b, samples, seed, contains, aabb):
    if samples < MIN_MC_SAMPLES:
        raise InsufficientSamplesError(
            f"need at least {MIN_MC_SAMPLES} samples, got {samples}"
        )
    (ax0, ay0), (ax1, ay1) = aabb(a)
    (bx0, by0), (bx1, by1) = aabb(b)
    lo = (min(ax0, bx0), min(ay0, by0))
    hi = (max(ax1, bx1), max(ay1, by1))
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, size=(samples, 2))
    in_a = contains(a, pts)
    in_b = contains(b, pts)
    n_union = int(np.count_nonzero(in_a | in_b))
    n_inter = int(np.count_nonzero(in_a & in_b))
    if n_union == 0:
        return 0.0, 0.0
    p = n_inter / n_union
    std_error = math.sqrt(p * (1.0 - p) / n_union)
    return p, std_error


def mc_ellipse_iou(a: OrientedBox, b: OrientedBox, samples: int, seed: int):
    """Monte-Carlo IoU of the two boxes' inscribed ellipses.

    Uniform points are drawn over the united bounding box of the two
    ellipses.  Returns (estimate, standard_error); the standard error is the
    binomial deviation of the intersection fraction among union hits, so it
    is 0 exactly when every union hit is an intersection hit.
    """
    return _mc_iou(a, b, samples, seed, _ellipse_contains, _ellipse_aabb)


def mc_rect_iou(a: OrientedBox, b: OrientedBox, samples: int, seed: int):
    """Monte-Carlo IoU of the two rectangles themselves; see mc_ellipse_iou."""
    return _mc_iou(a, b, samples, seed, _rect_contains, _rect_aabb)


@dataclass(frozen=True)
class Detection:
    """A scored, categorized oriented box."""

    box: OrientedBox
    score: float
    category: int

    def __post_init__(self):
        if not (math.isfinite(self.score) and 0.0 <= self.score <= 1.0):
            raise InvalidBoxError(f"score must be finite in [0, 1], got {self.score}")
        object.__setattr__(self, "score", float(self.score))
        object.__setattr__(self, "category", int(self.category))


def rotated_nms(detections, iou_threshold: float):
    """Greedy per-category suppression under the exact rotated IoU.

    Detections are visited in descending score order (ties broken by input
    index); each kept detection suppresses later same-category detections
    whose IoU with it exceeds the threshold.  Survivors come back sorted by
    descending score with the same stable tie-break.
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1), got {iou_threshold}")
    dets = list(detections)
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    suppressed = [False] * len(dets)
    keep = []
    for pos, i in enumerate(order):
        if suppressed[i]:
            continue
        keep.append(i)
        for j in order[pos + 1:]:
            if suppressed[j] or dets[j].category != dets[i].category:
                continue
            if exact_rect_iou(dets[i].box, dets[j].box) > iou_threshold:
                suppressed[j] = True
    return [dets[i] for i in keep]
