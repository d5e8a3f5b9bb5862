"""Oriented-box types, canonical parameterization, corner codecs, annotation ingestion.

Coordinate convention: image frame, x right, y down.  "Clockwise" always means
clockwise as drawn on screen in that frame.  Angles are radians measured from
the +x axis; the orientation of a box is the direction of its long axis, kept
in (-pi/2, pi/2] by `canonicalize`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    AnnotationError,
    DegenerateQuadError,
    InvalidBoxError,
    OutOfImageError,
)

HALF_PI = math.pi / 2

# Adjacent edges of an annotation quad may deviate from orthogonal by this
# much (radians) before the rectangle fit warns.
ORTHOGONALITY_WARN_RAD = 0.05


@dataclass(frozen=True)
class OrientedBox:
    """Rotated rectangle: center, half-extents along its two axes, axis angle.

    The constructor only requires finite values and positive extents, so
    non-canonical parameterizations (swapped axes, angles outside
    (-pi/2, pi/2]) are representable; they arise naturally as raw network
    predictions.  `canonicalize` maps any parameterization to the unique
    canonical representative of the same point set.
    """

    cx: float
    cy: float
    r1: float
    r2: float
    phi: float

    def __post_init__(self):
        vals = (self.cx, self.cy, self.r1, self.r2, self.phi)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidBoxError(f"non-finite box parameters {vals}")
        if self.r1 <= 0 or self.r2 <= 0:
            raise InvalidBoxError(
                f"half-extents must be positive, got r1={self.r1}, r2={self.r2}"
            )
        for name, v in zip(("cx", "cy", "r1", "r2", "phi"), vals):
            object.__setattr__(self, name, float(v))


def _wrap_phi(phi: float) -> float:
    # Identity when already in range keeps canonicalize exactly idempotent;
    # IEEE remainder makes pi-shift reduction exact for representable sums.
    if -HALF_PI < phi <= HALF_PI:
        return phi
    r = math.remainder(phi, math.pi)
    if r <= -HALF_PI:
        r += math.pi
    return r


def canonicalize(box: OrientedBox) -> OrientedBox:
    """Unique canonical form: r1 >= r2, phi in (-pi/2, pi/2], same point set.

    Swapping the axes rotates the angle by pi/2; square boxes keep their
    angle (only wrapped into range).  Idempotent: canonical boxes pass
    through bit-identical.
    """
    r1, r2, phi = box.r1, box.r2, box.phi
    if r1 < r2:
        r1, r2 = r2, r1
        phi = phi + HALF_PI
    return OrientedBox(box.cx, box.cy, r1, r2, _wrap_phi(phi))


@dataclass(frozen=True)
class CornerQuad:
    """Four (x, y) corners; quads decoded from a box run clockwise on screen."""

    corners: np.ndarray

    def __post_init__(self):
        arr = np.array(self.corners, dtype=np.float64)
        if arr.shape != (4, 2):
            raise InvalidBoxError(f"corner array must have shape (4, 2), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidBoxError("non-finite corner coordinates")
        arr.setflags(write=False)
        object.__setattr__(self, "corners", arr)


_BASE_SIGNS = np.array([(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)])


def decode_corners(box: OrientedBox) -> CornerQuad:
    """Corners of a box: rotate the axis-aligned corners by phi, translate to the center.

    The order starts at the corner that sits at (-r1, -r2) in the box frame
    and runs clockwise on screen.
    """
    c, s = math.cos(box.phi), math.sin(box.phi)
    bx = _BASE_SIGNS[:, 0] * box.r1
    by = _BASE_SIGNS[:, 1] * box.r2
    x = c * bx - s * by + box.cx
    y = s * bx + c * by + box.cy
    return CornerQuad(np.stack([x, y], axis=1))


def signed_area(corners) -> float:
    """Signed polygon area, positive for counterclockwise traversal on screen.

    On-screen means the image frame (y down), so corner quads decoded from a
    box come out negative: they run clockwise.
    """
    pts = np.asarray(corners, dtype=np.float64)
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(xn * y - x * yn))


def corners_to_box(quad: CornerQuad) -> OrientedBox:
    """Fit an oriented box to a (near-)rectangular quad.

    The center is the corner centroid and each axis is the average of one
    pair of opposite edges, which absorbs small annotation jitter.  The
    longer averaged edge becomes the r1 axis; for squares the first edge in
    annotation order wins.  Warns when adjacent edges are far from
    orthogonal, raises on degenerate (zero-area or segment-like) quads.
    """
    pts = quad.corners
    if abs(signed_area(pts)) <= 1e-12:
        raise DegenerateQuadError("quad has (near-)zero area")
    center = pts.mean(axis=0)
    edges = np.roll(pts, -1, axis=0) - pts
    # Opposite edges point opposite ways, so e0 - e2 and e1 - e3 are the
    # doubled averaged axis vectors.
    axis_a = (edges[0] - edges[2]) / 2.0
    axis_b = (edges[1] - edges[3]) / 2.0
    len_a = float(np.hypot(axis_a[0], axis_a[1]))
    len_b = float(np.hypot(axis_b[0], axis_b[1]))
    if len_a <= 1e-12 or len_b <= 1e-12:
        raise DegenerateQuadError("quad collapses to a segment")
    sin_skew = abs(float(np.dot(axis_a, axis_b))) / (len_a * len_b)
    if sin_skew > math.sin(ORTHOGONALITY_WARN_RAD):
        warnings.warn(
            f"quad edges deviate from orthogonal by "
            f"{math.asin(min(1.0, sin_skew)):.3f} rad",
            stacklevel=2,
        )
    if len_a >= len_b:
        long_axis, r1, r2 = axis_a, len_a / 2.0, len_b / 2.0
    else:
        long_axis, r1, r2 = axis_b, len_b / 2.0, len_a / 2.0
    phi = math.atan2(float(long_axis[1]), float(long_axis[0]))
    return canonicalize(OrientedBox(float(center[0]), float(center[1]), r1, r2, phi))


def corner_set_distance(a, b) -> float:
    """Max corner deviation between two quads, minimized over cyclic shifts.

    Both traversal directions are tried, so the comparison is insensitive to
    starting corner and winding.
    """
    pa = np.asarray(a, dtype=np.float64).reshape(4, 2)
    pb = np.asarray(b, dtype=np.float64).reshape(4, 2)
    best = math.inf
    for seq in (pb, pb[::-1]):
        for k in range(4):
            d = float(np.abs(np.roll(seq, k, axis=0) - pa).max())
            best = min(best, d)
    return best


def phi_distance(a: float, b: float) -> float:
    """Angle distance modulo pi (box orientations are pi-periodic)."""
    return abs(math.remainder(a - b, math.pi))


@dataclass(frozen=True)
class CenterOffset:
    """Sub-cell center position at output stride: cx = (cell_x + dx) * stride."""

    dx: float
    dy: float
    cell_x: int
    cell_y: int
    stride: int


def encode_offset(cx: float, cy: float, stride: int) -> CenterOffset:
    """Split a pixel-space center into output-grid cell indices and fractional offsets."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if not (math.isfinite(cx) and math.isfinite(cy)):
        raise InvalidBoxError(f"non-finite center ({cx}, {cy})")
    if cx < 0 or cy < 0:
        raise OutOfImageError(f"center ({cx}, {cy}) has negative coordinates")
    gx, gy = cx / stride, cy / stride
    cell_x, cell_y = math.floor(gx), math.floor(gy)
    return CenterOffset(gx - cell_x, gy - cell_y, cell_x, cell_y, stride)


DOTA_META_PREFIXES = ("imagesource", "gsd")


def parse_dota_record(line: str, lineno: int | None = None):
    """Parse one annotation line: 8 corner reals, category name, difficulty flag.

    Returns (CornerQuad, category, difficulty).  Raises AnnotationError
    naming the line on malformed input.
    """
    fields = line.split()
    if len(fields) != 10:
        raise AnnotationError(f"expected 10 fields, got {len(fields)}: {line!r}", lineno)
    try:
        coords = [float(tok) for tok in fields[:8]]
    except ValueError:
        raise AnnotationError(f"non-numeric corner coordinate in {line!r}", lineno) from None
    category = fields[8]
    try:
        difficulty = int(fields[9])
    except ValueError:
        raise AnnotationError(f"non-integer difficulty {fields[9]!r}", lineno) from None
    quad = CornerQuad(np.asarray(coords, dtype=np.float64).reshape(4, 2))
    return quad, category, difficulty


def iter_dota_object_lines(path):
    """Yield (lineno, line) for annotation object lines, skipping metadata
    headers ("imagesource", "gsd") and blank lines."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith(DOTA_META_PREFIXES):
                continue
            yield lineno, line


def load_dota_annotations(path):
    """Read an annotation file into a list of (CornerQuad, category, difficulty)."""
    return [parse_dota_record(line, lineno) for lineno, line in iter_dota_object_lines(path)]
