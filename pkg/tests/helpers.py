"""Shared test fixtures: box strategies, finite-difference oracle, frozen suites."""

import math

import numpy as np
from hypothesis import strategies as st

from polarjiou import (
    OrientedBox,
    canonicalize,
    exact_rect_iou,
    grid_angles,
    jiou_bar,
    jiou_gradient,
    radius_at,
)


def finite_floats(lo, hi):
    return st.floats(min_value=lo, max_value=hi, allow_nan=False, allow_infinity=False)


@st.composite
def boxes(draw, canonical=False, max_center=100.0, min_r=0.1, max_r=50.0):
    """Arbitrary valid boxes; canonical=True returns the canonical representative."""
    cx = draw(finite_floats(-max_center, max_center))
    cy = draw(finite_floats(-max_center, max_center))
    ra = draw(finite_floats(min_r, max_r))
    rb = draw(finite_floats(min_r, max_r))
    phi = draw(finite_floats(-7.0, 7.0))
    box = OrientedBox(cx, cy, ra, rb, phi)
    return canonicalize(box) if canonical else box


def random_box(rng, max_center=100.0, min_r=0.5, max_r=30.0):
    ra = rng.uniform(min_r, max_r)
    rb = rng.uniform(min_r, max_r)
    return OrientedBox(
        rng.uniform(-max_center, max_center), rng.uniform(-max_center, max_center),
        max(ra, rb), min(ra, rb), rng.uniform(-math.pi / 2, math.pi / 2),
    )


def fd_gradient(pred, target, n=720, h=1e-5):
    """Central finite differences of the loss in (phi, r1, r2)."""
    def loss_at(phi, r1, r2):
        return jiou_bar(OrientedBox(pred.cx, pred.cy, r1, r2, phi), target, n).loss

    p, r1, r2 = pred.phi, pred.r1, pred.r2
    return np.array([
        (loss_at(p + h, r1, r2) - loss_at(p - h, r1, r2)) / (2 * h),
        (loss_at(p, r1 + h, r2) - loss_at(p, r1 - h, r2)) / (2 * h),
        (loss_at(p, r1, r2 + h) - loss_at(p, r1, r2 - h)) / (2 * h),
    ])


# Finite-difference pairs must stay away from two degeneracies: grid angles
# where the two radial profiles nearly tie (the min/max branch flips inside
# the h-window) and gradient components near zero (relative error is
# meaningless there, e.g. the phi-derivative of a profile that strictly
# contains the other).
FD_MARGIN_FLOOR = 2e-3
FD_GRAD_FLOOR = 1e-3


def fd_suite(count=100, seed=42, n=720):
    """Frozen random (pred, target) pairs suitable for finite-difference checks."""
    rng = np.random.default_rng(seed)
    thetas = grid_angles(n)
    pairs = []
    while len(pairs) < count:
        r2 = rng.uniform(4.0, 12.0)
        ar = rng.uniform(1.3, 4.0)
        tphi = rng.uniform(-1.2, 1.2)
        target = OrientedBox(0.0, 0.0, ar * r2, r2, tphi)
        dphi = rng.uniform(0.08, 1.0) * (1 if rng.uniform() < 0.5 else -1)
        s1 = rng.uniform(0.7, 1.4)
        s2 = rng.uniform(0.75, 1.3)
        pred = OrientedBox(0.0, 0.0, target.r1 * s1, target.r2 * s2, tphi + dphi)
        margin = np.min(np.abs(radius_at(pred, thetas) - radius_at(target, thetas)))
        if margin < FD_MARGIN_FLOOR:
            continue
        g = jiou_gradient(pred, target, n)
        if min(abs(g.d_phi), abs(g.d_r1), abs(g.d_r2)) < FD_GRAD_FLOOR:
            continue
        pairs.append((pred, target))
    return pairs


# Sliver overlaps (exact IoU below this, but nonzero) are excluded from the
# Monte-Carlo agreement suite: the hit-count estimate of a vanishing
# intersection has zero observed variance, so the 3-sigma band degenerates.
MC_SLIVER_IOU = 0.02
MC_SUITE_SEED = 4
MC_SUITE_SAMPLES = 20_000


def mc_agreement_pairs(count=200, seed=MC_SUITE_SEED):
    """Frozen random rectangle pairs plus their exact IoU, slivers excluded."""
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < count:
        a = OrientedBox(rng.uniform(-4, 4), rng.uniform(-4, 4),
                        rng.uniform(2, 10), rng.uniform(1, 6), rng.uniform(-1.5, 1.5))
        b = OrientedBox(rng.uniform(-4, 4), rng.uniform(-4, 4),
                        rng.uniform(2, 10), rng.uniform(1, 6), rng.uniform(-1.5, 1.5))
        exact = exact_rect_iou(a, b)
        if 0.0 < exact < MC_SLIVER_IOU:
            continue
        pairs.append((a, b, exact))
    return pairs


def dyadic(x, bits=20):
    """Round onto a 2**-bits grid; such angles survive a +pi wrap bit-exactly."""
    scale = float(1 << bits)
    return round(x * scale) / scale
