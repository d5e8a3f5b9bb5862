"""Ground-truth IoU oracles (exact clipping, Monte-Carlo) and rotated NMS."""

import math

import numpy as np
import pytest

from helpers import mc_agreement_pairs, random_box
from polarjiou import (
    Detection,
    OrientedBox,
    exact_rect_iou,
    jiou_bar,
    mc_ellipse_iou,
    mc_rect_iou,
    rotated_nms,
)
from polarjiou.errors import InsufficientSamplesError, InvalidBoxError


def unit_square(cx=0.0, cy=0.0, phi=0.0):
    return OrientedBox(cx, cy, 0.5, 0.5, phi)


class TestExactRectIou:
    def test_identical_boxes(self):
        box = OrientedBox(3, -1, 4, 2, 0.7)
        assert exact_rect_iou(box, box) == pytest.approx(1.0, abs=1e-12)

    def test_half_shifted_unit_squares(self):
        """Shift by half a side: intersection 0.5, union 1.5, IoU = 1/3."""
        iou = exact_rect_iou(unit_square(), unit_square(cx=0.5))
        assert iou == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_rotated_square_octagon(self):
        """Unit square vs itself rotated 45 degrees: the octagon intersection
        2(sqrt(2)-1) over union 2 - 2(sqrt(2)-1) reduces to 1/sqrt(2)."""
        iou = exact_rect_iou(unit_square(), unit_square(phi=math.pi / 4))
        inter = 2 * (math.sqrt(2) - 1)
        assert iou == pytest.approx(inter / (2 - inter), abs=1e-12)
        assert iou == pytest.approx(0.70711, abs=1e-4)

    def test_disjoint_boxes(self):
        assert exact_rect_iou(unit_square(), unit_square(cx=5.0)) == 0.0

    def test_symmetric(self):
        a = OrientedBox(0, 0, 3, 1, 0.2)
        b = OrientedBox(1, 0.5, 2, 1.5, -0.6)
        assert exact_rect_iou(a, b) == pytest.approx(exact_rect_iou(b, a), abs=1e-15)

    def test_containment(self):
        outer = OrientedBox(0, 0, 4, 2, 0.3)
        inner = OrientedBox(0, 0, 2, 1, 0.3)
        assert exact_rect_iou(outer, inner) == pytest.approx(0.25, abs=1e-12)

    def test_rigid_motion_invariance(self):
        """Translating and rotating both boxes together preserves the IoU."""
        rng = np.random.default_rng(2)
        for _ in range(100):
            a, b = random_box(rng), random_box(rng)
            base = exact_rect_iou(a, b)
            dx, dy, rot = rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-3, 3)
            c, s = math.cos(rot), math.sin(rot)

            def move(box):
                x = c * box.cx - s * box.cy + dx
                y = s * box.cx + c * box.cy + dy
                return OrientedBox(x, y, box.r1, box.r2, box.phi + rot)

            assert exact_rect_iou(move(a), move(b)) == pytest.approx(base, abs=1e-9)

    def test_monte_carlo_agreement_sample(self):
        """Exact IoU sits within 3 standard errors of point sampling (the
        frozen 200-pair suite runs in the acceptance gate)."""
        for i, (a, b, exact) in enumerate(mc_agreement_pairs(count=20)):
            estimate, se = mc_rect_iou(a, b, 20_000, seed=400_012 + i)
            if se == 0.0:
                assert estimate == pytest.approx(exact, abs=1e-12)
            else:
                assert abs(estimate - exact) <= 3 * se


class TestMonteCarloEllipse:
    def test_identical_ellipses_exact_one(self):
        """Every union hit is an intersection hit, so the estimate is exactly
        1 with zero standard error."""
        box = OrientedBox(0, 0, 3, 1, 0.4)
        estimate, se = mc_ellipse_iou(box, box, 10_000, seed=1)
        assert estimate == 1.0
        assert se == 0.0

    def test_concentric_circles(self):
        a = OrientedBox(0, 0, 1, 1, 0)
        b = OrientedBox(0, 0, 2, 2, 0)
        estimate, se = mc_ellipse_iou(a, b, 1_000_000, seed=3)
        assert abs(estimate - 0.25) <= 3 * se

    def test_cross_oracle_consistency(self):
        """jiou_bar(n=720) of the 2:1 cross matches the ellipse sampler."""
        a = OrientedBox(0, 0, 2, 1, 0)
        b = OrientedBox(0, 0, 2, 1, math.pi / 2)
        estimate, _ = mc_ellipse_iou(a, b, 1_000_000, seed=8)
        assert abs(jiou_bar(a, b, 720).ratio - estimate) <= 0.01

    def test_dense_grid_tracks_sampler(self):
        """At n=8192 the discrete ratio agrees with the sampler within
        max(0.005, 3*se) on concentric pairs."""
        rng = np.random.default_rng(17)
        for i in range(5):
            ar = rng.uniform(1.0, 5.0)
            dphi = rng.uniform(0.0, math.pi / 2)
            a = OrientedBox(0, 0, ar, 1, 0)
            b = OrientedBox(0, 0, ar, 1, dphi)
            estimate, se = mc_ellipse_iou(a, b, 1_000_000, seed=900 + i)
            ratio = jiou_bar(a, b, 8192).ratio
            assert abs(ratio - estimate) <= max(0.005, 3 * se)

    def test_deterministic_for_fixed_seed(self):
        a = OrientedBox(0, 0, 2, 1, 0)
        b = OrientedBox(0.5, 0, 2, 1, 0.7)
        assert mc_ellipse_iou(a, b, 10_000, seed=6) == mc_ellipse_iou(a, b, 10_000, seed=6)

    def test_too_few_samples_rejected(self):
        box = OrientedBox(0, 0, 1, 1, 0)
        with pytest.raises(InsufficientSamplesError):
            mc_ellipse_iou(box, box, 9_999, seed=0)
        with pytest.raises(InsufficientSamplesError):
            mc_rect_iou(box, box, 100, seed=0)


class TestDetection:
    def test_score_range_enforced(self):
        box = OrientedBox(0, 0, 1, 1, 0)
        with pytest.raises(InvalidBoxError):
            Detection(box, 1.5, 0)
        with pytest.raises(InvalidBoxError):
            Detection(box, math.nan, 0)


class TestRotatedNms:
    def test_duplicate_suppressed(self):
        box = OrientedBox(0, 0, 2, 1, 0.3)
        kept = rotated_nms([Detection(box, 0.9, 0), Detection(box, 0.8, 0)], 0.5)
        assert len(kept) == 1 and kept[0].score == 0.9

    def test_disjoint_all_survive(self):
        dets = [Detection(unit_square(cx=4.0 * i), 0.9 - 0.1 * i, 0) for i in range(4)]
        assert rotated_nms(dets, 0.5) == dets

    def test_chain_keeps_ends(self):
        """Greedy, enumerated by hand: A (0.9) is kept and suppresses B
        (IoU 0.6 > 0.5); C (0.7) clears A (IoU 1/3) and is kept.  Note two
        0.6 overlaps force the chain ends to overlap somewhat, so "below
        threshold" is the strongest separation the geometry allows."""
        a = Detection(OrientedBox(0.0, 0, 1, 1, 0), 0.9, 0)
        b = Detection(OrientedBox(0.5, 0, 1, 1, 0), 0.8, 0)
        c = Detection(OrientedBox(1.0, 0, 1, 1, 0), 0.7, 0)
        assert exact_rect_iou(a.box, b.box) == pytest.approx(0.6, abs=1e-12)
        assert exact_rect_iou(b.box, c.box) == pytest.approx(0.6, abs=1e-12)
        assert exact_rect_iou(a.box, c.box) == pytest.approx(1 / 3, abs=1e-12)
        assert rotated_nms([a, b, c], 0.5) == [a, c]

    def test_categories_do_not_interact(self):
        box = OrientedBox(0, 0, 2, 1, 0)
        dets = [Detection(box, 0.9, 0), Detection(box, 0.8, 1)]
        assert rotated_nms(dets, 0.5) == dets

    def test_equal_scores_keep_input_order(self):
        box = OrientedBox(0, 0, 2, 1, 0)
        far = Detection(OrientedBox(100, 0, 2, 1, 0), 0.9, 0)
        first = Detection(box, 0.9, 0)
        second = Detection(box, 0.9, 0)
        kept = rotated_nms([far, second, first], 0.5)
        assert kept == [far, second]

    def test_survivors_below_threshold_pairwise(self):
        """No two kept detections of one category exceed the threshold, and
        the output is a subset of the input in descending-score order."""
        rng = np.random.default_rng(21)
        dets = [
            Detection(random_box(rng, max_center=15.0, min_r=1.0, max_r=8.0),
                      float(rng.uniform(0, 1)), int(rng.integers(0, 2)))
            for _ in range(40)
        ]
        kept = rotated_nms(dets, 0.3)
        assert all(d in dets for d in kept)
        scores = [d.score for d in kept]
        assert scores == sorted(scores, reverse=True)
        for i, a in enumerate(kept):
            for b in kept[i + 1:]:
                if a.category == b.category:
                    assert exact_rect_iou(a.box, b.box) <= 0.3

    def test_threshold_validated(self):
        box = OrientedBox(0, 0, 1, 1, 0)
        for bad in (0.0, 1.0, -0.2):
            with pytest.raises(ValueError):
                rotated_nms([Detection(box, 0.5, 0)], bad)
