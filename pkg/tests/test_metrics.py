import math

import numpy as np
import pytest

from pats.core import BBox, Correspondence, Image, TransportPlan, build_patch_grid
from pats.metrics import (
    EvalReport,
    LossConfig,
    concentration_loss,
    evaluate,
    inlier_loss,
    outlier_loss,
    split_inlier_outlier,
)
from pats.synth import GroundTruthWarp


def corr(i, src, dst, bbox=None, conf=1.0, level=1):
    return Correspondence(
        source_index=i,
        source_pos=src,
        target_pos=dst,
        bbox=bbox or BBox(0, 0, 0, 0),
        scale=1.0,
        confidence=conf,
        level=level,
    )


def plan_of(rows):
    rows = np.asarray(rows, dtype=np.float64)
    n, m = rows.shape
    full = np.zeros((n + 1, m + 1))
    full[:n, :m] = rows
    return TransportPlan(
        plan=full,
        source_areas=np.ones(n),
        target_areas=np.ones(m),
        marginal_error=0.0,
    )


def grid_64():
    return build_patch_grid(Image.from_array(np.full((64, 64), 0.5)), 32)


class TestSplit:
    def test_exact_match_is_inlier(self):
        c = corr(0, (16.0, 16.0), (16.0, 16.0))
        inl, out = split_inlier_outlier([c], GroundTruthWarp.identity(), LossConfig(8.0), grid_64())
        assert len(inl) == 1 and len(out) == 0
        assert inl[0] == (0, 0)  # truth lands in target cell 0

    def test_error_exactly_theta_is_inlier(self):
        c = corr(0, (16.0, 16.0), (24.0, 16.0))  # error 8 == theta
        inl, out = split_inlier_outlier([c], GroundTruthWarp.identity(), LossConfig(8.0), grid_64())
        assert len(inl) == 1 and len(out) == 0

    def test_hand_partition_of_five(self):
        theta = 8.0
        offsets = [(0.0, 0.0), (5.0, 0.0), (0.0, 9.0), (6.0, 6.0), (20.0, 0.0)]
        # distances: 0, 5, 9, 8.485, 20 -> inliers {0, 1, 4th? no}: 0,5 in; 9 out; 8.485 out; 20 out
        cs = [corr(i, (16.0, 16.0), (16.0 + dx, 16.0 + dy)) for i, (dx, dy) in enumerate(offsets)]
        inl, out = split_inlier_outlier(cs, GroundTruthWarp.identity(), LossConfig(theta), grid_64())
        assert sorted(i for i, _ in inl) == [0, 1]
        assert sorted(i for i, _ in out) == [2, 3, 4]

    def test_truth_cell_index(self):
        # source at (40, 16) under identity lands in column cell 1
        c = corr(3, (40.0, 16.0), (40.0, 16.0))
        inl, _ = split_inlier_outlier([c], GroundTruthWarp.identity(), LossConfig(8.0), grid_64())
        assert inl[0] == (3, 1)


class TestOutlierLoss:
    def test_full_mass_gives_zero(self):
        plan = plan_of([[1.0, 0.0]])
        assert outlier_loss(plan, [(0, 0)]) == 0.0

    def test_mass_e_inverse_gives_one(self):
        plan = plan_of([[math.exp(-1.0), 0.0]])
        assert outlier_loss(plan, [(0, 0)]) == pytest.approx(1.0, abs=1e-12)

    def test_hand_mean_of_two(self):
        plan = plan_of([[0.5, 0.0], [0.0, 0.25]])
        got = outlier_loss(plan, [(0, 0), (1, 1)])
        assert got == pytest.approx((math.log(2) + math.log(4)) / 2, abs=1e-12)

    def test_empty_set_zero(self):
        assert outlier_loss(plan_of([[1.0]]), []) == 0.0

    def test_zero_mass_clamped_finite(self):
        plan = plan_of([[0.0, 1.0]])
        loss = outlier_loss(plan, [(0, 0)])
        assert np.isfinite(loss)
        assert loss == pytest.approx(-math.log(1e-12))

    def test_monotone_decreasing_in_mass(self):
        losses = [outlier_loss(plan_of([[p, 0.0]]), [(0, 0)]) for p in (0.1, 0.3, 0.6, 0.9)]
        assert all(a > b for a, b in zip(losses, losses[1:]))


class TestInlierLoss:
    def test_exact_matches_zero(self):
        cs = [corr(0, (16.0, 16.0), (16.0, 16.0))]
        assert inlier_loss(cs, GroundTruthWarp.identity(), [(0, 0)]) == 0.0

    def test_three_four_five(self):
        cs = [corr(0, (16.0, 16.0), (19.0, 20.0))]
        assert inlier_loss(cs, GroundTruthWarp.identity(), [(0, 0)]) == pytest.approx(25.0)

    def test_hand_mean_of_three(self):
        offs = [(1.0, 0.0), (0.0, 2.0), (2.0, 2.0)]
        cs = [corr(i, (16.0, 16.0), (16.0 + dx, 16.0 + dy)) for i, (dx, dy) in enumerate(offs)]
        pairs = [(i, 0) for i in range(3)]
        expected = (1.0 + 4.0 + 8.0) / 3.0
        assert inlier_loss(cs, GroundTruthWarp.identity(), pairs) == pytest.approx(expected)


class TestConcentrationLoss:
    def test_all_mass_inside_bbox_zero(self):
        plan = plan_of([[0.7, 0.3, 0.0, 0.0]])
        c = corr(0, (16.0, 16.0), (16.0, 16.0), bbox=BBox(0, 0, 0, 1))  # cells 0,1 on 2x2
        grid = build_patch_grid(Image.from_array(np.full((64, 64), 0.5)), 32)
        assert concentration_loss(plan, [c], [(0, 0)], grid) == pytest.approx(0.0)

    def test_single_leak(self):
        plan = plan_of([[0.8, 0.0, 0.2, 0.0]])
        c = corr(0, (16.0, 16.0), (16.0, 16.0), bbox=BBox(0, 0, 0, 1))
        grid = build_patch_grid(Image.from_array(np.full((64, 64), 0.5)), 32)
        assert concentration_loss(plan, [c], [(0, 0)], grid) == pytest.approx(0.2)

    def test_mean_of_two_inliers(self):
        plan = plan_of([[0.9, 0.0, 0.1, 0.0], [0.0, 0.7, 0.0, 0.3]])
        grid = build_patch_grid(Image.from_array(np.full((64, 64), 0.5)), 32)
        cs = [
            corr(0, (16.0, 16.0), (16.0, 16.0), bbox=BBox(0, 0, 0, 0)),
            corr(1, (48.0, 16.0), (48.0, 16.0), bbox=BBox(0, 1, 0, 1)),
        ]
        got = concentration_loss(plan, cs, [(0, 0), (1, 1)], grid)
        assert got == pytest.approx(0.2)

    def test_dustbin_mass_excluded(self):
        full = np.zeros((2, 3))
        full[0] = [0.5, 0.0, 0.5]  # half the mass sits in the dustbin column
        plan = TransportPlan(
            plan=full,
            source_areas=np.ones(1),
            target_areas=np.ones(2),
            marginal_error=0.0,
        )
        c = corr(0, (16.0, 16.0), (16.0, 16.0), bbox=BBox(0, 0, 0, 0))
        grid = grid_64()
        assert concentration_loss(plan, [c], [(0, 0)], grid) == pytest.approx(0.0)


class TestEvaluate:
    def test_perfect_dense_grid_full_coverage(self):
        warp = GroundTruthWarp.identity()
        cs = []
        k = 0
        for y in range(10):
            for x in range(10):
                p = (x * 25.6 + 12.8, y * 25.6 + 12.8)
                cs.append(corr(k, p, p))
                k += 1
        rep = evaluate(cs, warp, source_size=(256, 256), target_size=(256, 256))
        assert rep.coverage == 1.0
        assert rep.precision == 1.0
        assert rep.mean_epe == 0.0

    def test_corner_cluster_coverage(self):
        warp = GroundTruthWarp.identity()
        cs = [corr(i, (5.0 + i, 5.0), (5.0 + i, 5.0)) for i in range(5)]
        rep = evaluate(cs, warp, source_size=(256, 256), target_size=(256, 256))
        assert rep.coverage == pytest.approx(1 / 100)

    def test_hand_built_precision_fraction(self):
        warp = GroundTruthWarp.identity()
        errs = [0.0, 1.0, 2.0, 2.9, 3.0, 3.1, 5.0, 8.0, 0.5, 2.5]
        cs = [corr(i, (128.0, 128.0), (128.0 + e, 128.0)) for i, e in enumerate(errs)]
        rep = evaluate(cs, warp, precision_threshold=3.0, source_size=(256, 256), target_size=(256, 256))
        # errors <= 3: 0,1,2,2.9,3.0,0.5,2.5 -> 7 of 10
        assert rep.precision == pytest.approx(0.7)
        assert rep.match_count == 10

    def test_zero_matches(self):
        rep = evaluate([], GroundTruthWarp.identity(), source_size=(64, 64), target_size=(64, 64))
        assert rep.match_count == 0
        assert rep.precision == 0.0
        assert rep.coverage == 0.0

    def test_coverage_restricted_to_covisible(self):
        # scale 0.5 keeps every cell co-visible; scale 2 keeps only the
        # top-left quarter of cell centers
        warp = GroundTruthWarp.uniform_scale(2.0)
        cs = [corr(0, (12.8, 12.8), (25.6, 25.6))]
        rep = evaluate(cs, warp, source_size=(256, 256), target_size=(256, 256))
        assert rep.coverage == pytest.approx(1 / 25)

    def test_report_roundtrip_json(self):
        rep = EvalReport(0.5, 0.25, 1.0, 0.5, 10, 0.0, 0.0, 0.0, False)
        import json

        again = json.loads(rep.to_json())
        assert again["precision"] == 0.5
        assert again["match_count"] == 10

    def test_order_invariance(self):
        warp = GroundTruthWarp.identity()
        rng = np.random.default_rng(0)
        cs = [
            corr(i, (float(x), float(y)), (float(x) + rng.uniform(0, 4), float(y)))
            for i, (x, y) in enumerate(rng.uniform(10, 240, (30, 2)))
        ]
        r1 = evaluate(cs, warp, source_size=(256, 256), target_size=(256, 256))
        r2 = evaluate(cs[::-1], warp, source_size=(256, 256), target_size=(256, 256))
        assert r1.precision == r2.precision
        assert r1.coverage == r2.coverage
        assert r1.mean_epe == pytest.approx(r2.mean_epe)
