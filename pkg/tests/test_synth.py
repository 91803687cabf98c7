import numpy as np
import pytest

from pats.core import InvalidInputError
from pats.synth import GroundTruthWarp, generate_pair, ground_truth_position, warp_image


class TestGroundTruthWarp:
    def test_identity(self):
        warp = GroundTruthWarp.identity()
        assert np.allclose(ground_truth_position(warp, np.array([3.0, 4.0])), [3.0, 4.0])

    def test_uniform_scale(self):
        warp = GroundTruthWarp.uniform_scale(2.0)
        assert np.allclose(ground_truth_position(warp, np.array([10.0, 10.0])), [20.0, 20.0])

    def test_homography_hand_case(self):
        # projective division by hand: denominator 1 + 0.001 * 100 = 1.1
        warp = GroundTruthWarp.homography(
            np.array([[1.0, 0.0, 5.0], [0.0, 1.0, 0.0], [0.0, 0.001, 1.0]])
        )
        p = ground_truth_position(warp, np.array([0.0, 100.0]))
        assert p[0] == pytest.approx(5.0 / 1.1, abs=1e-9)
        assert p[1] == pytest.approx(100.0 / 1.1, abs=1e-9)

    def test_degenerate_rejected(self):
        with pytest.raises(InvalidInputError):
            GroundTruthWarp.affine(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_affine_inverse_roundtrip(self):
        warp = GroundTruthWarp.affine(np.array([[2.0, 0.3], [-0.1, 0.5]]), (4.0, -2.0))
        pts = np.random.default_rng(0).uniform(0, 100, (50, 2))
        back = warp.inverse().apply(warp.apply(pts))
        assert np.abs(back - pts).max() <= 1e-9

    def test_homography_inverse_roundtrip(self):
        warp = GroundTruthWarp.homography(
            np.array([[1.1, 0.02, 3.0], [-0.01, 0.95, 1.0], [1e-4, -5e-5, 1.0]])
        )
        pts = np.random.default_rng(1).uniform(0, 200, (50, 2))
        back = warp.inverse().apply(warp.apply(pts))
        assert np.abs(back - pts).max() <= 1e-6

    def test_det_jacobian_uniform_scale(self):
        warp = GroundTruthWarp.uniform_scale(2.0)
        det = warp.det_jacobian(np.array([[10.0, 20.0], [50.0, 60.0]]))
        assert np.allclose(det, 4.0)

    def test_covisible_scale_half(self):
        warp = GroundTruthWarp.uniform_scale(0.5)
        assert warp.covisible(np.array([100.0, 100.0]), 64, 64)
        assert not warp.covisible(np.array([200.0, 100.0]), 64, 64)

    def test_json_roundtrip(self):
        warp = GroundTruthWarp.affine(np.array([[2.0, 0.0], [0.0, 0.5]]), (1.0, 2.0))
        again = GroundTruthWarp.from_json(warp.to_json())
        assert again.kind == warp.kind
        assert np.array_equal(again.matrix, warp.matrix)


class TestGeneratePair:
    def test_identity_pair_bitwise_equal(self):
        source, target, _ = generate_pair(3, (64, 64), GroundTruthWarp.identity())
        assert np.array_equal(source.data, target.data)

    def test_scale2_resample_check(self):
        source, target, _ = generate_pair(5, (128, 128), GroundTruthWarp.uniform_scale(2.0))
        src = source.gray()
        tgt = target.gray()
        xs = np.arange(4, 60)
        diffs = [abs(tgt[2 * y, 2 * x] - src[y, x]) for y in xs for x in xs]
        assert max(diffs) <= 0.05

    def test_affine_grid_line_spacing(self):
        # lines rendered through the warp land with the stretched spacings
        src = np.zeros((128, 128))
        src[:, 16::16] = 1.0  # vertical lines every 16 px
        src[8::16, :] = np.maximum(src[8::16, :], 1.0)  # horizontal every 16 px
        warp = GroundTruthWarp.affine(np.array([[2.0, 0.0], [0.0, 0.5]]))
        tgt = warp_image(src, warp, (128, 128))

        col_profile = tgt[:32].sum(axis=0)  # top band: y-compression keeps lines inside
        col_peaks = np.where(col_profile > 0.5 * col_profile.max())[0]
        col_groups = np.split(col_peaks, np.where(np.diff(col_peaks) > 2)[0] + 1)
        col_centers = np.array([g.mean() for g in col_groups])
        assert np.allclose(np.diff(col_centers), 32.0, atol=1.0)

        row_profile = tgt[:, :32].sum(axis=1)
        row_peaks = np.where(row_profile > 0.5 * row_profile.max())[0]
        row_groups = np.split(row_peaks, np.where(np.diff(row_peaks) > 2)[0] + 1)
        row_centers = np.array([g.mean() for g in row_groups])
        assert np.allclose(np.diff(row_centers), 8.0, atol=1.0)

    def test_out_of_range_pixels_masked_to_zero(self):
        # shift content right by 100 px: target columns below 100 have
        # preimages left of the source and must be zeroed
        warp = GroundTruthWarp.affine(np.eye(2), (100.0, 0.0))
        src, tgt, _ = generate_pair(2, (128, 128), warp)
        assert np.all(tgt.gray()[:, :100] == 0.0)
        assert tgt.gray()[:, 100:].max() > 0.1

    def test_determinism(self):
        a = generate_pair(11, (64, 64), GroundTruthWarp.identity())[0]
        b = generate_pair(11, (64, 64), GroundTruthWarp.identity())[0]
        assert np.array_equal(a.data, b.data)

    def test_texture_locally_distinctive(self):
        source, _, _ = generate_pair(0, (256, 256), GroundTruthWarp.identity())
        tiles = source.gray().reshape(8, 32, 8, 32).transpose(0, 2, 1, 3).reshape(64, -1)
        stds = tiles.std(axis=1)
        assert stds.min() > 0.01  # no flat patches
