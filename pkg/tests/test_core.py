import numpy as np
import pytest
from hypothesis import given, strategies as st

from pats.core import (
    BBox,
    Correspondence,
    Image,
    InvalidInputError,
    TransportPlan,
    build_patch_grid,
)


def _image(w, h, value=0.5):
    return Image.from_array(np.full((h, w), value))


class TestImage:
    def test_rejects_out_of_range_samples(self):
        with pytest.raises(InvalidInputError):
            Image.from_array(np.full((4, 4), 1.5))

    def test_rejects_nan(self):
        arr = np.zeros((4, 4))
        arr[1, 1] = np.nan
        with pytest.raises(InvalidInputError):
            Image.from_array(arr)

    def test_gray_averages_channels(self):
        arr = np.zeros((2, 2, 3))
        arr[:, :, 0] = 0.9
        img = Image.from_array(arr)
        assert np.allclose(img.gray(), 0.3)

    def test_data_is_immutable(self):
        img = _image(4, 4)
        with pytest.raises(ValueError):
            img.data[0, 0, 0] = 1.0


class TestBuildPatchGrid:
    def test_64x64_s32_centers(self):
        grid = build_patch_grid(_image(64, 64), 32)
        assert (grid.rows, grid.cols) == (2, 2)
        got = {tuple(p) for p in grid.positions}
        assert got == {(16.0, 16.0), (48.0, 16.0), (16.0, 48.0), (48.0, 48.0)}

    def test_single_cell(self):
        grid = build_patch_grid(_image(32, 32), 32)
        assert grid.n_patches == 1
        assert tuple(grid.positions[0]) == (16.0, 16.0)

    def test_512x384_counts_match_formula(self):
        # independent loop-free formula: rows = H/s, cols = W/s
        w, h, s = 512, 384, 32
        grid = build_patch_grid(_image(w, h), s)
        assert grid.rows == h // s == 12
        assert grid.cols == w // s == 16
        assert grid.n_patches == (h // s) * (w // s) == 192

    def test_non_divisible_rejected(self):
        with pytest.raises(InvalidInputError):
            build_patch_grid(_image(100, 64), 32)

    def test_source_areas_start_at_one(self):
        grid = build_patch_grid(_image(64, 64), 32)
        assert np.all(grid.areas == 1.0)

    def test_deterministic(self):
        a = build_patch_grid(_image(96, 64), 32)
        b = build_patch_grid(_image(96, 64), 32)
        assert np.array_equal(a.positions, b.positions)

    @given(st.integers(1, 8), st.integers(1, 8), st.sampled_from([2, 8, 32]))
    def test_index_rowcol_center_roundtrip(self, rows, cols, s):
        grid = build_patch_grid(_image(cols * s, rows * s), s)
        seen = set()
        for i in range(grid.n_patches):
            r, c = grid.index_to_rowcol(i)
            assert grid.rowcol_to_index(r, c) == i
            center = grid.cell_center(r, c)
            assert tuple(grid.positions[i]) == center
            seen.add(center)
        assert len(seen) == grid.n_patches  # bijective


class TestBBox:
    def test_rejects_inverted(self):
        with pytest.raises(InvalidInputError):
            BBox(2, 0, 1, 3)

    def test_cell_indices_row_major(self):
        box = BBox(1, 1, 2, 2)
        assert box.cell_indices(grid_cols=4).tolist() == [5, 6, 9, 10]
        assert box.n_cells == 4


class TestTransportPlan:
    def test_shape_validation(self):
        with pytest.raises(InvalidInputError):
            TransportPlan(
                plan=np.zeros((2, 2)),
                source_areas=np.ones(2),
                target_areas=np.ones(2),
                marginal_error=0.0,
            )

    def test_negative_entries_rejected(self):
        plan = np.zeros((2, 2))
        plan[0, 0] = -1e-3
        with pytest.raises(InvalidInputError):
            TransportPlan(
                plan=plan,
                source_areas=np.ones(1),
                target_areas=np.ones(1),
                marginal_error=0.0,
            )


class TestCorrespondence:
    def test_confident_match_requires_positive_scale(self):
        with pytest.raises(InvalidInputError):
            Correspondence(
                source_index=0,
                source_pos=(1.0, 1.0),
                target_pos=(1.0, 1.0),
                bbox=BBox(0, 0, 0, 0),
                scale=0.0,
                confidence=0.5,
                level=1,
            )
