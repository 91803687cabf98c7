"""Coarse-to-fine refinement: windows, sub-patch grids, trimming, driver.

Each matched patch spawns a window pair: a fixed-size source crop (snapped
so its sub-patch grid lands exactly on the global next-level grid) and a
target crop whose side is scaled by the recovered factor, resampled back to
the source side. Window pairs are matched independently, and overlapping
sub-patches are trimmed per global cell by keeping the candidate that
transported the most area.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .core import (
    BBox,
    Correspondence,
    CorrespondenceSet,
    Image,
    InvalidInputError,
    PatchGrid,
    PatsError,
    TransportPlan,
    build_patch_grid,
)
from .descriptors import AreaBackend, DescriptorBackend, describe_patches, estimate_areas
from .ot import SinkhornConfig
from .util import parallel_map

__all__ = [
    "LevelSpec",
    "HierarchyConfig",
    "WindowPair",
    "WindowDropped",
    "SubpatchCandidate",
    "HierarchyState",
    "area_expectation",
    "scale_factor",
    "crop_and_resize",
    "subdivide",
    "trim_subpatches",
    "run_hierarchy",
]


class WindowDropped(PatsError):
    """A correspondence whose target window cannot be cropped."""


@dataclass(frozen=True)
class LevelSpec:
    """One hierarchy level: patch side and window expansion factor
    (None on the last level, which is never subdivided)."""

    patch_size: int
    expansion: int | None


@dataclass(frozen=True)
class HierarchyConfig:
    """Level schedule; defaults to patch sides 32/8/2 with expansions 3/2."""

    levels: tuple[LevelSpec, ...] = (
        LevelSpec(32, 3),
        LevelSpec(8, 2),
        LevelSpec(2, None),
    )

    def __post_init__(self):
        if not self.levels:
            raise InvalidInputError("hierarchy needs at least one level")
        for a, b in zip(self.levels, self.levels[1:]):
            if b.patch_size >= a.patch_size:
                raise InvalidInputError("patch sizes must strictly decrease")
            if a.expansion is None or a.expansion < 1:
                raise InvalidInputError("non-final levels need an expansion factor")
            window = a.patch_size * a.expansion
            if window % b.patch_size:
                raise InvalidInputError(
                    f"next patch size {b.patch_size} must divide window {window}"
                )

    @property
    def coarsest(self) -> int:
        return self.levels[0].patch_size


@dataclass(frozen=True)
class WindowPair:
    """Aligned source/target crops owned by one matched patch.

    `source_origin` is snapped to the next-level grid so sub-patch centers
    coincide with global grid centers. `resized_target` holds the target
    window resampled to the source side; `map_to_target` converts resized
    window coordinates back to original target image coordinates.
    """

    owner: int  # index into the parent correspondence list
    root: int  # level-1 ancestor patch index
    level: int  # level the owning correspondence lives at
    source_origin: tuple[int, int]  # (x0, y0), pixels
    side: int  # e
    source_content: np.ndarray  # (e, e)
    target_origin: tuple[float, float]
    target_side: float  # e-hat = scale * e
    resized_target: np.ndarray  # (e, e)
    scale: float  # cumulative scaling factor carried by the owner
    flags: tuple[str, ...] = ()

    def map_to_target(self, points: np.ndarray) -> np.ndarray:
        """Resized-window coords (..., 2) to original target image coords."""
        pts = np.asarray(points, dtype=np.float64)
        step = self.target_side / self.side
        return pts * step + np.asarray(self.target_origin)


@dataclass(frozen=True)
class SubpatchCandidate:
    """A sub-patch correspondence competing for one global next-level cell."""

    cell: tuple[int, int]  # (row, col) in the global next-level grid
    owner: int  # window index at this level (trim tie-break key)
    root: int
    corr: Correspondence


@dataclass
class LevelRecord:
    level: int
    corr_set: CorrespondenceSet
    roots: dict[int, int]  # source index -> level-1 ancestor
    n_windows: int = 0
    n_candidates: int = 0
    dropped: dict[int, str] = dataclasses.field(default_factory=dict)


@dataclass
class HierarchyState:
    """Per-level bookkeeping collected by `run_hierarchy`."""

    records: list[LevelRecord] = dataclasses.field(default_factory=list)

    def level(self, l: int) -> LevelRecord:
        for rec in self.records:
            if rec.level == l:
                return rec
        raise KeyError(l)


def area_expectation(
    plan: TransportPlan, i: int, bbox: BBox, target_grid: PatchGrid
) -> float | None:
    """Mass-weighted mean of target areas over the bbox; None when no mass."""
    members = bbox.cell_indices(target_grid.cols)
    masses = plan.real_plan()[i, members]
    total = masses.sum()
    if total <= 0.0:
        return None
    return float((masses / total) @ target_grid.areas[members])


def scale_factor(source_area: float, target_area_expectation: float) -> float:
    """Window scaling factor sqrt(a) / sqrt(a-hat)."""
    if not target_area_expectation > 0.0:
        raise InvalidInputError("area expectation must be positive")
    return math.sqrt(source_area) / math.sqrt(target_area_expectation)


def _snap(value: float, step: int) -> int:
    return int(round(value / step)) * step


def crop_and_resize(
    source_image: Image,
    target_image: Image,
    corr: Correspondence,
    window_side: int,
    next_patch_size: int,
    *,
    owner: int = 0,
    root: int | None = None,
) -> WindowPair:
    """Cut the window pair for one correspondence.

    The source window is an exact pixel crop (zero-padded only when the
    window exceeds the whole image); the target window side is
    `corr.scale * window_side`, clamped into the image when possible, and
    resampled to the source side with bilinear interpolation.

    Raises WindowDropped when the target window misses the image entirely.
    """
    if not corr.scale > 0:
        raise InvalidInputError("correspondence must carry a positive scale")
    e = window_side
    gray_src = source_image.gray()
    gray_tgt = target_image.gray()
    h_s, w_s = gray_src.shape
    h_t, w_t = gray_tgt.shape
    flags: list[str] = []

    x0 = _snap(corr.source_pos[0] - e / 2.0, next_patch_size)
    y0 = _snap(corr.source_pos[1] - e / 2.0, next_patch_size)
    x0c = min(max(x0, 0), max(0, w_s - e))
    y0c = min(max(y0, 0), max(0, h_s - e))
    if (x0c, y0c) != (x0, y0):
        flags.append("source_window_clamped")
    x0, y0 = x0c, y0c
    if w_s - x0 < e or h_s - y0 < e:
        flags.append("source_window_padded")
        content = np.zeros((e, e))
        content[: min(e, h_s - y0), : min(e, w_s - x0)] = gray_src[
            y0 : min(y0 + e, h_s), x0 : min(x0 + e, w_s)
        ]
    else:
        content = gray_src[y0 : y0 + e, x0 : x0 + e].copy()

    e_hat = corr.scale * e
    tx = corr.target_pos[0] - e_hat / 2.0
    ty = corr.target_pos[1] - e_hat / 2.0
    if tx + e_hat <= 0 or tx >= w_t or ty + e_hat <= 0 or ty >= h_t:
        raise WindowDropped(
            f"target window for source {corr.source_index} lies outside the image"
        )
    if e_hat <= w_t:
        txc = min(max(tx, 0.0), w_t - e_hat)
    else:
        txc = tx
        flags.append("target_window_partial")
    if e_hat <= h_t:
        tyc = min(max(ty, 0.0), h_t - e_hat)
    else:
        tyc = ty
        if "target_window_partial" not in flags:
            flags.append("target_window_partial")
    if (txc, tyc) != (tx, ty):
        flags.append("target_window_clamped")
    tx, ty = txc, tyc

    step = e_hat / e
    cc, rr = np.meshgrid(np.arange(e), np.arange(e))
    xs = np.ascontiguousarray(tx + (cc.ravel() + 0.5) * step)
    ys = np.ascontiguousarray(ty + (rr.ravel() + 0.5) * step)
    vals, mask = _kernels.bilinear_sample(gray_tgt, xs, ys)
    if not mask.all() and "target_window_partial" not in flags:
        flags.append("target_window_partial")
    resized = np.clip((vals * mask).reshape(e, e), 0.0, 1.0)

    return WindowPair(
        owner=owner,
        root=corr.source_index if root is None else root,
        level=corr.level,
        source_origin=(x0, y0),
        side=e,
        source_content=content,
        target_origin=(tx, ty),
        target_side=e_hat,
        resized_target=resized,
        scale=corr.scale,
        flags=tuple(flags),
    )


def subdivide(window: WindowPair, next_patch_size: int) -> tuple[PatchGrid, PatchGrid]:
    """Split both windows into K x K sub-patches (K = side / next_patch_size).

    Source sub-patch positions are global source coordinates; target
    positions are window centers pushed through the window's affine map into
    global target coordinates. Areas default to 1 on both sides (the resize
    already aligned scale); descriptors are left for the describe stage.
    """
    s = next_patch_size
    if window.side % s:
        raise InvalidInputError(f"{s} does not divide window side {window.side}")
    k = window.side // s
    n = k * k
    cc, rr = np.meshgrid(np.arange(k), np.arange(k))
    local = np.stack([(cc.ravel() + 0.5) * s, (rr.ravel() + 0.5) * s], axis=1).astype(np.float64)
    src_positions = local + np.asarray(window.source_origin, dtype=np.float64)
    tgt_positions = window.map_to_target(local)
    level = window.level + 1
    src = PatchGrid(
        patch_size=s,
        rows=k,
        cols=k,
        positions=src_positions,
        areas=np.ones(n),
        descriptors=np.zeros((n, 0)),
        level=level,
    )
    tgt = PatchGrid(
        patch_size=s,
        rows=k,
        cols=k,
        positions=tgt_positions,
        areas=np.ones(n),
        descriptors=np.zeros((n, 0)),
        level=level,
    )
    return src, tgt


def trim_subpatches(candidates: Iterable[SubpatchCandidate]) -> list[SubpatchCandidate]:
    """One survivor per global cell: the candidate with the largest total
    transported area (confidence); ties go to the smallest owner index.
    Output is sorted by cell."""
    best: dict[tuple[int, int], SubpatchCandidate] = {}
    for cand in sorted(candidates, key=lambda c: (c.cell, c.owner)):
        cur = best.get(cand.cell)
        if cur is None or cand.corr.confidence > cur.corr.confidence:
            best[cand.cell] = cand
    return [best[cell] for cell in sorted(best)]


def _match_window(
    window: WindowPair,
    next_patch_size: int,
    grid_shape: tuple[int, int],
    sinkhorn: SinkhornConfig,
    matcher_config,
) -> list[SubpatchCandidate]:
    """Solve one window pair and emit candidates on the global next grid."""
    from .matcher import match_grids  # late: avoids cycle

    src, tgt = subdivide(window, next_patch_size)
    backend = DescriptorBackend("handcrafted")
    src = describe_patches(Image.from_array(window.source_content), src, backend)
    tgt = describe_patches(Image.from_array(window.resized_target), tgt, backend)
    matched = match_grids(src, tgt, sinkhorn, matcher_config)

    rows_g, cols_g = grid_shape
    col0 = window.source_origin[0] // next_patch_size
    row0 = window.source_origin[1] // next_patch_size
    out: list[SubpatchCandidate] = []
    for corr in matched:
        r_local, c_local = src.index_to_rowcol(corr.source_index)
        cell = (row0 + r_local, col0 + c_local)
        if not (0 <= cell[0] < rows_g and 0 <= cell[1] < cols_g):
            continue  # padded window content outside the global grid
        out.append(
            SubpatchCandidate(
                cell=cell,
                owner=window.owner,
                root=window.root,
                corr=dataclasses.replace(
                    corr,
                    source_index=cell[0] * cols_g + cell[1],
                    scale=window.scale * corr.scale,
                ),
            )
        )
    return out


def run_hierarchy(
    source_image: Image,
    target_image: Image,
    *,
    descriptor_backend: DescriptorBackend | Sequence[DescriptorBackend] | None = None,
    area_backend: AreaBackend | None = None,
    hierarchy: HierarchyConfig | None = None,
    sinkhorn: SinkhornConfig | None = None,
    matcher_config=None,
    return_state: bool = False,
):
    """Alternate matching and subdivision down the level schedule.

    Returns the finest-level CorrespondenceSet (positions in original image
    coordinates, each carrying the cumulative scale factor and confidence);
    with `return_state=True` also returns the per-level HierarchyState.
    """
    from .matcher import MatcherConfig, match_grids  # late: avoids cycle

    hierarchy = hierarchy or HierarchyConfig()
    sinkhorn = sinkhorn or SinkhornConfig()
    matcher_config = matcher_config or MatcherConfig()
    if descriptor_backend is None:
        descriptor_backend = DescriptorBackend("handcrafted")
    if isinstance(descriptor_backend, DescriptorBackend):
        src_desc_backend = tgt_desc_backend = descriptor_backend
    else:
        src_desc_backend, tgt_desc_backend = descriptor_backend
    area_backend = area_backend or AreaBackend("unit")

    s1 = hierarchy.levels[0].patch_size
    src_grid = describe_patches(source_image, build_patch_grid(source_image, s1), src_desc_backend)
    tgt_grid = describe_patches(target_image, build_patch_grid(target_image, s1), tgt_desc_backend)
    tgt_grid = estimate_areas(tgt_grid, area_backend)

    level_set = match_grids(src_grid, tgt_grid, sinkhorn, matcher_config)
    state = HierarchyState()
    state.records.append(
        LevelRecord(
            level=1,
            corr_set=level_set,
            roots={c.source_index: c.source_index for c in level_set},
        )
    )
    if not level_set.correspondences:
        empty = dataclasses.replace(
            level_set, warnings=level_set.warnings + ("no coarse-level matches",)
        )
        state.records[0].corr_set = empty
        return (empty, state) if return_state else empty

    current = list(level_set.correspondences)
    roots = {idx: idx for idx in (c.source_index for c in current)}

    for depth, (spec, nxt) in enumerate(zip(hierarchy.levels, hierarchy.levels[1:])):
        e = spec.patch_size * spec.expansion
        grid_shape = (source_image.height // nxt.patch_size, source_image.width // nxt.patch_size)
        windows: list[WindowPair] = []
        dropped: dict[int, str] = {}
        for w_idx, corr in enumerate(current):
            try:
                windows.append(
                    crop_and_resize(
                        source_image,
                        target_image,
                        corr,
                        e,
                        nxt.patch_size,
                        owner=w_idx,
                        root=roots[corr.source_index],
                    )
                )
            except WindowDropped as exc:
                dropped[corr.source_index] = str(exc)

        candidate_lists = parallel_map(
            lambda w: _match_window(w, nxt.patch_size, grid_shape, sinkhorn, matcher_config),
            windows,
        )
        candidates = [cand for lst in candidate_lists for cand in lst]
        survivors = trim_subpatches(candidates)

        current = [cand.corr for cand in survivors]
        roots = {cand.corr.source_index: cand.root for cand in survivors}
        level_set = CorrespondenceSet(
            level=depth + 2,
            correspondences=tuple(current),
            unmatched={},
            warnings=(),
            plan=None,
        )
        state.records.append(
            LevelRecord(
                level=depth + 2,
                corr_set=level_set,
                roots=dict(roots),
                n_windows=len(windows),
                n_candidates=len(candidates),
                dropped=dropped,
            )
        )
        if not current:
            break

    return (level_set, state) if return_state else level_set
