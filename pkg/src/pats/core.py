"""Core geometric types shared across the matching pipeline.

Coordinate convention: x runs along columns, y along rows, origin at the
top-left pixel corner. The pixel at array index [r, c] occupies the unit
square [c, c+1) x [r, r+1), so its center is (c + 0.5, r + 0.5) and the
center of grid cell (r, c) at patch size s is ((c + 0.5) * s, (r + 0.5) * s).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PatsError",
    "InvalidInputError",
    "DataFormatError",
    "Image",
    "PatchGrid",
    "TransportPlan",
    "BBox",
    "Correspondence",
    "CorrespondenceSet",
    "build_patch_grid",
]


class PatsError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(PatsError, ValueError):
    """An operation received input that violates its preconditions."""


class DataFormatError(PatsError):
    """A file failed to parse. `offset` is the byte position when known."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Image:
    """A row-major floating-point image with samples in [0, 1].

    `orig_width`/`orig_height` record the pre-padding size when the image was
    zero-padded to a patch-size multiple; None means the image was never
    padded.
    """

    width: int
    height: int
    channels: int
    data: np.ndarray  # (height, width, channels) float64
    orig_width: int | None = None
    orig_height: int | None = None

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InvalidInputError("image dimensions must be positive")
        if self.channels not in (1, 3):
            raise InvalidInputError("channels must be 1 or 3")
        if self.data.shape != (self.height, self.width, self.channels):
            raise InvalidInputError(
                f"data shape {self.data.shape} does not match "
                f"{(self.height, self.width, self.channels)}"
            )
        if not np.all(np.isfinite(self.data)):
            raise InvalidInputError("image samples must be finite")
        if self.data.min() < 0.0 or self.data.max() > 1.0:
            raise InvalidInputError("image samples must lie in [0, 1]")
        object.__setattr__(self, "data", _readonly(self.data.astype(np.float64)))

    @classmethod
    def from_array(cls, arr: np.ndarray, orig_size: tuple[int, int] | None = None) -> "Image":
        """Build an Image from an (H, W) or (H, W, C) array in [0, 1]."""
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise InvalidInputError("expected a 2D or 3D array")
        h, w, c = arr.shape
        ow, oh = orig_size if orig_size is not None else (None, None)
        return cls(width=w, height=h, channels=c, data=arr, orig_width=ow, orig_height=oh)

    def gray(self) -> np.ndarray:
        """Single-plane (H, W) view: the channel mean for color images."""
        if self.channels == 1:
            return self.data[:, :, 0]
        return self.data.mean(axis=2)

    @property
    def effective_orig_size(self) -> tuple[int, int]:
        """(width, height) before padding; falls back to the padded size."""
        return (
            self.orig_width if self.orig_width is not None else self.width,
            self.orig_height if self.orig_height is not None else self.height,
        )


@dataclass(frozen=True)
class PatchGrid:
    """Regular tiling of an image into side-`patch_size` square patches.

    Index i is row-major: i = row * cols + col. `positions[i]` is the patch
    center in image coordinates (possibly remapped to another frame for
    window sub-grids), `areas[i]` the patch area in source-image scale units,
    `descriptors[i]` the L2-normalized feature row (width 0 until filled).
    """

    patch_size: int
    rows: int
    cols: int
    positions: np.ndarray  # (N, 2) float64, columns (x, y)
    areas: np.ndarray  # (N,) float64, >= 0
    descriptors: np.ndarray  # (N, d) float64
    level: int = 1
    flagged: tuple[int, ...] = ()  # patch indices flagged by producers

    def __post_init__(self):
        n = self.rows * self.cols
        if self.patch_size < 1 or n == 0:
            raise InvalidInputError("grid must have positive patch size and cells")
        if self.positions.shape != (n, 2):
            raise InvalidInputError(f"positions shape {self.positions.shape} != {(n, 2)}")
        if self.areas.shape != (n,):
            raise InvalidInputError(f"areas shape {self.areas.shape} != {(n,)}")
        if self.descriptors.ndim != 2 or self.descriptors.shape[0] != n:
            raise InvalidInputError("descriptors must be (N, d)")
        if not np.all(np.isfinite(self.positions)):
            raise InvalidInputError("positions must be finite")
        if np.any(self.areas < 0) or not np.all(np.isfinite(self.areas)):
            raise InvalidInputError("areas must be finite and non-negative")
        if self.descriptors.shape[1] > 0:
            if not np.all(np.isfinite(self.descriptors)):
                raise InvalidInputError("descriptors must be finite")
            norms = np.linalg.norm(self.descriptors, axis=1)
            bad = ~((np.abs(norms - 1.0) <= 1e-6) | (norms <= 1e-6))
            if np.any(bad):
                raise InvalidInputError(
                    f"{int(bad.sum())} descriptor rows are neither unit-norm nor zero"
                )
        for name in ("positions", "areas", "descriptors"):
            object.__setattr__(self, name, _readonly(getattr(self, name).astype(np.float64)))

    @property
    def n_patches(self) -> int:
        return self.rows * self.cols

    def index_to_rowcol(self, i: int) -> tuple[int, int]:
        if not 0 <= i < self.n_patches:
            raise InvalidInputError(f"patch index {i} out of range")
        return divmod(i, self.cols)

    def rowcol_to_index(self, row: int, col: int) -> int:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise InvalidInputError(f"cell ({row}, {col}) out of range")
        return row * self.cols + col

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        return ((col + 0.5) * self.patch_size, (row + 0.5) * self.patch_size)

    def with_descriptors(self, descriptors: np.ndarray) -> "PatchGrid":
        return dataclasses.replace(self, descriptors=np.asarray(descriptors, dtype=np.float64))

    def with_areas(self, areas: np.ndarray, flagged: tuple[int, ...] | None = None) -> "PatchGrid":
        return dataclasses.replace(
            self,
            areas=np.asarray(areas, dtype=np.float64),
            flagged=self.flagged if flagged is None else flagged,
        )


@dataclass(frozen=True)
class TransportPlan:
    """An (N+1) x (M+1) non-negative transport matrix with dustbins.

    Row N and column M are the source/target dustbins; entry [N, M] is
    meaningless and ignored by all consumers. For a converged plan every real
    source row sums (targets + target dustbin) to `source_areas[i]`, and
    every real target column sums to `target_areas[j]`, within the solver's
    marginal tolerance.
    """

    plan: np.ndarray  # (N+1, M+1) float64
    source_areas: np.ndarray  # (N,)
    target_areas: np.ndarray  # (M,)
    marginal_error: float
    converged: bool = True
    iterations: int = 0
    error_history: tuple[float, ...] | None = None

    def __post_init__(self):
        n, m = self.n_sources, self.n_targets
        if self.plan.shape != (n + 1, m + 1):
            raise InvalidInputError(
                f"plan shape {self.plan.shape} does not match areas ({n}+1, {m}+1)"
            )
        if self.plan.min() < 0.0:
            raise InvalidInputError("plan entries must be non-negative")
        object.__setattr__(self, "plan", _readonly(self.plan.astype(np.float64)))
        object.__setattr__(self, "source_areas", _readonly(self.source_areas.astype(np.float64)))
        object.__setattr__(self, "target_areas", _readonly(self.target_areas.astype(np.float64)))

    @property
    def n_sources(self) -> int:
        return self.source_areas.shape[0]

    @property
    def n_targets(self) -> int:
        return self.target_areas.shape[0]

    def real_plan(self) -> np.ndarray:
        """The (N, M) block over real sources and targets."""
        return self.plan[: self.n_sources, : self.n_targets]


@dataclass(frozen=True)
class BBox:
    """Inclusive axis-aligned rectangle of target grid cells."""

    min_row: int
    min_col: int
    max_row: int
    max_col: int

    def __post_init__(self):
        if self.min_row > self.max_row or self.min_col > self.max_col:
            raise InvalidInputError("bbox min must not exceed max")

    @property
    def n_cells(self) -> int:
        return (self.max_row - self.min_row + 1) * (self.max_col - self.min_col + 1)

    def contains(self, row: int, col: int) -> bool:
        return self.min_row <= row <= self.max_row and self.min_col <= col <= self.max_col

    def cell_indices(self, grid_cols: int) -> np.ndarray:
        """Flat row-major indices of every cell inside the box."""
        rr = np.arange(self.min_row, self.max_row + 1)
        cc = np.arange(self.min_col, self.max_col + 1)
        return (rr[:, None] * grid_cols + cc[None, :]).ravel()

    def check_within(self, rows: int, cols: int) -> None:
        if self.min_row < 0 or self.min_col < 0 or self.max_row >= rows or self.max_col >= cols:
            raise InvalidInputError(f"bbox {self} exceeds grid {rows}x{cols}")


@dataclass(frozen=True)
class Correspondence:
    """One source patch matched to a target location.

    `target_pos` is the square-root-of-mass weighted expectation of the
    bbox patch centers, `scale` the window scaling factor carried through
    the hierarchy, and `confidence` the total mass transported into the bbox
    (at most the source patch area).
    """

    source_index: int
    source_pos: tuple[float, float]
    target_pos: tuple[float, float]
    bbox: BBox
    scale: float
    confidence: float
    level: int
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.confidence > 0 and not self.scale > 0:
            raise InvalidInputError("scale must be positive for confident matches")


@dataclass(frozen=True)
class CorrespondenceSet:
    """Matched correspondences plus bookkeeping for the unmatched remainder.

    `unmatched` maps source patch index to a short reason string. `plan` is
    the transport plan the correspondences were extracted from when a single
    solve produced them (None for per-window composites).
    """

    level: int
    correspondences: tuple[Correspondence, ...]
    unmatched: dict[int, str] = dataclasses.field(default_factory=dict)
    warnings: tuple[str, ...] = ()
    plan: TransportPlan | None = None

    def __iter__(self):
        return iter(self.correspondences)

    def __len__(self) -> int:
        return len(self.correspondences)

    def by_source(self) -> dict[int, Correspondence]:
        return {c.source_index: c for c in self.correspondences}


def build_patch_grid(image: Image, patch_size: int) -> PatchGrid:
    """Tile `image` into a PatchGrid of side-`patch_size` patches.

    The image dimensions must be multiples of `patch_size` (images are padded
    upstream otherwise). Areas start at 1 and descriptors empty; the
    descriptor stage fills them in.
    """
    if patch_size < 1:
        raise InvalidInputError("patch_size must be >= 1")
    if image.width == 0 or image.height == 0:
        raise InvalidInputError("cannot grid a zero-sized image")
    if image.width % patch_size or image.height % patch_size:
        raise InvalidInputError(
            f"patch size {patch_size} does not divide image {image.width}x{image.height}"
        )
    rows = image.height // patch_size
    cols = image.width // patch_size
    cc, rr = np.meshgrid(np.arange(cols), np.arange(rows))
    positions = np.stack(
        [(cc.ravel() + 0.5) * patch_size, (rr.ravel() + 0.5) * patch_size], axis=1
    ).astype(np.float64)
    n = rows * cols
    return PatchGrid(
        patch_size=patch_size,
        rows=rows,
        cols=cols,
        positions=positions,
        areas=np.ones(n),
        descriptors=np.zeros((n, 0)),
        level=1,
    )
