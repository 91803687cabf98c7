"""Synthetic image pairs with exactly known planar geometry.

Every warp is stored as an invertible 3x3 matrix mapping source (x, y, 1)
homogeneous coordinates to target coordinates, so identity / uniform scale /
affine / homography share one code path. The texture generator is seeded and
band-limited so patches are locally distinctive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import Image, InvalidInputError

__all__ = ["GroundTruthWarp", "generate_pair", "ground_truth_position", "warp_image"]

_AFFINE_MIN_DET = 1e-9

# texture generator constants: blob count scales with area, noise smoothed
# with a 2 px gaussian. The field is noise-dominated with 2-8 px blobs:
# matching accuracy at the 2 px patch level needs every fine cell locally
# distinctive, which caps how much low-frequency (scale-robust) structure
# the texture can carry.
_BLOB_AREA_DIVISOR = 256
_NOISE_SIGMA = 2.0
_BLOB_SIGMA_RANGE = (2.0, 8.0)
_BLOB_WEIGHT = 1.0
_NOISE_WEIGHT = 3.0


@dataclass(frozen=True)
class GroundTruthWarp:
    """Invertible planar map from source to target image coordinates."""

    kind: str  # identity | uniform_scale | affine | homography
    matrix: np.ndarray  # 3x3 float64

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise InvalidInputError("warp matrix must be a finite 3x3 matrix")
        if self.kind not in ("identity", "uniform_scale", "affine", "homography"):
            raise InvalidInputError(f"unknown warp kind {self.kind!r}")
        det = np.linalg.det(m)
        if abs(det) < _AFFINE_MIN_DET:
            raise InvalidInputError(f"degenerate warp: |det| = {abs(det):.3g}")
        m = np.ascontiguousarray(m)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "GroundTruthWarp":
        return cls("identity", np.eye(3))

    @classmethod
    def uniform_scale(cls, sigma: float) -> "GroundTruthWarp":
        return cls("uniform_scale", np.diag([float(sigma), float(sigma), 1.0]))

    @classmethod
    def affine(cls, linear: np.ndarray, translation=(0.0, 0.0)) -> "GroundTruthWarp":
        m = np.eye(3)
        m[:2, :2] = np.asarray(linear, dtype=np.float64)
        m[:2, 2] = np.asarray(translation, dtype=np.float64)
        return cls("affine", m)

    @classmethod
    def homography(cls, matrix: np.ndarray) -> "GroundTruthWarp":
        return cls("homography", np.asarray(matrix, dtype=np.float64))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map source points (..., 2) to target coordinates."""
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        homo = np.concatenate([pts, np.ones((pts.shape[0], 1))], axis=1)
        mapped = homo @ self.matrix.T
        with np.errstate(divide="ignore", invalid="ignore"):
            out = mapped[:, :2] / mapped[:, 2:3]
        return out[0] if single else out

    def inverse(self) -> "GroundTruthWarp":
        return GroundTruthWarp(self.kind, np.linalg.inv(self.matrix))

    def jacobian(self, points: np.ndarray) -> np.ndarray:
        """Jacobian d(target)/d(source), shape (..., 2, 2), at source points."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        m = self.matrix
        homo = np.concatenate([pts, np.ones((pts.shape[0], 1))], axis=1)
        num_x = homo @ m[0]
        num_y = homo @ m[1]
        den = homo @ m[2]
        jac = np.empty((pts.shape[0], 2, 2))
        jac[:, 0, 0] = (m[0, 0] * den - num_x * m[2, 0]) / den**2
        jac[:, 0, 1] = (m[0, 1] * den - num_x * m[2, 1]) / den**2
        jac[:, 1, 0] = (m[1, 0] * den - num_y * m[2, 0]) / den**2
        jac[:, 1, 1] = (m[1, 1] * den - num_y * m[2, 1]) / den**2
        return jac if np.asarray(points).ndim > 1 else jac[0]

    def det_jacobian(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        jac = self.jacobian(pts)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        return det if np.asarray(points).ndim > 1 else det[0]

    def covisible(self, points: np.ndarray, target_width: int, target_height: int) -> np.ndarray:
        """True where source points land inside the target bounds.

        Points behind the homography plane (non-positive denominator) are
        never co-visible.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        homo = np.concatenate([pts, np.ones((pts.shape[0], 1))], axis=1)
        den = homo @ self.matrix[2]
        mapped = self.apply(pts)
        ok = (
            (den > 1e-9)
            & (mapped[:, 0] >= 0.0)
            & (mapped[:, 0] <= target_width)
            & (mapped[:, 1] >= 0.0)
            & (mapped[:, 1] <= target_height)
        )
        return ok if np.asarray(points).ndim > 1 else bool(ok[0])

    def to_dict(self) -> dict:
        return {"warp_kind": self.kind, "matrix": self.matrix.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruthWarp":
        return cls(d["warp_kind"], np.asarray(d["matrix"], dtype=np.float64))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GroundTruthWarp":
        return cls.from_dict(json.loads(text))


def ground_truth_position(warp: GroundTruthWarp, points: np.ndarray) -> np.ndarray:
    """Exact warped target position(s) for source point(s).

    Callers gate on `warp.covisible` for points that may fall outside the
    target image.
    """
    return warp.apply(points)


def _smooth_separable(field: np.ndarray, sigma: float) -> np.ndarray:
    radius = max(1, int(round(4 * sigma)))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (xs / sigma) ** 2)
    kernel /= kernel.sum()
    padded = np.pad(field, ((radius, radius), (0, 0)), mode="reflect")
    out = np.empty_like(field)
    for r in range(field.shape[0]):
        out[r] = kernel @ padded[r : r + 2 * radius + 1]
    padded = np.pad(out, ((0, 0), (radius, radius)), mode="reflect")
    out2 = np.empty_like(field)
    for c in range(field.shape[1]):
        out2[:, c] = padded[:, c : c + 2 * radius + 1] @ kernel
    return out2


def _texture(seed: int, width: int, height: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    field = np.zeros((height, width))
    n_blobs = max(1, (width * height) // _BLOB_AREA_DIVISOR)
    cx = rng.uniform(0, width, n_blobs)
    cy = rng.uniform(0, height, n_blobs)
    lo_s, hi_s = _BLOB_SIGMA_RANGE
    sig = rng.uniform(lo_s, hi_s, n_blobs)
    amp = rng.uniform(-1.0, 1.0, n_blobs)
    ys = np.arange(height)[:, None]
    xs = np.arange(width)[None, :]
    for k in range(n_blobs):
        r = int(np.ceil(3 * sig[k]))
        x0, x1 = max(0, int(cx[k]) - r), min(width, int(cx[k]) + r + 1)
        y0, y1 = max(0, int(cy[k]) - r), min(height, int(cy[k]) + r + 1)
        dx = xs[:, x0:x1] + 0.5 - cx[k]
        dy = ys[y0:y1] + 0.5 - cy[k]
        field[y0:y1, x0:x1] += amp[k] * np.exp(-(dx**2 + dy**2) / (2 * sig[k] ** 2))
    noise = _smooth_separable(rng.uniform(-1.0, 1.0, (height, width)), _NOISE_SIGMA)
    field = _BLOB_WEIGHT * field + _NOISE_WEIGHT * noise
    lo, hi = field.min(), field.max()
    if hi - lo < 1e-12:
        return np.full_like(field, 0.5)
    return (field - lo) / (hi - lo)


def warp_image(source: np.ndarray, warp: GroundTruthWarp, size: tuple[int, int]) -> np.ndarray:
    """Resample a (H, W) array through the warp onto a (width, height) canvas.

    Each target pixel takes the bilinear sample at its preimage; preimages
    outside the source are zero.
    """
    width, height = size
    inv = warp.inverse()
    cc, rr = np.meshgrid(np.arange(width), np.arange(height))
    centers = np.stack([cc.ravel() + 0.5, rr.ravel() + 0.5], axis=1).astype(np.float64)
    src_pts = inv.apply(centers)
    vals, mask = _kernels.bilinear_sample(
        np.ascontiguousarray(source, dtype=np.float64),
        np.ascontiguousarray(src_pts[:, 0]),
        np.ascontiguousarray(src_pts[:, 1]),
    )
    return (vals * mask).reshape(height, width)


def generate_pair(
    seed: int, size: tuple[int, int], warp: GroundTruthWarp
) -> tuple[Image, Image, GroundTruthWarp]:
    """Seeded texture plus its warped counterpart.

    `size` is (width, height) for both images. The target is the source
    resampled through the warp with bilinear interpolation; target pixels
    whose preimage falls outside the source are zero.
    """
    width, height = size
    if width <= 0 or height <= 0:
        raise InvalidInputError("size must be positive")
    tex = _texture(seed, width, height)
    target = warp_image(tex, warp, size)
    return Image.from_array(tex), Image.from_array(np.clip(target, 0.0, 1.0)), warp
