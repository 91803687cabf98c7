"""Image and match-file I/O.

Binary PGM (P5) and PPM (P6) are the native image formats; PNG works too
when Pillow happens to be importable. Matches serialize as JSON lines.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import BBox, Correspondence, DataFormatError, Image

__all__ = [
    "load_image",
    "read_pnm",
    "write_pnm",
    "write_matches",
    "read_matches",
]


def _read_header_token(raw: bytes, pos: int, path) -> tuple[bytes, int]:
    # skip whitespace and '#' comments
    n = len(raw)
    while pos < n:
        ch = raw[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            while pos < n and raw[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    if pos >= n:
        raise DataFormatError(f"{path}: truncated header", offset=pos)
    start = pos
    while pos < n and not raw[pos : pos + 1].isspace():
        pos += 1
    return raw[start:pos], pos


def read_pnm(path: str | Path) -> np.ndarray:
    """Read binary PGM/PPM into float64 in [0, 1]; (H, W) or (H, W, 3)."""
    raw = Path(path).read_bytes()
    if len(raw) < 2:
        raise DataFormatError(f"{path}: file too short", offset=len(raw))
    magic = raw[:2]
    if magic not in (b"P5", b"P6"):
        raise DataFormatError(f"{path}: unsupported format {magic!r}", offset=0)
    channels = 1 if magic == b"P5" else 3
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_header_token(raw, pos, path)
        try:
            fields.append(int(tok))
        except ValueError:
            raise DataFormatError(f"{path}: bad header token {tok!r}", offset=pos)
    width, height, maxval = fields
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise DataFormatError(f"{path}: bad dimensions or maxval", offset=pos)
    pos += 1  # single whitespace byte after maxval
    bytes_per = 1 if maxval < 256 else 2
    need = width * height * channels * bytes_per
    if len(raw) - pos < need:
        raise DataFormatError(
            f"{path}: truncated pixel data ({len(raw) - pos} of {need} bytes)",
            offset=len(raw),
        )
    dtype = np.uint8 if bytes_per == 1 else np.dtype(">u2")
    data = np.frombuffer(raw, dtype=dtype, count=width * height * channels, offset=pos)
    arr = data.reshape(height, width, channels).astype(np.float64) / maxval
    return arr[:, :, 0] if channels == 1 else arr


def write_pnm(path: str | Path, arr: np.ndarray) -> None:
    """Write float [0, 1] (H, W) or (H, W, 3) as binary PGM/PPM, maxval 255."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim == 2:
        magic, payload = b"P5", arr
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic, payload = b"P6", arr
    else:
        raise DataFormatError(f"cannot write array of shape {arr.shape}")
    h, w = payload.shape[:2]
    quantized = np.rint(np.clip(payload, 0.0, 1.0) * 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(magic + b"\n" + f"{w} {h}\n255\n".encode())
        fh.write(quantized.tobytes())


def _read_png(path) -> np.ndarray:
    try:
        from PIL import Image as PilImage
    except ImportError as exc:
        raise DataFormatError(f"{path}: PNG support requires Pillow") from exc
    with PilImage.open(path) as img:
        if img.mode not in ("L", "RGB"):
            img = img.convert("RGB")
        return np.asarray(img, dtype=np.float64) / 255.0


def load_image(path: str | Path, pad_multiple: int = 1) -> Image:
    """Load an image and zero-pad right/bottom to a multiple of
    `pad_multiple`, recording the original size on the Image."""
    path = Path(path)
    if path.suffix.lower() == ".png":
        arr = _read_png(path)
    else:
        arr = read_pnm(path)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    h, w, c = arr.shape
    ph = (-h) % pad_multiple
    pw = (-w) % pad_multiple
    if ph or pw:
        arr = np.pad(arr, ((0, ph), (0, pw), (0, 0)))
    return Image.from_array(arr, orig_size=(w, h))


def write_matches(correspondences: Sequence[Correspondence], path: str | Path) -> None:
    """One JSON object per line, ordered by source index then position."""
    ordered = sorted(correspondences, key=lambda c: (c.source_index, c.source_pos))
    with open(path, "w") as fh:
        for c in ordered:
            fh.write(
                json.dumps(
                    {
                        "src": [c.source_pos[0], c.source_pos[1]],
                        "dst": [c.target_pos[0], c.target_pos[1]],
                        "scale": c.scale,
                        "conf": c.confidence,
                        "level": c.level,
                    }
                )
                + "\n"
            )


def read_matches(path: str | Path) -> list[Correspondence]:
    """Parse a matches JSONL file back into bare correspondences.

    The bbox is collapsed to a single dummy cell; files do not carry it.
    """
    out: list[Correspondence] = []
    with open(path) as fh:
        for line_no, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                out.append(
                    Correspondence(
                        source_index=line_no,
                        source_pos=(float(obj["src"][0]), float(obj["src"][1])),
                        target_pos=(float(obj["dst"][0]), float(obj["dst"][1])),
                        bbox=BBox(0, 0, 0, 0),
                        scale=float(obj["scale"]),
                        confidence=float(obj["conf"]),
                        level=int(obj["level"]),
                    )
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise DataFormatError(f"{path}:{line_no + 1}: bad match record: {exc}")
    return out
