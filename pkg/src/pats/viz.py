"""Match overlay export: side-by-side SVG with colored match lines.

Images are embedded as base64 PNGs written by a minimal stdlib-only encoder
(single IDAT, filter 0), so no raster library is required.
"""

from __future__ import annotations

import base64
import colorsys
import struct
import zlib
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Correspondence, Image

__all__ = ["png_bytes", "export_overlay_svg"]

_GAP = 16  # px between the two images


def _chunk(tag: bytes, payload: bytes) -> bytes:
    body = tag + payload
    return struct.pack(">I", len(payload)) + body + struct.pack(">I", zlib.crc32(body))


def png_bytes(arr: np.ndarray) -> bytes:
    """Encode a uint8 (H, W) grayscale or (H, W, 3) RGB array as PNG."""
    arr = np.asarray(arr, dtype=np.uint8)
    if arr.ndim == 2:
        color_type = 0
        rows = arr[:, :, None]
    elif arr.ndim == 3 and arr.shape[2] == 3:
        color_type = 2
        rows = arr
    else:
        raise ValueError(f"cannot encode array of shape {arr.shape}")
    h, w = rows.shape[:2]
    raw = b"".join(b"\x00" + rows[r].tobytes() for r in range(h))
    header = struct.pack(">IIBBBBB", w, h, 8, color_type, 0, 0, 0)
    return b"".join(
        [
            b"\x89PNG\r\n\x1a\n",
            _chunk(b"IHDR", header),
            _chunk(b"IDAT", zlib.compress(raw, 9)),
            _chunk(b"IEND", b""),
        ]
    )


def _match_color(index: int) -> str:
    # Knuth multiplicative hash keeps colors stable across runs
    hue = ((index * 2654435761) % (2**32)) / 2**32
    r, g, b = colorsys.hsv_to_rgb(hue, 0.9, 0.95)
    return f"#{int(r * 255):02x}{int(g * 255):02x}{int(b * 255):02x}"


def _image_data_uri(image: Image) -> str:
    arr = np.rint(np.clip(image.data, 0.0, 1.0) * 255).astype(np.uint8)
    arr = arr[:, :, 0] if image.channels == 1 else arr
    return "data:image/png;base64," + base64.b64encode(png_bytes(arr)).decode("ascii")


def export_overlay_svg(
    matches: Sequence[Correspondence],
    source_image: Image,
    target_image: Image,
    path: str | Path,
) -> None:
    """Write source and target side by side with one line per match."""
    dx = source_image.width + _GAP
    width = dx + target_image.width
    height = max(source_image.height, target_image.height)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<image x="0" y="0" width="{source_image.width}" height="{source_image.height}" '
        f'xlink:href="{_image_data_uri(source_image)}"/>',
        f'<image x="{dx}" y="0" width="{target_image.width}" height="{target_image.height}" '
        f'xlink:href="{_image_data_uri(target_image)}"/>',
    ]
    for c in sorted(matches, key=lambda m: (m.source_index, m.source_pos)):
        color = _match_color(c.source_index)
        x1, y1 = c.source_pos
        x2, y2 = c.target_pos[0] + dx, c.target_pos[1]
        parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{color}" stroke-width="0.8" stroke-opacity="0.8"/>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
