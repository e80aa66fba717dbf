"""Bitmap I/O: PBM (P1 plain and P4 raw) natively, PNG through the optional ``pypng``."""
from typing import Tuple
import io
import logging
import re

import numpy as np

from extvc.base import DomainError, atomic_write
from extvc.codec.base import BitImage
from extvc.misc import import_error_module

try:
    import png
except ImportError:  # pragma: no cover
    png = import_error_module("png")

__all__ = ["read_pbm", "write_pbm", "read_png", "write_png", "read_image", "write_image"]


logger = logging.getLogger(__name__)

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_COMMENT = re.compile(rb"#[^\n]*")


def _pbm_header(data: bytes) -> Tuple[bytes, int, int, int]:
    """Magic number, width, height and the offset just past the height token."""
    magic = data[:2]
    if magic not in (b"P1", b"P4"):
        raise DomainError(f"not a PBM bitmap (magic {magic!r})")
    pos = 2
    values = []
    while len(values) < 2:
        while pos < len(data) and (data[pos : pos + 1].isspace() or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                end = data.find(b"\n", pos)
                pos = len(data) if end < 0 else end + 1
            else:
                pos += 1
        start = pos
        while pos < len(data) and data[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise DomainError("truncated PBM header")
        values.append(int(data[start:pos]))
    width, height = values
    if width < 1 or height < 1:
        raise DomainError(f"PBM size must be positive, got {width}x{height}")
    return magic, width, height, pos


def read_pbm(data: bytes) -> BitImage:
    magic, width, height, pos = _pbm_header(data)
    if magic == b"P4":
        stride = (width + 7) // 8
        raw = data[pos + 1 : pos + 1 + stride * height]
        if len(raw) < stride * height:
            raise DomainError(f"P4 raster truncated: {len(raw)} of {stride * height} bytes")
        packed = np.frombuffer(raw, dtype=np.uint8).reshape(height, stride)
        return BitImage(np.unpackbits(packed, axis=1)[:, :width].astype(bool))
    digits = bytes(c for c in _COMMENT.sub(b"", data[pos:]) if c in b"01")
    if len(digits) < width * height:
        raise DomainError(f"P1 raster truncated: {len(digits)} of {width * height} pixels")
    bits = np.frombuffer(digits[: width * height], dtype=np.uint8) - ord("0")
    return BitImage(bits.reshape(height, width).astype(bool))


def write_pbm(image: BitImage, plain: bool = False) -> bytes:
    header = f"P{1 if plain else 4}\n{image.width} {image.height}\n".encode("ascii")
    if not plain:
        return header + np.packbits(image.bits, axis=1).tobytes()
    lines = []
    for row in image.bits.astype(np.uint8):
        text = "".join(str(v) for v in row)
        lines.extend(text[i : i + 70] for i in range(0, len(text), 70))
    return header + ("\n".join(lines) + "\n").encode("ascii")


def read_png(data: bytes) -> BitImage:
    """Thresholds the first channel (mean of RGB for colour images) at half the sample range, so
    8-bit values below 128 and 1-bit zeros are black."""
    width, height, rows, info = png.Reader(bytes=data).asDirect()
    planes = info["planes"]
    pixels = np.vstack([np.asarray(row, dtype=np.int64) for row in rows])
    pixels = pixels.reshape(height, width, planes)
    if info["greyscale"]:
        grey = pixels[:, :, 0]
    else:
        grey = pixels[:, :, :3].mean(axis=2)
    return BitImage(grey < (1 << info["bitdepth"]) / 2)


def write_png(image: BitImage) -> bytes:
    buffer = io.BytesIO()
    writer = png.Writer(width=image.width, height=image.height, greyscale=True, bitdepth=1)
    writer.write(buffer, (~image.bits).astype(np.uint8).tolist())
    return buffer.getvalue()


def read_image(path: str) -> BitImage:
    """Reads a PBM or PNG file, recognized by content rather than extension."""
    with open(path, "rb") as fp:
        data = fp.read()
    if data.startswith(PNG_SIGNATURE):
        return read_png(data)
    return read_pbm(data)


def write_image(image: BitImage, path: str, plain: bool = False) -> str:
    """Writes PNG for a ``.png`` path and PBM (raw unless ``plain``) otherwise, atomically."""
    if path.lower().endswith(".png"):
        atomic_write(path, write_png(image))
    else:
        atomic_write(path, write_pbm(image, plain=plain))
    logger.debug("wrote %r to %s", image, path)
    return path
