"""Image file I/O: the NLMF raw-float container and binary PGM (P5).

NLMF layout (little-endian):

    offset 0   4 bytes   magic "NLMF"
    offset 4   1 byte    version, currently 1
    offset 5   4 bytes   width  (unsigned)
    offset 9   4 bytes   height (unsigned)
    offset 13  payload   width*height IEEE-754 binary32, row-major

NLMF stores pixel values verbatim (as binary32), so write-then-read is a
bit-identical round trip.  PGM quantizes: writing scales the image maximum
to ``maxval`` and rounds; reading yields the raw integer values as reals
(0..maxval, identity scaling).  16-bit PGM samples are big-endian per the
Netpbm convention.

The intensity-domain tag is not part of either format; the caller states the
domain when reading.
"""

from __future__ import annotations

import re
import struct
from pathlib import Path

import numpy as np

from .image import Domain, Image

__all__ = ["FormatError", "read_image", "write_image", "read_nlmf", "write_nlmf", "read_pgm", "write_pgm"]

_MAGIC = b"NLMF"
_VERSION = 1
_HEADER = struct.Struct("<4sBII")


class FormatError(ValueError):
    """Malformed or truncated image file."""


def write_nlmf(path, img: Image) -> None:
    """Write an image as NLMF (binary32 payload, values kept verbatim)."""
    data = np.ascontiguousarray(img.data, dtype="<f4")
    if not np.all(np.isfinite(data)) or np.any(data < 0):
        raise FormatError("NLMF payload must be finite and non-negative")
    h, w = img.data.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, w, h))
        fh.write(data.tobytes(order="C"))


def read_nlmf(path, domain: Domain = Domain.MAGNITUDE_M) -> Image:
    """Read an NLMF file; the caller assigns the intensity domain."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(
            f"{path}: truncated header, expected {_HEADER.size} bytes, got {len(raw)}"
        )
    magic, version, w, h = _HEADER.unpack_from(raw, 0)
    if magic != _MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at byte offset 0")
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte offset 4")
    expected = _HEADER.size + 4 * w * h
    if len(raw) != expected:
        raise FormatError(
            f"{path}: payload size mismatch, expected {expected} bytes total, got {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(h, w)
    return Image(data.astype(np.float64), domain)


_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _pgm_tokens(raw: bytes, n: int, path):
    """First n whitespace/comment-delimited header tokens and the data offset."""
    pos = 0
    toks = []
    for _ in range(n):
        m = _PGM_TOKEN.match(raw, pos)
        if not m:
            raise FormatError(f"{path}: truncated PGM header at byte offset {pos}")
        toks.append(m.group(1))
        pos = m.end()
    return toks, pos + 1  # single whitespace byte after maxval


def read_pgm(path, domain: Domain = Domain.MAGNITUDE_M) -> Image:
    """Read a binary (P5) PGM; values come back as reals 0..maxval."""
    raw = Path(path).read_bytes()
    toks, offset = _pgm_tokens(raw, 4, path)
    if toks[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {toks[0]!r} at byte offset 0)")
    try:
        w, h, maxval = (int(t) for t in toks[1:])
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric PGM header field") from exc
    if not (w > 0 and h > 0 and 0 < maxval < 65536):
        raise FormatError(f"{path}: invalid PGM dimensions {w}x{h} maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = offset + w * h * dtype.itemsize
    if len(raw) < expected:
        raise FormatError(
            f"{path}: truncated payload, expected {expected} bytes total, got {len(raw)}"
        )
    data = np.frombuffer(raw, dtype=dtype, count=w * h, offset=offset).reshape(h, w)
    return Image(data.astype(np.float64), domain)


def write_pgm(path, img: Image, maxval: int = 255) -> None:
    """Write a binary PGM, scaling the image maximum to ``maxval``."""
    if not 0 < maxval < 65536:
        raise FormatError("maxval must lie in [1, 65535]")
    peak = float(img.data.max())
    scale = maxval / peak if peak > 0 else 0.0
    q = np.rint(img.data * scale)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    h, w = img.data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(q.astype(dtype).tobytes(order="C"))


def read_image(path, domain: Domain = Domain.MAGNITUDE_M) -> Image:
    """Read an image, format inferred from the extension (.nlmf or .pgm)."""
    suffix = Path(path).suffix.lower()
    if suffix == ".nlmf":
        return read_nlmf(path, domain)
    if suffix == ".pgm":
        return read_pgm(path, domain)
    raise FormatError(f"{path}: unknown image extension {suffix!r} (use .nlmf or .pgm)")


def write_image(path, img: Image, maxval: int = 255) -> None:
    """Write an image, format inferred from the extension (.nlmf or .pgm)."""
    suffix = Path(path).suffix.lower()
    if suffix == ".nlmf":
        write_nlmf(path, img)
    elif suffix == ".pgm":
        write_pgm(path, img, maxval=maxval)
    else:
        raise FormatError(f"{path}: unknown image extension {suffix!r} (use .nlmf or .pgm)")
