"""Binary MatFile format (little-endian, fixed width).

    magic     4s   b"AMAT"
    version   u8   1
    space     u8   0 = normalized LAB encodings, 1 = raw values
    flags     u8   bit 0: depth section, bit 1: branch label section
    reserved  u8   0
    height    u32
    width     u32
    ws        f64
    n_radii   u32, then n_radii x u8 radii
    m         u32, then m x (x u16, y u16, r u8, enc 3 x f32)
    depth     H*W x u16, row-major             (if flag bit 0)
    labels    m x u32                          (if flag bit 1)
"""

from __future__ import annotations

import struct

import numpy as np

from .diskgeom import ScaleSet
from .imagecore import LAB, RGB
from .setcover import MatResult, MedialRecord, depth_from_records, radius_map_from_records

MAGIC = b"AMAT"
VERSION = 1
FLAG_DEPTH = 1
FLAG_LABELS = 2

_HEADER = struct.Struct("<4sBBBBIId")
_COUNT = struct.Struct("<I")
_RECORD = np.dtype([("x", "<u2"), ("y", "<u2"), ("r", "u1"), ("enc", "<f4", (3,))])

_SPACE_CODES = {LAB: 0, RGB: 1}
_SPACE_NAMES = {v: k for k, v in _SPACE_CODES.items()}


class MatFileError(ValueError):
    """Raised for truncated or inconsistent MatFiles."""


def to_bytes(mat: MatResult, with_depth: bool = True) -> bytes:
    if mat.height > 0xFFFF or mat.width > 0xFFFF:
        raise ValueError("image too large for 16-bit coordinates")
    radii = mat.scales.radii
    if max(radii) > 255:
        raise ValueError("radius does not fit in 8 bits")
    flags = (FLAG_DEPTH if with_depth else 0) | (FLAG_LABELS if mat.labels is not None else 0)
    parts = [
        _HEADER.pack(MAGIC, VERSION, _SPACE_CODES[mat.space], flags, 0,
                     mat.height, mat.width, float(mat.scales.ws)),
        _COUNT.pack(len(radii)),
        bytes(radii),
        _COUNT.pack(len(mat.records)),
    ]
    recs = np.zeros(len(mat.records), dtype=_RECORD)
    for i, rec in enumerate(mat.records):
        enc = tuple(rec.encoding) + (0.0,) * (3 - len(rec.encoding))
        recs[i] = (rec.cx, rec.cy, rec.radius, enc)
    parts.append(recs.tobytes())
    if with_depth:
        depth = np.asarray(mat.depth)
        if depth.max(initial=0) > 0xFFFF:
            raise ValueError("depth does not fit in 16 bits")
        parts.append(depth.astype("<u2").tobytes())
    if mat.labels is not None:
        parts.append(np.asarray(mat.labels).astype("<u4").tobytes())
    return b"".join(parts)


def from_bytes(buf: bytes) -> MatResult:
    view = memoryview(buf)
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(view):
            raise MatFileError("corrupt MatFile: truncated")
        out = view[pos:pos + n]
        pos += n
        return out

    magic, version, space, flags, _, height, width, ws = _HEADER.unpack(take(_HEADER.size))
    if magic != MAGIC:
        raise MatFileError("corrupt MatFile: bad magic")
    if version != VERSION:
        raise MatFileError(f"corrupt MatFile: unsupported version {version}")
    if space not in _SPACE_NAMES:
        raise MatFileError(f"corrupt MatFile: unknown space code {space}")
    (n_radii,) = _COUNT.unpack(take(_COUNT.size))
    radii = tuple(take(n_radii))
    (m,) = _COUNT.unpack(take(_COUNT.size))
    recs = np.frombuffer(take(m * _RECORD.itemsize), dtype=_RECORD)
    depth = None
    if flags & FLAG_DEPTH:
        depth = np.frombuffer(take(height * width * 2), dtype="<u2").reshape(height, width).astype(np.int64)
    labels = None
    if flags & FLAG_LABELS:
        labels = np.frombuffer(take(m * 4), dtype="<u4").astype(np.int64)
    if pos != len(view):
        raise MatFileError("corrupt MatFile: trailing bytes")

    try:
        scales = ScaleSet(radii, ws)
    except ValueError as exc:
        raise MatFileError(f"corrupt MatFile: {exc}") from exc
    allowed = set(radii)
    records = []
    for x, y, r, enc in recs:
        if not (x < width and y < height) or int(r) not in allowed:
            raise MatFileError("corrupt MatFile: record outside header bounds")
        records.append(MedialRecord(int(x), int(y), int(r), tuple(float(v) for v in enc)))
    if depth is None:
        depth = depth_from_records(records, height, width)
    return MatResult(records=records, depth=depth,
                     radius_map=radius_map_from_records(records, height, width),
                     scales=scales, height=height, width=width,
                     space=_SPACE_NAMES[space], labels=labels)


def write_mat(mat: MatResult, path, with_depth: bool = True) -> None:
    with open(path, "wb") as fh:
        fh.write(to_bytes(mat, with_depth))


def read_mat(path) -> MatResult:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
