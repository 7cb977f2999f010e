"""HGF field file format.

Layout: magic "HGF1" (4 bytes) | header length (u32 little-endian) |
JSON header {n, extents, spacing, origin, ball_radius, p, metadata} |
payload of 8-byte little-endian IEEE-754 node values, t index fastest,
then y, then x.  Write -> read round-trips bit-exactly.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np

from .errors import DomainError
from .grid import Grid3, ScalarField, ball_mask, full_mask

MAGIC = b"HGF1"

__all__ = ["write_hgf", "read_hgf", "MAGIC"]


def write_hgf(
    path: str,
    field: ScalarField,
    ball_radius: float = None,
    p: float = None,
    metadata: dict = None,
) -> None:
    """Atomic write (temp file + rename) of a field with its grid header."""
    header = {
        "n": 1,
        "extents": list(field.grid.shape),
        "spacing": list(field.grid.spacing),
        "origin": list(field.grid.corner),
        "ball_radius": ball_radius,
        "p": p,
        "metadata": metadata or {},
    }
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    dirname = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=dirname, suffix=".hgf.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_hgf(path: str) -> tuple:
    """Read a field file; returns (ScalarField, header dict).

    The mask is reconstructed from header ball_radius (gauge ball) or is
    the full box when no radius was recorded.
    """
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise DomainError(f"{path}: not an HGF file (magic {magic!r})")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        shape = tuple(header["extents"])
        count = shape[0] * shape[1] * shape[2]
        payload = fh.read(8 * count)
        if len(payload) != 8 * count:
            raise DomainError(f"{path}: truncated payload")
    values = np.frombuffer(payload, dtype="<f8").reshape(shape).copy()
    grid = Grid3(
        shape=shape,
        spacing=tuple(header["spacing"]),
        corner=tuple(header["origin"]),
    )
    if header.get("ball_radius"):
        mask = ball_mask(grid, float(header["ball_radius"]))
    else:
        mask = full_mask(grid)
    return ScalarField(grid, values, mask), header
