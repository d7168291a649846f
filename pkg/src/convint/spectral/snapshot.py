#!/usr/bin/env python3
"""Binary field snapshots.

Layout (little-endian)::

    offset  size  content
    0       8     magic b"CVXFLD01"
    8       4     u4 grid points per axis n
    12      1     u1 rank code (0 scalar, 1 vector3, 2 symtensor3, 3 tensor3)
    13      1     u1 reality flag (1 real, 0 complex)
    14      2     u2 padding
    16      8     u8 number of stored float64 values
    24      ...   <f8 nodal values in C order, re/im interleaved when complex

Values are stored at the collocation nodes, so a write/read pair reproduces the
field bit for bit.
"""

from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from ..errors import CheckpointError
from .field import PeriodicField, Rank
from .grid import Grid

MAGIC = b"CVXFLD01"
HEADER = np.dtype(
    [
        ("magic", "S8"),
        ("n", "<u4"),
        ("rank", "u1"),
        ("real", "u1"),
        ("pad", "<u2"),
        ("count", "<u8"),
    ]
)


def write_snapshot(path: Union[str, Path], field: PeriodicField) -> Path:
    """Write a field to disk."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    real = field.reality_flag
    data = np.ascontiguousarray(field.values if real else field.values.view(np.float64))
    data = data.astype("<f8", copy=False).ravel()
    header = np.zeros((), dtype=HEADER)
    header["magic"] = MAGIC
    header["n"] = field.grid.n
    header["rank"] = field.rank.code
    header["real"] = 1 if real else 0
    header["count"] = data.size
    with open(path, "wb") as f:
        f.write(header.tobytes())
        f.write(data.tobytes())
    return path


def read_header(path: Union[str, Path]) -> Dict[str, Any]:
    raw = Path(path).read_bytes()[: HEADER.itemsize]
    if len(raw) < HEADER.itemsize:
        raise CheckpointError(f"{path}: truncated header")
    header = np.frombuffer(raw, dtype=HEADER)[0]
    if bytes(header["magic"]) != MAGIC:
        raise CheckpointError(f"{path}: not a field snapshot")
    return {
        "n": int(header["n"]),
        "rank": Rank.from_code(int(header["rank"])),
        "real": bool(header["real"]),
        "count": int(header["count"]),
    }


def read_snapshot(
    path: Union[str, Path], dealias_fraction: float = 2.0 / 3.0
) -> PeriodicField:
    """Read a field written by ``write_snapshot``.

    Raises:
        CheckpointError: On a bad magic, truncated data or inconsistent size
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"missing snapshot {path}")
    info = read_header(path)
    grid = Grid(info["n"], dealias_fraction)
    shape = info["rank"].component_shape + grid.shape
    expected = int(np.prod(shape)) * (1 if info["real"] else 2)
    if info["count"] != expected:
        raise CheckpointError(f"{path}: stores {info['count']} values, expected {expected}")
    data = np.fromfile(path, dtype="<f8", offset=HEADER.itemsize)
    if data.size != expected:
        raise CheckpointError(f"{path}: truncated data ({data.size}/{expected})")
    values = data.astype(np.float64)
    if not info["real"]:
        values = values.view(np.complex128)
    return PeriodicField(grid, info["rank"], values.reshape(shape))
