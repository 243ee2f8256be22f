"""
BPF1 vorticity checkpoints

Layout, little-endian throughout:

    offset  size  field
    0       4     magic b"BPF1"
    4       4     version (uint32) = 1
    8       8     n (uint64)
    16      8     box_length (float64)
    24      8     t (float64)
    32      8     beta (float64)
    40      8n^2  samples (float64), row-major, axis 0 <-> x1
"""

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import ValidationError

from config import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from exceptions import BetaPlaneError, CheckpointError
from spectral_core import GridSpec, RealField

logger = logging.getLogger(__name__)

HEADER = struct.Struct("<4sIQddd")
VALUE_SIZE = 8


@dataclass(frozen=True)
class Checkpoint:
    field: RealField
    t: float
    beta: float


def checkpoint_write(path: Union[str, Path], field: RealField, t: float, beta: float) -> Path:
    """
    Write a field and its metadata

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = field.grid
    header = HEADER.pack(
        CHECKPOINT_MAGIC, CHECKPOINT_VERSION, grid.n, grid.box_length, float(t), float(beta)
    )
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes(order="C")
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)
    logger.debug(f"Checkpoint written: {path} (n={grid.n}, t={t})")
    return path


def checkpoint_read(path: Union[str, Path]) -> Checkpoint:
    """
    Read a checkpoint, validating header and payload length

    Raises:
        CheckpointError: on magic, version, grid or length mismatch; the message names the
            byte offset and, for length problems, the expected and actual sizes
    """
    path = Path(path)
    with open(path, "rb") as f:
        magic = f.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointError(f"bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}", 0)

        rest = f.read(HEADER.size - len(magic))
        if len(rest) != HEADER.size - len(magic):
            raise CheckpointError(
                "truncated header", len(magic) + len(rest), HEADER.size, len(magic) + len(rest)
            )
        _, version, n, box_length, t, beta = HEADER.unpack(magic + rest)
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(
                f"unsupported version {version}, expected {CHECKPOINT_VERSION}", 4
            )

        try:
            grid = GridSpec(n=n, box_length=box_length)
        except ValidationError as e:
            raise CheckpointError(f"invalid grid in header: {e.errors()[0]['msg']}", 8) from e

        expected = n * n * VALUE_SIZE
        actual = path.stat().st_size - HEADER.size
        if actual != expected:
            raise CheckpointError("payload length mismatch", HEADER.size, expected, actual)
        payload = f.read(expected)

    values = np.frombuffer(payload, dtype="<f8").reshape(n, n)
    try:
        field = RealField(grid, values.astype(np.float64))
    except BetaPlaneError as e:
        raise CheckpointError(f"invalid payload: {e}", HEADER.size) from e
    logger.debug(f"Checkpoint read: {path} (n={n}, t={t})")
    return Checkpoint(field=field, t=t, beta=beta)
