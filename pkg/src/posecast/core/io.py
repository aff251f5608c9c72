"""
Exchange formats: the ``IHPR`` heatmap binary and the JointSet JSON document.

Heatmap binary (all little-endian)::

    magic   4 bytes  b"IHPR"
    version u32      1
    K D H W u32 x 4
    scores  float64 x K*D*H*W, row-major (k, z, y, x)
"""

import json
import struct
import sys
from pathlib import Path
from typing import Any, BinaryIO, Dict, TextIO, Union

import numpy as np

from .errors import DomainError, HeatmapFormatError
from .grid import GridSpec, Heatmap, JointSet

HEATMAP_MAGIC = b"IHPR"
HEATMAP_VERSION = 1

_HEADER = struct.Struct("<4sI4I")
_FLOAT64_LE = np.dtype("<f8")
_READ_CHUNK = 1 << 20


def write_heatmap(h: Heatmap, sink: BinaryIO) -> int:
    """
    Serialize a heatmap.

    Args:
        h: Heatmap to write
        sink: Binary stream

    Returns:
        Number of bytes written
    """
    header = _HEADER.pack(HEATMAP_MAGIC, HEATMAP_VERSION, *h.spec.shape)
    payload = np.ascontiguousarray(h.scores, dtype=_FLOAT64_LE).tobytes()
    sink.write(header)
    sink.write(payload)
    return len(header) + len(payload)


def read_upto(source: BinaryIO, size: int) -> bytes:
    """
    Read ``size`` bytes, or fewer at end of stream.

    Large requests are read in chunks, so a corrupt length field costs only
    the bytes actually present.
    """
    if size <= _READ_CHUNK:
        return source.read(size)
    chunks = []
    remaining = size
    while remaining > 0:
        chunk = source.read(min(remaining, _READ_CHUNK))
        if not chunk:
            break
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def _read_exact(source: BinaryIO, size: int, offset: int, what: str) -> bytes:
    data = read_upto(source, size)
    if len(data) != size:
        raise HeatmapFormatError(
            f"Truncated {what}: expected {size} bytes, got {len(data)}", offset + len(data)
        )
    return data


def read_heatmap(source: BinaryIO) -> Heatmap:
    """
    Deserialize a heatmap written by write_heatmap.

    Args:
        source: Binary stream positioned at the magic bytes

    Returns:
        Heatmap with bit-identical scores

    Raises:
        HeatmapFormatError: On bad magic, version mismatch, bad shape,
            truncated payload or non-finite values
    """
    header = _read_exact(source, _HEADER.size, 0, "header")
    magic, version, K, D, H, W = _HEADER.unpack(header)

    if magic != HEATMAP_MAGIC:
        raise HeatmapFormatError(f"Bad magic {magic!r}, expected {HEATMAP_MAGIC!r}", 0)
    if version != HEATMAP_VERSION:
        raise HeatmapFormatError(f"Unsupported version {version}", 4)
    for position, value in enumerate((K, D, H, W)):
        if value < 1:
            raise HeatmapFormatError(f"Grid dimension {value} must be >= 1", 8 + 4 * position)

    count = K * D * H * W
    size = count * _FLOAT64_LE.itemsize
    if size > sys.maxsize:
        raise HeatmapFormatError(f"Grid {K}x{D}x{H}x{W} declares a {size}-byte payload", 8)
    payload = _read_exact(source, size, _HEADER.size, "payload")
    scores = np.frombuffer(payload, dtype=_FLOAT64_LE).astype(np.float64)

    bad = np.flatnonzero(~np.isfinite(scores))
    if bad.size:
        raise HeatmapFormatError("Non-finite score", _HEADER.size + 8 * int(bad[0]))

    try:
        return Heatmap(GridSpec(K=K, D=D, H=H, W=W), scores)
    except DomainError as e:
        raise HeatmapFormatError(str(e), _HEADER.size)


def save_heatmap(h: Heatmap, path: Union[str, Path]) -> int:
    """Write a heatmap to ``path``; returns the byte count."""
    with open(path, "wb") as f:
        return write_heatmap(h, f)


def load_heatmap(path: Union[str, Path]) -> Heatmap:
    """Read a heatmap from ``path``."""
    with open(path, "rb") as f:
        return read_heatmap(f)


def jointset_to_dict(joints: JointSet) -> Dict[str, Any]:
    """
    JSON-ready form: ``{"coords": K x 3 numbers, "mask": K x 3 booleans}``.

    Non-finite coordinates (only allowed on unsupervised axes) become ``null``.
    """
    coords = [
        [float(value) if np.isfinite(value) else None for value in row]
        for row in joints.coords
    ]
    return {"coords": coords, "mask": joints.mask.tolist()}


def jointset_from_dict(data: Dict[str, Any]) -> JointSet:
    """Inverse of jointset_to_dict."""
    coords = np.array(
        [[np.nan if value is None else value for value in row] for row in data["coords"]],
        dtype=np.float64,
    )
    mask = np.array(data["mask"], dtype=bool)
    return JointSet(coords.reshape(-1, 3), mask.reshape(-1, 3))


def write_jointset(joints: JointSet, sink: TextIO) -> None:
    json.dump(jointset_to_dict(joints), sink)


def read_jointset(source: TextIO) -> JointSet:
    return jointset_from_dict(json.load(source))
