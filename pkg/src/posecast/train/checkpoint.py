"""
``IHPM`` model checkpoints (all integers little-endian u32)::

    magic      4 bytes  b"IHPM"
    version    1
    meta_len   + UTF-8 JSON metadata (model kind, grid, hyperparameters)
    count      number of tensors
    per tensor: name_len, name (UTF-8), ndim, dims x ndim, float64 payload
"""

import json
import math
import struct
import sys
from pathlib import Path
from typing import BinaryIO, Dict, Tuple, Union

import numpy as np

from ..core import ContractError, GridSpec, HeatmapFormatError
from ..core.io import read_upto
from ..synth import EVIDENCE_SHARPNESS
from ..utils.config import ConfigError
from ..utils.logger import get_logger
from .model import ModelConfig, PassthroughModel, ToyModel
from .regression import RegressionHead

logger = get_logger(__name__)

CHECKPOINT_MAGIC = b"IHPM"
CHECKPOINT_VERSION = 1

_U32 = struct.Struct("<I")
_FLOAT64_LE = np.dtype("<f8")


class CheckpointFormatError(HeatmapFormatError):
    """Raised when a checkpoint cannot be decoded."""
    pass


def _u32(value: int) -> bytes:
    return _U32.pack(value)


def write_checkpoint(model, sink: BinaryIO) -> int:
    """
    Serialize a model.

    Args:
        model: ToyModel, PassthroughModel or RegressionHead
        sink: Binary stream

    Returns:
        Number of bytes written
    """
    meta = json.dumps(model.metadata(), sort_keys=True).encode("utf-8")
    chunks = [CHECKPOINT_MAGIC, _u32(CHECKPOINT_VERSION), _u32(len(meta)), meta, _u32(len(model.params))]
    for name, tensor in model.params.items():
        encoded = name.encode("utf-8")
        chunks += [_u32(len(encoded)), encoded, _u32(tensor.ndim)]
        chunks += [_u32(dim) for dim in tensor.shape]
        chunks.append(np.ascontiguousarray(tensor, dtype=_FLOAT64_LE).tobytes())
    data = b"".join(chunks)
    sink.write(data)
    return len(data)


class _Reader:
    def __init__(self, source: BinaryIO):
        self.source = source
        self.offset = 0

    def read(self, size: int, what: str) -> bytes:
        data = read_upto(self.source, size)
        if len(data) != size:
            raise CheckpointFormatError(
                f"Truncated {what}: expected {size} bytes, got {len(data)}", self.offset + len(data)
            )
        self.offset += size
        return data

    def u32(self, what: str) -> int:
        return _U32.unpack(self.read(4, what))[0]


def read_checkpoint(source: BinaryIO) -> Tuple[Dict, Dict[str, np.ndarray]]:
    """
    Decode metadata and tensors.

    Raises:
        CheckpointFormatError: On bad magic, version, truncation or non-finite values
    """
    reader = _Reader(source)
    magic = reader.read(4, "magic")
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointFormatError(f"Bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}", 0)
    version = reader.u32("version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointFormatError(f"Unsupported checkpoint version {version}", 4)

    meta_len = reader.u32("metadata length")
    meta_offset = reader.offset
    try:
        meta = json.loads(reader.read(meta_len, "metadata").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise CheckpointFormatError("Metadata is not UTF-8 JSON", meta_offset)

    tensors: Dict[str, np.ndarray] = {}
    for _ in range(reader.u32("tensor count")):
        name = reader.read(reader.u32("name length"), "tensor name").decode("utf-8", errors="replace")
        ndim = reader.u32("ndim")
        dims_offset = reader.offset
        shape = tuple(reader.u32("dimension") for _ in range(ndim))
        payload_offset = reader.offset
        size = math.prod(shape) * _FLOAT64_LE.itemsize
        if size > sys.maxsize:
            raise CheckpointFormatError(
                f"Tensor {name} shape {shape} declares a {size}-byte payload", dims_offset
            )
        values = np.frombuffer(reader.read(size, f"tensor {name}"), dtype=_FLOAT64_LE)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise CheckpointFormatError(f"Non-finite value in tensor {name}", payload_offset + 8 * int(bad[0]))
        tensors[name] = values.astype(np.float64).reshape(shape)
    return meta, tensors


def model_from_checkpoint(meta: Dict, tensors: Dict[str, np.ndarray]):
    """Rebuild the model described by checkpoint metadata."""
    try:
        kind = meta["kind"]
        spec = GridSpec.from_dict(meta["grid"])
        if kind == ToyModel.kind:
            return ToyModel(spec, ModelConfig.from_dict(meta["model"]), tensors)
        if kind == PassthroughModel.kind:
            return PassthroughModel(spec, meta.get("sharpness", EVIDENCE_SHARPNESS))
        if kind == RegressionHead.kind:
            return RegressionHead(spec, tensors)
    except (KeyError, TypeError, ContractError, ConfigError) as exc:
        raise CheckpointFormatError(f"Inconsistent checkpoint: {exc}", 0)
    raise CheckpointFormatError(f"Unknown model kind {kind!r}", 0)


def save_checkpoint(model, path: Union[str, Path]) -> int:
    """Write ``model`` to ``path``; returns the byte count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        size = write_checkpoint(model, f)
    logger.info(f"Saved {model.kind} checkpoint ({model.parameter_count()} parameters) to {path}")
    return size


def load_checkpoint(path: Union[str, Path]):
    """Read a model written by save_checkpoint."""
    with open(path, "rb") as f:
        meta, tensors = read_checkpoint(f)
    return model_from_checkpoint(meta, tensors)
