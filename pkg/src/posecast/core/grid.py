"""
Grid conventions and the immutable containers every other module exchanges.

Layout is row-major ``(k, z, y, x)`` with x fastest. Cell ``i`` on an axis has
continuous coordinate ``i`` (0-based), so a one-hot heatmap at cell (x, y, z)
decodes to exactly (x, y, z). Joint coordinates are ``(x, y, z)`` triples in
these grid units.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from .errors import ContractError, DomainError, GridRangeError

AXES = ("x", "y", "z")

# position of each axis inside a (K, D, H, W) array
ARRAY_AXIS = {"x": 3, "y": 2, "z": 1}

PROBABILITY_TOLERANCE = 1e-9

_INDEX_LIMIT = np.iinfo(np.intp).max


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


def axis_position(axis: str) -> int:
    """Column of ``axis`` inside a joint coordinate triple."""
    try:
        return AXES.index(axis)
    except ValueError:
        raise ContractError(f"Unknown axis {axis!r}; expected one of {AXES}")


@dataclass(frozen=True)
class GridSpec:
    """Joint count and grid resolution. ``D == 1`` denotes a 2D heatmap."""

    K: int
    D: int
    H: int
    W: int

    def __post_init__(self) -> None:
        for name in ("K", "D", "H", "W"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ContractError(f"GridSpec.{name} must be an integer, got {value!r}")
            if value < 1:
                raise ContractError(f"GridSpec.{name} must be >= 1, got {value}")
        # python ints do not overflow; compare against the platform index range
        if self.K * self.D * self.H * self.W > _INDEX_LIMIT:
            raise ContractError("GridSpec cell count exceeds the platform index range")

    @property
    def cells(self) -> int:
        """Cells per joint (D·H·W)."""
        return self.D * self.H * self.W

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return (self.K, self.D, self.H, self.W)

    @property
    def is_2d(self) -> bool:
        return self.D == 1

    def axis_length(self, axis: str) -> int:
        return self.axis_lengths()[axis_position(axis)]

    def axis_lengths(self) -> Tuple[int, int, int]:
        """Lengths in joint-coordinate order (W, H, D)."""
        return (self.W, self.H, self.D)

    def with_joints(self, K: int) -> "GridSpec":
        return GridSpec(K=K, D=self.D, H=self.H, W=self.W)

    def to_dict(self) -> Dict[str, int]:
        return {"K": int(self.K), "D": int(self.D), "H": int(self.H), "W": int(self.W)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GridSpec":
        return cls(K=data["K"], D=data.get("D", 1), H=data["H"], W=data["W"])


@lru_cache(maxsize=64)
def _coordinate_grids(D: int, H: int, W: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    z, y, x = np.meshgrid(
        np.arange(D, dtype=np.float64),
        np.arange(H, dtype=np.float64),
        np.arange(W, dtype=np.float64),
        indexing="ij",
    )
    return _frozen(x), _frozen(y), _frozen(z)


def coordinate_grids(spec: GridSpec) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Per-cell continuous coordinates.

    Args:
        spec: Grid specification

    Returns:
        Read-only ``(x, y, z)`` arrays, each of shape ``(D, H, W)``
    """
    return _coordinate_grids(spec.D, spec.H, spec.W)


def cell_coordinate(spec: GridSpec, linear_index: int) -> Tuple[int, int, int]:
    """
    Integer (x, y, z) of a cell from its linear index within one joint's grid.

    Args:
        spec: Grid specification
        linear_index: Row-major index in ``[0, D·H·W)``

    Returns:
        ``(x, y, z)`` cell coordinate

    Raises:
        GridRangeError: If the index is outside the grid
    """
    index = int(linear_index)
    if not 0 <= index < spec.cells:
        raise GridRangeError(f"Cell index {index} outside [0, {spec.cells})")
    z, rest = divmod(index, spec.H * spec.W)
    y, x = divmod(rest, spec.W)
    return (x, y, z)


def cell_index(spec: GridSpec, x: int, y: int, z: int = 0) -> int:
    """
    Linear index of the cell at integer coordinates (inverse of cell_coordinate).

    Raises:
        GridRangeError: If any coordinate is outside the grid
    """
    if not (0 <= x < spec.W and 0 <= y < spec.H and 0 <= z < spec.D):
        raise GridRangeError(f"Cell ({x}, {y}, {z}) outside grid {spec.D}x{spec.H}x{spec.W}")
    return (int(z) * spec.H + int(y)) * spec.W + int(x)


@dataclass(frozen=True, eq=False)
class Heatmap:
    """Raw per-joint scores (logits), shape ``(K, D, H, W)``."""

    spec: GridSpec
    scores: np.ndarray

    def __post_init__(self) -> None:
        scores = np.array(self.scores, dtype=np.float64, copy=True)
        if scores.size != self.spec.K * self.spec.cells:
            raise ContractError(
                f"Heatmap needs {self.spec.K * self.spec.cells} scores, got {scores.size}"
            )
        scores = scores.reshape(self.spec.shape)
        if not np.all(np.isfinite(scores)):
            raise DomainError("Heatmap scores must be finite")
        object.__setattr__(self, "scores", _frozen(scores))

    @classmethod
    def from_array(cls, scores: np.ndarray) -> "Heatmap":
        """Build from a ``(K, D, H, W)`` or ``(K, H, W)`` array."""
        array = np.asarray(scores, dtype=np.float64)
        if array.ndim == 3:
            array = array[:, None, :, :]
        if array.ndim != 4:
            raise ContractError(f"Expected a 3D or 4D score array, got shape {array.shape}")
        return cls(GridSpec(*array.shape), array)

    def same_values(self, other: "Heatmap") -> bool:
        return self.spec == other.spec and np.array_equal(self.scores, other.scores)


@dataclass(frozen=True, eq=False)
class NormalizedHeatmap:
    """Per-joint probability grids; each joint's cells sum to one."""

    spec: GridSpec
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=np.float64, copy=True).reshape(self.spec.shape)
        if np.any(probs < 0.0) or np.any(probs > 1.0):
            raise ContractError("Probabilities must lie in [0, 1]")
        sums = probs.reshape(self.spec.K, -1).sum(axis=1)
        if np.any(np.abs(sums - 1.0) > PROBABILITY_TOLERANCE):
            raise ContractError(f"Per-joint probabilities must sum to 1, got {sums}")
        object.__setattr__(self, "probs", _frozen(probs))


@dataclass(frozen=True, eq=False)
class JointSet:
    """
    K joints with continuous (x, y, z) grid coordinates and per-axis masks.

    A mask entry of False means the axis is unsupervised for that joint (the
    coordinate may then be NaN).
    """

    coords: np.ndarray
    mask: np.ndarray

    def __post_init__(self) -> None:
        coords = np.array(self.coords, dtype=np.float64, copy=True)
        mask = np.array(self.mask, dtype=bool, copy=True)
        if coords.ndim != 2 or coords.shape[1] != 3:
            raise ContractError(f"JointSet coords must have shape (K, 3), got {coords.shape}")
        if mask.shape != coords.shape:
            raise ContractError(f"JointSet mask shape {mask.shape} != coords shape {coords.shape}")
        if not np.all(np.isfinite(coords[mask])):
            raise DomainError("JointSet coords must be finite wherever the mask is set")
        object.__setattr__(self, "coords", _frozen(coords))
        object.__setattr__(self, "mask", _frozen(mask))

    @property
    def K(self) -> int:
        return int(self.coords.shape[0])

    @classmethod
    def full_mask(cls, coords: Sequence[Sequence[float]]) -> "JointSet":
        """JointSet with every axis supervised."""
        array = np.asarray(coords, dtype=np.float64)
        return cls(array, np.ones(array.shape, dtype=bool))

    @classmethod
    def planar(cls, coords: Sequence[Sequence[float]]) -> "JointSet":
        """JointSet with x/y supervised and z unsupervised (pure 2D data)."""
        array = np.asarray(coords, dtype=np.float64)
        mask = np.ones(array.shape, dtype=bool)
        mask[:, 2] = False
        return cls(array, mask)

    def with_mask(self, mask: np.ndarray) -> "JointSet":
        return JointSet(self.coords, mask)

    def filled(self, value: float = 0.0) -> np.ndarray:
        """Coordinates with unsupervised entries replaced by ``value``."""
        return np.where(self.mask, self.coords, value)


@dataclass(frozen=True, eq=False)
class HeatVector:
    """
    1D marginal heat vectors along one axis, one row per joint.

    ``probs`` has shape ``(K, L)`` where L is W, H or D for axis x, y or z.
    """

    axis: str
    probs: np.ndarray

    def __post_init__(self) -> None:
        axis_position(self.axis)
        probs = np.atleast_2d(np.array(self.probs, dtype=np.float64, copy=True))
        if probs.ndim != 2:
            raise ContractError(f"HeatVector probs must be (K, L), got {probs.shape}")
        sums = probs.sum(axis=1)
        if np.any(probs < 0.0) or np.any(np.abs(sums - 1.0) > PROBABILITY_TOLERANCE):
            raise ContractError("HeatVector rows must be non-negative and sum to 1")
        object.__setattr__(self, "probs", _frozen(probs))

    @property
    def length(self) -> int:
        return int(self.probs.shape[1])
