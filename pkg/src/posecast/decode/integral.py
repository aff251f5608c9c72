"""
Heatmap to joint transforms and their analytic backward passes.

- argmax decoding (maximum-likelihood cell, not differentiable)
- softmax normalization
- direct integral decoding: expectation of the cell coordinate
- two-step decoding: marginalize to 1D heat vectors, then integrate each

Backward passes are hand-derived closed forms. For joint k, cell q and axis a
the integral decode satisfies

    dJ[k, a] / dscore[k, q] = prob[k, q] * (coord_a(q) - J[k, a])
"""

from dataclasses import dataclass
from typing import Dict, Mapping

import numpy as np
from scipy.special import softmax

from ..core import (
    ARRAY_AXIS,
    AXES,
    ContractError,
    DomainError,
    GridSpec,
    Heatmap,
    HeatVector,
    JointSet,
    NormalizedHeatmap,
    axis_position,
    coordinate_grids,
)


DECODERS = ("argmax", "integral", "two_step")

# axes summed away when marginalizing onto the key axis, in (K, D, H, W) layout
_COMPLEMENT = {"x": (1, 2), "y": (1, 3), "z": (2, 3)}


@dataclass(frozen=True, eq=False)
class DecodeGradient:
    """Gradient of a scalar loss w.r.t. every raw score, same layout as the Heatmap."""

    spec: GridSpec
    d_scores: np.ndarray

    def __post_init__(self) -> None:
        d_scores = np.array(self.d_scores, dtype=np.float64, copy=True).reshape(self.spec.shape)
        if not np.all(np.isfinite(d_scores)):
            raise DomainError("Gradient must be finite")
        d_scores.flags.writeable = False
        object.__setattr__(self, "d_scores", d_scores)

    @classmethod
    def zeros(cls, spec: GridSpec) -> "DecodeGradient":
        return cls(spec, np.zeros(spec.shape))

    def __add__(self, other: "DecodeGradient") -> "DecodeGradient":
        if other.spec != self.spec:
            raise ContractError("Cannot add gradients of different grids")
        return DecodeGradient(self.spec, self.d_scores + other.d_scores)

    def scaled(self, factor: float) -> "DecodeGradient":
        return DecodeGradient(self.spec, self.d_scores * factor)

    def per_joint_sums(self) -> np.ndarray:
        return self.d_scores.reshape(self.spec.K, -1).sum(axis=1)


def _all_true(K: int) -> np.ndarray:
    return np.ones((K, 3), dtype=bool)


def argmax_decode(h: Heatmap) -> JointSet:
    """
    Integer coordinates of each joint's maximal cell.

    Ties go to the lowest linear index.
    """
    flat = h.scores.reshape(h.spec.K, -1)
    # np.argmax returns the first occurrence
    index = np.argmax(flat, axis=1)
    z, y, x = np.unravel_index(index, (h.spec.D, h.spec.H, h.spec.W))
    coords = np.stack([x, y, z], axis=1).astype(np.float64)
    return JointSet(coords, _all_true(h.spec.K))


def normalize(h: Heatmap) -> NormalizedHeatmap:
    """
    Per-joint softmax over all cells (max-subtracted for stability).

    Raises:
        DomainError: If any score is non-finite
    """
    if not np.all(np.isfinite(h.scores)):
        raise DomainError("Cannot normalize non-finite scores")
    flat = h.scores.reshape(h.spec.K, -1)
    probs = softmax(flat, axis=1)
    return NormalizedHeatmap(h.spec, probs.reshape(h.spec.shape))


def integral_decode(nh: NormalizedHeatmap) -> JointSet:
    """Expected cell coordinate of each joint under its probability grid."""
    x, y, z = coordinate_grids(nh.spec)
    coords = np.stack(
        [np.einsum("kzyx,zyx->k", nh.probs, grid) for grid in (x, y, z)],
        axis=1,
    )
    return JointSet(coords, _all_true(nh.spec.K))


def marginalize(nh: NormalizedHeatmap, axis: str) -> HeatVector:
    """
    Sum probabilities over the two complementary axes.

    Returns:
        HeatVector with one row per joint, length W, H or D
    """
    axis_position(axis)
    return HeatVector(axis, nh.probs.sum(axis=_COMPLEMENT[axis]))


def vector_integral(v: HeatVector) -> np.ndarray:
    """Expected index of each heat vector row, shape ``(K,)``."""
    return v.probs @ np.arange(v.length, dtype=np.float64)


def two_step_decode(nh: NormalizedHeatmap) -> JointSet:
    """Integral decode through per-axis marginals (equal to integral_decode)."""
    coords = np.stack([vector_integral(marginalize(nh, axis)) for axis in AXES], axis=1)
    return JointSet(coords, _all_true(nh.spec.K))


def decode(h: Heatmap, method: str = "integral") -> JointSet:
    """
    Decode raw scores with the named method.

    Args:
        h: Raw score heatmap
        method: ``argmax``, ``integral`` or ``two_step``

    Returns:
        Decoded joints
    """
    if method == "argmax":
        return argmax_decode(h)
    if method == "integral":
        return integral_decode(normalize(h))
    if method == "two_step":
        return two_step_decode(normalize(h))
    raise ContractError(f"Unknown decoder {method!r}; expected one of {DECODERS}")


def _check_upstream(spec: GridSpec, upstream: np.ndarray) -> np.ndarray:
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (spec.K, 3):
        raise ContractError(f"Upstream gradient must have shape ({spec.K}, 3), got {upstream.shape}")
    if not np.all(np.isfinite(upstream)):
        raise DomainError("Upstream gradient must be finite")
    return upstream


def softmax_backward(nh: NormalizedHeatmap, d_probs: np.ndarray) -> DecodeGradient:
    """
    Chain a gradient w.r.t. probabilities through the softmax.

    Args:
        nh: Softmax output the gradient refers to
        d_probs: dL/dprob, shape ``(K, D, H, W)``

    Returns:
        dL/dscore
    """
    d_probs = np.asarray(d_probs, dtype=np.float64).reshape(nh.spec.shape)
    inner = np.einsum("kzyx,kzyx->k", nh.probs, d_probs)
    return DecodeGradient(nh.spec, nh.probs * (d_probs - inner[:, None, None, None]))


def marginal_backward(nh: NormalizedHeatmap, d_vectors: Mapping[str, np.ndarray]) -> DecodeGradient:
    """
    Chain gradients w.r.t. marginal heat vectors back to raw scores.

    Args:
        nh: Normalized heatmap the marginals were taken from
        d_vectors: Per-axis dL/dvector, each ``(K, L)``; missing axes count as zero

    Returns:
        dL/dscore
    """
    spec = nh.spec
    d_probs = np.zeros(spec.shape)
    for axis, d_vector in d_vectors.items():
        d_vector = np.asarray(d_vector, dtype=np.float64)
        expected = (spec.K, spec.axis_length(axis))
        if d_vector.shape != expected:
            raise ContractError(f"Gradient for axis {axis} must be {expected}, got {d_vector.shape}")
        # every cell receives the gradient of the vector entry it was summed into
        shape = [spec.K, 1, 1, 1]
        shape[ARRAY_AXIS[axis]] = spec.axis_length(axis)
        d_probs = d_probs + d_vector.reshape(shape)
    return softmax_backward(nh, d_probs)


def integral_backward(h: Heatmap, upstream: np.ndarray) -> DecodeGradient:
    """
    Gradient of a loss w.r.t. raw scores through normalize + integral_decode.

    Args:
        h: Raw scores that were decoded
        upstream: dL/dJ, shape ``(K, 3)``; unsupervised axes must carry zero

    Returns:
        DecodeGradient; each joint's entries sum to zero

    Raises:
        ContractError: If ``upstream`` has the wrong shape
    """
    upstream = _check_upstream(h.spec, upstream)
    nh = normalize(h)
    joints = integral_decode(nh).coords
    grids = coordinate_grids(h.spec)

    d_scores = np.zeros(h.spec.shape)
    for a, grid in enumerate(grids):
        weight = upstream[:, a]
        if not np.any(weight):
            continue
        centred = grid[None, :, :, :] - joints[:, a, None, None, None]
        d_scores += weight[:, None, None, None] * nh.probs * centred
    return DecodeGradient(h.spec, d_scores)


def two_step_backward(h: Heatmap, upstream: np.ndarray) -> DecodeGradient:
    """
    Gradient through normalize, marginalize and vector_integral.

    Mathematically identical to integral_backward; computed along the
    two-step path so each stage's backward is exercised.
    """
    upstream = _check_upstream(h.spec, upstream)
    nh = normalize(h)
    d_vectors: Dict[str, np.ndarray] = {}
    for a, axis in enumerate(AXES):
        positions = np.arange(h.spec.axis_length(axis), dtype=np.float64)
        d_vectors[axis] = upstream[:, a, None] * positions[None, :]
    return marginal_backward(nh, d_vectors)
