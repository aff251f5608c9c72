"""
Ground-truth target construction for the heatmap losses.

Gaussian targets have peak value 1 at the continuous joint location. Only
supervised axes contribute to distances, so a 2D-annotated joint on a 3D grid
yields a target that is constant along depth.
"""

from typing import Tuple

import numpy as np

from ..core import ContractError, GridSpec, Heatmap, JointSet, coordinate_grids
from ..utils.logger import get_logger

logger = get_logger(__name__)


def clamp_joints(spec: GridSpec, gt: JointSet) -> Tuple[JointSet, np.ndarray]:
    """
    Clamp supervised coordinates into the grid.

    Args:
        spec: Grid the joints refer to
        gt: Ground-truth joints

    Returns:
        Clamped JointSet and a boolean flag per joint (True = was clamped)
    """
    if gt.K != spec.K:
        raise ContractError(f"JointSet has {gt.K} joints, grid has {spec.K}")
    upper = np.array(spec.axis_lengths(), dtype=np.float64) - 1.0
    filled = gt.filled(0.0)
    clamped = np.clip(filled, 0.0, upper[None, :])
    moved = gt.mask & (clamped != filled)
    coords = np.where(gt.mask, clamped, gt.coords)
    return JointSet(coords, gt.mask), moved.any(axis=1)


def squared_distances(spec: GridSpec, gt: JointSet) -> np.ndarray:
    """
    Squared distance from every cell to each joint over its supervised axes.

    Returns:
        Array of shape ``(K, D, H, W)``
    """
    grids = coordinate_grids(spec)
    centres = gt.filled(0.0)
    d2 = np.zeros(spec.shape)
    for a, grid in enumerate(grids):
        weight = gt.mask[:, a].astype(np.float64)[:, None, None, None]
        d2 += weight * (grid[None] - centres[:, a, None, None, None]) ** 2
    return d2


def gaussian_target(spec: GridSpec, gt: JointSet, sigma: float) -> Heatmap:
    """
    Peak-1 Gaussian blob per joint centred on the continuous ground truth.

    Args:
        spec: Output grid
        gt: Ground-truth joints
        sigma: Standard deviation in cells

    Returns:
        Target heatmap, ``exp(-|cell - gt|^2 / (2 sigma^2))``
    """
    if sigma <= 0:
        raise ContractError(f"sigma must be > 0, got {sigma}")
    clamped, flagged = clamp_joints(spec, gt)
    if flagged.any():
        logger.warning(f"Clamped out-of-grid target centre(s) for joint(s) {np.flatnonzero(flagged).tolist()}")
    return Heatmap(spec, np.exp(-squared_distances(spec, clamped) / (2.0 * sigma ** 2)))


def vector_target(length: int, centre: float, sigma: float) -> np.ndarray:
    """
    Discretized 1D Gaussian renormalized to sum 1.

    The centre is clamped into ``[0, length - 1]`` with a warning.
    """
    clamped = min(max(float(centre), 0.0), length - 1.0)
    if clamped != centre:
        logger.warning(f"Clamped out-of-grid target centre {centre} to {clamped} on a {length}-cell axis")
    centre = clamped
    positions = np.arange(length, dtype=np.float64)
    bump = np.exp(-((positions - centre) ** 2) / (2.0 * sigma ** 2))
    return bump / bump.sum()


def round_half_down(coords: np.ndarray) -> np.ndarray:
    """Nearest integer with ties toward the lower index."""
    return np.ceil(np.asarray(coords, dtype=np.float64) - 0.5).astype(np.int64)


def rounded_cells(spec: GridSpec, gt: JointSet) -> np.ndarray:
    """
    Nearest cell index on every supervised axis, ties toward the lower index.

    Returns:
        Integer array ``(K, 3)``; unsupervised entries are -1

    Raises:
        ContractError: If a supervised coordinate rounds outside the grid
    """
    index = round_half_down(gt.filled(0.0))
    lengths = np.array(spec.axis_lengths())[None, :]
    outside = gt.mask & ((index < 0) | (index >= lengths))
    if outside.any():
        joint, axis = np.argwhere(outside)[0]
        raise ContractError(
            f"Ground truth of joint {joint} rounds outside the grid on axis {'xyz'[axis]}"
        )
    return np.where(gt.mask, index, -1)


def cell_set_indicator(spec: GridSpec, gt: JointSet) -> np.ndarray:
    """
    Cells whose supervised coordinates all equal the rounded ground truth.

    With every axis supervised this is a one-hot grid per joint.

    Returns:
        Boolean array ``(K, D, H, W)``
    """
    index = rounded_cells(spec, gt)
    grids = coordinate_grids(spec)
    indicator = np.ones(spec.shape, dtype=bool)
    for a, grid in enumerate(grids):
        supervised = gt.mask[:, a][:, None, None, None]
        hit = grid[None] == index[:, a, None, None, None]
        indicator &= hit | ~supervised
    return indicator


def disc_labels(spec: GridSpec, gt: JointSet, radius: float) -> np.ndarray:
    """Binary labels: 1 within ``radius`` cells of the joint, else 0."""
    if radius <= 0:
        raise ContractError(f"radius must be > 0, got {radius}")
    return (squared_distances(spec, gt) <= radius ** 2).astype(np.float64)
