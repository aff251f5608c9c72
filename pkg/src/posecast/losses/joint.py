"""
Joint coordinate losses (L1 / L2) over supervised axes.
"""

import numpy as np

from ..core import ContractError, DomainError, JointSet
from .heatmap import LossTerm

JOINT_LOSSES = ("L1", "L2")


def joint_loss(pred: JointSet, gt: JointSet, kind: str) -> LossTerm:
    """
    Mean L1 or squared error between predicted and ground-truth coordinates.

    Only entries where ``gt.mask`` is set take part; the others get zero
    gradient.

    Args:
        pred: Predicted joints
        gt: Ground-truth joints with supervision mask
        kind: ``L1`` or ``L2``

    Returns:
        LossTerm whose grad is dL/dpred of shape ``(K, 3)``

    Raises:
        ContractError: On joint-count mismatch, unknown kind, or no supervised entry
    """
    if kind not in JOINT_LOSSES:
        raise ContractError(f"Unknown joint loss {kind!r}; expected one of {JOINT_LOSSES}")
    if pred.K != gt.K:
        raise ContractError(f"Predicted {pred.K} joints, ground truth has {gt.K}")

    active = gt.mask
    n = int(active.sum())
    if n == 0:
        raise ContractError("Joint loss needs at least one supervised axis")
    if not np.all(np.isfinite(pred.coords[active])):
        raise DomainError("Predicted coordinates must be finite on supervised axes")

    delta = np.where(active, pred.coords - gt.filled(0.0), 0.0)
    if kind == "L1":
        return LossTerm(float(np.abs(delta).sum() / n), np.sign(delta) / n)
    return LossTerm(float((delta ** 2).sum() / n), 2.0 * delta / n)
