"""
Pose evaluation metrics: PCKh@alpha, AUC, MPJPE, PA-MPJPE, OKS and AP over
OKS thresholds.

All functions take sequences of PoseEvalItem. Joints take part according to
the ground-truth mask: PCKh and OKS use joints whose x and y are supervised
(distances are 2D), MPJPE and PA-MPJPE use joints supervised on all three
axes.
"""

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from ..core import ContractError, DomainError, JointSet, PosecastError
from ..utils.logger import get_logger

logger = get_logger(__name__)

# alpha in {0.00, 0.01, ..., 0.50}
AUC_ALPHAS = np.arange(51) / 100.0

# 0.50, 0.55, ..., 0.95
OKS_THRESHOLDS = np.round(0.5 + 0.05 * np.arange(10), 2)

DEFAULT_KAPPA = 0.1


class DegenerateConfigurationError(PosecastError):
    """Raised when a point set does not determine a unique similarity transform."""
    pass


@dataclass(frozen=True, eq=False)
class PoseEvalItem:
    """One predicted pose with its ground truth and normalizers."""

    pred: JointSet
    gt: JointSet
    head_length: float
    person_scale: float
    kappa: Union[float, np.ndarray] = DEFAULT_KAPPA

    def __post_init__(self) -> None:
        if self.pred.K != self.gt.K:
            raise ContractError(f"Prediction has {self.pred.K} joints, ground truth has {self.gt.K}")
        if not self.head_length > 0:
            raise ContractError(f"head_length must be > 0, got {self.head_length}")
        if not self.person_scale > 0:
            raise ContractError(f"person_scale must be > 0, got {self.person_scale}")
        kappa = np.broadcast_to(np.asarray(self.kappa, dtype=np.float64), (self.gt.K,)).copy()
        if not np.all(kappa > 0):
            raise ContractError("OKS falloff constants must be > 0")
        object.__setattr__(self, "kappa", kappa)

    @property
    def planar_joints(self) -> np.ndarray:
        """Joints with supervised x and y."""
        return self.gt.mask[:, 0] & self.gt.mask[:, 1]

    @property
    def full_joints(self) -> np.ndarray:
        """Joints supervised on every axis."""
        return self.gt.mask.all(axis=1)


def _require_items(items: Sequence[PoseEvalItem]) -> None:
    if len(items) == 0:
        raise ContractError("Metric needs at least one item")


def _selected_coords(item: PoseEvalItem, joints: np.ndarray, axes: slice) -> Tuple[np.ndarray, np.ndarray]:
    pred = item.pred.coords[joints, axes]
    gt = item.gt.coords[joints, axes]
    if not np.all(np.isfinite(pred)):
        raise DomainError("Predicted coordinates must be finite on evaluated joints")
    return pred, gt


def _planar_distances(items: Sequence[PoseEvalItem]) -> Tuple[np.ndarray, np.ndarray]:
    """2D distance and head length for every evaluated (item, joint) pair."""
    _require_items(items)
    distances: List[np.ndarray] = []
    heads: List[np.ndarray] = []
    for item in items:
        pred, gt = _selected_coords(item, item.planar_joints, slice(0, 2))
        distances.append(np.linalg.norm(pred - gt, axis=1))
        heads.append(np.full(len(pred), float(item.head_length)))
    d = np.concatenate(distances)
    if d.size == 0:
        raise ContractError("No joint with supervised x and y to evaluate")
    return d, np.concatenate(heads)


def pckh(items: Sequence[PoseEvalItem], alpha: float) -> float:
    """
    Fraction of joints whose 2D error is strictly below ``alpha * head_length``.

    Args:
        items: Evaluated poses
        alpha: Fraction of the head segment length (>= 0)

    Returns:
        Fraction in [0, 1]

    Raises:
        ContractError: On an empty item set or negative alpha
    """
    if alpha < 0:
        raise ContractError(f"alpha must be >= 0, got {alpha}")
    d, heads = _planar_distances(items)
    return float(np.mean(d < alpha * heads))


def pckh_curve(items: Sequence[PoseEvalItem], alphas: Sequence[float] = AUC_ALPHAS) -> np.ndarray:
    """PCKh at every alpha, shape ``(len(alphas),)``."""
    d, heads = _planar_distances(items)
    return np.array([np.mean(d < alpha * heads) for alpha in alphas], dtype=np.float64)


def auc(items: Sequence[PoseEvalItem]) -> float:
    """Mean PCKh over the 51 alphas 0.00, 0.01, ..., 0.50."""
    return float(np.mean(pckh_curve(items, AUC_ALPHAS)))


def _joint_errors(items: Sequence[PoseEvalItem]) -> np.ndarray:
    _require_items(items)
    errors = []
    for item in items:
        pred, gt = _selected_coords(item, item.full_joints, slice(0, 3))
        errors.append(np.linalg.norm(pred - gt, axis=1))
    errors = np.concatenate(errors)
    if errors.size == 0:
        raise ContractError("No joint supervised on all three axes")
    return errors


def mpjpe(items: Sequence[PoseEvalItem]) -> float:
    """Mean 3D Euclidean joint error over items and fully supervised joints."""
    return float(np.mean(_joint_errors(items)))


@dataclass(frozen=True, eq=False)
class SimilarityTransform:
    """``x -> scale * rotation @ x + translation``."""

    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def apply(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return self.scale * points @ self.rotation.T + self.translation


def _fit_similarity(source: np.ndarray, target: np.ndarray) -> SimilarityTransform:
    n = len(source)
    if n < 3:
        raise DegenerateConfigurationError(f"Procrustes alignment needs >= 3 joints, got {n}")

    mu_s = source.mean(axis=0)
    mu_t = target.mean(axis=0)
    src = source - mu_s
    tgt = target - mu_t
    if np.linalg.matrix_rank(src) < 2 or np.linalg.matrix_rank(tgt) < 2:
        raise DegenerateConfigurationError("Procrustes alignment needs non-collinear points")

    covariance = tgt.T @ src / n
    u, singular, vt = np.linalg.svd(covariance)
    # proper rotations only
    signs = np.ones(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        signs[-1] = -1.0
    rotation = u @ np.diag(signs) @ vt
    variance = np.sum(src ** 2) / n
    scale = float(np.sum(singular * signs) / variance)
    translation = mu_t - scale * rotation @ mu_s
    return SimilarityTransform(scale, rotation, translation)


def procrustes_align(pred: JointSet, gt: JointSet) -> Tuple[JointSet, SimilarityTransform]:
    """
    Least-squares similarity alignment of ``pred`` onto ``gt``.

    The transform is fitted on joints supervised on all three axes and then
    applied to every predicted joint.

    Args:
        pred: Predicted joints
        gt: Ground-truth joints

    Returns:
        Aligned prediction and the fitted transform

    Raises:
        DegenerateConfigurationError: Fewer than 3 joints, or collinear points
    """
    if pred.K != gt.K:
        raise ContractError(f"Prediction has {pred.K} joints, ground truth has {gt.K}")
    joints = gt.mask.all(axis=1)
    source = pred.coords[joints]
    if not np.all(np.isfinite(source)):
        raise DomainError("Predicted coordinates must be finite on aligned joints")
    transform = _fit_similarity(source, gt.coords[joints])
    aligned = np.where(pred.mask, transform.apply(pred.filled(0.0)), pred.coords)
    return JointSet(aligned, pred.mask), transform


def pa_mpjpe(items: Sequence[PoseEvalItem], skip_degenerate: bool = False) -> float:
    """
    MPJPE after per-item Procrustes alignment.

    Args:
        items: Evaluated poses
        skip_degenerate: Leave out items that cannot be aligned instead of raising

    Raises:
        DegenerateConfigurationError: On an item that cannot be aligned
            (unless skipped)
        ContractError: If no item is left to evaluate
    """
    _require_items(items)
    aligned: List[PoseEvalItem] = []
    skipped = 0
    for item in items:
        try:
            pred, _ = procrustes_align(item.pred, item.gt)
        except DegenerateConfigurationError:
            if not skip_degenerate:
                raise
            skipped += 1
            continue
        aligned.append(PoseEvalItem(pred, item.gt, item.head_length, item.person_scale, item.kappa))

    if skipped:
        logger.warning(f"Skipped {skipped} item(s) that cannot be Procrustes-aligned")
    if not aligned:
        raise ContractError("No item could be aligned")
    return mpjpe(aligned)


def oks(item: PoseEvalItem) -> float:
    """
    Object keypoint similarity of one pose.

    Mean over joints with supervised x/y of ``exp(-d^2 / (2 s^2 kappa^2))``;
    0 when no joint is supervised.
    """
    joints = item.planar_joints
    if not joints.any():
        return 0.0
    pred, gt = _selected_coords(item, joints, slice(0, 2))
    d2 = np.sum((pred - gt) ** 2, axis=1)
    kappa = item.kappa[joints]
    return float(np.mean(np.exp(-d2 / (2.0 * item.person_scale ** 2 * kappa ** 2))))


class APResult(NamedTuple):
    ap: float
    thresholds: np.ndarray
    precision: np.ndarray


def ap_from_scores(scores: Sequence[float], thresholds: Optional[Sequence[float]] = None) -> APResult:
    """Fraction of scores >= t at every threshold t, and its mean."""
    scores = np.asarray(scores, dtype=np.float64)
    thresholds = OKS_THRESHOLDS if thresholds is None else np.asarray(thresholds, dtype=np.float64)
    if scores.size == 0:
        raise ContractError("AP needs at least one item")
    precision = np.array([np.mean(scores >= t) for t in thresholds], dtype=np.float64)
    return APResult(float(np.mean(precision)), thresholds, precision)


def ap_over_oks(items: Sequence[PoseEvalItem], thresholds: Optional[Sequence[float]] = None) -> APResult:
    """
    Single-pose AP: per threshold, the fraction of items with OKS >= threshold.

    Args:
        items: Evaluated poses
        thresholds: OKS thresholds (default 0.50:0.05:0.95)

    Returns:
        APResult with the mean over thresholds and the per-threshold values
    """
    _require_items(items)
    return ap_from_scores([oks(item) for item in items], thresholds)
