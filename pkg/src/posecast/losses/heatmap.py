"""
Heatmap loss families and the 1D heat-vector losses of the two-step path.

- H1: mean squared error against a peak-1 Gaussian target
- H2: cross-entropy over the per-joint softmax against the rounded gt cell
- H3: per-cell binary cross-entropy against a disc of positive labels

Every loss returns its value with the gradient w.r.t. its direct input.
"""

from typing import Any, Dict, Mapping, NamedTuple, Sequence, Union

import numpy as np
from scipy.special import expit, logsumexp

from ..core import AXES, ContractError, Heatmap, HeatVector, JointSet
from ..decode import DecodeGradient
from .targets import cell_set_indicator, disc_labels, round_half_down, vector_target

VectorInput = Union[Mapping[str, HeatVector], Sequence[HeatVector]]

# floor for log of marginal probabilities; keeps gradients finite
_PROB_FLOOR = 1e-300


class LossTerm(NamedTuple):
    """A loss value and its gradient w.r.t. the loss input."""

    value: float
    grad: Any


def _check_joints(pred: Heatmap, gt: JointSet) -> None:
    if gt.K != pred.spec.K:
        raise ContractError(f"JointSet has {gt.K} joints, heatmap has {pred.spec.K}")


def h1_loss(pred: Heatmap, target: Heatmap) -> LossTerm:
    """
    Mean over all cells of ``(pred - target)^2``.

    Raises:
        ContractError: If the grids differ
    """
    if pred.spec != target.spec:
        raise ContractError(f"Grid mismatch: {pred.spec} vs {target.spec}")
    diff = pred.scores - target.scores
    n = diff.size
    return LossTerm(float(np.mean(diff ** 2)), DecodeGradient(pred.spec, 2.0 * diff / n))


def h2_loss(pred: Heatmap, gt: JointSet) -> LossTerm:
    """
    Softmax cross-entropy against the rounded ground-truth cell, averaged over joints.

    For joints with unsupervised axes the target is the set of cells matching
    the supervised coordinates, i.e. the loss is ``-log P(set)``.
    """
    _check_joints(pred, gt)
    spec = pred.spec
    indicator = cell_set_indicator(spec, gt).reshape(spec.K, -1)
    flat = pred.scores.reshape(spec.K, -1)

    log_z = logsumexp(flat, axis=1)
    log_hit = logsumexp(flat, axis=1, b=indicator.astype(np.float64))
    losses = log_z - log_hit

    probs = np.exp(flat - log_z[:, None])
    # probability renormalized inside the target set
    hit_probs = np.exp(np.where(indicator, flat - log_hit[:, None], -np.inf))
    grad = (probs - hit_probs) / spec.K
    return LossTerm(float(np.mean(losses)), DecodeGradient(spec, grad))


def h3_loss(pred: Heatmap, gt: JointSet, radius: float) -> LossTerm:
    """
    Mean binary cross-entropy of ``logistic(pred)`` against disc labels.

    Args:
        pred: Raw scores (per-cell logits)
        gt: Ground-truth joints
        radius: Label radius in cells
    """
    _check_joints(pred, gt)
    labels = disc_labels(pred.spec, gt, radius)
    scores = pred.scores
    # softplus(s) - y*s == BCE(logistic(s), y)
    losses = np.logaddexp(0.0, scores) - labels * scores
    n = scores.size
    grad = (expit(scores) - labels) / n
    return LossTerm(float(np.mean(losses)), DecodeGradient(pred.spec, grad))


def _as_vector_map(pred_vectors: VectorInput) -> Dict[str, HeatVector]:
    if isinstance(pred_vectors, Mapping):
        vectors = dict(pred_vectors)
    else:
        vectors = {vector.axis: vector for vector in pred_vectors}
    for axis, vector in vectors.items():
        if vector.axis != axis:
            raise ContractError(f"Heat vector for axis {axis} is labelled {vector.axis}")
    return vectors


def vector_loss(pred_vectors: VectorInput, gt: JointSet, sigma: float) -> LossTerm:
    """
    MSE between predicted marginals and renormalized 1D Gaussian targets.

    Each supervised (joint, axis) pair contributes the mean squared error of
    its vector; the loss averages over supervised pairs. Unsupervised axes
    contribute nothing and receive zero gradient.

    Returns:
        LossTerm whose grad maps axis -> dL/dvector of shape ``(K, L)``
    """
    if sigma <= 0:
        raise ContractError(f"sigma must be > 0, got {sigma}")
    vectors = _as_vector_map(pred_vectors)
    pairs = sum(int(gt.mask[:, AXES.index(axis)].sum()) for axis in vectors)

    total = 0.0
    grads: Dict[str, np.ndarray] = {}
    for axis, vector in vectors.items():
        a = AXES.index(axis)
        if vector.probs.shape[0] != gt.K:
            raise ContractError(f"Heat vector has {vector.probs.shape[0]} rows, gt has {gt.K} joints")
        grad = np.zeros_like(vector.probs)
        for k in np.flatnonzero(gt.mask[:, a]):
            target = vector_target(vector.length, gt.coords[k, a], sigma)
            diff = vector.probs[k] - target
            total += float(np.mean(diff ** 2)) / pairs
            grad[k] = 2.0 * diff / (vector.length * pairs)
        grads[axis] = grad
    return LossTerm(total, grads)


def vector_ce_loss(pred_vectors: VectorInput, gt: JointSet) -> LossTerm:
    """
    Cross-entropy of each supervised marginal against its rounded gt index.

    The 1D counterpart of H2 used by the two-step decomposition.
    """
    vectors = _as_vector_map(pred_vectors)
    pairs = sum(int(gt.mask[:, AXES.index(axis)].sum()) for axis in vectors)

    total = 0.0
    grads: Dict[str, np.ndarray] = {}
    for axis, vector in vectors.items():
        a = AXES.index(axis)
        grad = np.zeros_like(vector.probs)
        for k in np.flatnonzero(gt.mask[:, a]):
            i = int(round_half_down(gt.coords[k, a]))
            if not 0 <= i < vector.length:
                raise ContractError(f"Ground truth of joint {k} rounds outside axis {axis}")
            p = max(vector.probs[k, i], _PROB_FLOOR)
            total += -np.log(p) / pairs
            grad[k, i] = -1.0 / (p * pairs)
        grads[axis] = grad
    return LossTerm(float(total), grads)
