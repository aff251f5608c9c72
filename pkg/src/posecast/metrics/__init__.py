"""Pose evaluation metrics and reports."""

from .pose import (
    AUC_ALPHAS,
    OKS_THRESHOLDS,
    DegenerateConfigurationError,
    PoseEvalItem,
    SimilarityTransform,
    APResult,
    pckh,
    pckh_curve,
    auc,
    mpjpe,
    procrustes_align,
    pa_mpjpe,
    oks,
    ap_from_scores,
    ap_over_oks,
)
from .report import MetricOptions, MetricReport, make_items, compute_report

__all__ = [
    'AUC_ALPHAS',
    'OKS_THRESHOLDS',
    'DegenerateConfigurationError',
    'PoseEvalItem',
    'SimilarityTransform',
    'APResult',
    'pckh',
    'pckh_curve',
    'auc',
    'mpjpe',
    'procrustes_align',
    'pa_mpjpe',
    'oks',
    'ap_from_scores',
    'ap_over_oks',
    'MetricOptions',
    'MetricReport',
    'make_items',
    'compute_report',
]
