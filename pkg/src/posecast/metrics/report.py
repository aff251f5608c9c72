"""
Metric options and the evaluation report written by ``posecast eval``.
"""

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..core import AXES, ContractError, GridSpec, JointSet
from ..utils.config import reject_unknown_keys, require
from ..utils.logger import get_logger
from .pose import (
    AUC_ALPHAS,
    DegenerateConfigurationError,
    PoseEvalItem,
    ap_over_oks,
    mpjpe,
    pa_mpjpe,
    pckh_curve,
)

logger = get_logger(__name__)

REPORT_FORMAT = "posecast-report"
REPORT_VERSION = 1

CSV_FLOAT_FORMAT = "%.9g"


@dataclass(frozen=True)
class MetricOptions:
    """How synthetic grids map onto the pose metrics' normalizers."""

    alphas: Tuple[float, ...] = (0.1, 0.5)
    head_fraction: float = 0.15
    scale_fraction: float = 0.5
    kappa: float = 0.1
    stride: float = 4.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        require(all(a >= 0 for a in self.alphas), "metrics.alphas must be >= 0")
        require(self.head_fraction > 0, f"metrics.head_fraction must be > 0, got {self.head_fraction}")
        require(self.scale_fraction > 0, f"metrics.scale_fraction must be > 0, got {self.scale_fraction}")
        require(self.kappa > 0, f"metrics.kappa must be > 0, got {self.kappa}")
        require(self.stride > 0, f"metrics.stride must be > 0, got {self.stride}")

    def head_length(self, spec: GridSpec) -> float:
        return self.head_fraction * max(spec.H, spec.W)

    def person_scale(self, spec: GridSpec) -> float:
        return self.scale_fraction * max(spec.H, spec.W)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["alphas"] = list(self.alphas)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any], section: str = "metrics") -> "MetricOptions":
        reject_unknown_keys(data, [f.name for f in fields(cls)], section)
        return cls(**data)


def make_items(
    preds: Sequence[JointSet],
    gts: Sequence[JointSet],
    spec: GridSpec,
    options: MetricOptions,
) -> List[PoseEvalItem]:
    """Pair predictions with ground truth using grid-derived normalizers."""
    if len(preds) != len(gts):
        raise ContractError(f"{len(preds)} predictions for {len(gts)} ground-truth poses")
    head = options.head_length(spec)
    scale = options.person_scale(spec)
    return [PoseEvalItem(p, g, head, scale, options.kappa) for p, g in zip(preds, gts)]


def _alpha_key(alpha: float) -> str:
    return f"{alpha:g}"


@dataclass
class MetricReport:
    """
    Evaluation summary.

    Distances for PCKh, OKS, mean_error and axis_error are in cells; MPJPE and
    PA-MPJPE are in pixels (cells x stride) and are None when no item is 3D.
    """

    decoder: str
    n_items: int
    stride: float
    pckh: Dict[str, float]
    auc: float
    pckh_curve: List[List[float]]
    mpjpe: Optional[float]
    pa_mpjpe: Optional[float]
    ap: float
    ap_per_threshold: Dict[str, float]
    mean_error: float
    axis_error: Dict[str, Optional[float]] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        data = {"format": REPORT_FORMAT, "version": REPORT_VERSION}
        data.update(asdict(self))
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_frame(self) -> pd.DataFrame:
        """One row per metric; the PCKh curve and AP thresholds carry their alpha."""
        rows: List[Dict[str, Any]] = []

        def add(metric: str, value: Optional[float], alpha: Optional[float] = None) -> None:
            rows.append({"metric": metric, "alpha": alpha, "value": value})

        for key, value in self.pckh.items():
            add("pckh", value, float(key))
        add("auc", self.auc)
        add("mpjpe", self.mpjpe)
        add("pa_mpjpe", self.pa_mpjpe)
        add("ap", self.ap)
        for key, value in self.ap_per_threshold.items():
            add("ap_at", value, float(key))
        add("mean_error", self.mean_error)
        for axis, value in self.axis_error.items():
            add(f"axis_error_{axis}", value)
        for alpha, value in self.pckh_curve:
            add("pckh_curve", value, alpha)
        return pd.DataFrame(rows, columns=["metric", "alpha", "value"])

    def to_csv(self) -> str:
        return self.to_frame().to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")

    def write(self, out_dir: Path, stem: str = "report") -> Tuple[Path, Path]:
        """
        Write ``<stem>.json`` and ``<stem>.csv`` into ``out_dir``.

        Returns:
            Paths of the JSON and CSV files
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        json_path = out_dir / f"{stem}.json"
        csv_path = out_dir / f"{stem}.csv"
        json_path.write_text(self.to_json(), encoding="utf-8")
        csv_path.write_text(self.to_csv(), encoding="utf-8")
        logger.info(f"Wrote report to {json_path} and {csv_path}")
        return json_path, csv_path


def _coordinate_errors(items: Sequence[PoseEvalItem]) -> Tuple[float, Dict[str, Optional[float]]]:
    """Mean Euclidean error over supervised axes, and mean absolute error per axis."""
    euclidean: List[np.ndarray] = []
    per_axis: List[List[np.ndarray]] = [[] for _ in AXES]
    for item in items:
        mask = item.gt.mask
        delta = np.where(mask, item.pred.filled(0.0) - item.gt.filled(0.0), 0.0)
        joints = mask.any(axis=1)
        euclidean.append(np.linalg.norm(delta[joints], axis=1))
        for a in range(len(AXES)):
            per_axis[a].append(np.abs(delta[mask[:, a], a]))

    distances = np.concatenate(euclidean)
    if distances.size == 0:
        raise ContractError("No supervised joint to evaluate")
    axis_error: Dict[str, Optional[float]] = {}
    for axis, chunks in zip(AXES, per_axis):
        errors = np.concatenate(chunks)
        axis_error[axis] = float(np.mean(errors)) if errors.size else None
    return float(np.mean(distances)), axis_error


def compute_report(items: Sequence[PoseEvalItem], decoder: str, options: MetricOptions) -> MetricReport:
    """
    Evaluate every metric over ``items``.

    Args:
        items: Decoded predictions paired with ground truth (cell units)
        decoder: Name of the decoder that produced the predictions
        options: Metric options

    Returns:
        MetricReport
    """
    if len(items) == 0:
        raise ContractError("Cannot build a report from zero items")

    curve = pckh_curve(items, AUC_ALPHAS)
    chosen = pckh_curve(items, options.alphas)
    ap = ap_over_oks(items)

    items_3d = [item for item in items if item.full_joints.any()]
    mpjpe_px: Optional[float] = None
    pa_mpjpe_px: Optional[float] = None
    if items_3d:
        mpjpe_px = mpjpe(items_3d) * options.stride
        try:
            pa_mpjpe_px = pa_mpjpe(items_3d, skip_degenerate=True) * options.stride
        except (ContractError, DegenerateConfigurationError) as exc:
            logger.warning(f"PA-MPJPE unavailable: {exc}")

    mean_error, axis_error = _coordinate_errors(items)
    return MetricReport(
        decoder=decoder,
        n_items=len(items),
        stride=options.stride,
        pckh={_alpha_key(a): float(v) for a, v in zip(options.alphas, chosen)},
        auc=float(np.mean(curve)),
        pckh_curve=[[float(a), float(v)] for a, v in zip(AUC_ALPHAS, curve)],
        mpjpe=mpjpe_px,
        pa_mpjpe=pa_mpjpe_px,
        ap=ap.ap,
        ap_per_threshold={_alpha_key(t): float(p) for t, p in zip(ap.thresholds, ap.precision)},
        mean_error=mean_error,
        axis_error=axis_error,
    )
