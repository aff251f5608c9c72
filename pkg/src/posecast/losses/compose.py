"""
Loss composition: heatmap term + weighted joint term, with the full gradient
w.r.t. raw scores accumulated over every path.

Named variants:

    H1/H2/H3   heatmap loss only
    I*         joint loss only, through integral decoding
    I1/I2/I3   joint loss plus the corresponding heatmap loss
"""

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Optional

from ..core import AXES, Heatmap, JointSet
from ..decode import (
    DecodeGradient,
    integral_backward,
    integral_decode,
    marginalize,
    marginal_backward,
    normalize,
    two_step_backward,
    two_step_decode,
)
from ..utils.config import ConfigError, reject_unknown_keys, require
from .heatmap import LossTerm, h1_loss, h2_loss, h3_loss, vector_ce_loss, vector_loss
from .joint import JOINT_LOSSES, joint_loss
from .targets import gaussian_target

H1 = "H1_gaussian_mse"
H2 = "H2_onehot_ce"
H3 = "H3_binary_ce"
NONE = "none"

HEATMAP_LOSSES = (H1, H2, H3, NONE)
DECOMPOSITIONS = ("direct", "two_step")

_VARIANTS = {
    "H1": (H1, NONE),
    "H2": (H2, NONE),
    "H3": (H3, NONE),
    "I*": (NONE, "L1"),
    "I1": (H1, "L1"),
    "I2": (H2, "L1"),
    "I3": (H3, "L1"),
}


@dataclass(frozen=True)
class LossSpec:
    """Which heatmap and joint losses to combine, and how to decode for the joint term."""

    heatmap_loss: str = H1
    joint_loss: str = NONE
    joint_weight: float = 1.0
    decomposition: str = "direct"
    gaussian_sigma: float = 1.0
    h3_radius: float = 15.0

    def __post_init__(self) -> None:
        require(self.heatmap_loss in HEATMAP_LOSSES,
                f"loss.heatmap_loss must be one of {HEATMAP_LOSSES}, got {self.heatmap_loss!r}")
        require(self.joint_loss in JOINT_LOSSES + (NONE,),
                f"loss.joint_loss must be one of {JOINT_LOSSES + (NONE,)}, got {self.joint_loss!r}")
        require(self.heatmap_loss != NONE or self.joint_loss != NONE,
                "loss: at least one of heatmap_loss and joint_loss must be set")
        require(self.decomposition in DECOMPOSITIONS,
                f"loss.decomposition must be one of {DECOMPOSITIONS}, got {self.decomposition!r}")
        require(self.joint_weight >= 0, f"loss.joint_weight must be >= 0, got {self.joint_weight}")
        require(self.gaussian_sigma > 0, f"loss.gaussian_sigma must be > 0, got {self.gaussian_sigma}")
        require(self.h3_radius > 0, f"loss.h3_radius must be > 0, got {self.h3_radius}")

    @classmethod
    def variant(cls, name: str, **overrides: Any) -> "LossSpec":
        """
        LossSpec for a named method (H1, H2, H3, I*, I1, I2, I3).

        Raises:
            ConfigError: For an unknown name
        """
        if name not in _VARIANTS:
            raise ConfigError(f"Unknown loss variant {name!r}; expected one of {sorted(_VARIANTS)}")
        heatmap_loss, joint = _VARIANTS[name]
        return cls(heatmap_loss=heatmap_loss, joint_loss=joint, **overrides)

    @property
    def uses_heatmap(self) -> bool:
        return self.heatmap_loss != NONE

    @property
    def uses_joints(self) -> bool:
        return self.joint_loss != NONE

    def heatmap_only(self) -> "LossSpec":
        """Same spec with the joint term switched off (H1 when no heatmap loss is set)."""
        heatmap_loss = self.heatmap_loss if self.uses_heatmap else H1
        return LossSpec(
            heatmap_loss=heatmap_loss,
            joint_loss=NONE,
            joint_weight=self.joint_weight,
            decomposition=self.decomposition,
            gaussian_sigma=self.gaussian_sigma,
            h3_radius=self.h3_radius,
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], section: str = "loss") -> "LossSpec":
        reject_unknown_keys(data, [f.name for f in fields(cls)], section)
        return cls(**data)


@dataclass(frozen=True)
class LossValue:
    """Composite loss; ``total == heatmap_term + joint_weight * joint_term``."""

    total: float
    heatmap_term: float
    joint_term: float
    d_scores: Optional[DecodeGradient]
    decoded: Optional[JointSet] = None


def _heatmap_term(spec: LossSpec, pred: Heatmap, gt: JointSet) -> LossTerm:
    """Heatmap term with its gradient already chained to raw scores."""
    if spec.heatmap_loss == H3:
        return h3_loss(pred, gt, spec.h3_radius)

    if spec.decomposition == "direct":
        if spec.heatmap_loss == H1:
            return h1_loss(pred, gaussian_target(pred.spec, gt, spec.gaussian_sigma))
        return h2_loss(pred, gt)

    nh = normalize(pred)
    vectors = {axis: marginalize(nh, axis) for axis in AXES}
    if spec.heatmap_loss == H1:
        term = vector_loss(vectors, gt, spec.gaussian_sigma)
    else:
        term = vector_ce_loss(vectors, gt)
    return LossTerm(term.value, marginal_backward(nh, term.grad))


def compose_loss(spec: LossSpec, pred: Heatmap, gt: JointSet) -> LossValue:
    """
    Evaluate the configured loss and its gradient w.r.t. raw scores.

    Args:
        spec: Loss configuration
        pred: Predicted raw scores
        gt: Ground-truth joints (masks select supervised axes)

    Returns:
        LossValue with every gradient path summed into ``d_scores``
    """
    d_scores = DecodeGradient.zeros(pred.spec)
    heatmap_value = 0.0
    joint_value = 0.0
    decoded = None

    if spec.uses_heatmap:
        term = _heatmap_term(spec, pred, gt)
        heatmap_value = term.value
        d_scores = d_scores + term.grad

    if spec.uses_joints:
        nh = normalize(pred)
        if spec.decomposition == "direct":
            decoded = integral_decode(nh)
            backward = integral_backward
        else:
            decoded = two_step_decode(nh)
            backward = two_step_backward
        term = joint_loss(decoded, gt, spec.joint_loss)
        joint_value = term.value
        d_scores = d_scores + backward(pred, term.grad).scaled(spec.joint_weight)

    total = heatmap_value + spec.joint_weight * joint_value
    return LossValue(total, heatmap_value, joint_value, d_scores, decoded)
