"""
Trainable maps from evidence heatmaps to predicted score heatmaps.

ToyModel is axis-factorized. For joint k::

    P[k]  = max_z evidence[k]                       (H, W)
    Q[k]  = max_{y,x} evidence[k]                   (D,)
    plane = w2 * tanh(w1 * P + b1) + b2 + gain * P  (2D filters)
    depth = dw2 * tanh(dw1 * Q + db1) + dgain * Q   (1D filters along z)
    logits[k, z, y, x] = plane[k, y, x] + depth[k, z]

Because the logits are separable, the x/y marginals of the softmax do not
depend on the depth parameters and the z marginal does not depend on the
plane parameters.
"""

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..core import ContractError, GridSpec, Heatmap
from ..decode import DecodeGradient
from ..synth import EVIDENCE_SHARPNESS, evidence_logits, make_rng
from ..utils.config import reject_unknown_keys, require
from .filters import correlate, correlate_backward

Params = Dict[str, np.ndarray]


@dataclass(frozen=True)
class ModelConfig:
    """Toy model hyperparameters."""

    width: int = 4
    kernel: int = 3
    init_std: float = 0.1

    def __post_init__(self) -> None:
        require(isinstance(self.width, int) and self.width >= 1, f"model.width must be >= 1, got {self.width!r}")
        require(isinstance(self.kernel, int) and self.kernel >= 1 and self.kernel % 2 == 1,
                f"model.kernel must be a positive odd integer, got {self.kernel!r}")
        require(self.init_std >= 0, f"model.init_std must be >= 0, got {self.init_std}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], section: str = "train.model") -> "ModelConfig":
        reject_unknown_keys(data, [f.name for f in fields(cls)], section)
        return cls(**data)


class ToyModel:
    """Two-layer local filter stack per joint, factorized into plane and depth branches."""

    kind = "toy"

    def __init__(self, spec: GridSpec, config: ModelConfig, params: Params):
        self.spec = spec
        self.config = config
        expected = self.parameter_shapes(spec, config)
        if set(params) != set(expected):
            raise ContractError(f"Expected parameters {sorted(expected)}, got {sorted(params)}")
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise ContractError(f"Parameter {name} must have shape {shape}, got {params[name].shape}")
        self.params: Params = {name: np.array(params[name], dtype=np.float64) for name in expected}

    @staticmethod
    def parameter_shapes(spec: GridSpec, config: ModelConfig) -> Dict[str, Tuple[int, ...]]:
        K, C, k = spec.K, config.width, config.kernel
        return {
            "plane.w1": (K, C, 1, k, k),
            "plane.b1": (K, C),
            "plane.w2": (K, 1, C, k, k),
            "plane.b2": (K,),
            "plane.gain": (K,),
            "depth.w1": (K, C, 1, 1, k),
            "depth.b1": (K, C),
            "depth.w2": (K, 1, C, 1, k),
            "depth.gain": (K,),
        }

    @classmethod
    def initialize(cls, spec: GridSpec, config: ModelConfig, seed: int) -> "ToyModel":
        """First-layer filters ~ N(0, init_std); output layer, gains and biases zero."""
        rng = make_rng(seed)
        params = {name: np.zeros(shape) for name, shape in cls.parameter_shapes(spec, config).items()}
        for name in ("plane.w1", "depth.w1"):
            params[name] = rng.normal(0.0, config.init_std, size=params[name].shape)
        return cls(spec, config, params)

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def copy(self) -> "ToyModel":
        return ToyModel(self.spec, self.config, {name: p.copy() for name, p in self.params.items()})

    def metadata(self) -> Dict[str, Any]:
        return {"kind": self.kind, "grid": self.spec.to_dict(), "model": self.config.to_dict()}

    def _check(self, evidence: Heatmap) -> None:
        if evidence.spec != self.spec:
            raise ContractError(f"Evidence grid {evidence.spec} does not match model grid {self.spec}")

    def forward_with_cache(self, evidence: Heatmap) -> Tuple[Heatmap, Dict[str, np.ndarray]]:
        """Predicted scores and the activations backward() needs."""
        self._check(evidence)
        p = self.params
        scores = evidence.scores
        plane_in = scores.max(axis=1)[:, None]                     # (K, 1, H, W)
        depth_in = scores.max(axis=(2, 3))[:, None, None, :]       # (K, 1, 1, D)

        plane_hidden = np.tanh(correlate(plane_in, p["plane.w1"]) + p["plane.b1"][:, :, None, None])
        plane = (
            correlate(plane_hidden, p["plane.w2"])[:, 0]
            + p["plane.b2"][:, None, None]
            + p["plane.gain"][:, None, None] * plane_in[:, 0]
        )
        depth_hidden = np.tanh(correlate(depth_in, p["depth.w1"]) + p["depth.b1"][:, :, None, None])
        depth = correlate(depth_hidden, p["depth.w2"])[:, 0, 0] + p["depth.gain"][:, None] * depth_in[:, 0, 0]

        logits = plane[:, None, :, :] + depth[:, :, None, None]
        cache = {
            "plane_in": plane_in,
            "plane_hidden": plane_hidden,
            "depth_in": depth_in,
            "depth_hidden": depth_hidden,
        }
        return Heatmap(self.spec, logits), cache

    def forward(self, evidence: Heatmap) -> Heatmap:
        return self.forward_with_cache(evidence)[0]

    def backward(self, cache: Dict[str, np.ndarray], grad: DecodeGradient) -> Params:
        """
        Parameter gradients of a scalar loss.

        Args:
            cache: Activations from forward_with_cache
            grad: dL/dscores of the forward output

        Returns:
            dL/dparam for every parameter
        """
        if grad.spec != self.spec:
            raise ContractError(f"Gradient grid {grad.spec} does not match model grid {self.spec}")
        p = self.params
        d_plane = grad.d_scores.sum(axis=1)                        # (K, H, W)
        d_depth = grad.d_scores.sum(axis=(2, 3))                   # (K, D)
        grads: Params = {}

        plane_in, plane_hidden = cache["plane_in"], cache["plane_hidden"]
        grads["plane.b2"] = d_plane.sum(axis=(1, 2))
        grads["plane.gain"] = np.einsum("kyx,kyx->k", d_plane, plane_in[:, 0])
        d_hidden, grads["plane.w2"] = correlate_backward(plane_hidden, p["plane.w2"], d_plane[:, None])
        d_pre = d_hidden * (1.0 - plane_hidden ** 2)
        grads["plane.b1"] = d_pre.sum(axis=(2, 3))
        _, grads["plane.w1"] = correlate_backward(plane_in, p["plane.w1"], d_pre)

        depth_in, depth_hidden = cache["depth_in"], cache["depth_hidden"]
        grads["depth.gain"] = np.einsum("kz,kz->k", d_depth, depth_in[:, 0, 0])
        d_hidden, grads["depth.w2"] = correlate_backward(depth_hidden, p["depth.w2"], d_depth[:, None, None, :])
        d_pre = d_hidden * (1.0 - depth_hidden ** 2)
        grads["depth.b1"] = d_pre.sum(axis=(2, 3))
        _, grads["depth.w1"] = correlate_backward(depth_in, p["depth.w1"], d_pre)

        return {name: grads[name] for name in p}


class PassthroughModel:
    """Parameter-free predictor: the sharpened log-evidence itself."""

    kind = "passthrough"

    def __init__(self, spec: GridSpec, sharpness: float = EVIDENCE_SHARPNESS):
        self.spec = spec
        self.sharpness = float(sharpness)
        self.params: Params = {}

    def parameter_count(self) -> int:
        return 0

    def copy(self) -> "PassthroughModel":
        return PassthroughModel(self.spec, self.sharpness)

    def metadata(self) -> Dict[str, Any]:
        return {"kind": self.kind, "grid": self.spec.to_dict(), "sharpness": self.sharpness}

    def forward_with_cache(self, evidence: Heatmap) -> Tuple[Heatmap, Dict[str, np.ndarray]]:
        if evidence.spec != self.spec:
            raise ContractError(f"Evidence grid {evidence.spec} does not match model grid {self.spec}")
        return evidence_logits(evidence, self.sharpness), {}

    def forward(self, evidence: Heatmap) -> Heatmap:
        return self.forward_with_cache(evidence)[0]

    def backward(self, cache: Dict[str, np.ndarray], grad: DecodeGradient) -> Params:
        return {}


def create_model(spec: GridSpec, config: Optional[ModelConfig] = None, seed: int = 0) -> ToyModel:
    """
    Factory function to create a freshly initialized ToyModel.

    Args:
        spec: Grid of the evidence and predictions
        config: Model hyperparameters (defaults if None)
        seed: Initialization seed

    Returns:
        ToyModel
    """
    return ToyModel.initialize(spec, config or ModelConfig(), seed)
