"""
Direct regression baseline: globally averaged evidence features followed by
one affine map to 3K joint coordinates.
"""

from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..core import ContractError, GridSpec, Heatmap, JointSet, coordinate_grids

Params = Dict[str, np.ndarray]

FEATURES_PER_JOINT = 8


class RegressionHead:
    """
    Coordinates = weight @ features + bias.

    Features per joint are the cell means of ``e``, ``e^2`` and of each
    multiplied by the normalized x, y and z cell coordinate, where ``e`` is
    the joint's evidence grid. The bias starts at the grid centre and the
    weight at zero.
    """

    kind = "regression"

    def __init__(self, spec: GridSpec, params: Optional[Params] = None):
        self.spec = spec
        n_in, n_out = FEATURES_PER_JOINT * spec.K, 3 * spec.K
        if params is None:
            centre = (np.array(spec.axis_lengths(), dtype=np.float64) - 1.0) / 2.0
            params = {"head.weight": np.zeros((n_out, n_in)), "head.bias": np.tile(centre, spec.K)}
        expected = {"head.weight": (n_out, n_in), "head.bias": (n_out,)}
        if set(params) != set(expected):
            raise ContractError(f"Expected parameters {sorted(expected)}, got {sorted(params)}")
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise ContractError(f"Parameter {name} must have shape {shape}, got {params[name].shape}")
        self.params: Params = {name: np.array(params[name], dtype=np.float64) for name in expected}

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def copy(self) -> "RegressionHead":
        return RegressionHead(self.spec, {name: p.copy() for name, p in self.params.items()})

    def metadata(self) -> Dict[str, Any]:
        return {"kind": self.kind, "grid": self.spec.to_dict()}

    def features(self, evidence: Heatmap) -> np.ndarray:
        """Flattened ``(8K,)`` feature vector."""
        if evidence.spec != self.spec:
            raise ContractError(f"Evidence grid {evidence.spec} does not match model grid {self.spec}")
        e = evidence.scores
        e2 = e ** 2
        scale = np.maximum(np.array(self.spec.axis_lengths(), dtype=np.float64) - 1.0, 1.0)
        columns = [e.mean(axis=(1, 2, 3)), e2.mean(axis=(1, 2, 3))]
        for grid, length in zip(coordinate_grids(self.spec), scale):
            position = grid[None] / length
            columns.append((e * position).mean(axis=(1, 2, 3)))
            columns.append((e2 * position).mean(axis=(1, 2, 3)))
        return np.stack(columns, axis=1).reshape(-1)

    def forward_with_cache(self, evidence: Heatmap) -> Tuple[JointSet, Dict[str, np.ndarray]]:
        features = self.features(evidence)
        coords = self.params["head.weight"] @ features + self.params["head.bias"]
        return JointSet.full_mask(coords.reshape(self.spec.K, 3)), {"features": features}

    def predict(self, evidence: Heatmap) -> JointSet:
        return self.forward_with_cache(evidence)[0]

    def backward(self, cache: Dict[str, np.ndarray], d_coords: np.ndarray) -> Params:
        """
        Parameter gradients from dL/dcoords of shape ``(K, 3)``.
        """
        d_out = np.asarray(d_coords, dtype=np.float64).reshape(-1)
        if d_out.shape != self.params["head.bias"].shape:
            raise ContractError(f"Coordinate gradient must have shape ({self.spec.K}, 3)")
        return {
            "head.weight": np.outer(d_out, cache["features"]),
            "head.bias": d_out.copy(),
        }
