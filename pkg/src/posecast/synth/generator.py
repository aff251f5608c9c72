"""
Synthetic pose samples: continuous ground truth plus rendered "evidence"
heatmaps (clean blob at the joint, distractor blobs, additive noise).

Streams are drawn from numpy's PCG64 generator seeded with ``config.seed``;
each sample consumes its draws in a fixed order (joint positions, distractor
positions, noise), so ``generate(config, n)`` is a prefix of
``generate(config, n + 1)``.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

import numpy as np

from ..core import ContractError, GridSpec, Heatmap, JointSet, coordinate_grids
from ..utils.config import ConfigError, reject_unknown_keys, require

TAG_2D = "2D"
TAG_3D = "3D"

# sharpening applied to log-evidence; keeps the implied Gaussian narrow
# enough that a 1-cell margin does not bias the expectation
EVIDENCE_SHARPNESS = 2.0
EVIDENCE_FLOOR = 1e-12

_SEED_LIMIT = 2 ** 64


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator."""
    return np.random.Generator(np.random.PCG64(seed))


def grid_from_dict(data: Dict[str, Any], K: int, section: str) -> GridSpec:
    """Parse ``{"D", "H", "W"}`` into a GridSpec with ``K`` joints."""
    reject_unknown_keys(data, ("D", "H", "W"), section)
    try:
        return GridSpec(K=K, D=data.get("D", 1), H=data.get("H", 0), W=data.get("W", 0))
    except ContractError as exc:
        raise ConfigError(f"{section}: {exc}")


def grid_to_dict(spec: GridSpec) -> Dict[str, int]:
    return {"D": int(spec.D), "H": int(spec.H), "W": int(spec.W)}


def check_interior(spec: GridSpec, section: str) -> None:
    """A 1-cell margin must leave room on every axis (3D grids need D >= 3)."""
    require(spec.W >= 3 and spec.H >= 3, f"{section}: H and W must be >= 3, got {spec.H}x{spec.W}")
    require(spec.D == 1 or spec.D >= 3, f"{section}: D must be 1 or >= 3, got {spec.D}")


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic data stream parameters."""

    seed: int = 0
    K: int = 4
    grid: GridSpec = field(default_factory=lambda: GridSpec(K=4, D=1, H=16, W=16))
    blob_sigma: float = 1.0
    distractor_count: int = 2
    distractor_amplitude: float = 0.5
    noise_std: float = 0.05
    fraction_2d: float = 0.0

    def __post_init__(self) -> None:
        require(isinstance(self.seed, int) and 0 <= self.seed < _SEED_LIMIT,
                f"synth.seed must be an unsigned 64-bit integer, got {self.seed!r}")
        require(isinstance(self.K, int) and self.K >= 1, f"synth.K must be >= 1, got {self.K!r}")
        if self.grid.K != self.K:
            object.__setattr__(self, "grid", self.grid.with_joints(self.K))
        check_interior(self.grid, "synth.grid")
        require(self.blob_sigma > 0, f"synth.blob_sigma must be > 0, got {self.blob_sigma}")
        require(isinstance(self.distractor_count, int) and self.distractor_count >= 0,
                f"synth.distractor_count must be an integer >= 0, got {self.distractor_count!r}")
        require(0.0 <= self.distractor_amplitude <= 1.0,
                f"synth.distractor_amplitude must be in [0, 1], got {self.distractor_amplitude}")
        require(self.noise_std >= 0, f"synth.noise_std must be >= 0, got {self.noise_std}")
        require(0.0 <= self.fraction_2d <= 1.0, f"synth.fraction_2d must be in [0, 1], got {self.fraction_2d}")

    @property
    def spec(self) -> GridSpec:
        return self.grid

    def replace(self, **changes: Any) -> "SynthConfig":
        data = {name: getattr(self, name) for name in self.__dataclass_fields__}
        data.update(changes)
        return SynthConfig(**data)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "K": self.K,
            "grid": grid_to_dict(self.grid),
            "blob_sigma": self.blob_sigma,
            "distractor_count": self.distractor_count,
            "distractor_amplitude": self.distractor_amplitude,
            "noise_std": self.noise_std,
            "fraction_2d": self.fraction_2d,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], section: str = "synth") -> "SynthConfig":
        reject_unknown_keys(data, list(cls.__dataclass_fields__), section)
        data = dict(data)
        K = data.get("K", 4)
        require(isinstance(K, int) and K >= 1, f"{section}.K must be >= 1, got {K!r}")
        if "grid" in data:
            data["grid"] = grid_from_dict(data["grid"], K, f"{section}.grid")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class SynthSample:
    """Model input (evidence) with its continuous ground truth."""

    evidence: Heatmap
    gt: JointSet
    domain_tag: str

    def __post_init__(self) -> None:
        if self.domain_tag not in (TAG_2D, TAG_3D):
            raise ContractError(f"domain_tag must be {TAG_2D} or {TAG_3D}, got {self.domain_tag!r}")


def is_2d_index(i: int, fraction_2d: float) -> bool:
    """
    Deterministic interleave: sample ``i`` is 2D iff the running 2D quota steps up at ``i``.

    Over ``n`` samples exactly ``floor(n * fraction_2d)`` are 2D.
    """
    return math.floor((i + 1) * fraction_2d) - math.floor(i * fraction_2d) == 1


def render_blobs(
    spec: GridSpec,
    centres: np.ndarray,
    sigma: Union[float, np.ndarray],
    amplitude: float = 1.0,
) -> np.ndarray:
    """
    Sum of Gaussian blobs per joint.

    Args:
        spec: Output grid
        centres: ``(K, 3)`` or ``(K, M, 3)`` continuous (x, y, z) centres
        sigma: Blob standard deviation in cells, one value or one per (x, y, z) axis
        amplitude: Peak value of each blob

    Returns:
        Array of shape ``(K, D, H, W)``
    """
    centres = np.asarray(centres, dtype=np.float64)
    if centres.ndim == 2:
        centres = centres[:, None, :]
    sx, sy, sz = np.broadcast_to(np.asarray(sigma, dtype=np.float64), (3,))
    x, y, z = coordinate_grids(spec)
    out = np.zeros(spec.shape)
    for m in range(centres.shape[1]):
        c = centres[:, m, :, None, None, None]
        d2 = ((x[None] - c[:, 0]) / sx) ** 2 + ((y[None] - c[:, 1]) / sy) ** 2 + ((z[None] - c[:, 2]) / sz) ** 2
        out += amplitude * np.exp(-d2 / 2.0)
    return out


def sample_interior(rng: np.random.Generator, spec: GridSpec, K: int) -> np.ndarray:
    """Uniform continuous coordinates in ``[1, L - 2]`` per axis; z = 0 on 2D grids."""
    coords = np.zeros((K, 3))
    for a, length in enumerate(spec.axis_lengths()):
        if length > 1:
            coords[:, a] = rng.uniform(1.0, length - 2.0, size=K)
    return coords


def render_evidence(
    rng: np.random.Generator,
    config: SynthConfig,
    spec: GridSpec,
    coords: np.ndarray,
    sigma: Optional[np.ndarray] = None,
) -> Heatmap:
    """
    Clean blob at ``coords`` plus distractors and noise drawn from ``rng``.

    ``sigma`` overrides ``config.blob_sigma`` with a per-axis width in cells.
    """
    if sigma is None:
        sigma = np.full(3, config.blob_sigma)
    evidence = render_blobs(spec, coords, sigma)
    if config.distractor_count:
        upper = np.array(spec.axis_lengths(), dtype=np.float64) - 1.0
        positions = rng.uniform(0.0, 1.0, size=(spec.K, config.distractor_count, 3)) * upper
        evidence += render_blobs(spec, positions, sigma, config.distractor_amplitude)
    if config.noise_std > 0:
        evidence += rng.normal(0.0, config.noise_std, size=spec.shape)
    return Heatmap(spec, np.nan_to_num(evidence))


def make_sample(coords: np.ndarray, evidence: Heatmap, planar: bool) -> SynthSample:
    if planar:
        gt = JointSet.planar(np.where([False, False, True], np.nan, coords))
        return SynthSample(evidence, gt, TAG_2D)
    return SynthSample(evidence, JointSet.full_mask(coords), TAG_3D)


def generate(config: SynthConfig, n: int) -> List[SynthSample]:
    """
    Draw ``n`` samples.

    Args:
        config: Stream parameters
        n: Number of samples

    Returns:
        Samples, a pure function of ``(config, n)``
    """
    if n < 0:
        raise ContractError(f"n must be >= 0, got {n}")
    rng = make_rng(config.seed)
    spec = config.spec
    samples = []
    for i in range(n):
        coords = sample_interior(rng, spec, config.K)
        evidence = render_evidence(rng, config, spec, coords)
        samples.append(make_sample(coords, evidence, is_2d_index(i, config.fraction_2d)))
    return samples


def evidence_logits(
    evidence: Heatmap,
    sharpness: float = EVIDENCE_SHARPNESS,
    floor: float = EVIDENCE_FLOOR,
) -> Heatmap:
    """
    Log-domain reading of evidence: ``sharpness * log(max(e, floor))``.

    A peak-1 Gaussian of width sigma becomes an exact quadratic whose softmax
    is a Gaussian of width ``sigma / sqrt(sharpness)`` at the same centre.
    """
    if sharpness <= 0 or floor <= 0:
        raise ContractError("sharpness and floor must be > 0")
    return Heatmap(evidence.spec, sharpness * np.log(np.maximum(evidence.scores, floor)))
