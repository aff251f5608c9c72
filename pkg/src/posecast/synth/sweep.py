"""
Resolution sweep: one set of continuous poses rendered at several grid sizes,
and the decode error of argmax vs integral decoding at each size.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..core import ContractError, GridSpec
from ..decode import argmax_decode, integral_decode, normalize
from ..utils.config import ConfigError, require
from ..utils.logger import get_logger
from ..utils.workers import ordered_map
from .dataset import SynthDataset
from .generator import SynthConfig, check_interior, evidence_logits, make_rng, make_sample, render_evidence

logger = get_logger(__name__)

SWEEP_DECODERS = ("argmax", "integral")
SWEEP_COLUMNS = ["size", "decoder", "mean_error", "cells_per_axis"]


def parse_size(size: Sequence[int]) -> Tuple[int, int, int]:
    """``[H, W]`` or ``[H, W, D]`` to ``(D, H, W)``."""
    values = tuple(size)
    if len(values) not in (2, 3) or not all(isinstance(v, (int, np.integer)) for v in values):
        raise ConfigError(f"Sweep size must be [H, W] or [H, W, D] integers, got {list(values)}")
    H, W = values[0], values[1]
    D = values[2] if len(values) == 3 else 1
    return int(D), int(H), int(W)


def size_label(spec: GridSpec) -> str:
    label = f"{spec.H}x{spec.W}"
    return label if spec.is_2d else f"{label}x{spec.D}"


@dataclass
class SweepLevel:
    """One grid size of a sweep."""

    spec: GridSpec
    dataset: SynthDataset


def resolution_sweep(base_config: SynthConfig, sizes: Sequence[Sequence[int]], n: int) -> List[SweepLevel]:
    """
    Render the same poses at every grid size.

    Poses are drawn once per axis in a unit frame ``v`` uniform in
    ``[1 / L_min, (L_min - 2) / L_min]``, where ``L_min`` is the smallest
    length of that axis over ``sizes``; a grid of length ``L`` holds joint
    coordinate ``v * L``. Coordinates therefore scale exactly with the grid
    and keep a 1-cell margin on the smallest grid.

    Blobs keep a fixed width in the unit frame: ``blob_sigma`` cells on the
    smallest grid and ``blob_sigma * L / L_min`` cells on a grid of length
    ``L``, so every level renders the same scene at a different sampling rate.

    Args:
        base_config: Seed, joint count and rendering parameters (its grid is ignored)
        sizes: Grid sizes as ``[H, W]`` or ``[H, W, D]``; all 2D or all 3D
        n: Samples per size

    Returns:
        One SweepLevel per size, in the given order
    """
    require(len(sizes) > 0, "sweep.sizes must not be empty")
    require(n >= 1, f"sweep.n_samples must be >= 1, got {n}")
    specs = []
    for size in sizes:
        D, H, W = parse_size(size)
        try:
            spec = GridSpec(K=base_config.K, D=D, H=H, W=W)
        except ContractError as exc:
            raise ConfigError(f"sweep.sizes: {exc}")
        check_interior(spec, "sweep.sizes")
        specs.append(spec)
    if len({spec.is_2d for spec in specs}) != 1:
        raise ConfigError("sweep.sizes must be all 2D or all 3D")

    lengths = np.array([spec.axis_lengths() for spec in specs], dtype=np.float64)
    smallest = lengths.min(axis=0)
    low = np.where(smallest > 1, 1.0 / smallest, 0.0)
    high = np.where(smallest > 1, (smallest - 2.0) / smallest, 0.0)

    pose_rng = make_rng(base_config.seed)
    unit = pose_rng.uniform(0.0, 1.0, size=(n, base_config.K, 3)) * (high - low) + low

    levels = []
    for j, spec in enumerate(specs):
        # independent distractor/noise stream per size
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([base_config.seed, j + 1])))
        scale = np.array(spec.axis_lengths(), dtype=np.float64)
        sigma = base_config.blob_sigma * scale / smallest
        samples = []
        for i in range(n):
            coords = unit[i] * scale
            evidence = render_evidence(rng, base_config, spec, coords, sigma)
            samples.append(make_sample(coords, evidence, planar=False))
        config = base_config.replace(grid=spec)
        levels.append(SweepLevel(spec, SynthDataset(samples, config)))
        logger.debug(f"Rendered sweep level {size_label(spec)}")
    return levels


def _decode_errors(level: SweepLevel, reference: GridSpec) -> Dict[str, float]:
    factor = np.array(reference.axis_lengths(), dtype=np.float64) / np.array(level.spec.axis_lengths())

    def errors(sample) -> Tuple[float, float]:
        gt = sample.gt.coords
        argmax = argmax_decode(sample.evidence).coords
        integral = integral_decode(normalize(evidence_logits(sample.evidence))).coords
        return (
            float(np.mean(np.linalg.norm((argmax - gt) * factor, axis=1))),
            float(np.mean(np.linalg.norm((integral - gt) * factor, axis=1))),
        )

    per_sample = np.array(ordered_map(errors, level.dataset.samples))
    return dict(zip(SWEEP_DECODERS, per_sample.mean(axis=0).tolist()))


def sweep_decode_errors(levels: Sequence[SweepLevel], reference: Optional[GridSpec] = None) -> pd.DataFrame:
    """
    Mean Euclidean decode error per size and decoder.

    Argmax decodes the evidence directly; integral decodes the softmax of
    ``evidence_logits``. Errors are in cells of the reference grid (default:
    the level with the most cells).

    Returns:
        DataFrame with columns size, decoder, mean_error, cells_per_axis
    """
    if not levels:
        raise ContractError("Sweep has no levels")
    if reference is None:
        reference = max((level.spec for level in levels), key=lambda spec: spec.cells)

    rows = []
    for level in levels:
        errors = _decode_errors(level, reference)
        for decoder in SWEEP_DECODERS:
            rows.append({
                "size": size_label(level.spec),
                "decoder": decoder,
                "mean_error": errors[decoder],
                "cells_per_axis": min(level.spec.H, level.spec.W),
            })
        logger.info(
            f"Sweep {size_label(level.spec)}: argmax {errors['argmax']:.4f}, integral {errors['integral']:.4f}"
        )
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)
