"""Deterministic synthetic pose data and resolution sweeps."""

from .generator import (
    TAG_2D,
    TAG_3D,
    EVIDENCE_SHARPNESS,
    SynthConfig,
    SynthSample,
    make_rng,
    is_2d_index,
    render_blobs,
    generate,
    evidence_logits,
)
from .dataset import SynthDataset, save_dataset, load_dataset
from .sweep import SWEEP_DECODERS, SweepLevel, parse_size, resolution_sweep, sweep_decode_errors

__all__ = [
    'TAG_2D',
    'TAG_3D',
    'EVIDENCE_SHARPNESS',
    'SynthConfig',
    'SynthSample',
    'make_rng',
    'is_2d_index',
    'render_blobs',
    'generate',
    'evidence_logits',
    'SynthDataset',
    'save_dataset',
    'load_dataset',
    'SWEEP_DECODERS',
    'SweepLevel',
    'parse_size',
    'resolution_sweep',
    'sweep_decode_errors',
]
