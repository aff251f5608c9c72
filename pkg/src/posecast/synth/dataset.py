"""
On-disk datasets: a directory with ``manifest.json`` and one ``.ihpr``
evidence binary per sample under ``evidence/``.

Manifest layout::

    {
      "format": "posecast-dataset",
      "version": 1,
      "config": {...SynthConfig...} | null,
      "grid": {"K", "D", "H", "W"},
      "samples": [{"file": "evidence/00000.ihpr", "tag": "3D", "gt": {...JointSet...}}, ...]
    }
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Union

from ..core import (
    ContractError,
    GridSpec,
    HeatmapFormatError,
    jointset_from_dict,
    jointset_to_dict,
    load_heatmap,
    save_heatmap,
)
from ..utils.config import ConfigError
from ..utils.logger import get_logger
from .generator import TAG_2D, TAG_3D, SynthConfig, SynthSample

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.json"
MANIFEST_FORMAT = "posecast-dataset"
MANIFEST_VERSION = 1
EVIDENCE_DIR = "evidence"


@dataclass
class SynthDataset:
    """Samples sharing one grid, with the config that produced them (if known)."""

    samples: List[SynthSample]
    config: Optional[SynthConfig] = None

    def __post_init__(self) -> None:
        if not self.samples:
            raise ContractError("Dataset must contain at least one sample")
        spec = self.samples[0].evidence.spec
        for i, sample in enumerate(self.samples):
            if sample.evidence.spec != spec:
                raise ContractError(f"Sample {i} has grid {sample.evidence.spec}, expected {spec}")

    @property
    def spec(self) -> GridSpec:
        return self.samples[0].evidence.spec

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[SynthSample]:
        return iter(self.samples)

    def __getitem__(self, index: int) -> SynthSample:
        return self.samples[index]

    def count(self, tag: str) -> int:
        return sum(1 for sample in self.samples if sample.domain_tag == tag)

    def only(self, tag: str) -> "SynthDataset":
        """Subset with one domain tag."""
        return SynthDataset([s for s in self.samples if s.domain_tag == tag], self.config)


def save_dataset(dataset: SynthDataset, out_dir: Union[str, Path]) -> Path:
    """
    Write a dataset directory.

    Args:
        dataset: Samples to write
        out_dir: Target directory (created if needed)

    Returns:
        Path of the manifest
    """
    out_dir = Path(out_dir)
    (out_dir / EVIDENCE_DIR).mkdir(parents=True, exist_ok=True)

    entries = []
    for i, sample in enumerate(dataset.samples):
        rel = f"{EVIDENCE_DIR}/{i:05d}.ihpr"
        save_heatmap(sample.evidence, out_dir / rel)
        entries.append({"file": rel, "tag": sample.domain_tag, "gt": jointset_to_dict(sample.gt)})

    manifest = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "config": dataset.config.to_dict() if dataset.config else None,
        "grid": dataset.spec.to_dict(),
        "samples": entries,
    }
    manifest_path = out_dir / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    logger.info(
        f"Wrote {len(dataset)} samples ({dataset.count(TAG_2D)} 2D, {dataset.count(TAG_3D)} 3D) to {out_dir}"
    )
    return manifest_path


def load_dataset(path: Union[str, Path]) -> SynthDataset:
    """
    Read a dataset written by save_dataset.

    Args:
        path: Dataset directory or its manifest file

    Returns:
        SynthDataset

    Raises:
        FileNotFoundError: If the manifest or an evidence file is missing
        HeatmapFormatError: If the manifest or a binary is malformed
    """
    path = Path(path)
    manifest_path = path / MANIFEST_NAME if path.is_dir() else path
    root = manifest_path.parent

    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise HeatmapFormatError(f"Manifest {manifest_path} is not valid JSON: {exc.msg}", exc.pos)

    if not isinstance(manifest, dict) or manifest.get("format") != MANIFEST_FORMAT:
        raise HeatmapFormatError(f"{manifest_path} is not a posecast dataset manifest", 0)
    if manifest.get("version") != MANIFEST_VERSION:
        raise HeatmapFormatError(f"Unsupported manifest version {manifest.get('version')!r}", 0)

    try:
        config = SynthConfig.from_dict(manifest["config"]) if manifest.get("config") else None
        grid = GridSpec.from_dict(manifest["grid"])
        samples = []
        for entry in manifest["samples"]:
            evidence = load_heatmap(root / entry["file"])
            if evidence.spec != grid:
                raise HeatmapFormatError(f"{entry['file']} has grid {evidence.spec}, manifest says {grid}", 0)
            samples.append(SynthSample(evidence, jointset_from_dict(entry["gt"]), entry["tag"]))
        dataset = SynthDataset(samples, config)
    except (KeyError, TypeError, ContractError, ConfigError) as exc:
        raise HeatmapFormatError(f"Malformed manifest {manifest_path}: {exc}", 0)

    logger.debug(f"Loaded {len(dataset)} samples from {root}")
    return dataset
