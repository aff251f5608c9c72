"""
Experiment configuration: one JSON document plus ``--set`` overrides.

Layout::

    {
      "n_samples": 256,
      "synth":   {...SynthConfig...},
      "train":   {...TrainConfig...},
      "metrics": {...MetricOptions...},
      "sweep":   {"sizes": [[64, 64], [32, 32]], "n_samples": 200, "clean": true},
      "output":  {"dir": "runs/default"}
    }

Every section is optional; missing keys take their defaults.
"""

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from ..metrics import MetricOptions
from ..synth import SynthConfig, parse_size
from ..train import TrainConfig
from ..utils.config import ConfigError, reject_unknown_keys, require


@dataclass(frozen=True)
class SweepConfig:
    sizes: Tuple[Tuple[int, ...], ...] = ((64, 64), (32, 32), (16, 16), (8, 8))
    n_samples: int = 200
    clean: bool = True

    def __post_init__(self) -> None:
        require(len(self.sizes) > 0, "sweep.sizes must not be empty")
        sizes = tuple(tuple(size) for size in self.sizes)
        for size in sizes:
            parse_size(size)
        object.__setattr__(self, "sizes", sizes)
        require(isinstance(self.n_samples, int) and self.n_samples >= 1,
                f"sweep.n_samples must be >= 1, got {self.n_samples!r}")

    def to_dict(self) -> Dict[str, Any]:
        return {"sizes": [list(size) for size in self.sizes], "n_samples": self.n_samples, "clean": self.clean}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], section: str = "sweep") -> "SweepConfig":
        reject_unknown_keys(data, ("sizes", "n_samples", "clean"), section)
        return cls(**data)


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "runs/default"

    def to_dict(self) -> Dict[str, Any]:
        return {"dir": self.dir}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], section: str = "output") -> "OutputConfig":
        reject_unknown_keys(data, ("dir",), section)
        require(isinstance(data.get("dir", ""), str), "output.dir must be a string")
        return cls(**data)


@dataclass(frozen=True)
class ExperimentConfig:
    """All settings of one experiment, validated up front."""

    n_samples: int = 256
    synth: SynthConfig = field(default_factory=SynthConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    metrics: MetricOptions = field(default_factory=MetricOptions)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self) -> None:
        require(isinstance(self.n_samples, int) and self.n_samples >= 1,
                f"n_samples must be >= 1, got {self.n_samples!r}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_samples": self.n_samples,
            "synth": self.synth.to_dict(),
            "train": self.train.to_dict(),
            "metrics": self.metrics.to_dict(),
            "sweep": self.sweep.to_dict(),
            "output": self.output.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        sections = {
            "synth": SynthConfig,
            "train": TrainConfig,
            "metrics": MetricOptions,
            "sweep": SweepConfig,
            "output": OutputConfig,
        }
        reject_unknown_keys(data, ["n_samples", *sections], "")
        kwargs: Dict[str, Any] = {}
        if "n_samples" in data:
            kwargs["n_samples"] = data["n_samples"]
        try:
            for name, section_cls in sections.items():
                if name in data:
                    kwargs[name] = section_cls.from_dict(data[name], name)
            return cls(**kwargs)
        except TypeError as exc:
            # wrong value types surface as TypeError from comparisons
            raise ConfigError(f"Invalid configuration value: {exc}")


def parse_value(raw: str) -> Any:
    """JSON value if ``raw`` parses as JSON, else the raw string."""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_override(data: Dict[str, Any], assignment: str) -> Dict[str, Any]:
    """
    Apply one ``dotted.key=value`` override to raw config data.

    Args:
        data: Parsed config JSON (not modified)
        assignment: Override such as ``train.optimizer.lr=0.01``

    Returns:
        New config data

    Raises:
        ConfigError: If the assignment is malformed or walks through a non-object
    """
    if "=" not in assignment:
        raise ConfigError(f"Override must look like key=value, got {assignment!r}")
    path, raw = assignment.split("=", 1)
    keys = path.strip().split(".")
    if not all(keys):
        raise ConfigError(f"Malformed override key {path!r}")

    result = copy.deepcopy(data)
    node = result
    for depth, key in enumerate(keys[:-1]):
        child = node.setdefault(key, {})
        if not isinstance(child, dict):
            raise ConfigError(f"Cannot override {path}: {'.'.join(keys[:depth + 1])} is not an object")
        node = child
    node[keys[-1]] = parse_value(raw)
    return result


def load_experiment(
    path: Optional[Union[str, Path]] = None,
    overrides: Sequence[str] = (),
) -> ExperimentConfig:
    """
    Read, override and validate an experiment configuration.

    Args:
        path: JSON config file (defaults only if None)
        overrides: ``key=value`` assignments applied in order

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigError: On unreadable JSON, unknown keys or invalid values
        FileNotFoundError: If ``path`` does not exist
    """
    data: Dict[str, Any] = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}")
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must contain a JSON object")
    for assignment in overrides:
        data = apply_override(data, assignment)
    return ExperimentConfig.from_dict(data)


def parse_sizes(text: str) -> List[Tuple[int, ...]]:
    """``"64,32"`` (square) or ``"64x48,32x24x8"`` (H x W [x D]) to size tuples."""
    sizes = []
    for item in text.split(","):
        item = item.strip()
        try:
            parts = tuple(int(part) for part in item.lower().split("x"))
        except ValueError:
            raise ConfigError(f"Bad sweep size {item!r}")
        sizes.append(parts * 2 if len(parts) == 1 else parts)
    for size in sizes:
        parse_size(size)
    return sizes
