"""
Training loop, batch assembly and evaluation.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..core import ContractError, DomainError, PosecastError
from ..decode import DECODERS, decode
from ..losses import LossSpec, LossValue, compose_loss, joint_loss
from ..metrics import MetricOptions, MetricReport, compute_report, make_items
from ..synth import TAG_2D, TAG_3D, SynthDataset, SynthSample
from ..utils.config import ConfigError, reject_unknown_keys, require
from ..utils.logger import get_logger
from ..utils.workers import ordered_map
from .model import ModelConfig, ToyModel, create_model
from .optim import OptimizerConfig, create_optimizer
from .regression import RegressionHead

logger = get_logger(__name__)

SCHEDULES = ("from_scratch", "pretrain_heatmap_then_integral")
HEADS = ("heatmap", "regression")
TRACE_COLUMNS = ["step", "phase", "total", "heatmap_term", "joint_term"]

PHASE_PRETRAIN = "pretrain"
PHASE_MAIN = "main"


class TrainingDivergedError(PosecastError):
    """Raised when the loss becomes non-finite."""

    def __init__(self, step: int, detail: str = ""):
        message = f"Training diverged at step {step}"
        super().__init__(f"{message}: {detail}" if detail else message)
        self.step = step


@dataclass(frozen=True)
class TrainConfig:
    """Everything train() needs besides the data."""

    loss: LossSpec = field(default_factory=lambda: LossSpec.variant("H1"))
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    batch_size: int = 8
    steps: int = 200
    seed: int = 0
    schedule: str = "from_scratch"
    pretrain_steps: int = 0
    mixed_2d3d: bool = False
    head: str = "heatmap"

    def __post_init__(self) -> None:
        require(isinstance(self.batch_size, int) and self.batch_size >= 1,
                f"train.batch_size must be >= 1, got {self.batch_size!r}")
        require(isinstance(self.steps, int) and self.steps >= 0, f"train.steps must be >= 0, got {self.steps!r}")
        require(isinstance(self.seed, int) and self.seed >= 0, f"train.seed must be >= 0, got {self.seed!r}")
        require(self.schedule in SCHEDULES, f"train.schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        require(self.head in HEADS, f"train.head must be one of {HEADS}, got {self.head!r}")
        if self.schedule == "pretrain_heatmap_then_integral":
            require(isinstance(self.pretrain_steps, int) and 1 <= self.pretrain_steps <= self.steps,
                    f"train.pretrain_steps must be in [1, steps], got {self.pretrain_steps!r}")
            require(self.loss.uses_joints, "train.schedule pretrain_heatmap_then_integral needs a joint loss")
        if self.mixed_2d3d:
            require(self.batch_size >= 2, "train.mixed_2d3d needs batch_size >= 2")
            require(self.loss.decomposition == "two_step",
                    "train.mixed_2d3d needs loss.decomposition two_step")
            require(self.loss.heatmap_loss != "H3_binary_ce",
                    "train.mixed_2d3d does not support the full-grid H3 loss")

    def phase(self, step: int) -> str:
        if self.schedule == "pretrain_heatmap_then_integral" and step < self.pretrain_steps:
            return PHASE_PRETRAIN
        return PHASE_MAIN

    def loss_for(self, phase: str) -> LossSpec:
        return self.loss.heatmap_only() if phase == PHASE_PRETRAIN else self.loss

    def to_dict(self) -> Dict[str, Any]:
        return {
            "loss": self.loss.to_dict(),
            "optimizer": self.optimizer.to_dict(),
            "model": self.model.to_dict(),
            "batch_size": self.batch_size,
            "steps": self.steps,
            "seed": self.seed,
            "schedule": self.schedule,
            "pretrain_steps": self.pretrain_steps,
            "mixed_2d3d": self.mixed_2d3d,
            "head": self.head,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], section: str = "train") -> "TrainConfig":
        reject_unknown_keys(data, list(cls.__dataclass_fields__), section)
        data = dict(data)
        if "loss" in data:
            loss = data["loss"]
            # a bare string names a variant
            if isinstance(loss, str):
                data["loss"] = LossSpec.variant(loss)
            else:
                data["loss"] = LossSpec.from_dict(loss, f"{section}.loss")
        if "optimizer" in data:
            data["optimizer"] = OptimizerConfig.from_dict(data["optimizer"], f"{section}.optimizer")
        if "model" in data:
            data["model"] = ModelConfig.from_dict(data["model"], f"{section}.model")
        return cls(**data)


class BatchSampler:
    """
    Deterministic batches of sample indices.

    Plain mode walks successive seeded permutations of the dataset and sorts
    each batch. Mixed mode alternates 3D and 2D samples (3D first), drawing
    each kind from its own permutation stream.
    """

    def __init__(self, dataset: SynthDataset, batch_size: int, seed: int, mixed: bool = False):
        self.batch_size = batch_size
        self.mixed = mixed
        self.rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 1])))
        if mixed:
            pools = [
                np.array([i for i, s in enumerate(dataset) if s.domain_tag == tag], dtype=np.int64)
                for tag in (TAG_3D, TAG_2D)
            ]
            if any(pool.size == 0 for pool in pools):
                raise ContractError("Mixed 2D/3D training needs both 2D and 3D samples")
            self.streams = [self._stream(pool) for pool in pools]
        else:
            self.streams = [self._stream(np.arange(len(dataset), dtype=np.int64))]

    def _stream(self, pool: np.ndarray) -> Iterator[int]:
        while True:
            for index in self.rng.permutation(pool):
                yield int(index)

    def next_batch(self) -> List[int]:
        if not self.mixed:
            stream = self.streams[0]
            return sorted(next(stream) for _ in range(self.batch_size))
        return [next(self.streams[i % 2]) for i in range(self.batch_size)]


def _heatmap_step(model: ToyModel, spec: LossSpec, sample: SynthSample) -> Tuple[LossValue, Dict[str, np.ndarray]]:
    scores, cache = model.forward_with_cache(sample.evidence)
    value = compose_loss(spec, scores, sample.gt)
    return value, model.backward(cache, value.d_scores)


def _regression_step(head: RegressionHead, sample: SynthSample) -> Tuple[LossValue, Dict[str, np.ndarray]]:
    coords, cache = head.forward_with_cache(sample.evidence)
    term = joint_loss(coords, sample.gt, "L1")
    value = LossValue(term.value, 0.0, term.value, None, coords)
    return value, head.backward(cache, term.grad)


@dataclass
class TrainResult:
    model: Union[ToyModel, RegressionHead]
    trace: pd.DataFrame
    config: TrainConfig


def build_model(config: TrainConfig, dataset: SynthDataset) -> Union[ToyModel, RegressionHead]:
    if config.head == "regression":
        return RegressionHead(dataset.spec)
    return create_model(dataset.spec, config.model, config.seed)


def train(config: TrainConfig, dataset: SynthDataset, model=None) -> TrainResult:
    """
    Run the configured optimization.

    Args:
        config: Training configuration
        dataset: Training samples
        model: Optional starting model (a fresh one is built from the config otherwise)

    Returns:
        TrainResult with the trained model and the per-step loss trace

    Raises:
        TrainingDivergedError: If a batch loss is non-finite
    """
    model = model.copy() if model is not None else build_model(config, dataset)
    if model.spec != dataset.spec:
        raise ContractError(f"Model grid {model.spec} does not match dataset grid {dataset.spec}")
    if config.mixed_2d3d and dataset.count(TAG_3D) == 0:
        raise ContractError("Mixed 2D/3D training needs 3D samples")

    sampler = BatchSampler(dataset, config.batch_size, config.seed, config.mixed_2d3d)
    optimizer = create_optimizer(config.optimizer)
    regression = isinstance(model, RegressionHead)
    logger.info(
        f"Training {model.kind} model ({model.parameter_count()} parameters) for {config.steps} steps, "
        f"schedule {config.schedule}"
    )

    rows: List[Dict[str, Any]] = []
    phase = None
    for step in range(config.steps):
        if config.phase(step) != phase:
            phase = config.phase(step)
            logger.info(f"Step {step}: entering {phase} phase")
        loss_spec = config.loss_for(phase)
        batch = [dataset[i] for i in sampler.next_batch()]

        def run(sample: SynthSample):
            if regression:
                return _regression_step(model, sample)
            return _heatmap_step(model, loss_spec, sample)

        try:
            results = ordered_map(run, batch)
        except DomainError as exc:
            raise TrainingDivergedError(step, str(exc))

        n = len(results)
        total = sum(value.total for value, _ in results) / n
        heatmap_term = sum(value.heatmap_term for value, _ in results) / n
        joint_term = sum(value.joint_term for value, _ in results) / n
        if not np.isfinite(total):
            raise TrainingDivergedError(step, f"loss is {total}")

        grads = {name: np.zeros_like(p) for name, p in model.params.items()}
        for _, sample_grads in results:
            for name, g in sample_grads.items():
                grads[name] += g
        for name in grads:
            grads[name] /= n
            if not np.all(np.isfinite(grads[name])):
                raise TrainingDivergedError(step, f"non-finite gradient for {name}")

        optimizer.step(model.params, grads, step)
        rows.append({
            "step": step,
            "phase": phase,
            "total": total,
            "heatmap_term": heatmap_term,
            "joint_term": joint_term,
        })
        logger.debug(f"step {step} {phase}: total {total:.6g}")

    trace = pd.DataFrame(rows, columns=TRACE_COLUMNS)
    return TrainResult(model, trace, config)


def trace_to_csv(trace: pd.DataFrame) -> str:
    return trace.to_csv(index=False, float_format="%.9g", lineterminator="\n")


def write_trace(trace: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Write the loss trace CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(trace_to_csv(trace), encoding="utf-8")
    return path


def predict(model, sample: SynthSample, decoder: str):
    """Decoded joints of one sample."""
    if isinstance(model, RegressionHead):
        return model.predict(sample.evidence)
    return decode(model.forward(sample.evidence), decoder)


def evaluate(
    model,
    dataset: SynthDataset,
    decoder: str = "integral",
    options: Optional[MetricOptions] = None,
) -> MetricReport:
    """
    Decode every sample and score it against its continuous ground truth.

    Args:
        model: Trained model (heatmap models use ``decoder``; the regression
            head predicts coordinates directly)
        dataset: Evaluation samples
        decoder: ``argmax``, ``integral`` or ``two_step``
        options: Metric options (defaults if None)

    Returns:
        MetricReport
    """
    if decoder not in DECODERS:
        raise ConfigError(f"Unknown decoder {decoder!r}; expected one of {DECODERS}")
    options = options or MetricOptions()
    preds = ordered_map(lambda sample: predict(model, sample, decoder), dataset.samples)
    items = make_items(preds, [sample.gt for sample in dataset], dataset.spec, options)
    name = RegressionHead.kind if isinstance(model, RegressionHead) else decoder
    return compute_report(items, name, options)
