"""Desk-scale models, optimizers, training loop and evaluation."""

from .filters import correlate, correlate_backward
from .model import ModelConfig, ToyModel, PassthroughModel, create_model
from .regression import RegressionHead
from .optim import OPTIMIZERS, OptimizerConfig, SGD, Adam, create_optimizer
from .checkpoint import (
    CheckpointFormatError,
    write_checkpoint,
    read_checkpoint,
    save_checkpoint,
    load_checkpoint,
)
from .trainer import (
    SCHEDULES,
    HEADS,
    TRACE_COLUMNS,
    TrainingDivergedError,
    TrainConfig,
    TrainResult,
    BatchSampler,
    build_model,
    train,
    trace_to_csv,
    write_trace,
    predict,
    evaluate,
)

__all__ = [
    'correlate',
    'correlate_backward',
    'ModelConfig',
    'ToyModel',
    'PassthroughModel',
    'create_model',
    'RegressionHead',
    'OPTIMIZERS',
    'OptimizerConfig',
    'SGD',
    'Adam',
    'create_optimizer',
    'CheckpointFormatError',
    'write_checkpoint',
    'read_checkpoint',
    'save_checkpoint',
    'load_checkpoint',
    'SCHEDULES',
    'HEADS',
    'TRACE_COLUMNS',
    'TrainingDivergedError',
    'TrainConfig',
    'TrainResult',
    'BatchSampler',
    'build_model',
    'train',
    'trace_to_csv',
    'write_trace',
    'predict',
    'evaluate',
]
