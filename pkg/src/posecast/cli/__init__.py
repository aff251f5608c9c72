"""Command-line interface."""

from .experiment import (
    ExperimentConfig,
    SweepConfig,
    OutputConfig,
    apply_override,
    load_experiment,
    parse_sizes,
)
from .main import (
    EXIT_OK,
    EXIT_CONFIG,
    EXIT_RUNTIME,
    build_parser,
    cmd_gen,
    cmd_train,
    cmd_eval,
    cmd_gradcheck,
    cmd_sweep,
    cmd_env,
)

__all__ = [
    'ExperimentConfig',
    'SweepConfig',
    'OutputConfig',
    'apply_override',
    'load_experiment',
    'parse_sizes',
    'EXIT_OK',
    'EXIT_CONFIG',
    'EXIT_RUNTIME',
    'build_parser',
    'cmd_gen',
    'cmd_train',
    'cmd_eval',
    'cmd_gradcheck',
    'cmd_sweep',
    'cmd_env',
]
