"""Target construction and loss evaluation with gradients."""

from .targets import (
    clamp_joints,
    gaussian_target,
    vector_target,
    rounded_cells,
    round_half_down,
    cell_set_indicator,
    disc_labels,
)
from .heatmap import LossTerm, h1_loss, h2_loss, h3_loss, vector_loss, vector_ce_loss
from .joint import JOINT_LOSSES, joint_loss
from .compose import (
    H1,
    H2,
    H3,
    NONE,
    HEATMAP_LOSSES,
    DECOMPOSITIONS,
    LossSpec,
    LossValue,
    compose_loss,
)

__all__ = [
    'clamp_joints',
    'gaussian_target',
    'vector_target',
    'rounded_cells',
    'round_half_down',
    'cell_set_indicator',
    'disc_labels',
    'LossTerm',
    'h1_loss',
    'h2_loss',
    'h3_loss',
    'vector_loss',
    'vector_ce_loss',
    'JOINT_LOSSES',
    'joint_loss',
    'H1',
    'H2',
    'H3',
    'NONE',
    'HEATMAP_LOSSES',
    'DECOMPOSITIONS',
    'LossSpec',
    'LossValue',
    'compose_loss',
]
