"""Grid conventions, containers and exchange formats."""

from .errors import (
    PosecastError,
    ContractError,
    GridRangeError,
    DomainError,
    HeatmapFormatError,
)
from .grid import (
    AXES,
    ARRAY_AXIS,
    GridSpec,
    Heatmap,
    NormalizedHeatmap,
    JointSet,
    HeatVector,
    axis_position,
    cell_coordinate,
    cell_index,
    coordinate_grids,
)
from .io import (
    write_heatmap,
    read_heatmap,
    save_heatmap,
    load_heatmap,
    jointset_to_dict,
    jointset_from_dict,
    write_jointset,
    read_jointset,
)

__all__ = [
    'PosecastError',
    'ContractError',
    'GridRangeError',
    'DomainError',
    'HeatmapFormatError',
    'AXES',
    'ARRAY_AXIS',
    'GridSpec',
    'Heatmap',
    'NormalizedHeatmap',
    'JointSet',
    'HeatVector',
    'axis_position',
    'cell_coordinate',
    'cell_index',
    'coordinate_grids',
    'write_heatmap',
    'read_heatmap',
    'save_heatmap',
    'load_heatmap',
    'jointset_to_dict',
    'jointset_from_dict',
    'write_jointset',
    'read_jointset',
]
