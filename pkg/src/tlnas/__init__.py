"""Trainless architecture scoring and the experiments built on it.

The core idea: score an untrained network by the coefficient of
variation of its accuracy over random initialisations (cv_score), and
pick the candidate with the smallest positive score.  Everything else
here exists to run that selection loop and the MNIST training study
around it.
"""

from .errors import (
    DataError,
    DimensionError,
    FixtureError,
    FormatError,
    InvalidLayerError,
    NoValidCandidateError,
    NumericError,
    ParseError,
    ProtocolError,
    TlnasError,
)
from .scoring import (
    JacobianScore,
    UntrainedStats,
    cv_score,
    mellor_score,
    untrained_accuracy,
    untrained_stats,
)
from .space import (
    CellSpec,
    MLPSpec,
    SkeletonConfig,
    cell_from_index,
    cell_index,
    count_parameters,
    desk_skeleton,
    enumerate_cell_space,
    enumerate_mlp_space,
    format_arch_string,
    instantiate_network,
    parse_arch_string,
    sample_architectures,
)

__version__ = "0.1.0"

__all__ = [
    "CellSpec",
    "DataError",
    "DimensionError",
    "FixtureError",
    "FormatError",
    "InvalidLayerError",
    "JacobianScore",
    "MLPSpec",
    "NoValidCandidateError",
    "NumericError",
    "ParseError",
    "ProtocolError",
    "SkeletonConfig",
    "TlnasError",
    "UntrainedStats",
    "cell_from_index",
    "cell_index",
    "count_parameters",
    "cv_score",
    "desk_skeleton",
    "enumerate_cell_space",
    "enumerate_mlp_space",
    "format_arch_string",
    "instantiate_network",
    "mellor_score",
    "parse_arch_string",
    "sample_architectures",
    "untrained_accuracy",
    "untrained_stats",
]
