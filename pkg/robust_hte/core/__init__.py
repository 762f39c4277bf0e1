"""Core functionality for the robust HTE toolkit."""

from .config import Settings, settings
from .exceptions import (
    HteError,
    DataFormatError,
    DataParseError,
    DomainError,
    ShapeError,
    TrainingError,
    ClusteringError,
    ClusterSizeError,
    EstimationError,
    ConfigurationError,
    StorageError,
)
from .types import (
    Activation,
    MethodName,
    ObservedSample,
    Dataset,
    RngState,
    LatentCode,
    LatentCodes,
    Clustering,
    ClusterEffect,
)
from .rng import split_rng, spawn_seed, root_state
from .io import load_csv, save_csv, load_matrix_csv, save_matrix_csv, dataset_to_frame

__all__ = [
    "Settings",
    "settings",
    "HteError",
    "DataFormatError",
    "DataParseError",
    "DomainError",
    "ShapeError",
    "TrainingError",
    "ClusteringError",
    "ClusterSizeError",
    "EstimationError",
    "ConfigurationError",
    "StorageError",
    "Activation",
    "MethodName",
    "ObservedSample",
    "Dataset",
    "RngState",
    "LatentCode",
    "LatentCodes",
    "Clustering",
    "ClusterEffect",
    "split_rng",
    "spawn_seed",
    "root_state",
    "load_csv",
    "save_csv",
    "load_matrix_csv",
    "save_matrix_csv",
    "dataset_to_frame",
]
