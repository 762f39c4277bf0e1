"""Custom exceptions for the robust HTE toolkit."""

from typing import Optional, Any, Dict, List, Sequence


class HteError(Exception):
    """Base exception for the robust HTE toolkit."""

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.details = details or {}

    def __str__(self) -> str:
        if self.error_code:
            return f"[{self.error_code}] {self.message}"
        return self.message


class DataFormatError(HteError):
    """Raised when a dataset file has a malformed header."""

    def __init__(
        self,
        message: str,
        column: Optional[str] = None,
        file_path: Optional[str] = None
    ):
        super().__init__(
            message,
            error_code="FORMAT_ERROR",
            details={"column": column, "file_path": file_path}
        )
        self.column = column
        self.file_path = file_path


class DataParseError(HteError):
    """Raised when a dataset cell cannot be parsed or is not finite."""

    def __init__(
        self,
        message: str,
        row: Optional[int] = None,
        column: Optional[str] = None,
        file_path: Optional[str] = None
    ):
        super().__init__(
            message,
            error_code="PARSE_ERROR",
            details={"row": row, "column": column, "file_path": file_path}
        )
        self.row = row
        self.column = column
        self.file_path = file_path


class DomainError(HteError):
    """Raised when an argument lies outside its admissible domain."""

    def __init__(self, message: str, parameter: Optional[str] = None, value: Any = None):
        super().__init__(
            message,
            error_code="DOMAIN_ERROR",
            details={"parameter": parameter, "value": value}
        )
        self.parameter = parameter
        self.value = value


class ShapeError(HteError):
    """Raised when array dimensions do not line up."""

    def __init__(
        self,
        message: str,
        expected: Optional[Sequence[int]] = None,
        actual: Optional[Sequence[int]] = None
    ):
        super().__init__(
            message,
            error_code="SHAPE_ERROR",
            details={"expected": expected, "actual": actual}
        )
        self.expected = expected
        self.actual = actual


class TrainingError(HteError):
    """Raised when CVAE training diverges."""

    def __init__(
        self,
        message: str,
        epoch: Optional[int] = None,
        loss_trace: Optional[List[float]] = None
    ):
        super().__init__(
            message,
            error_code="TRAINING_ERROR",
            details={"epoch": epoch}
        )
        self.epoch = epoch
        self.loss_trace = loss_trace or []


class ClusteringError(HteError):
    """Raised when a clustering invariant is broken."""

    def __init__(self, message: str, iteration: Optional[int] = None):
        super().__init__(
            message,
            error_code="CLUSTERING_ERROR",
            details={"iteration": iteration}
        )
        self.iteration = iteration


class ClusterSizeError(HteError):
    """Raised when a cluster has too few units in one treatment arm."""

    def __init__(
        self,
        message: str,
        cluster_id: Optional[int] = None,
        n_treated: Optional[int] = None,
        n_control: Optional[int] = None
    ):
        super().__init__(
            message,
            error_code="CLUSTER_SIZE_ERROR",
            details={
                "cluster_id": cluster_id,
                "n_treated": n_treated,
                "n_control": n_control
            }
        )
        self.cluster_id = cluster_id
        self.n_treated = n_treated
        self.n_control = n_control


class EstimationError(HteError):
    """Raised when a nuisance model cannot be fitted."""

    def __init__(self, message: str, model: Optional[str] = None):
        super().__init__(
            message,
            error_code="ESTIMATION_ERROR",
            details={"model": model}
        )
        self.model = model


class ConfigurationError(HteError):
    """Raised when configuration is invalid."""

    def __init__(self, message: str, config_key: Optional[str] = None):
        super().__init__(
            message,
            error_code="CONFIG_ERROR",
            details={"config_key": config_key}
        )
        self.config_key = config_key


class StorageError(HteError):
    """Raised when a file cannot be read or written."""

    def __init__(self, message: str, file_path: Optional[str] = None):
        super().__init__(
            message,
            error_code="IO_ERROR",
            details={"file_path": file_path}
        )
        self.file_path = file_path
