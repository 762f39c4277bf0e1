"""Dataset and matrix CSV input/output.

Dataset files have the fixed header ``y,delta,d,x1,...,xp`` with an optional
final ``tau_true`` column. Reals are written with 17 significant digits so a
save/load round trip is exact for 64-bit floats.
"""

from pathlib import Path
from typing import List, Union
import logging

import numpy as np
import pandas as pd

from .types import Dataset
from .exceptions import DataFormatError, DataParseError, DomainError, StorageError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
FLOAT_FORMAT = "%.17g"
TRUTH_COLUMN = "tau_true"


def dataset_columns(p: int, with_truth: bool = False) -> List[str]:
    """Canonical column order for a dataset with ``p`` covariates."""
    columns = ["y", "delta", "d"] + [f"x{j}" for j in range(1, p + 1)]
    if with_truth:
        columns.append(TRUTH_COLUMN)
    return columns


def _validate_header(header: List[str], path: PathLike) -> bool:
    """Check the header and return whether a truth column is present."""
    with_truth = bool(header) and header[-1] == TRUTH_COLUMN
    covariates = header[3:-1] if with_truth else header[3:]
    expected = dataset_columns(len(covariates), with_truth)
    if len(covariates) < 1:
        raise DataFormatError(
            f"Header of {path} has no covariate columns",
            column=None,
            file_path=str(path)
        )
    for position, (got, want) in enumerate(zip(header, expected)):
        if got != want:
            raise DataFormatError(
                f"Unexpected column '{got}' at position {position + 1} in {path}, expected '{want}'",
                column=got,
                file_path=str(path)
            )
    return with_truth


def _parse_cells(raw: pd.Series) -> np.ndarray:
    """Parse string cells with correctly rounded conversion; bad cells become NaN."""
    parsed = np.full(len(raw), np.nan)
    for i, cell in enumerate(raw):
        try:
            parsed[i] = float(cell)
        except ValueError:
            pass
    return parsed


def load_csv(path: PathLike) -> Dataset:
    """Load a dataset file written in the canonical layout.

    Args:
        path: CSV file path

    Returns:
        Dataset with ``truth`` populated iff a ``tau_true`` column is present

    Raises:
        DataFormatError: header is malformed
        DataParseError: a cell is missing, non-numeric or not finite
        DomainError: delta or d contain values other than 0 and 1
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError as e:
        raise StorageError(f"Dataset file not found: {path}", file_path=str(path)) from e
    except pd.errors.ParserError as e:
        raise DataParseError(f"Could not parse {path}: {e}", file_path=str(path)) from e

    header = [c.strip() for c in frame.columns]
    with_truth = _validate_header(header, path)
    frame.columns = header

    values = np.empty(frame.shape, dtype=np.float64)
    for j, column in enumerate(header):
        raw = frame[column].str.strip()
        parsed = _parse_cells(raw)
        bad = ~np.isfinite(parsed)
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise DataParseError(
                f"Invalid value '{raw.iloc[row]}' in column '{column}' at data row {row} of {path}",
                row=row,
                column=column,
                file_path=str(path)
            )
        values[:, j] = parsed

    for j, column in ((1, "delta"), (2, "d")):
        bad = ~np.isin(values[:, j], (0.0, 1.0))
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise DomainError(
                f"Column '{column}' must be 0 or 1, found {values[row, j]!r} at data row {row}",
                parameter=column,
                value=float(values[row, j])
            )

    p = len(header) - 3 - int(with_truth)
    dataset = Dataset(
        y=values[:, 0],
        delta=values[:, 1].astype(np.int64),
        d=values[:, 2].astype(np.int64),
        x=values[:, 3:3 + p],
        truth=values[:, -1] if with_truth else None
    )
    logger.info(f"Loaded dataset from {path}: n={dataset.n}, p={dataset.p}, truth={with_truth}")
    return dataset


def dataset_to_frame(ds: Dataset) -> pd.DataFrame:
    """Render a dataset in canonical column order."""
    frame = pd.DataFrame(ds.x, columns=dataset_columns(ds.p)[3:])
    frame.insert(0, "d", ds.d)
    frame.insert(0, "delta", ds.delta)
    frame.insert(0, "y", ds.y)
    if ds.truth is not None:
        frame[TRUTH_COLUMN] = ds.truth
    return frame


def save_csv(ds: Dataset, path: PathLike) -> None:
    """Write a dataset as UTF-8, LF-terminated CSV in canonical column order."""
    path = Path(path)
    try:
        dataset_to_frame(ds).to_csv(
            path,
            index=False,
            float_format=FLOAT_FORMAT,
            lineterminator="\n",
            encoding="utf-8"
        )
    except OSError as e:
        raise StorageError(f"Could not write dataset to {path}: {e}", file_path=str(path)) from e
    logger.debug(f"Saved dataset n={ds.n}, p={ds.p} to {path}")


def save_matrix_csv(matrix: np.ndarray, path: PathLike, prefix: str = "z") -> None:
    """Write a real matrix with columns ``{prefix}1..{prefix}k``."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    columns = [f"{prefix}{j}" for j in range(1, matrix.shape[1] + 1)]
    try:
        pd.DataFrame(matrix, columns=columns).to_csv(
            path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
        )
    except OSError as e:
        raise StorageError(f"Could not write matrix to {path}: {e}", file_path=str(path)) from e


def load_matrix_csv(path: PathLike) -> np.ndarray:
    """Read a purely numeric CSV written by :func:`save_matrix_csv`."""
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except FileNotFoundError as e:
        raise StorageError(f"Matrix file not found: {path}", file_path=str(path)) from e
    values = frame.to_numpy(dtype=np.float64)
    if not np.isfinite(values).all():
        row = int(np.flatnonzero(~np.isfinite(values).all(axis=1))[0])
        raise DataParseError(f"Non-finite value at data row {row} of {path}", row=row, file_path=str(path))
    return values
