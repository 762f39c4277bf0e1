"""Rendering benchmark reports as tables and writing the output bundle."""

from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Union
import json
import logging

import pandas as pd

from .sweep import BenchCell, BenchReport, SweepConfig, method_rank
from ..core.exceptions import DomainError, StorageError

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ["Sample Size", "Method", "Bias", "MSE", "MAE"]


def _fmt(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def _ratio_title(ratio: Optional[float]) -> str:
    return "External dataset" if ratio is None else f"Contamination ratio {ratio:g}"


def _group(report: BenchReport, ratio: Optional[float]) -> List[BenchCell]:
    cells = [c for c in report.cells if c.contamination_ratio == ratio]
    return sorted(cells, key=lambda c: (c.n, method_rank(c.method)))


def report_frame(report: BenchReport) -> pd.DataFrame:
    """One row per cell; bias is reported as |bias| with the signed value alongside."""
    rows = [
        {
            "contamination_ratio": c.contamination_ratio,
            "sample_size": c.n,
            "method": c.method,
            "bias": c.abs_bias,
            "mse": c.mse,
            "mae": c.mae,
            "signed_bias": c.bias,
            "bias_se": c.bias_se,
            "mse_se": c.mse_se,
            "mae_se": c.mae_se,
            "replications": c.replications,
            "failures": c.failures,
            "valid": c.valid,
        }
        for ratio in report.ratios
        for c in _group(report, ratio)
    ]
    return pd.DataFrame(rows)


def _markdown_table(cells: List[BenchCell], with_size: bool) -> List[str]:
    columns = TABLE_COLUMNS if with_size else TABLE_COLUMNS[1:]
    lines = [
        "| " + " | ".join(columns) + " |",
        "|" + "|".join("---" for _ in columns) + "|",
    ]
    previous_n = None
    for c in cells:
        method = c.method if c.valid else f"{c.method} (invalid)"
        values = [method, _fmt(c.abs_bias), _fmt(c.mse), _fmt(c.mae)]
        if with_size:
            # sample size is printed once per group
            values.insert(0, str(c.n) if c.n != previous_n else "")
            previous_n = c.n
        lines.append("| " + " | ".join(values) + " |")
    return lines


def render_tables(report: BenchReport, format: str = "markdown") -> str:
    """One table per contamination ratio, rows grouped by n, proposed method first.

    ``csv`` renders a single machine-readable table with a ratio column.
    """
    if not report.cells:
        raise DomainError("Cannot render an empty report", parameter="report")
    if format == "csv":
        return report_frame(report).to_csv(index=False, float_format="%.10g", lineterminator="\n")
    if format != "markdown":
        raise DomainError(f"Unknown table format {format!r}", parameter="format", value=format)

    blocks = []
    for ratio in report.ratios:
        lines = [f"### {_ratio_title(ratio)}", ""]
        lines += _markdown_table(_group(report, ratio), with_size=ratio is not None)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def _package_versions() -> Dict[str, str]:
    import joblib
    import networkx
    import numpy
    import scipy
    import sklearn
    import torch

    from .. import __version__

    return {
        "robust_hte": __version__,
        "numpy": numpy.__version__,
        "pandas": pd.__version__,
        "scipy": scipy.__version__,
        "scikit-learn": sklearn.__version__,
        "torch": torch.__version__,
        "networkx": networkx.__version__,
        "joblib": joblib.__version__,
    }


def write_outputs(
    report: BenchReport,
    out_dir: Union[str, Path],
    config: Optional[SweepConfig] = None
) -> Dict[str, Path]:
    """Write report.json, tables.md, tables.csv and manifest.json into ``out_dir``.

    Only the manifest carries a timestamp, so the other three files are
    byte-identical across runs with equal configuration and seed.
    """
    out_dir = Path(out_dir)
    paths = {
        "report": out_dir / "report.json",
        "markdown": out_dir / "tables.md",
        "csv": out_dir / "tables.csv",
        "manifest": out_dir / "manifest.json",
    }
    manifest = {
        "config_hash": report.config_hash,
        "seed": report.seed,
        "versions": _package_versions(),
        "created_at": datetime.now(timezone.utc).isoformat(),
        "invalid_cells": len(report.invalid_cells),
    }
    if config is not None:
        manifest["config"] = config.model_dump(mode="json")

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        paths["report"].write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        paths["markdown"].write_text(render_tables(report, "markdown"), encoding="utf-8")
        paths["csv"].write_text(render_tables(report, "csv"), encoding="utf-8")
        paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise StorageError(f"Could not write benchmark outputs to {out_dir}: {e}", file_path=str(out_dir)) from e

    logger.info(f"Wrote benchmark outputs to {out_dir}")
    return paths
