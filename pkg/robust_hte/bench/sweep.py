"""Contamination x sample-size replication sweeps scored against the simulation truth."""

from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import hashlib
import logging

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .metrics import Metrics, metrics, summarize
from .method_factory import MethodFactory
from ..core.config import settings
from ..core.types import Dataset, MethodName
from ..core.rng import root_state, split_rng
from ..core.exceptions import ConfigurationError, DomainError, HteError
from ..pipeline import PipelineConfig
from ..simulation import DgpCoefficients, SimConfig, gen_dataset

logger = logging.getLogger(__name__)

METHOD_ORDER = [m.value for m in MethodName]


def method_rank(name: str) -> Tuple[int, str]:
    """Proposed first, then the remaining built-ins, then anything else by name."""
    return (METHOD_ORDER.index(name) if name in METHOD_ORDER else len(METHOD_ORDER), name)


class SweepConfig(BaseModel):
    """Grid, replication count and method list of a benchmark sweep."""

    model_config = ConfigDict(frozen=True)

    n_grid: List[int] = Field(default_factory=lambda: [20, 40, 60, 80, 100])
    contamination_grid: List[float] = Field(default_factory=lambda: [0.0, 0.1, 0.2])
    replications: int = Field(200, ge=1)
    methods: List[str] = Field(default_factory=lambda: ["proposed", "plain_aipw", "ipw", "or"])
    seed: int = Field(default_factory=lambda: settings.default_seed, ge=0, lt=2**64)
    p: int = Field(100, ge=5)
    rho: float = Field(0.3, ge=0.0, lt=1.0)
    noise_scale: float = Field(5.0, gt=0.0)
    censor_rate: float = Field(0.1, ge=0.0)
    dgp: DgpCoefficients = Field(default_factory=DgpCoefficients)
    pipeline: PipelineConfig = Field(default_factory=PipelineConfig.from_settings)
    max_failure_rate: float = Field(0.1, ge=0.0, le=1.0)
    n_jobs: int = Field(default_factory=lambda: settings.n_jobs)

    @field_validator("n_grid")
    @classmethod
    def validate_n_grid(cls, v):
        if not v or any(n < 1 for n in v):
            raise ValueError("n_grid must be a non-empty list of positive sizes")
        return sorted(set(v))

    @field_validator("contamination_grid")
    @classmethod
    def validate_contamination_grid(cls, v):
        if not v or any(not 0.0 <= r < 1.0 for r in v):
            raise ValueError("contamination_grid must be a non-empty list of ratios in [0, 1)")
        return sorted(set(v))

    @field_validator("methods")
    @classmethod
    def validate_methods(cls, v):
        if not v:
            raise ValueError("at least one method is required")
        return sorted(set(v), key=method_rank)

    def config_hash(self) -> str:
        """Stable hash of everything that influences the results."""
        payload = self.model_dump_json(exclude={"n_jobs"})
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


class BenchCell(BaseModel):
    """Scores of one method in one (ratio, n) cell; ratio is None for external data."""

    contamination_ratio: Optional[float] = None
    n: int
    method: str
    bias: Optional[float] = None
    abs_bias: Optional[float] = None
    mse: Optional[float] = None
    mae: Optional[float] = None
    bias_se: float = 0.0
    mse_se: float = 0.0
    mae_se: float = 0.0
    replications: int = 0
    failures: int = 0
    valid: bool = True

    def sort_key(self) -> tuple:
        ratio = -1.0 if self.contamination_ratio is None else self.contamination_ratio
        return (ratio, self.n, method_rank(self.method))


class BenchReport(BaseModel):
    """All cells of a sweep plus reproducibility metadata (no wall-clock data)."""

    cells: List[BenchCell] = Field(default_factory=list)
    seed: int
    config_hash: str
    methods: List[str] = Field(default_factory=list)

    @property
    def invalid_cells(self) -> List[BenchCell]:
        return [c for c in self.cells if not c.valid]

    @property
    def ratios(self) -> List[Optional[float]]:
        seen: List[Optional[float]] = []
        for cell in self.cells:
            if cell.contamination_ratio not in seen:
                seen.append(cell.contamination_ratio)
        return seen

    def cell(self, ratio: Optional[float], n: int, method: str) -> BenchCell:
        for c in self.cells:
            if c.contamination_ratio == ratio and c.n == n and c.method == method:
                return c
        raise KeyError((ratio, n, method))

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def _score_method(name: str, ds: Dataset, config: PipelineConfig, rng) -> Optional[Metrics]:
    method = MethodFactory.create_method(name, config)
    try:
        tau_hat = method.estimate(ds, rng)
        return metrics(tau_hat, ds.truth)
    except (HteError, ValueError, np.linalg.LinAlgError) as e:
        logger.debug(f"{name} failed on n={ds.n}: {e}")
        return None


def run_replication(cfg: SweepConfig, ratio: float, n: int, replication: int) -> Dict[str, Optional[Metrics]]:
    """One dataset, every method scored on it. Failures map to None."""
    rep_rng = split_rng(root_state(cfg.seed), f"cell/{ratio!r}/{n}/rep/{replication}")
    sim = SimConfig(
        n=n,
        p=cfg.p,
        rho=cfg.rho,
        contamination_ratio=ratio,
        noise_scale=cfg.noise_scale,
        censor_rate=cfg.censor_rate,
        seed=cfg.seed,
        coefficients=cfg.dgp
    )
    ds = gen_dataset(sim, split_rng(rep_rng, "data"))
    return {
        name: _score_method(name, ds, cfg.pipeline, split_rng(rep_rng, f"method/{name}"))
        for name in cfg.methods
    }


def _cell(
    ratio: Optional[float],
    n: int,
    method: str,
    results: Sequence[Optional[Metrics]],
    max_failure_rate: float
) -> BenchCell:
    ok = [m for m in results if m is not None]
    failures = len(results) - len(ok)
    valid = bool(ok) and failures <= max_failure_rate * len(results)
    if not ok:
        return BenchCell(contamination_ratio=ratio, n=n, method=method, failures=failures, valid=False)
    summary = summarize(ok)
    return BenchCell(
        contamination_ratio=ratio,
        n=n,
        method=method,
        bias=summary.bias,
        abs_bias=summary.abs_bias,
        mse=summary.mse,
        mae=summary.mae,
        bias_se=summary.bias_se,
        mse_se=summary.mse_se,
        mae_se=summary.mae_se,
        replications=summary.replications,
        failures=failures,
        valid=valid
    )


def run_sweep(
    cfg: SweepConfig,
    progress: Optional[Callable[[int, int, float, int], None]] = None
) -> BenchReport:
    """Run every (ratio, n) cell for R replications and all configured methods.

    Args:
        cfg: Sweep configuration
        progress: Called as progress(done_cells, total_cells, ratio, n) after each cell

    Returns:
        BenchReport with cells sorted by (ratio, n, method)
    """
    unknown = [m for m in cfg.methods if m not in MethodFactory.available_methods()]
    if unknown:
        raise ConfigurationError(f"Unknown methods: {unknown}", config_key="methods")

    grid = [(ratio, n) for ratio in cfg.contamination_grid for n in cfg.n_grid]
    cells: List[BenchCell] = []
    parallel = Parallel(n_jobs=cfg.n_jobs)
    for done, (ratio, n) in enumerate(grid, start=1):
        replications = parallel(
            delayed(run_replication)(cfg, ratio, n, r) for r in range(cfg.replications)
        )
        for method in cfg.methods:
            cells.append(_cell(ratio, n, method, [rep[method] for rep in replications], cfg.max_failure_rate))
        logger.info(
            f"Cell {done}/{len(grid)} (ratio={ratio}, n={n}) done: "
            + ", ".join(f"{c.method} mse={c.mse}" for c in cells[-len(cfg.methods):])
        )
        if progress is not None:
            progress(done, len(grid), ratio, n)

    cells.sort(key=BenchCell.sort_key)
    report = BenchReport(cells=cells, seed=cfg.seed, config_hash=cfg.config_hash(), methods=list(cfg.methods))
    if report.invalid_cells:
        logger.warning(f"{len(report.invalid_cells)} cell(s) exceeded the failure threshold")
    return report


def score_dataset(
    ds: Dataset,
    methods: Sequence[str],
    seed: int = 42,
    config: Optional[PipelineConfig] = None
) -> BenchReport:
    """Score each method once on an external dataset that carries ``tau_true``."""
    if not ds.has_truth:
        raise DomainError("score_dataset needs a dataset with a tau_true column", parameter="truth")
    config = config or PipelineConfig.from_settings()
    root = root_state(seed)
    ordered = sorted(set(methods), key=method_rank)
    cells = [
        _cell(None, ds.n, name, [_score_method(name, ds, config, split_rng(root, f"method/{name}"))], 0.0)
        for name in ordered
    ]
    config_hash = hashlib.sha256(
        (config.model_dump_json() + f"|{seed}|{ordered}").encode("utf-8")
    ).hexdigest()[:16]
    return BenchReport(cells=cells, seed=seed, config_hash=config_hash, methods=ordered)
