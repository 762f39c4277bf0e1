"""API request and response models."""

from typing import Any, Dict, List, Literal, Optional, Union
from datetime import datetime

from pydantic import BaseModel, Field

from ..core.types import ObservedSample
from ..bench.sweep import SweepConfig


class SimulationRequest(BaseModel):
    """Request model for generating a simulated dataset."""
    n: int = Field(..., ge=1, le=100_000)
    p: int = Field(default=100, ge=5)
    rho: float = Field(default=0.3, ge=0.0, lt=1.0)
    contamination_ratio: float = Field(default=0.0, ge=0.0, lt=1.0)
    noise_scale: float = Field(default=5.0, gt=0.0)
    censor_rate: float = Field(default=0.1, ge=0.0)
    seed: int = Field(default=42, ge=0, lt=2**64)


class SimulationResponse(BaseModel):
    """Generated rows in the CSV column order, plus ground truth."""
    columns: List[str]
    rows: List[List[float]]
    contaminated_rows: List[int]
    n: int
    p: int


class EstimationRequest(BaseModel):
    """Request model for running the proposed pipeline on posted rows."""
    samples: List[ObservedSample] = Field(..., min_length=8)
    truth: Optional[List[float]] = None
    seed: int = Field(default=42, ge=0, lt=2**64)
    k: Union[Literal["auto"], int] = "auto"
    epochs: Optional[int] = Field(default=None, ge=1)
    latent_dim: Optional[int] = Field(default=None, ge=1)
    bootstrap_draws: Optional[int] = Field(default=None, ge=0)


class ClusterEffectResponse(BaseModel):
    id: int
    tau_hat: float
    se: float
    n: int
    n_treated: int
    n_control: int
    outlier: bool


class OverallEffectResponse(BaseModel):
    tau_hat: float
    se: float


class EstimationResponse(BaseModel):
    """Per-cluster and overall effects with the per-sample assignment."""
    clusters: List[ClusterEffectResponse]
    overall: OverallEffectResponse
    tau_per_sample: List[float]
    labels: List[int]
    metrics: Optional[Dict[str, float]] = None


class BenchRequest(BaseModel):
    """Request model for a background benchmark sweep."""
    config: SweepConfig = Field(default_factory=SweepConfig)


class BenchResponse(BaseModel):
    """Response model for a submitted sweep."""
    task_id: str
    status: str
    created_at: datetime


class TaskStatusResponse(BaseModel):
    """Response for task status queries."""
    task_id: str
    status: str
    progress: Optional[float] = None
    result: Optional[Dict[str, Any]] = None
    error: Optional[str] = None
    created_at: datetime
    updated_at: datetime


class ErrorResponse(BaseModel):
    """Standard error response."""
    error: str
    detail: Optional[str] = None
    status_code: int
    timestamp: datetime = Field(default_factory=datetime.now)
