"""Estimation API endpoints."""

from fastapi import APIRouter

from ..models import EstimationRequest, EstimationResponse
from ...bench.metrics import metrics
from ...core.types import Dataset
from ...core.rng import root_state
from ...pipeline import PipelineConfig, run_pipeline

router = APIRouter()


def _pipeline_config(request: EstimationRequest) -> PipelineConfig:
    config = PipelineConfig.from_settings(k=request.k)
    train_updates = {
        key: value
        for key, value in (("epochs", request.epochs), ("latent_dim", request.latent_dim))
        if value is not None
    }
    updates = {}
    if train_updates:
        updates["train"] = config.train.model_copy(update=train_updates)
    if request.bootstrap_draws is not None:
        updates["estimation"] = config.estimation.model_copy(update={"bootstrap_draws": request.bootstrap_draws})
    return config.model_copy(update=updates)


@router.post("/", response_model=EstimationResponse)
def estimate(request: EstimationRequest):
    """Run the proposed pipeline on the posted samples."""
    ds = Dataset.from_samples(request.samples, truth=request.truth)
    result = run_pipeline(ds, _pipeline_config(request), root_state(request.seed))
    body = result.estimation.to_dict()
    scores = None
    if ds.has_truth:
        m = metrics(result.tau_per_sample, ds.truth)
        scores = {"bias": m.bias, "mse": m.mse, "mae": m.mae}
    return EstimationResponse(
        clusters=body["clusters"],
        overall=body["overall"],
        tau_per_sample=result.tau_per_sample.tolist(),
        labels=result.estimation.clustering.labels.tolist(),
        metrics=scores
    )
