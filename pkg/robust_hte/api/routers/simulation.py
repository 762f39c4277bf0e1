"""Simulation API endpoints."""

from fastapi import APIRouter

from ..models import SimulationRequest, SimulationResponse
from ...core.io import dataset_to_frame
from ...simulation import SimConfig, simulate

router = APIRouter()


@router.post("/", response_model=SimulationResponse)
def generate(request: SimulationRequest):
    """Generate a dataset from the simulation model."""
    sim = simulate(SimConfig(**request.model_dump()))
    frame = dataset_to_frame(sim.dataset)
    return SimulationResponse(
        columns=list(frame.columns),
        rows=frame.to_numpy(dtype=float).tolist(),
        contaminated_rows=sim.contaminated_rows.tolist(),
        n=sim.dataset.n,
        p=sim.dataset.p
    )
