"""Benchmark API endpoints."""

from datetime import datetime
from typing import Dict
import uuid

from fastapi import APIRouter, BackgroundTasks, HTTPException

from ..models import BenchRequest, BenchResponse, TaskStatusResponse
from ..tasks import run_bench_task
from ...bench import MethodFactory

router = APIRouter()

# In-memory task storage
tasks: Dict[str, Dict] = {}


@router.post("/", response_model=BenchResponse)
def start_bench(request: BenchRequest, background_tasks: BackgroundTasks):
    """Start a benchmark sweep in the background."""
    unknown = [m for m in request.config.methods if m not in MethodFactory.available_methods()]
    if unknown:
        raise HTTPException(status_code=422, detail=f"Unknown methods: {unknown}")

    task_id = str(uuid.uuid4())
    tasks[task_id] = {
        "status": "pending",
        "created_at": datetime.now(),
        "request": request
    }
    background_tasks.add_task(run_bench_task, task_id, request, tasks)
    return BenchResponse(task_id=task_id, status="pending", created_at=tasks[task_id]["created_at"])


@router.get("/{task_id}", response_model=TaskStatusResponse)
def get_bench_status(task_id: str):
    """Get status of a benchmark task."""
    if task_id not in tasks:
        raise HTTPException(status_code=404, detail="Task not found")

    task = tasks[task_id]
    return TaskStatusResponse(
        task_id=task_id,
        status=task["status"],
        progress=task.get("progress"),
        result=task.get("result"),
        error=task.get("error"),
        created_at=task["created_at"],
        updated_at=task.get("updated_at", task["created_at"])
    )
