"""Background task handlers."""

from datetime import datetime
from typing import Dict
import logging

from .models import BenchRequest
from ..bench import render_tables, run_sweep

logger = logging.getLogger(__name__)


def run_bench_task(task_id: str, request: BenchRequest, tasks: Dict[str, Dict]):
    """Run a sweep in the background, publishing per-cell progress."""

    def progress(done: int, total: int, ratio: float, n: int):
        tasks[task_id]["progress"] = round(100.0 * done / total, 2)
        tasks[task_id]["updated_at"] = datetime.now()

    try:
        tasks[task_id]["status"] = "processing"
        tasks[task_id]["progress"] = 0.0
        tasks[task_id]["updated_at"] = datetime.now()

        report = run_sweep(request.config, progress=progress)

        tasks[task_id]["status"] = "completed"
        tasks[task_id]["progress"] = 100.0
        tasks[task_id]["result"] = {
            "report": report.to_dict(),
            "tables": render_tables(report, "markdown"),
            "invalid_cells": len(report.invalid_cells),
        }
        tasks[task_id]["updated_at"] = datetime.now()

    except Exception as e:
        logger.error(f"Bench task {task_id} failed: {e}")
        tasks[task_id]["status"] = "failed"
        tasks[task_id]["error"] = str(e)
        tasks[task_id]["updated_at"] = datetime.now()
