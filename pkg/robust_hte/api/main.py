"""Main FastAPI application."""

from contextlib import asynccontextmanager
import logging

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .models import ErrorResponse
from .routers import simulation, estimation, bench
from ..core.config import settings
from ..core.exceptions import HteError, StorageError

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan manager."""
    logger.info(f"Starting {settings.app_name} API...")
    yield
    logger.info(f"Shutting down {settings.app_name} API...")


app = FastAPI(
    title=f"{settings.app_name} API",
    description="Robust heterogeneous treatment effect estimation and simulation benchmarks",
    version=settings.app_version,
    lifespan=lifespan
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(simulation.router, prefix="/api/v1/simulation", tags=["simulation"])
app.include_router(estimation.router, prefix="/api/v1/estimation", tags=["estimation"])
app.include_router(bench.router, prefix="/api/v1/bench", tags=["bench"])


@app.exception_handler(HteError)
async def hte_error_handler(request: Request, exc: HteError):
    """Map toolkit errors to 4xx/5xx JSON responses."""
    status_code = 500 if isinstance(exc, StorageError) else 422
    body = ErrorResponse(error=exc.error_code or "HTE_ERROR", detail=str(exc), status_code=status_code)
    return JSONResponse(status_code=status_code, content=body.model_dump(mode="json"))


@app.get("/")
async def root():
    """Root endpoint."""
    return {
        "message": f"{settings.app_name} API",
        "version": settings.app_version,
        "docs": "/docs"
    }


@app.get("/health")
async def health_check():
    """Health check endpoint."""
    return {"status": "healthy"}
