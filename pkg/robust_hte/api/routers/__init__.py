"""API routers."""

from . import simulation, estimation, bench

__all__ = ["simulation", "estimation", "bench"]
