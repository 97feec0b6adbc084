"""Benchmark problem builders and the problem registry."""

from __future__ import annotations

from pathlib import Path

from ..model import ProblemModel
from .grid import build_grid
from .hotel import HotelConfig, build_hotel
from .randomgen import InstanceSizes, random_small_instance
from .training import TrainingConfig, build_training_plan

BUILDERS = {
    "grid": build_grid,
    "training": build_training_plan,
    "hotel": build_hotel,
}


def get_problem(ref: str) -> ProblemModel:
    """Resolve a builder name or a JSON problem file path."""
    if ref in BUILDERS:
        return BUILDERS[ref]()
    path = Path(ref)
    if path.exists():
        from ..io import load_problem
        return load_problem(path)
    raise KeyError(f"unknown problem {ref!r} (not a builder name or file)")


__all__ = ["BUILDERS", "get_problem", "build_grid", "build_hotel",
           "build_training_plan", "random_small_instance", "HotelConfig",
           "TrainingConfig", "InstanceSizes"]
