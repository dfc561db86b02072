"""Difference potentials solver for 3D Patlak-Keller-Segel chemotaxis on a ball."""

from ._core import (
    GridSpec,
    PointClassification,
    Simulation,
    TimeSeriesRecord,
    Vec3,
    blow_up_check,
    build_grid,
    classify_ball,
    free_energy,
    max_density,
    run,
    second_moment,
    total_mass,
)

__all__ = [
    "GridSpec",
    "PointClassification",
    "Simulation",
    "TimeSeriesRecord",
    "Vec3",
    "blow_up_check",
    "build_grid",
    "classify_ball",
    "free_energy",
    "max_density",
    "run",
    "second_moment",
    "total_mass",
]
__version__ = "0.1.0"
