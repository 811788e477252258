"""Regularised Biot-Savart kernels and particle flows for 2D vortex dynamics."""

__version__ = "0.1.0"

from .backend import NAME as BACKEND, set_threads  # noqa: E402
from .dynamics import convergence_experiment, evolve, induced_velocity, passive_tracers  # noqa: E402
from .kernels import (  # noqa: E402
    build_shape,
    exact_shape,
    kernel_eval,
    l1_kernel_distance,
    shape_by_name,
    stream_eval,
    verify_kernel_lemmas,
)
from .measures import VortexSystem, diagnostics, discretize_patch, discretize_sheet, point_vortices  # noqa: E402
from .picard import cauchy_report, picard_iterate  # noqa: E402

__all__ = [
    "BACKEND", "VortexSystem", "build_shape", "cauchy_report", "convergence_experiment", "diagnostics",
    "discretize_patch", "discretize_sheet", "evolve", "exact_shape", "induced_velocity", "kernel_eval",
    "l1_kernel_distance", "passive_tracers", "picard_iterate", "point_vortices", "set_threads",
    "shape_by_name", "stream_eval", "verify_kernel_lemmas",
]
