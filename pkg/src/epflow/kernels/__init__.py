"""Smoothing profiles, shape tables and regularised Biot-Savart kernels."""

from .bessel import bessel_k0, bessel_k0k1, bessel_k1
from .ops import (
    DomainError,
    L1Distance,
    LemmaReport,
    LemmaSampleSpec,
    alpha_shape,
    blob_shape,
    kernel_eval,
    l1_kernel_distance,
    quasi_lipschitz_modulus,
    singular_kernel,
    stream_eval,
    verify_kernel_lemmas,
)
from .profiles import (
    KernelProfile,
    NormalizationError,
    alpha_profile,
    blob_profile,
    load_profile_csv,
    make_profile,
    profile_by_name,
)
from .shape import GridSpec, ShapeTable, build_shape, exact_shape

_CACHE: dict = {}


def shape_by_name(name: str, epsilon: float = 1.0) -> ShapeTable:
    """Built-in shape table ("blob", "alpha" or "exact") at scale ``epsilon``."""
    if name == "exact":
        return exact_shape(epsilon)
    if name not in _CACHE:
        _CACHE[name] = build_shape(profile_by_name(name))
    return _CACHE[name].with_epsilon(epsilon)


__all__ = [
    "DomainError", "GridSpec", "KernelProfile", "L1Distance", "LemmaReport", "LemmaSampleSpec",
    "NormalizationError", "ShapeTable", "alpha_profile", "alpha_shape", "bessel_k0",
    "bessel_k0k1", "bessel_k1", "blob_profile", "blob_shape", "build_shape", "exact_shape",
    "kernel_eval", "l1_kernel_distance", "load_profile_csv", "make_profile", "profile_by_name",
    "quasi_lipschitz_modulus", "shape_by_name", "singular_kernel", "stream_eval",
    "verify_kernel_lemmas",
]
