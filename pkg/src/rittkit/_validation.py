"""Input validation helpers."""

import math

import numpy as np

from .exceptions import ConfigurationError, GuardError, StructuralError

# Mixed-space vector length and dense-matrix entry caps.
DIMENSION_GUARD = 10**6
DENSE_ENTRY_GUARD = 2**24


def check_open_angle(angle, upper, name="angle"):
    """Return ``angle`` as float if it lies in (0, upper), else raise."""
    angle = float(angle)
    if not (0.0 < angle < upper):
        raise ConfigurationError(f"{name}={angle!r} must lie in (0, {upper:.6g})")
    return angle


def check_stolz_angle(gamma):
    return check_open_angle(gamma, math.pi / 2, "gamma")


def check_sector_angle(omega):
    return check_open_angle(omega, math.pi, "omega")


def check_exponent(p, name="p"):
    p = float(p)
    if math.isnan(p) or p < 1.0:
        raise ConfigurationError(f"exponent {name}={p!r} must lie in [1, inf]")
    return p


def check_square(matrix, name="matrix"):
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise StructuralError(f"{name} must be a square 2-d array, got shape {matrix.shape}")
    return matrix


def check_positive_int(n, name="n", minimum=1):
    if int(n) != n or n < minimum:
        raise ConfigurationError(f"{name}={n!r} must be an integer >= {minimum}")
    return int(n)


def check_dimension(dim, what="mixed space"):
    if dim > DIMENSION_GUARD:
        raise GuardError(f"{what} has dimension {dim} > guard {DIMENSION_GUARD}")
    return dim


def check_dense(dim, what="dense operator"):
    check_dimension(dim, what)
    if dim * dim > DENSE_ENTRY_GUARD:
        raise GuardError(
            f"{what} would need a {dim}x{dim} matrix ({dim * dim} entries > guard {DENSE_ENTRY_GUARD})"
        )
    return dim
