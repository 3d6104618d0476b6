"""Input validation helpers shared by the estimators and solvers."""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import numpy as np


class InvariantViolation(RuntimeError):
    """Raised when a conserved quantity or geometric constraint drifts past tolerance."""


class BlowUpError(InvariantViolation):
    """Raised when a nonlinear evolution exceeds its amplitude guard."""


def is_power_of_two(n) -> bool:
    return isinstance(n, (int, np.integer)) and n > 0 and (int(n) & (int(n) - 1)) == 0


def check_power_of_two(n, name: str = "size") -> int:
    if not is_power_of_two(n):
        raise ValueError(f"{name} must be a positive power of two, got {n!r}")
    return int(n)


def check_finite(a: np.ndarray, name: str = "array") -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def check_samples(samples, name: str = "samples") -> np.ndarray:
    """Coerce grid samples to a 1-D complex array with power-of-two length."""
    a = np.asarray(samples)
    if a.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {a.shape}")
    if a.size < 2:
        raise ValueError(f"{name} needs at least 2 points")
    check_power_of_two(a.size, f"len({name})")
    return check_finite(a.astype(complex, copy=False), name)


def check_vectors(u, name: str = "u") -> np.ndarray:
    """Coerce an (M, 3) array of 3-vectors with power-of-two M."""
    a = np.asarray(u, dtype=float)
    if a.ndim != 2 or a.shape[1] != 3:
        raise ValueError(f"{name} must have shape (M, 3), got {a.shape}")
    check_power_of_two(a.shape[0], f"{name}.shape[0]")
    return check_finite(a, name)


def as_pi_fraction(value) -> Fraction:
    """Parse a multiple of pi given as int, Fraction, or 'p/q' string.

    Floats are refused: jump locations must be exact so that rationality
    stays decidable.
    """
    if isinstance(value, (Fraction, int, Rational)) and not isinstance(value, bool):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected an exact multiple of pi (int, Fraction, or 'p/q'), got {value!r}")
