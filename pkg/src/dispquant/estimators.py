"""scikit-learn style wrappers; each row of X is one field sampled on the uniform grid."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .linear import evolve_linear
from .nonlinear import NlsParams, kdv_evolve, nls_evolve
from .regularity import besov_exponent, box_dimension, lp_blocks
from .spectral import GridField, from_spectral, to_spectral
from ._validation import check_power_of_two

__all__ = [
    "LinearPropagator",
    "NLSPropagator",
    "KdVPropagator",
    "BoxCountingDimension",
    "BesovExponent",
]


def _rows(X) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D array of grid samples, got shape {X.shape}")
    check_power_of_two(X.shape[1], "n_samples per row")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    return X


class _Propagator(TransformerMixin, BaseEstimator):
    def fit(self, X, y=None):
        X = _rows(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = _rows(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} samples per row, expected {self.n_features_in_}")
        out = np.empty(X.shape, dtype=complex)
        for i, row in enumerate(X):
            f = to_spectral(GridField(row.astype(complex)))
            out[i] = from_spectral(self._evolve(f), X.shape[1]).samples
        return out


class LinearPropagator(_Propagator):
    """exp(t L) with L of dispersion order k applied row by row."""

    def __init__(self, k=2, t=0.0):
        self.k = k
        self.t = t

    def _evolve(self, f):
        return evolve_linear(f, self.k, self.t)


class NLSPropagator(_Propagator):
    """Split-step cubic NLS flow for time t with cutoff M / 4 (dealiased on the row grid)."""

    def __init__(self, t=0.0, lam=1.0, dt=1e-4, dealias=True):
        self.t = t
        self.lam = lam
        self.dt = dt
        self.dealias = dealias

    def _evolve(self, f):
        M = 2 * f.N
        N = M // 4 if self.dealias else M // 2
        return nls_evolve(f.resize(N), NlsParams(self.lam, N, self.dt, self.dealias), self.t)


class KdVPropagator(_Propagator):
    """Integrating-factor RK4 KdV flow; rows must be real."""

    def __init__(self, t=0.0, dt=1e-3):
        self.t = t
        self.dt = dt

    def _evolve(self, f):
        N = max(1, f.N // 2)
        return kdv_evolve(f.real_part().resize(N), N, self.dt, self.t)

    def transform(self, X):
        return super().transform(X).real


class BoxCountingDimension(BaseEstimator):
    """Box-counting dimension of the graph of each row (real part).

    ``fit`` records per-row estimates and their median in ``dimension_``.
    """

    def __init__(self, window=None, part="re"):
        self.window = window
        self.part = part

    def _values(self, X):
        X = _rows(X)
        if self.part in ("re", "real"):
            Y = X.real
        elif self.part in ("im", "imag"):
            Y = np.imag(X)
        elif self.part in ("abs2", "density"):
            Y = np.abs(X) ** 2
        else:
            raise ValueError(f"unknown part {self.part!r}")
        return [box_dimension(y, self.window) for y in Y]

    def fit(self, X, y=None):
        est = self._values(X)
        self.estimates_ = est
        self.dimensions_ = np.array([e.slope for e in est])
        self.residuals_ = np.array([e.residual for e in est])
        self.dimension_ = float(np.median(self.dimensions_))
        self.n_features_in_ = np.asarray(X).shape[-1]
        return self

    def transform(self, X):
        check_is_fitted(self, "dimension_")
        return np.array([[e.slope, e.residual] for e in self._values(X)])

    def fit_transform(self, X, y=None):
        self.fit(X)
        return np.column_stack([self.dimensions_, self.residuals_])


class BesovExponent(BaseEstimator):
    """Dyadic decay exponent s with ||P_j f||_p ~ 2^(-s j), per row."""

    def __init__(self, p=np.inf, window=None):
        self.p = p
        self.window = window

    def _values(self, X):
        X = _rows(X)
        return np.array([besov_exponent(lp_blocks(to_spectral(GridField(r.astype(complex)))), self.p, self.window) for r in X])

    def fit(self, X, y=None):
        self.exponents_ = self._values(X)
        self.exponent_ = float(np.median(self.exponents_))
        self.n_features_in_ = np.asarray(X).shape[-1]
        return self

    def transform(self, X):
        check_is_fitted(self, "exponent_")
        return self._values(X)[:, None]
