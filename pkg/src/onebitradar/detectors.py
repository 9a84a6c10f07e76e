"""Detection statistics and scikit-learn style detector front-ends.

Three tests for a known spatial signature ``Z``:

* one-bit Rao test — operates on sign data ``Y``, needs no reflectivity
  estimate: ``T = |tr(Y Z^H)|^2 / tr(Z Z^H)``;
* full-precision GLRT on the Wilks scale — operates on raw ``X``:
  ``-2 N log(1 - |tr(X Z^H)|^2 / (tr(X X^H) tr(Z Z^H)))``;
* known-reflectivity likelihood-ratio on sign data, the clairvoyant
  benchmark.

Both asymptotically chi-square statistics share the threshold map
``gamma = -2 ln Pfa``; the decision is H1 when the statistic reaches the
threshold (boundary inclusive).
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import (
    as_complex_matrix,
    require_nonzero_trace,
    require_quantized,
    require_same_shape,
)
from .scene import Hypothesis
from .theory import log_q, rao_threshold

__all__ = [
    "rao_statistic",
    "rao_score",
    "glrt_wilks_statistic",
    "lrt_known_beta",
    "decide",
    "OneBitRaoDetector",
    "FullPrecisionGlrtDetector",
    "KnownReflectivityLrtDetector",
]

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

# Proportional inputs X = c Z land within a few ulp of the Cauchy-Schwarz
# boundary rather than exactly on it (the numerator and the traces are summed
# in different orders), so boundary detection needs rounding slack.  Genuine
# noisy data sits many orders of magnitude below 1 - 1e-12.
_BOUNDARY_TOL = 1e-12


def rao_statistic(Y, Z) -> float:
    """One-bit Rao statistic ``|tr(Y Z^H)|^2 / tr(Z Z^H)`` for sign data ``Y``."""
    Y = as_complex_matrix(Y, "Y")
    Z = as_complex_matrix(Z, "Z")
    require_same_shape(Y, Z, "Y", "Z")
    require_quantized(Y)
    trace = float(np.sum(Z.real**2 + Z.imag**2))
    require_nonzero_trace(trace, "tr(Z Z^H)")
    inner = np.vdot(Z, Y)  # tr(Y Z^H) = sum conj(Z) * Y
    return float((inner.real**2 + inner.imag**2) / trace)


def rao_score(Y, Z) -> np.ndarray:
    """Score of the one-bit likelihood at ``beta = 0``:
    ``sqrt(2/pi) [Re tr(Y Z^H); Im tr(Y Z^H)]``."""
    Y = as_complex_matrix(Y, "Y")
    Z = as_complex_matrix(Z, "Z")
    require_same_shape(Y, Z, "Y", "Z")
    require_quantized(Y)
    inner = np.vdot(Z, Y)
    return _SQRT_2_OVER_PI * np.array([inner.real, inner.imag])


def glrt_wilks_statistic(X, Z) -> float:
    """Full-precision GLRT statistic on the Wilks (-2 log-likelihood-ratio) scale.

    With ``T' = |tr(X Z^H)|^2 / tr(X X^H)`` returns
    ``-2 N log(1 - T'/tr(Z Z^H))``; large values favor H1 and the null law is
    asymptotically chi-squared with 2 degrees of freedom.  Raises
    ``OverflowError`` on (or within rounding of) the measure-zero boundary
    ``X = c Z`` where the statistic diverges.
    """
    X = as_complex_matrix(X, "X")
    Z = as_complex_matrix(Z, "Z")
    require_same_shape(X, Z, "X", "Z")
    trace_z = float(np.sum(Z.real**2 + Z.imag**2))
    require_nonzero_trace(trace_z, "tr(Z Z^H)")
    trace_x = float(np.sum(X.real**2 + X.imag**2))
    if trace_x <= 0.0:
        raise ValueError("X is identically zero; the GLRT is undefined")
    inner = np.vdot(Z, X)
    ratio = (inner.real**2 + inner.imag**2) / (trace_x * trace_z)
    if ratio >= 1.0 - _BOUNDARY_TOL:
        raise OverflowError(
            "X is proportional to Z (Cauchy-Schwarz boundary); the statistic diverges"
        )
    return -2.0 * X.size * math.log1p(-ratio)


def lrt_known_beta(Y, Z, beta: complex) -> float:
    """Log-likelihood-ratio of sign data for a completely known target.

    ``sum_i log Q(-r_i (a u_i - b v_i)) + sum_i log Q(-s_i (a v_i + b u_i))
    + 2 N log 2`` where ``y_i = r_i + i s_i``, ``z_i = u_i + i v_i`` and
    ``beta = a + i b``.  Its null law has no convenient closed form; calibrate
    thresholds empirically.
    """
    Y = as_complex_matrix(Y, "Y")
    Z = as_complex_matrix(Z, "Z")
    require_same_shape(Y, Z, "Y", "Z")
    require_quantized(Y)
    beta = complex(beta)
    if not (np.isfinite(beta.real) and np.isfinite(beta.imag)):
        raise ValueError(f"beta must be finite, got {beta!r}")
    r, s = Y.real.ravel(), Y.imag.ravel()
    u, v = Z.real.ravel(), Z.imag.ravel()
    a, b = beta.real, beta.imag
    terms = np.sum(log_q(-r * (a * u - b * v))) + np.sum(log_q(-s * (a * v + b * u)))
    return float(terms + 2.0 * Y.size * math.log(2.0))


def decide(statistic: float, threshold: float) -> Hypothesis:
    """Threshold decision: H1 iff ``statistic >= threshold``."""
    if math.isnan(statistic):
        raise ValueError("statistic is NaN")
    if math.isnan(threshold):
        raise ValueError("threshold is NaN")
    return Hypothesis.H1 if statistic >= threshold else Hypothesis.H0


# ---------------------------------------------------------------------------
# Vectorized row kernels shared by the estimators and the Monte Carlo engine.
# Rows are flattened trials; no input validation here.
# ---------------------------------------------------------------------------


def _rao_rows(y_rows: np.ndarray, z_conj: np.ndarray, trace_z: float) -> np.ndarray:
    inner = y_rows @ z_conj
    return (inner.real**2 + inner.imag**2) / trace_z


def _wilks_rows(x_rows: np.ndarray, z_conj: np.ndarray, trace_z: float) -> np.ndarray:
    n_samples = x_rows.shape[1]
    inner = x_rows @ z_conj
    trace_x = np.sum(x_rows.real**2 + x_rows.imag**2, axis=1)
    ratio = (inner.real**2 + inner.imag**2) / (trace_x * trace_z)
    out = np.empty(x_rows.shape[0])
    boundary = ratio >= 1.0 - _BOUNDARY_TOL
    out[boundary] = np.inf
    out[~boundary] = -2.0 * n_samples * np.log1p(-ratio[~boundary])
    return out


def _lrt_rows(
    y_rows: np.ndarray,
    u: np.ndarray,
    v: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
) -> np.ndarray:
    """Known-beta log-likelihood-ratio per row; ``a``/``b`` give each row's
    reflectivity quadratures."""
    a = a[:, None]
    b = b[:, None]
    re_part = log_q(-y_rows.real * (a * u[None, :] - b * v[None, :]))
    im_part = log_q(-y_rows.imag * (a * v[None, :] + b * u[None, :]))
    n_samples = y_rows.shape[1]
    return re_part.sum(axis=1) + im_part.sum(axis=1) + 2.0 * n_samples * math.log(2.0)


class _SignatureDetector(BaseEstimator):
    """Shared fit/batch plumbing: bind a spatial signature, score stacked trials."""

    def fit(self, Z, y=None):
        """Bind the noise-free signature ``Z`` (an (m, n) complex matrix)."""
        Z = as_complex_matrix(Z, "Z")
        trace = float(np.sum(Z.real**2 + Z.imag**2))
        require_nonzero_trace(trace, "tr(Z Z^H)")
        self.signature_ = Z
        self.trace_ = trace
        self.threshold_ = self._fit_threshold()
        return self

    def _fit_threshold(self):
        return rao_threshold(self.pfa)

    def _check_fitted(self) -> None:
        if not hasattr(self, "signature_"):
            raise ValueError(
                f"this {type(self).__name__} instance is not fitted yet; call fit(Z) first"
            )

    def _as_rows(self, data) -> tuple[np.ndarray, tuple[int, ...]]:
        """Accept one (m, n) matrix, a (..., m, n) stack, a (k, m*n) matrix of
        flattened trials, or a single flat (m*n,) vector; return flattened rows
        plus the output shape."""
        arr = np.asarray(data, dtype=np.complex128)
        shape = self.signature_.shape
        size = self.signature_.size
        if arr.ndim >= 2 and arr.shape[-2:] == shape:
            lead = arr.shape[:-2]
            return arr.reshape(-1, size), lead
        if arr.ndim == 2 and arr.shape[1] == size:
            return arr, (arr.shape[0],)
        if arr.ndim == 1 and arr.size == size:
            return arr.reshape(1, size), ()
        raise ValueError(
            f"cannot interpret data of shape {arr.shape} against signature shape {shape}"
        )

    def predict(self, data) -> np.ndarray:
        """1 where the statistic reaches the fitted threshold, else 0."""
        scores = np.asarray(self.decision_function(data))
        return (scores >= self.threshold_).astype(np.int64)


class OneBitRaoDetector(_SignatureDetector):
    """Rao test on one-bit data with a closed-form threshold ``-2 ln pfa``.

    Parameters
    ----------
    pfa : float
        Target false-alarm probability in (0, 1].
    """

    def __init__(self, pfa: float = 1e-3):
        self.pfa = pfa

    def decision_function(self, Y):
        """Rao statistic per trial; ``Y`` is sign data shaped like the
        signature (optionally stacked or flattened per row)."""
        self._check_fitted()
        rows, lead = self._as_rows(Y)
        require_quantized(rows)
        out = _rao_rows(rows, self.signature_.conj().ravel(), self.trace_)
        return float(out[0]) if lead == () else out.reshape(lead)


class FullPrecisionGlrtDetector(_SignatureDetector):
    """GLRT on raw (unquantized) data, reported on the Wilks scale so it shares
    the ``-2 ln pfa`` threshold.  Boundary trials ``X = c Z`` map to ``inf``.

    Parameters
    ----------
    pfa : float
        Target false-alarm probability in (0, 1].
    """

    def __init__(self, pfa: float = 1e-3):
        self.pfa = pfa

    def decision_function(self, X):
        self._check_fitted()
        rows, lead = self._as_rows(X)
        out = _wilks_rows(rows, self.signature_.conj().ravel(), self.trace_)
        return float(out[0]) if lead == () else out.reshape(lead)


class KnownReflectivityLrtDetector(_SignatureDetector):
    """Clairvoyant likelihood-ratio benchmark on one-bit data.

    The reflectivity must be supplied; the null law has no closed form, so the
    threshold either comes from the constructor or from
    :meth:`calibrate_threshold` on noise-only statistics.
    """

    def __init__(self, beta: complex = 1.0 + 0j, threshold: float | None = None):
        self.beta = beta
        self.threshold = threshold

    def _fit_threshold(self):
        return self.threshold

    def decision_function(self, Y):
        self._check_fitted()
        rows, lead = self._as_rows(Y)
        require_quantized(rows)
        beta = complex(self.beta)
        a = np.full(rows.shape[0], beta.real)
        b = np.full(rows.shape[0], beta.imag)
        z = self.signature_.ravel()
        out = _lrt_rows(rows, z.real, z.imag, a, b)
        return float(out[0]) if lead == () else out.reshape(lead)

    def calibrate_threshold(self, h0_statistics, pfa: float):
        """Set the threshold to the empirical upper ``pfa``-quantile of
        noise-only statistics."""
        if not (0.0 < pfa <= 1.0):
            raise ValueError(f"pfa must lie in (0, 1], got {pfa!r}")
        stats = np.sort(np.asarray(h0_statistics, dtype=float).ravel())
        if stats.size == 0:
            raise ValueError("need at least one H0 statistic to calibrate")
        rank = min(stats.size - 1, math.ceil((1.0 - pfa) * stats.size))
        self.threshold_ = float(stats[rank])
        return self

    def predict(self, Y):
        self._check_fitted()
        if getattr(self, "threshold_", None) is None:
            raise ValueError(
                "no threshold available; pass threshold= or call calibrate_threshold()"
            )
        return super().predict(Y)
