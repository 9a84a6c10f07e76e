"""Shared input-validation helpers."""

from __future__ import annotations

import numpy as np


def as_complex_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite, non-empty 2-D complex128 array."""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr.real) & np.isfinite(arr.imag)):
        raise ValueError(f"{name} must contain only finite entries")
    return arr


def require_same_shape(a: np.ndarray, b: np.ndarray, a_name: str, b_name: str) -> None:
    if a.shape != b.shape:
        raise ValueError(
            f"{a_name} shape {a.shape} does not match {b_name} shape {b.shape}"
        )


def require_quantized(y: np.ndarray, name: str = "Y") -> None:
    """Require every entry to be one of the four points ±1 ± i."""
    if not (np.all(np.abs(y.real) == 1.0) and np.all(np.abs(y.imag) == 1.0)):
        raise ValueError(
            f"{name} must be one-bit data with entries in {{±1 ± i}}; "
            "apply quantize() to raw measurements first"
        )


def require_nonzero_trace(trace: float, name: str) -> None:
    if trace <= 0.0:
        raise ValueError(f"{name} is identically zero (degenerate scene)")
