"""Scene construction for a colocated MIMO radar with one-bit receivers.

A scene is a far-field point target observed through `m` receive and `p`
transmit elements over `n` fast-time samples.  The noise-free spatial
signature is ``Z = a_r(phi) a_t(phi)^H S`` and raw data are
``X = beta * Z + N`` with circular complex Gaussian noise whose real and
imaginary parts each have unit variance (noise power ``sigma^2 = 2``).
One-bit receivers deliver only ``quantize(X)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ._validation import as_complex_matrix

__all__ = [
    "Hypothesis",
    "SceneConfig",
    "steering_vector",
    "lfm_waveform",
    "spatial_signature",
    "synthesize_received",
    "quantize",
    "beta_from_snr",
    "snr_from_beta",
]


class Hypothesis(enum.Enum):
    """Binary detection hypotheses: noise only (H0) or target present (H1)."""

    H0 = "H0"
    H1 = "H1"


@dataclass(frozen=True)
class SceneConfig:
    """Static description of one radar scene.

    Parameters
    ----------
    m, p, n : int
        Receive elements, transmit elements and fast-time samples (all >= 1).
    phi : float
        Target angle in radians, inside (-pi/2, pi/2).
    beta : complex
        Target reflectivity under the unit-noise-variance convention.  The
        modulus is tied to SNR through :func:`beta_from_snr`; ``beta = 0``
        makes H1 coincide with H0.
    """

    m: int
    p: int
    n: int
    phi: float = -np.pi / 3
    beta: complex = 0j

    def __post_init__(self) -> None:
        for name in ("m", "p", "n"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.p > self.n:
            raise ValueError(
                f"p={self.p} exceeds n={self.n}; the orthogonal waveform construction "
                "needs at least as many fast-time samples as transmit elements"
            )
        if not np.isfinite(self.phi) or not (-np.pi / 2 < self.phi < np.pi / 2):
            raise ValueError(f"phi must lie in (-pi/2, pi/2), got {self.phi!r}")
        beta = complex(self.beta)
        if not (np.isfinite(beta.real) and np.isfinite(beta.imag)):
            raise ValueError(f"beta must be finite, got {self.beta!r}")

    @property
    def num_samples(self) -> int:
        """Total per-trial sample count ``N = m * n``."""
        return self.m * self.n


def steering_vector(count: int, phi: float) -> np.ndarray:
    """Half-wavelength ULA steering vector ``[e^{-i pi (k-1) sin phi}]_{k=1..count}``."""
    if not isinstance(count, (int, np.integer)) or count < 1:
        raise ValueError(f"element count must be a positive integer, got {count!r}")
    if not np.isfinite(phi):
        raise ValueError(f"phi must be finite, got {phi!r}")
    return np.exp(-1j * np.pi * np.arange(count) * np.sin(phi))


def lfm_waveform(p: int, n: int) -> np.ndarray:
    """Orthogonal LFM transmit matrix, shape ``(p, n)``, scaled by ``1/sqrt(p)``.

    Entry ``(k, l)`` (1-based) is
    ``exp(i 2 pi k (l-1)/n + i pi (l-1)^2/n) / sqrt(p)``.  The rows are
    orthogonal with ``S S^H = (n/p) I_p`` and ``trace(S S^H) = n``, which makes
    the spatial signature built from it satisfy ``trace(Z Z^H) = m * n``
    exactly.
    """
    if not isinstance(p, (int, np.integer)) or p < 1:
        raise ValueError(f"p must be a positive integer, got {p!r}")
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    k = np.arange(1, p + 1, dtype=float)[:, None]
    l = np.arange(n, dtype=float)[None, :]
    return np.exp(1j * (2 * np.pi * k * l / n + np.pi * l * l / n)) / np.sqrt(p)


def spatial_signature(config: SceneConfig, S: np.ndarray | None = None) -> np.ndarray:
    """Noise-free unit-reflectivity signature ``Z = a_r(phi) a_t(phi)^H S``.

    ``S`` defaults to :func:`lfm_waveform`; a custom waveform must have shape
    ``(p, n)``.
    """
    if S is None:
        S = lfm_waveform(config.p, config.n)
    else:
        S = as_complex_matrix(S, "S")
        if S.shape != (config.p, config.n):
            raise ValueError(
                f"waveform shape {S.shape} does not match (p, n)=({config.p}, {config.n})"
            )
    a_r = steering_vector(config.m, config.phi)
    a_t = steering_vector(config.p, config.phi)
    return np.outer(a_r, a_t.conj()) @ S


def synthesize_received(
    config: SceneConfig,
    Z: np.ndarray,
    hypothesis: Hypothesis,
    rng: np.random.Generator,
    noise_scale: float = 1.0,
) -> np.ndarray:
    """Draw one raw data matrix ``X`` for the given hypothesis.

    Noise is circular complex Gaussian with unit variance per real/imaginary
    part; ``noise_scale`` exists for tests that want to suppress it.
    """
    Z = as_complex_matrix(Z, "Z")
    if Z.shape != (config.m, config.n):
        raise ValueError(f"Z shape {Z.shape} does not match (m, n)=({config.m}, {config.n})")
    noise = rng.standard_normal(Z.shape) + 1j * rng.standard_normal(Z.shape)
    if hypothesis is Hypothesis.H1:
        return complex(config.beta) * Z + noise_scale * noise
    if hypothesis is Hypothesis.H0:
        return noise_scale * noise
    raise ValueError(f"unknown hypothesis {hypothesis!r}")


def quantize(X: np.ndarray) -> np.ndarray:
    """One-bit quantization of both quadratures: ``sign(Re X) + i sign(Im X)``.

    Uses the convention ``sign(0) = +1`` so the map is total and deterministic.
    """
    X = np.asarray(X, dtype=np.complex128)
    if not np.all(np.isfinite(X.real) & np.isfinite(X.imag)):
        raise ValueError("input to quantize must be finite")
    return np.where(X.real >= 0.0, 1.0, -1.0) + 1j * np.where(X.imag >= 0.0, 1.0, -1.0)


def beta_from_snr(snr_db: float) -> float:
    """Reflectivity modulus for a target SNR: ``|beta| = sqrt(sigma^2 * 10^(SNR/10))``.

    With the fixed noise power ``sigma^2 = 2`` this inverts
    ``SNR = 10 log10(|beta|^2 / 2)``.
    """
    if not np.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db!r}")
    return float(np.sqrt(2.0 * 10.0 ** (snr_db / 10.0)))


def snr_from_beta(beta: complex) -> float:
    """SNR in dB of a reflectivity: ``10 log10(|beta|^2 / 2)``."""
    mod2 = abs(complex(beta)) ** 2
    if mod2 == 0.0:
        raise ValueError("beta = 0 has no finite SNR")
    return float(10.0 * np.log10(mod2 / 2.0))
