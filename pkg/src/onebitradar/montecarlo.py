"""Monte Carlo harness: reproducible trial batches, empirical laws, fit metrics.

Reproducibility model
---------------------
Randomness comes from the counter-based Philox generator.  Trials are grouped
into fixed blocks of 4096; block ``b`` of a plan with master seed ``s`` uses an
independent generator keyed by ``(s << 64) | b``, and each trial consumes one
row of that block's normal draws.  A trial's data therefore depend only on
``(seed, trial index)`` — never on batch sizes, detector sets, execution order
or how many trials ran before it — and identical plans reproduce bit-identical
samples.

Each trial's row holds ``2 N + 2`` standard normals: two for the per-trial
reflectivity draw (consumed even when unused, to keep the stream layout fixed
across hypotheses and reflectivity modes) followed by the real then imaginary
noise quadratures.  All configured detectors see the same realization, so
paired comparisons share common random numbers.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .detectors import _lrt_rows, _rao_rows, _wilks_rows
from .scene import Hypothesis, SceneConfig, spatial_signature
from .theory import q_function

__all__ = [
    "TrialPlan",
    "TrialResult",
    "PartialTrialError",
    "run_trials",
    "EmpiricalCdf",
    "empirical_ccdf",
    "empirical_pd",
    "cvm_error",
    "ExactRaoDistribution",
    "enumerate_exact",
]

_TRIALS_PER_BLOCK = 4096
# Per-slab draw budget (float64 count) bounding peak memory, ~32 MiB of draws.
_SLAB_FLOATS = 4_194_304

_DETECTORS = ("rao", "glrt", "lrt")
_BETA_MODES = ("fixed-mod", "gaussian", "fixed")


class PartialTrialError(RuntimeError):
    """Raised when a run stops early; carries the number of completed trials."""

    def __init__(self, message: str, completed: int):
        super().__init__(message)
        self.completed = completed


@dataclass(frozen=True)
class TrialPlan:
    """One reproducible batch of trials.

    ``beta_mode`` controls the per-trial reflectivity: ``"fixed-mod"`` keeps
    ``|scene.beta|`` and draws a uniform phase, ``"gaussian"`` draws a complex
    Gaussian rescaled so its mean square modulus is ``|scene.beta|^2``, and
    ``"fixed"`` uses ``scene.beta`` verbatim.
    """

    scene: SceneConfig
    hypothesis: Hypothesis
    trials: int
    seed: int
    detectors: tuple[str, ...] = ("rao",)
    beta_mode: str = "fixed-mod"

    def __post_init__(self) -> None:
        if not isinstance(self.trials, (int, np.integer)) or self.trials < 0:
            raise ValueError(f"trials must be a non-negative integer, got {self.trials!r}")
        if not isinstance(self.seed, (int, np.integer)):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")
        if not self.detectors:
            raise ValueError("at least one detector is required")
        unknown = set(self.detectors) - set(_DETECTORS)
        if unknown:
            raise ValueError(f"unknown detectors {sorted(unknown)}; choose from {_DETECTORS}")
        if len(set(self.detectors)) != len(self.detectors):
            raise ValueError(f"duplicate detectors in {self.detectors}")
        if self.beta_mode not in _BETA_MODES:
            raise ValueError(f"unknown beta_mode {self.beta_mode!r}; choose from {_BETA_MODES}")
        if not isinstance(self.hypothesis, Hypothesis):
            raise ValueError(f"hypothesis must be a Hypothesis, got {self.hypothesis!r}")


@dataclass
class TrialResult:
    """Aligned statistic samples per detector plus reproducibility metadata."""

    samples: dict[str, np.ndarray]
    plan: TrialPlan
    scene_digest: str


def _scene_digest(scene: SceneConfig, Z: np.ndarray) -> str:
    payload = (
        f"{scene.m},{scene.p},{scene.n},{scene.phi!r},{complex(scene.beta)!r}".encode()
        + np.ascontiguousarray(Z).tobytes()
    )
    return hashlib.sha256(payload).hexdigest()[:16]


def _block_generator(seed: int, block: int) -> np.random.Generator:
    key = ((int(seed) & (2**64 - 1)) << 64) | block
    return np.random.Generator(np.random.Philox(key=key))


def run_trials(plan: TrialPlan) -> TrialResult:
    """Execute a plan and return each detector's statistic samples.

    The Rao and known-reflectivity LRT statistics are computed on one-bit
    data, the Wilks-scale GLRT on the raw data of the same realization.  Under
    H0 the LRT still uses the candidate reflectivity drawn for the trial, so
    its threshold can be calibrated with the same plan semantics.
    """
    scene = plan.scene
    Z = spatial_signature(scene)
    z = Z.ravel()
    z_conj = z.conj()
    u, v = z.real, z.imag
    trace_z = float(np.sum(u * u + v * v))
    n_samples = z.size
    beta_mod = abs(complex(scene.beta))
    beta_fixed = complex(scene.beta)
    target = plan.hypothesis is Hypothesis.H1

    out = {name: np.empty(plan.trials) for name in plan.detectors}
    need_y = ("rao" in out) or ("lrt" in out)
    row_width = 2 * n_samples + 2
    rows_per_slab = max(1, min(_TRIALS_PER_BLOCK, _SLAB_FLOATS // row_width))

    completed = 0
    try:
        n_blocks = -(-plan.trials // _TRIALS_PER_BLOCK) if plan.trials else 0
        for block in range(n_blocks):
            start = block * _TRIALS_PER_BLOCK
            stop = min(plan.trials, start + _TRIALS_PER_BLOCK)
            gen = _block_generator(plan.seed, block)
            offset = start
            while offset < stop:
                rows = min(rows_per_slab, stop - offset)
                draws = gen.standard_normal((rows, row_width))
                g1 = draws[:, 0]
                g2 = draws[:, 1]
                noise = draws[:, 2 : 2 + n_samples] + 1j * draws[:, 2 + n_samples :]
                if plan.beta_mode == "fixed":
                    a = np.full(rows, beta_fixed.real)
                    b = np.full(rows, beta_fixed.imag)
                elif plan.beta_mode == "fixed-mod":
                    mod = np.hypot(g1, g2)
                    safe = np.where(mod == 0.0, 1.0, mod)
                    a = beta_mod * np.where(mod == 0.0, 1.0, g1 / safe)
                    b = beta_mod * np.where(mod == 0.0, 0.0, g2 / safe)
                else:  # gaussian
                    scale = beta_mod / math.sqrt(2.0)
                    a = scale * g1
                    b = scale * g2
                if target:
                    x_rows = noise + (a + 1j * b)[:, None] * z[None, :]
                else:
                    x_rows = noise
                if need_y:
                    y_rows = np.where(x_rows.real >= 0.0, 1.0, -1.0) + 1j * np.where(
                        x_rows.imag >= 0.0, 1.0, -1.0
                    )
                sl = slice(offset, offset + rows)
                if "rao" in out:
                    out["rao"][sl] = _rao_rows(y_rows, z_conj, trace_z)
                if "glrt" in out:
                    out["glrt"][sl] = _wilks_rows(x_rows, z_conj, trace_z)
                if "lrt" in out:
                    out["lrt"][sl] = _lrt_rows(y_rows, u, v, a, b)
                offset += rows
                completed = offset
    except MemoryError as exc:
        raise PartialTrialError(
            f"ran out of memory after {completed} of {plan.trials} trials", completed
        ) from exc

    return TrialResult(samples=out, plan=plan, scene_digest=_scene_digest(scene, Z))


class EmpiricalCdf:
    """Right-continuous empirical distribution function of a sample."""

    def __init__(self, samples):
        values = np.sort(np.asarray(samples, dtype=float).ravel())
        if values.size == 0:
            raise ValueError("need at least one sample")
        if np.any(np.isnan(values)):
            raise ValueError("samples contain NaN")
        self.values = values
        self.count = values.size

    def __call__(self, x):
        x_arr = np.asarray(x, dtype=float)
        out = np.searchsorted(self.values, np.atleast_1d(x_arr), side="right") / self.count
        return float(out[0]) if x_arr.ndim == 0 else out.reshape(x_arr.shape)

    def grid(self, k: int = 1000) -> np.ndarray:
        """Equally-ranked order statistics thinned to at most ``k`` points."""
        if k < 1:
            raise ValueError(f"k must be positive, got {k!r}")
        k = min(k, self.count)
        ranks = np.ceil(np.arange(1, k + 1) * self.count / k).astype(np.int64) - 1
        return self.values[ranks]


def empirical_ccdf(samples, x):
    """Fraction of samples strictly greater than ``x`` (scalar or array)."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("need at least one sample")
    values = np.sort(samples)
    x_arr = np.asarray(x, dtype=float)
    hits = values.size - np.searchsorted(values, np.atleast_1d(x_arr), side="right")
    out = hits / values.size
    return float(out[0]) if x_arr.ndim == 0 else out.reshape(x_arr.shape)


def empirical_pd(samples, gamma):
    """Empirical detection (or false-alarm) probability at threshold ``gamma``."""
    return empirical_ccdf(samples, gamma)


def cvm_error(samples, model_cdf, grid=None) -> float:
    """Mean squared CDF discrepancy ``(1/K) sum |F(c) - F_model(c)|^2``.

    ``samples`` may be raw values or an :class:`EmpiricalCdf`; the default
    grid is the empirical order statistics thinned to 1000 points.
    ``model_cdf`` must accept a 1-D array.
    """
    empirical = samples if isinstance(samples, EmpiricalCdf) else EmpiricalCdf(samples)
    if grid is None:
        grid = empirical.grid(1000)
    else:
        grid = np.asarray(grid, dtype=float).ravel()
        if grid.size == 0:
            raise ValueError("grid must be non-empty")
    model = np.asarray(model_cdf(grid), dtype=float)
    if model.shape != grid.shape:
        raise ValueError(
            f"model_cdf returned shape {model.shape} for grid shape {grid.shape}"
        )
    return float(np.mean((empirical(grid) - model) ** 2))


@dataclass
class ExactRaoDistribution:
    """Exhaustive law of the Rao statistic for a tiny scene: support values
    (ascending), their probabilities, and exact moments of the normalized
    score ``w``."""

    t_values: np.ndarray
    weights: np.ndarray
    w_mean: np.ndarray
    w_cov: np.ndarray
    _tail: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        # Cumulative mass strictly above each support point, from the right.
        self._tail = np.concatenate([np.cumsum(self.weights[::-1])[::-1], [0.0]])

    def ccdf(self, x) -> float | np.ndarray:
        x_arr = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.t_values, np.atleast_1d(x_arr), side="right")
        out = self._tail[idx]
        return float(out[0]) if x_arr.ndim == 0 else out.reshape(x_arr.shape)


_ENUMERATE_MAX = 10


def enumerate_exact(Z, beta: complex) -> ExactRaoDistribution:
    """Exact one-bit Rao law by enumerating all ``4^N`` sign patterns (N <= 10).

    Each pattern's probability is the product of independent per-quadrature
    sign probabilities ``Q(-r_i (a u_i - b v_i)) Q(-s_i (a v_i + b u_i))``.
    Serves as the brute-force oracle for :func:`~onebitradar.theory.gaussian_moments`.
    """
    z = np.asarray(Z, dtype=np.complex128).ravel()
    n_samples = z.size
    if n_samples == 0:
        raise ValueError("Z must be non-empty")
    if n_samples > _ENUMERATE_MAX:
        raise ValueError(
            f"enumeration over 4^N patterns is limited to N <= {_ENUMERATE_MAX}, got N={n_samples}"
        )
    beta = complex(beta)
    u, v = z.real, z.imag
    trace = float(np.sum(u * u + v * v))
    if trace <= 0.0:
        raise ValueError("Z is identically zero (degenerate scene)")
    a, b = beta.real, beta.imag

    idx = np.arange(4**n_samples, dtype=np.int64)
    r = np.empty((idx.size, n_samples), dtype=np.int8)
    s = np.empty((idx.size, n_samples), dtype=np.int8)
    for i in range(n_samples):
        r[:, i] = 1 - 2 * ((idx >> (2 * i)) & 1)
        s[:, i] = 1 - 2 * ((idx >> (2 * i + 1)) & 1)

    alpha = a * u - b * v
    gamma_arg = a * v + b * u
    weights = np.prod(q_function(-r * alpha[None, :]), axis=1) * np.prod(
        q_function(-s * gamma_arg[None, :]), axis=1
    )

    root = math.sqrt(trace)
    w1 = (r @ u + s @ v) / root
    w2 = (s @ u - r @ v) / root
    t = w1 * w1 + w2 * w2

    mean = np.array([weights @ w1, weights @ w2])
    centered = np.stack([w1, w2], axis=1) - mean
    cov = (centered * weights[:, None]).T @ centered

    order = np.argsort(t, kind="stable")
    return ExactRaoDistribution(
        t_values=t[order], weights=weights[order], w_mean=mean, w_cov=cov
    )
