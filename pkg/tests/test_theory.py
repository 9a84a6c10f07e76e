"""Distribution theory: Q function, null/non-null laws, Imhof inversion, FIM."""

import math

import numpy as np
import pytest
from scipy import integrate, stats
from scipy.special import ive

from onebitradar.montecarlo import enumerate_exact
from onebitradar.scene import SceneConfig, beta_from_snr, spatial_signature
from onebitradar.theory import (
    GaussianApprox,
    WeightedChiSquareSpec,
    fim_infbit_null,
    fim_onebit_null,
    gaussian_moments,
    glrt_noncentrality,
    glrt_pd,
    imhof_ccdf,
    log_q,
    loss_db,
    noncentral_chi2_ccdf,
    q_function,
    rao_lowsnr_noncentrality,
    rao_pd_imhof,
    rao_pd_lowsnr,
    rao_pfa,
    rao_threshold,
    rao_weighted_spec,
    sample_compensation_factor,
    weighted_spec_from_moments,
)


# ---------------------------------------------------------------------------
# Q function
# ---------------------------------------------------------------------------


def test_q_at_zero_is_half():
    assert q_function(0.0) == 0.5


def test_q_symmetry():
    for x in (0.1, 0.7, 2.3, 5.0):
        assert q_function(x) + q_function(-x) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("x", [0.5, 1.0, 2.0])
def test_q_against_density_quadrature(x):
    oracle, _ = integrate.quad(
        lambda t: math.exp(-t * t / 2.0) / math.sqrt(2.0 * math.pi), x, np.inf
    )
    assert q_function(x) == pytest.approx(oracle, abs=1e-13)


def test_log_q_matches_log_of_q():
    for x in (-2.0, 0.0, 1.5, 4.0):
        assert log_q(x) == pytest.approx(math.log(q_function(x)), abs=1e-12)


def test_log_q_deep_tail_is_finite():
    # q_function underflows to 0 near x = 39; log_q must not.
    val = log_q(40.0)
    assert math.isfinite(val)
    assert val < -700.0


# ---------------------------------------------------------------------------
# Null law / threshold
# ---------------------------------------------------------------------------


def test_rao_pfa_at_zero_threshold():
    assert rao_pfa(0.0) == 1.0


def test_rao_threshold_reference_values():
    assert rao_threshold(1e-3) == pytest.approx(13.815511, abs=1e-6)
    assert rao_threshold(math.exp(-1.0)) == pytest.approx(2.0, abs=1e-14)


def test_rao_pfa_threshold_roundtrip():
    for pfa in (0.5, 1e-2, 1e-3, 1e-6):
        assert rao_pfa(rao_threshold(pfa)) == pytest.approx(pfa, rel=1e-12)


def test_rao_pfa_accepts_arrays():
    gammas = np.array([0.0, 2.0, 13.815510557964274])
    np.testing.assert_allclose(
        rao_pfa(gammas), [1.0, math.exp(-1.0), 1e-3], rtol=1e-12
    )


def test_rao_pfa_rejects_negative_threshold():
    with pytest.raises(ValueError):
        rao_pfa(-0.1)


def test_rao_threshold_rejects_bad_pfa():
    for pfa in (0.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            rao_threshold(pfa)


# ---------------------------------------------------------------------------
# gaussian_moments
# ---------------------------------------------------------------------------


def test_moments_null_case_exact():
    Z = spatial_signature(SceneConfig(m=4, p=4, n=32))
    approx = gaussian_moments(Z, 0j)
    np.testing.assert_array_equal(approx.mean, np.zeros(2))
    np.testing.assert_array_equal(approx.cov, np.eye(2))


def test_moments_single_sample_closed_form():
    # z = 1, beta = a real: c = 1 - 2Q(a), d = 0
    a = 0.8
    approx = gaussian_moments(np.array([[1.0 + 0j]]), a)
    c = 1.0 - 2.0 * q_function(a)
    np.testing.assert_allclose(approx.mean, [c, 0.0], atol=1e-15)
    np.testing.assert_allclose(
        approx.cov, [[1.0 - c * c, 0.0], [0.0, 1.0]], atol=1e-15
    )


def test_moments_match_bruteforce_enumeration_n2():
    # Independent oracle: enumerate all 16 sign patterns with plain loops.
    Z = spatial_signature(SceneConfig(m=1, p=1, n=2))
    beta = 0.3 + 0.2j
    z = Z.ravel()
    u, v = z.real, z.imag
    a, b = beta.real, beta.imag
    root = math.sqrt(float(np.sum(u * u + v * v)))
    mean = np.zeros(2)
    second = np.zeros((2, 2))
    total = 0.0
    for r1 in (-1, 1):
        for s1 in (-1, 1):
            for r2 in (-1, 1):
                for s2 in (-1, 1):
                    r = np.array([r1, r2], dtype=float)
                    s = np.array([s1, s2], dtype=float)
                    prob = 1.0
                    for i in range(2):
                        prob *= q_function(-r[i] * (a * u[i] - b * v[i]))
                        prob *= q_function(-s[i] * (a * v[i] + b * u[i]))
                    w = np.array([np.dot(r, u) + np.dot(s, v),
                                  np.dot(s, u) - np.dot(r, v)]) / root
                    total += prob
                    mean += prob * w
                    second += prob * np.outer(w, w)
    assert total == pytest.approx(1.0, abs=1e-14)
    cov = second - np.outer(mean, mean)
    approx = gaussian_moments(Z, beta)
    np.testing.assert_allclose(approx.mean, mean, atol=1e-13)
    np.testing.assert_allclose(approx.cov, cov, atol=1e-13)


def test_moments_quadratic_shrinkage_toward_null():
    # u_w is O(|beta|) and cov - I is O(|beta|^2): halving beta should scale
    # them by ~2 and ~4 respectively.
    Z = spatial_signature(SceneConfig(m=2, p=2, n=8))
    beta = 0.05 * np.exp(0.9j)
    full = gaussian_moments(Z, beta)
    half = gaussian_moments(Z, beta / 2)
    mean_ratio = np.linalg.norm(full.mean) / np.linalg.norm(half.mean)
    cov_ratio = np.max(np.abs(full.cov - np.eye(2))) / np.max(
        np.abs(half.cov - np.eye(2))
    )
    assert 1.98 < mean_ratio < 2.02
    assert 3.9 < cov_ratio < 4.1


def test_moments_reject_degenerate_inputs():
    with pytest.raises(ValueError):
        gaussian_moments(np.zeros((2, 2), dtype=complex), 1.0)
    with pytest.raises(ValueError):
        gaussian_moments(np.array([[1.0 + 0j]]), complex("nan"))


# ---------------------------------------------------------------------------
# weighted_spec_from_moments
# ---------------------------------------------------------------------------


def test_spec_identity_covariance():
    mu = 1.7
    spec = weighted_spec_from_moments(
        GaussianApprox(mean=np.array([mu, 0.0]), cov=np.eye(2))
    )
    np.testing.assert_array_equal(spec.weights, [1.0, 1.0])
    np.testing.assert_array_equal(spec.dofs, [1, 1])
    np.testing.assert_allclose(spec.noncentralities, [mu * mu, 0.0], atol=1e-15)


def test_spec_diagonal_covariance_sorted_descending():
    for diag in ([0.9, 0.8], [0.8, 0.9]):
        spec = weighted_spec_from_moments(
            GaussianApprox(mean=np.zeros(2), cov=np.diag(diag))
        )
        np.testing.assert_allclose(spec.weights, [0.9, 0.8], atol=1e-15)
        np.testing.assert_array_equal(spec.noncentralities, [0.0, 0.0])


def test_spec_generic_reconstruction_identities():
    rng = np.random.default_rng(17)
    for _ in range(20):
        angle = rng.uniform(0, math.pi)
        rot = np.array([[math.cos(angle), -math.sin(angle)],
                        [math.sin(angle), math.cos(angle)]])
        lam_true = np.sort(rng.uniform(0.2, 2.0, size=2))[::-1]
        cov = rot @ np.diag(lam_true) @ rot.T
        mean = rng.normal(size=2)
        spec = weighted_spec_from_moments(GaussianApprox(mean=mean, cov=cov))
        # eigenvalues from the characteristic polynomial, descending
        np.testing.assert_allclose(spec.weights, lam_true, atol=1e-12)
        assert spec.weights[0] >= spec.weights[1] > 0
        assert np.all(spec.noncentralities >= 0)
        # orthogonality of the (internal) eigenbasis shows up as exact
        # preservation of the quadratic invariants
        assert spec.weights.sum() == pytest.approx(np.trace(cov), abs=1e-12)
        assert spec.weights.prod() == pytest.approx(np.linalg.det(cov), abs=1e-12)
        assert float(spec.weights @ spec.noncentralities) == pytest.approx(
            float(mean @ mean), abs=1e-12
        )
        # E[T] = tr(cov) + |mean|^2 must be reproduced by the weighted spec
        expected_mean = np.trace(cov) + mean @ mean
        spec_mean = float(spec.weights @ (spec.dofs + spec.noncentralities))
        assert spec_mean == pytest.approx(expected_mean, abs=1e-12)


def test_spec_rejects_non_positive_definite():
    with pytest.raises(ValueError):
        weighted_spec_from_moments(
            GaussianApprox(mean=np.zeros(2), cov=np.diag([1.0, -0.1]))
        )
    with pytest.raises(ValueError):
        weighted_spec_from_moments(
            GaussianApprox(mean=np.zeros(2), cov=np.diag([1.0, 0.0]))
        )


def test_spec_type_validation():
    with pytest.raises(ValueError):
        WeightedChiSquareSpec(weights=[1.0, -1.0], dofs=[1, 1],
                              noncentralities=[0.0, 0.0])
    with pytest.raises(ValueError):
        WeightedChiSquareSpec(weights=[1.0], dofs=[0], noncentralities=[0.0])
    with pytest.raises(ValueError):
        WeightedChiSquareSpec(weights=[1.0], dofs=[1], noncentralities=[-0.5])
    with pytest.raises(ValueError):
        WeightedChiSquareSpec(weights=[], dofs=[], noncentralities=[])


# ---------------------------------------------------------------------------
# imhof_ccdf
# ---------------------------------------------------------------------------


def _spec(weights, dofs, ncs):
    return WeightedChiSquareSpec(weights=np.asarray(weights, dtype=float),
                                 dofs=np.asarray(dofs),
                                 noncentralities=np.asarray(ncs, dtype=float))


def test_imhof_central_chi2_2():
    spec = _spec([1.0], [2], [0.0])
    assert imhof_ccdf(spec, 2.0) == pytest.approx(math.exp(-1.0), abs=1e-8)


def test_imhof_at_zero_is_one():
    spec = _spec([1.5, 0.5], [1, 1], [1.0, 4.0])
    assert imhof_ccdf(spec, 0.0) == 1.0


def test_imhof_matches_ncx2_two_term_unit_weights():
    # chi2_1(d2) + chi2_1(0) with unit weights is chi2_2(d2)
    for d2 in (0.5, 13.0):
        spec = _spec([1.0, 1.0], [1, 1], [d2, 0.0])
        for x in (0.1, 1.0, 5.0, 15.0, 40.0):
            assert imhof_ccdf(spec, x) == pytest.approx(
                noncentral_chi2_ccdf(2, d2, x), abs=1e-8
            )


@pytest.mark.parametrize("dof", [1, 2, 4])
@pytest.mark.parametrize("d2", [0.0, 1.0, 10.0])
def test_imhof_reduction_identity(dof, d2):
    spec = _spec([1.0], [dof], [d2])
    for x in np.linspace(0.2, 35.0, 12):
        assert imhof_ccdf(spec, x) == pytest.approx(
            noncentral_chi2_ccdf(dof, d2, x), abs=1e-8
        )


def test_imhof_two_term_against_sampling():
    # Reduced-size version of the sampling cross-check in the acceptance suite.
    spec = _spec([1.5, 0.5], [1, 1], [1.0, 4.0])
    rng = np.random.default_rng(2024)
    draws = 300_000
    samples = (
        1.5 * rng.noncentral_chisquare(1, 1.0, size=draws)
        + 0.5 * rng.noncentral_chisquare(1, 4.0, size=draws)
    )
    p_hat = np.mean(samples > 5.0)
    se = math.sqrt(p_hat * (1.0 - p_hat) / draws)
    assert abs(imhof_ccdf(spec, 5.0) - p_hat) <= 3.0 * se


def test_imhof_monotone_and_limits():
    scene = SceneConfig(m=2, p=2, n=16, beta=complex(beta_from_snr(-13.0)))
    spec = rao_weighted_spec(spatial_signature(scene), scene.beta)
    grid = np.linspace(0.0, 80.0, 161)
    values = np.array([imhof_ccdf(spec, x) for x in grid])
    assert np.all((values >= 0.0) & (values <= 1.0))
    assert np.all(np.diff(values) <= 1e-10)
    assert values[0] == 1.0
    assert imhof_ccdf(spec, 1e-9) == pytest.approx(1.0, abs=1e-7)
    assert imhof_ccdf(spec, 500.0) < 1e-6


# ---------------------------------------------------------------------------
# noncentral_chi2_ccdf
# ---------------------------------------------------------------------------


def test_ncx2_central_threshold_value():
    gamma = rao_threshold(1e-3)
    assert noncentral_chi2_ccdf(2, 0.0, gamma) == pytest.approx(1e-3, abs=1e-12)


def test_ncx2_at_zero_is_one():
    assert noncentral_chi2_ccdf(2, 5.0, 0.0) == 1.0
    assert noncentral_chi2_ccdf(1, 0.0, 0.0) == 1.0


def test_ncx2_against_density_quadrature():
    # density of chi2_f(d2) via the Bessel form, integrated numerically
    f, d2, x = 2, 5.0, 7.0

    def density(t):
        nu = f / 2.0 - 1.0
        root = math.sqrt(d2 * t)
        # exponentially-scaled Bessel keeps the integrand stable
        return (
            0.5
            * (t / d2) ** (nu / 2.0)
            * ive(nu, root)
            * math.exp(-((math.sqrt(t) - math.sqrt(d2)) ** 2) / 2.0)
        )

    oracle, err = integrate.quad(density, x, np.inf, epsabs=1e-13, epsrel=1e-12,
                                 limit=300)
    assert err < 1e-10
    assert noncentral_chi2_ccdf(f, d2, x) == pytest.approx(oracle, abs=1e-10)


@pytest.mark.parametrize("f,d2", [(1, 4.0), (2, 0.5), (2, 13.0), (4, 25.0), (7, 2.5)])
def test_ncx2_against_scipy(f, d2):
    xs = np.linspace(0.05, f + d2 + 40.0, 40)
    ours = noncentral_chi2_ccdf(f, d2, xs)
    theirs = stats.ncx2.sf(xs, f, d2)
    np.testing.assert_allclose(ours, theirs, atol=1e-12)


def test_ncx2_vectorized_and_validated():
    out = noncentral_chi2_ccdf(2, 1.0, np.array([0.0, 1.0, 10.0]))
    assert out.shape == (3,)
    assert np.all(np.diff(out) < 0)
    with pytest.raises(ValueError):
        noncentral_chi2_ccdf(0, 1.0, 1.0)
    with pytest.raises(ValueError):
        noncentral_chi2_ccdf(2, -1.0, 1.0)
    with pytest.raises(ValueError):
        noncentral_chi2_ccdf(2, 1.0, -1.0)


# ---------------------------------------------------------------------------
# Detection-probability helpers
# ---------------------------------------------------------------------------


def test_rao_pd_imhof_null_reduction():
    Z = spatial_signature(SceneConfig(m=2, p=2, n=8))
    for gamma in (0.5, 2.0, 13.8):
        assert rao_pd_imhof(Z, 0j, gamma) == pytest.approx(rao_pfa(gamma), abs=1e-8)


def test_rao_pd_imhof_tiny_scene_vs_enumeration():
    # N = 2: the exact law is atomic on {0, 2, 4}, so the Gaussian
    # approximation is necessarily crude.  The bounds below are the errors
    # observed at implementation time (0.369 at the atoms, 0.152 between
    # them) with a little slack; the first two moments must agree exactly.
    Z = spatial_signature(SceneConfig(m=1, p=1, n=2))
    beta = 0.4 * np.exp(0.3j)
    exact = enumerate_exact(Z, beta)
    spec = rao_weighted_spec(Z, beta)

    exact_mean_t = float(exact.weights @ exact.t_values)
    spec_mean_t = float(spec.weights @ (spec.dofs + spec.noncentralities))
    assert spec_mean_t == pytest.approx(exact_mean_t, abs=1e-12)

    gammas = np.linspace(0.0, 8.0, 81)
    diffs = np.abs(rao_pd_imhof(Z, beta, gammas) - exact.ccdf(gammas))
    assert np.max(diffs) <= 0.40
    mids = np.array([1.0, 3.0])  # midpoints between the atoms {0, 2, 4}
    diffs_mid = np.abs(rao_pd_imhof(Z, beta, mids) - exact.ccdf(mids))
    assert np.max(diffs_mid) <= 0.17


def test_rao_pd_monotone_in_beta_modulus():
    Z = spatial_signature(SceneConfig(m=2, p=2, n=16))
    gamma = rao_threshold(1e-2)
    mods = [0.0, 0.1, 0.2, 0.4, 0.8]
    pds = [rao_pd_imhof(Z, m * np.exp(0.5j), gamma) for m in mods]
    assert np.all(np.diff(pds) > 0)
    pds_glrt = [glrt_pd(64, m * np.exp(0.5j), gamma) for m in mods]
    assert np.all(np.diff(pds_glrt) > 0)


def test_rao_lowsnr_null_reduction():
    for gamma in (0.0, 2.0, 13.8):
        assert rao_pd_lowsnr(512, 0j, gamma) == pytest.approx(
            math.exp(-gamma / 2.0), abs=1e-12
        )


def test_rao_lowsnr_consistent_with_imhof_at_low_snr():
    # N = 512 at SNR = -23 dB: the single-term law should track the full
    # weighted two-term law closely.
    beta = complex(beta_from_snr(-23.0))
    Z = spatial_signature(SceneConfig(m=4, p=4, n=128))
    for gamma in (5.0, 10.0, 13.815510557964274, 20.0):
        assert rao_pd_lowsnr(512, beta, gamma) == pytest.approx(
            rao_pd_imhof(Z, beta, gamma), abs=0.01
        )


def test_noncentrality_ratio_is_two_over_pi():
    for n_samples, beta in ((8, 0.3 + 0.1j), (512, complex(beta_from_snr(-23.0)))):
        ratio = rao_lowsnr_noncentrality(n_samples, beta) / glrt_noncentrality(
            n_samples, beta
        )
        assert ratio == pytest.approx(2.0 / math.pi, rel=1e-14)


def test_glrt_noncentrality_arithmetic():
    assert glrt_noncentrality(1024, 0.1) == pytest.approx(10.24, rel=1e-12)


def test_glrt_pd_null_reduction():
    for gamma in (0.5, 13.8):
        assert glrt_pd(64, 0j, gamma) == pytest.approx(rao_pfa(gamma), abs=1e-12)


# ---------------------------------------------------------------------------
# Fisher information
# ---------------------------------------------------------------------------


def test_fim_onebit_reference_scene():
    Z = spatial_signature(SceneConfig(m=4, p=4, n=32))
    np.testing.assert_allclose(
        fim_onebit_null(Z), (256.0 / math.pi) * np.eye(2), rtol=1e-12
    )


def test_fim_off_diagonals_are_zero():
    rng = np.random.default_rng(3)
    Z = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    F = fim_onebit_null(Z)
    assert F[0, 1] == 0.0 and F[1, 0] == 0.0
    assert F[0, 0] == F[1, 1]


def test_fim_matches_score_covariance_oracle():
    # Smaller sibling of acceptance #8: empirical covariance of the H0 score
    # over 2e5 one-bit draws.
    Z = spatial_signature(SceneConfig(m=1, p=1, n=3))
    z = Z.ravel()
    rng = np.random.default_rng(11)
    draws = 200_000
    noise = rng.standard_normal((draws, 3)) + 1j * rng.standard_normal((draws, 3))
    y = np.where(noise.real >= 0, 1.0, -1.0) + 1j * np.where(noise.imag >= 0, 1.0, -1.0)
    inner = y @ z.conj()
    scores = math.sqrt(2.0 / math.pi) * np.stack([inner.real, inner.imag], axis=1)
    emp = scores.T @ scores / draws
    F = fim_onebit_null(Z)
    # per-entry standard errors of the second-moment estimates
    prods = np.einsum("ti,tj->tij", scores, scores)
    se = prods.std(axis=0) / math.sqrt(draws)
    assert np.all(np.abs(emp - F) <= 3.0 * se)


def test_fim_ratio_to_infinite_precision():
    Z = spatial_signature(SceneConfig(m=2, p=2, n=8))
    ratio = fim_onebit_null(Z) @ np.linalg.inv(fim_infbit_null(Z))
    np.testing.assert_allclose(ratio, (2.0 / math.pi) * np.eye(2), rtol=1e-12)
    # the infinite-precision block itself is N * I under the sigma^2 = 2 convention
    np.testing.assert_allclose(fim_infbit_null(Z), 16.0 * np.eye(2), rtol=1e-12)


# ---------------------------------------------------------------------------
# Loss constants
# ---------------------------------------------------------------------------


def test_loss_constants():
    assert loss_db() == pytest.approx(1.9612, abs=5e-5)
    assert sample_compensation_factor() == pytest.approx(1.570796, abs=5e-7)
    assert math.log2(sample_compensation_factor()) == pytest.approx(0.6515, abs=5e-5)
