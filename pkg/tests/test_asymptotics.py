import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import solve_discrete_lyapunov

from conftest import AR5_PHI, random_stationary_phi, simulate_ar
from paeback._backend import kernels
from paeback.ar import companion_matrix
from paeback.asymptotics import (
    IrrelevancySpec,
    a1_sequence,
    ab_ratio,
    amse_per_step,
    asymptotic_rp,
    coefficient_jacobian,
    estimate_ab_ratio,
    forecast_variance,
    lambda_for_fraction,
    optimal_k,
    theoretical_gamma,
)
from paeback.errors import DataError
from paeback.series import TimeSeries


def companion_a1(phi, h):
    """Independent oracle: a1(j) = e1' F^j e1 by repeated companion products."""
    F = companion_matrix(np.asarray(phi, float))
    out = np.empty(h)
    v = np.zeros(len(phi))
    v[0] = 1.0  # e1 row propagated backwards
    out[0] = 1.0
    row = np.eye(len(phi))[0]
    for j in range(1, h):
        row = row @ F
        out[j] = row[0]
    return out


class TestA1Sequence:
    def test_leading_values(self):
        a = a1_sequence([0.3, 0.2], 3)
        assert a[0] == 1.0
        assert a[1] == pytest.approx(0.3)
        assert a[2] == pytest.approx(0.3**2 + 0.2)

    def test_ar5_hand_values(self):
        a = a1_sequence(AR5_PHI, 3)
        np.testing.assert_allclose(a, [1.0, 0.5, -0.15], atol=1e-15)

    @given(st.integers(1, 8), st.integers(1, 12), st.integers(0, 9999))
    @settings(max_examples=60, deadline=None)
    def test_matches_companion_powering(self, p, h, seed):
        rng = np.random.default_rng(seed)
        phi = random_stationary_phi(rng, p)
        np.testing.assert_allclose(a1_sequence(phi, h), companion_a1(phi, h), atol=1e-10)


class TestForecastVariance:
    def test_h1_is_sigma2(self):
        assert forecast_variance([0.7], 2.5, 1) == 2.5

    def test_ar1_hand_sum(self):
        assert forecast_variance([0.5], 1.0, 3) == pytest.approx(1.3125)

    def test_pure_noise(self):
        assert forecast_variance([0.0, 0.0], 1.7, 5) == pytest.approx(1.7)

    def test_monte_carlo_cross_check(self):
        # 3-step forecast errors with the TRUE coefficients have variance
        # sigma_3^2 = 1.3125 for AR(1) phi=0.5.
        rng = np.random.default_rng(77)
        reps, warm = 4000, 60
        errs = np.empty(reps)
        for r in range(reps):
            eps = rng.standard_normal(warm + 3)
            path = np.zeros(warm + 3)
            for t in range(1, warm + 3):
                path[t] = 0.5 * path[t - 1] + eps[t]
            pred = 0.5**3 * path[warm - 1]
            errs[r] = path[warm + 2] - pred
        var = errs.var()
        se = 1.3125 * np.sqrt(2.0 / reps)
        assert var == pytest.approx(1.3125, abs=3 * se)


class TestCoefficientJacobian:
    def test_m1_identity(self):
        np.testing.assert_array_equal(coefficient_jacobian(AR5_PHI, 1), np.eye(5))

    def test_m2_structure(self):
        phi = np.asarray(AR5_PHI)
        M2 = coefficient_jacobian(phi, 2)
        expected = companion_matrix(phi).T + phi[0] * np.eye(5)
        np.testing.assert_allclose(M2, expected, atol=1e-15)
        # explicit corners: first row (2 phi1, 1, 0, 0, 0); last row (phi5, 0, 0, 0, phi1)
        np.testing.assert_allclose(M2[0], [2 * 0.5, 1, 0, 0, 0], atol=1e-15)
        np.testing.assert_allclose(M2[4], [0.1, 0, 0, 0, 0.5], atol=1e-15)

    @given(st.integers(1, 8), st.integers(1, 6), st.integers(0, 9999))
    @settings(max_examples=40, deadline=None)
    def test_matches_finite_differences(self, p, h, seed):
        rng = np.random.default_rng(seed)
        phi = random_stationary_phi(rng, p)
        M = coefficient_jacobian(phi, h)
        step = 1e-6
        FD = np.zeros((p, p))
        for j in range(p):
            e = np.zeros(p)
            e[j] = step
            hi = np.linalg.matrix_power(companion_matrix(phi + e), h)[0]
            lo = np.linalg.matrix_power(companion_matrix(phi - e), h)[0]
            FD[:, j] = (hi - lo) / (2 * step)
        np.testing.assert_allclose(M, FD, atol=1e-6)


class TestTheoreticalGamma:
    def test_white_noise(self):
        np.testing.assert_array_equal(theoretical_gamma([], 2.0, 3), 2.0 * np.eye(3))
        np.testing.assert_allclose(theoretical_gamma([0.0, 0.0], 2.0, 2), 2.0 * np.eye(2))

    def test_ar1_closed_form(self):
        G = theoretical_gamma([0.5], 1.0, 2)
        assert G[0, 0] == pytest.approx(4.0 / 3.0, rel=1e-12)
        assert G[0, 1] == pytest.approx(2.0 / 3.0, rel=1e-12)

    def test_matches_lyapunov_oracle(self):
        rng = np.random.default_rng(4)
        for p in (1, 2, 4, 6):
            phi = random_stationary_phi(rng, p)
            F = companion_matrix(phi)
            Q = np.zeros((p, p))
            Q[0, 0] = 1.7
            np.testing.assert_allclose(
                theoretical_gamma(phi, 1.7, p), solve_discrete_lyapunov(F, Q), atol=1e-10
            )

    def test_ar5_against_long_simulation(self):
        ts = simulate_ar(AR5_PHI, 1_000_000, seed=20)
        g_hat = kernels.autocov(ts.values, 4)
        G = theoretical_gamma(AR5_PHI, 1.0, 5)
        assert np.max(np.abs(G[0] - g_hat)) / G[0, 0] < 0.01

    def test_spd_for_random_stationary(self):
        rng = np.random.default_rng(8)
        for p in (1, 3, 5, 7):
            phi = random_stationary_phi(rng, p)
            G = theoretical_gamma(phi, 1.0, p)
            np.testing.assert_allclose(G, G.T, atol=1e-12)
            assert np.all(np.linalg.eigvalsh(G) > 0)

    def test_nonstationary_rejected(self):
        with pytest.raises(DataError):
            theoretical_gamma([1.0], 1.0, 1)

    def test_dimension_beyond_order(self):
        G = theoretical_gamma([0.5], 1.0, 4)
        assert G.shape == (4, 4)
        assert G[0, 3] == pytest.approx((4.0 / 3.0) * 0.5**3, rel=1e-12)


class TestAbRatio:
    def test_h1_ratio_is_one_over_p(self):
        rng = np.random.default_rng(10)
        for p in (1, 2, 5):
            phi = random_stationary_phi(rng, p)
            rep = ab_ratio(phi, 1.0, 1)
            assert rep.traces[0] == pytest.approx(p, rel=1e-12)
            assert rep.ratio == pytest.approx(1.0 / p, rel=1e-12)

    def test_sigma2_invariance(self):
        r1 = ab_ratio(np.asarray(AR5_PHI), 1.0, 3)
        r4 = ab_ratio(np.asarray(AR5_PHI), 4.0, 3)
        assert abs(r1.ratio - r4.ratio) < 1e-12
        assert r4.A == pytest.approx(4.0 * r1.A, rel=1e-12)
        assert r4.B == pytest.approx(4.0 * r1.B, rel=1e-12)

    def test_a_numerator_ar5(self):
        rep = ab_ratio(np.asarray(AR5_PHI), 1.0, 3)
        assert rep.A == pytest.approx(3.5225, abs=1e-10)
        np.testing.assert_allclose(rep.sigma_h2, [1.0, 1.25, 1.2725], atol=1e-12)

    def test_sigma_h2_nondecreasing(self):
        rep = ab_ratio(np.asarray(AR5_PHI), 1.0, 8)
        assert np.all(np.diff(rep.sigma_h2) >= 0)

    def test_regression_pins(self):
        # Regression anchors for this implementation, themselves validated by
        # the finite-difference / Lyapunov / companion oracles above.
        rep5 = ab_ratio(np.asarray(AR5_PHI), 1.0, 3)
        assert rep5.ratio == pytest.approx(0.15848226845, abs=1e-9)
        rep2 = ab_ratio(np.array([-0.2446, 0.0571]), 1.0, 3)
        assert rep2.A == pytest.approx(3.1333307, abs=1e-6)
        assert rep2.traces[1] == pytest.approx(1.4991604, abs=1e-6)

    def test_json_has_all_intermediates(self):
        rep = ab_ratio(np.asarray(AR5_PHI), 1.0, 3)
        d = json.loads(rep.to_json())
        for key in ("phi", "h", "a1", "sigma_h2", "traces", "A", "B", "ratio"):
            assert key in d
        assert len(d["a1"]) == 3 and len(d["traces"]) == 3


class TestRatioCurve:
    def setup_method(self):
        self.rep = ab_ratio(np.asarray(AR5_PHI), 1.0, 3)

    def test_equals_one_at_n(self):
        assert asymptotic_rp(1000, 1000, self.rep) == 1.0

    def test_formula_example(self):
        class Fixed:
            ratio = 0.1525
        val = asymptotic_rp(300, 1000, Fixed())
        assert val == pytest.approx(1.0 + (1000 / 300 - 1) / (1 + 1000 * 0.1525), rel=1e-12)
        assert val == pytest.approx(1.0152, abs=1e-4)

    def test_strictly_decreasing(self):
        vals = [asymptotic_rp(k, 400, self.rep) for k in range(1, 401)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] == 1.0
        assert all(v >= 1.0 for v in vals)

    def test_large_ratio_limit(self):
        class Huge:
            ratio = 1e12
        assert asymptotic_rp(500, 1000, Huge()) == pytest.approx(1.0, abs=1e-9)

    def test_k_out_of_range(self):
        with pytest.raises(DataError):
            asymptotic_rp(0, 10, self.rep)


class TestOptimalK:
    def test_tiny_lambda_keeps_everything(self):
        rep = ab_ratio(np.asarray(AR5_PHI), 1.0, 3)
        assert optimal_k(1000, 1e-12, rep) == 1000

    def test_exact_arithmetic(self):
        class Fixed:
            ratio = 0.5
        assert optimal_k(1000, 2.0, Fixed()) == 500

    def test_clamped_to_one(self):
        class Fixed:
            ratio = 1e9
        assert optimal_k(100, 10.0, Fixed()) == 1

    def test_lambda_for_fraction_inverts(self):
        rep = ab_ratio(np.asarray(AR5_PHI), 1.0, 3)
        lam = lambda_for_fraction(0.4, rep)
        assert optimal_k(100_000, lam, rep) / 100_000 == pytest.approx(0.4, abs=1e-4)

    def test_irrelevancy_mapping(self):
        spec = IrrelevancySpec.from_lambda(5.0, 1000)
        assert spec.epsilon_n == pytest.approx(0.005)
        spec2 = IrrelevancySpec.from_epsilon(0.01, 500)
        assert spec2.lam == pytest.approx(5.0)


class TestEstimateAbRatio:
    def test_injected_coefficients_path(self):
        # plugging fitted coefficients straight into ab_ratio is the contract
        rep = ab_ratio(np.array([-0.2446, 0.0571]), 1.0, 3)
        assert rep.traces[0] == pytest.approx(2.0, rel=1e-12)

    def test_consistency_on_ar5(self):
        ts = simulate_ar(AR5_PHI, 100_000, seed=31)
        rep = estimate_ab_ratio(ts, 5, 3)
        exact = ab_ratio(np.asarray(AR5_PHI), 1.0, 3)
        assert rep.ratio == pytest.approx(exact.ratio, abs=0.01)

    def test_white_noise_h1(self):
        rng = np.random.default_rng(55)
        ts = TimeSeries(rng.standard_normal(5000))
        rep = estimate_ab_ratio(ts, 1, 1)
        assert rep.ratio == pytest.approx(1.0, rel=1e-12)


class TestAmseEndToEnd:
    def test_matches_monte_carlo_at_desk_scale(self):
        # Mean of the horizon-averaged squared error for Yule-Walker AR(5)
        # fits on the most recent k points, against (A + B/k)/h, within
        # 3 Monte Carlo standard errors at k in {50, 100, 200}.
        rep = ab_ratio(np.asarray(AR5_PHI), 1.0, 3)
        n, h = 1000, 3
        ks = np.array([50, 100, 200], dtype=np.int64)
        reps = 2000
        scores = np.empty((reps, ks.size))
        for r in range(reps):
            ts = simulate_ar(AR5_PHI, n + h, seed=600_000 + r)
            fc, _, status = kernels.oracle_forecasts(ts.values, n, h, 5, ks)
            assert not status.any()
            err = ts.values[n : n + h][None, :] - fc
            scores[r] = np.mean(err**2, axis=1)
        mean = scores.mean(axis=0)
        se = scores.std(axis=0, ddof=1) / np.sqrt(reps)
        for i, k in enumerate(ks):
            predicted = amse_per_step(int(k), rep)
            assert mean[i] == pytest.approx(predicted, abs=3 * se[i]), (
                f"k={k}: mc={mean[i]:.4f} vs amse={predicted:.4f} (se={se[i]:.4f})"
            )
