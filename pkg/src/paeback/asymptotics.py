"""Closed-form large-sample machinery for AR forecasts: the one-step
coefficient recursion a1, multi-step forecast variances, coefficient
Jacobians, theoretical autocovariances, the constants A and B, the
asymptotic predictive ratio, and the optimal development size.

A is the irreducible part of the forecast risk over the horizon; B scales
the estimation-error contribution, which decays like 1/k in the development
size. Their ratio depends on the AR coefficients only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, toeplitz

from .ar import companion_matrix, is_stationary, yule_walker_fit
from .errors import DataError, FitError
from .series import TimeSeries

__all__ = [
    "AsymptoticReport",
    "IrrelevancySpec",
    "a1_sequence",
    "forecast_variance",
    "coefficient_jacobian",
    "theoretical_gamma",
    "ab_ratio",
    "asymptotic_rp",
    "optimal_k",
    "lambda_for_fraction",
    "amse_per_step",
    "estimate_ab_ratio",
]


def a1_sequence(phi, h: int) -> np.ndarray:
    """Leading forecast coefficients a1(0..h-1).

    a1(j) is the weight of the latest observation in the j-step-ahead linear
    predictor: a1(0) = 1 and a1(j) = sum_i phi_i a1(j-i) with a1(<0) = 0.
    """
    if h < 1:
        raise DataError(f"horizon must be >= 1, got {h}")
    phi = np.asarray(phi, dtype=float)
    p = phi.size
    a = np.zeros(h)
    a[0] = 1.0
    for j in range(1, h):
        m = min(j, p)
        a[j] = np.dot(phi[:m], a[j - 1 : j - 1 - m : -1] if j - 1 - m >= 0 else a[j - 1 :: -1][:m])
    return a


def forecast_variance(phi, sigma2: float, h: int) -> float:
    """Variance of the h-step linear forecast error:
    sigma^2 * sum_{j=0}^{h-1} a1(j)^2."""
    if not sigma2 > 0:
        raise DataError("sigma2 must be positive")
    a = a1_sequence(phi, h)
    return float(sigma2 * np.dot(a, a))


def coefficient_jacobian(phi, h: int) -> np.ndarray:
    """Exact Jacobian M_h[i][j] = d a_i(h) / d phi_j of the h-step
    forecast-coefficient vector.

    With F the companion matrix (first row phi) the coefficient vector is
    a(h)' = e1' F^h, so dF^h/dphi_j telescopes into
    M_h = sum_{s=0}^{h-1} a1(s) (F^{h-1-s})'.
    """
    phi = np.asarray(phi, dtype=float)
    p = phi.size
    if p < 1:
        raise DataError("need at least one coefficient")
    if h < 1:
        raise DataError(f"horizon must be >= 1, got {h}")
    F = companion_matrix(phi)
    a1 = a1_sequence(phi, h)
    M = np.zeros((p, p))
    power = np.eye(p)                     # F^0, then F^1, ...
    for s in range(h):
        M += a1[h - 1 - s] * power.T
        if s < h - 1:
            power = power @ F
    return M


def theoretical_gamma(phi, sigma2: float, p: int) -> np.ndarray:
    """p x p Toeplitz matrix of theoretical autocovariances of the AR
    process, from the extended Yule-Walker linear system."""
    phi = np.asarray(phi, dtype=float)
    if not is_stationary(phi):
        raise DataError("coefficients are not stationary")
    if not sigma2 > 0:
        raise DataError("sigma2 must be positive")
    if p < 1:
        raise DataError("Gamma dimension must be >= 1")
    q = phi.size
    if q == 0:
        return sigma2 * np.eye(p)
    # Solve for gamma(0..q): gamma(j) - sum_i phi_i gamma(|j-i|) = sigma2 * 1(j=0).
    A = np.eye(q + 1)
    for j in range(q + 1):
        for i in range(1, q + 1):
            A[j, abs(j - i)] -= phi[i - 1]
    rhs = np.zeros(q + 1)
    rhs[0] = sigma2
    g = np.linalg.solve(A, rhs)
    if p > q + 1:
        g = np.concatenate([g, np.zeros(p - (q + 1))])
        for j in range(q + 1, p):
            g[j] = np.dot(phi, g[j - 1 : j - 1 - q : -1] if j - 1 - q >= 0 else g[j - 1 :: -1][:q])
    return toeplitz(g[:p])


@dataclass(frozen=True)
class AsymptoticReport:
    """All intermediates of the A/B computation for one (phi, sigma2, h)."""

    phi: tuple
    sigma2: float
    h: int
    a1: tuple
    sigma_h2: tuple
    traces: tuple
    A: float
    B: float
    ratio: float

    @property
    def p(self) -> int:
        return len(self.phi)

    def to_dict(self) -> dict:
        return {
            "phi": list(self.phi),
            "sigma2": self.sigma2,
            "h": self.h,
            "a1": list(self.a1),
            "sigma_h2": list(self.sigma_h2),
            "traces": list(self.traces),
            "A": self.A,
            "B": self.B,
            "ratio": self.ratio,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class IrrelevancySpec:
    """Tolerated relative efficiency loss epsilon_n and its n-scaled limit
    lambda = n * epsilon_n."""

    epsilon_n: float
    lam: float

    def __post_init__(self):
        if self.epsilon_n < 0:
            raise DataError("epsilon_n must be >= 0")

    @classmethod
    def from_lambda(cls, lam: float, n: int) -> "IrrelevancySpec":
        return cls(epsilon_n=lam / n, lam=lam)

    @classmethod
    def from_epsilon(cls, epsilon_n: float, n: int) -> "IrrelevancySpec":
        return cls(epsilon_n=epsilon_n, lam=n * epsilon_n)


def ab_ratio(phi, sigma2: float, h: int) -> AsymptoticReport:
    """Assemble A = sum_j sigma_j^2, B = sigma^2 sum_j tr(M_j' Gamma^-1 M_j Gamma),
    and their ratio. The ratio is invariant to sigma2 (both terms scale with it)."""
    phi = np.asarray(phi, dtype=float)
    p = phi.size
    if p < 1:
        raise DataError("need at least one AR coefficient")
    if not is_stationary(phi):
        raise DataError("coefficients are not stationary")
    a1 = a1_sequence(phi, h)
    sigma_h2 = sigma2 * np.cumsum(a1**2)
    gamma = theoretical_gamma(phi, sigma2, p)
    factor = cho_factor(gamma)
    traces = np.empty(h)
    for j in range(1, h + 1):
        M = coefficient_jacobian(phi, j)
        traces[j - 1] = float(np.sum(M * cho_solve(factor, M @ gamma)))
    A = float(np.sum(sigma_h2))
    B = float(sigma2 * np.sum(traces))
    return AsymptoticReport(
        phi=tuple(float(v) for v in phi),
        sigma2=float(sigma2),
        h=int(h),
        a1=tuple(a1),
        sigma_h2=tuple(sigma_h2),
        traces=tuple(traces),
        A=A,
        B=B,
        ratio=A / B,
    )


def asymptotic_rp(k: int, n: int, report: AsymptoticReport) -> float:
    """Asymptotic predictive ratio Ar_p(k) = 1 + (n/k - 1) / (1 + n A/B).

    Always >= 1, strictly decreasing in k, and exactly 1 at k = n.
    """
    if not 1 <= k <= n:
        raise DataError(f"need 1 <= k <= n, got k={k}, n={n}")
    return 1.0 + (n / k - 1.0) / (1.0 + n * report.ratio)


def optimal_k(n: int, lam: float, report: AsymptoticReport) -> int:
    """Smallest development size meeting the asymptotic efficiency bound:
    ceil of n / (1 + lambda A/B), clamped to [1, n]."""
    if not lam > 0:
        raise DataError("lambda must be positive")
    k = math.ceil(n / (1.0 + lam * report.ratio))
    return int(min(max(k, 1), n))


def lambda_for_fraction(fraction: float, report: AsymptoticReport) -> float:
    """Inverse of the optimal-size formula: the lambda for which
    k_opt / n equals the given fraction."""
    if not 0 < fraction <= 1:
        raise DataError("fraction must be in (0, 1]")
    return (1.0 / fraction - 1.0) / report.ratio


def amse_per_step(k: int, report: AsymptoticReport) -> float:
    """Asymptotic mean per-step squared forecast error (A + B/k) / h,
    matching the expectation of the horizon-averaged squared error."""
    if k < 1:
        raise DataError("k must be >= 1")
    return (report.A + report.B / k) / report.h


def estimate_ab_ratio(series: TimeSeries, p: int, h: int) -> AsymptoticReport:
    """Plug-in A/B estimate: Yule-Walker fit at order p, then the closed-form
    ratio with Gamma built from the fitted coefficients."""
    model = yule_walker_fit(series, p)
    if p < 1:
        raise DataError("need order p >= 1 to estimate the ratio")
    if not is_stationary(model.phi):
        raise FitError("fitted coefficients are not stationary")
    return ab_ratio(model.phi_array, model.sigma2, h)
