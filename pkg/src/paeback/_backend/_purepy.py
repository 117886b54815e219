"""Pure NumPy implementations of the numerical kernels.

These are the reference semantics for the compiled core in ``_core.pyx``;
the package falls back to this module when the extension is unavailable.
Status codes instead of exceptions keep the hot loops allocation-free:
0 = ok, 1 = degenerate (zero variance, non-finite, or an unstable
reflection coefficient).
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def autocov(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased (1/n) sample autocovariances gamma(0..max_lag), de-meaned."""
    x = np.asarray(x, dtype=float)
    n = x.size
    xc = x - x.mean()
    g = np.empty(max_lag + 1)
    for j in range(max_lag + 1):
        g[j] = np.dot(xc[: n - j], xc[j:]) / n
    return g


def levinson(gamma: np.ndarray, p: int):
    """Levinson-Durbin solve of the order-p Toeplitz system.

    Returns ``(phi, sigma2, status)``; on nonzero status the outputs are
    whatever partial state the recursion reached and must not be used.
    """
    gamma = np.asarray(gamma, dtype=float)
    phi = np.zeros(p)
    g0 = gamma[0]
    if not (np.isfinite(g0) and g0 > 0.0):
        return phi, 0.0, 1
    sigma2 = g0
    for m in range(p):
        acc = gamma[m + 1] - np.dot(phi[:m], gamma[m:0:-1])
        kappa = acc / sigma2
        if not (np.isfinite(kappa) and abs(kappa) < 1.0):
            return phi, sigma2, 1
        phi[:m] = phi[:m] - kappa * phi[:m][::-1]
        phi[m] = kappa
        sigma2 *= 1.0 - kappa * kappa
        if not sigma2 > 0.0:
            return phi, sigma2, 1
    return phi, sigma2, 0


def ar_forecast(phi: np.ndarray, tail: np.ndarray, h: int) -> np.ndarray:
    """Recursive h-step forecast from the de-meaned last-p values ``tail``
    (oldest first). Forecast t uses the p previous entries of the extended
    path, so observations feed in while t <= p and forecasts after."""
    phi = np.asarray(phi, dtype=float)
    p = phi.size
    buf = np.concatenate([np.asarray(tail, dtype=float), np.zeros(h)])
    for t in range(h):
        buf[p + t] = np.dot(phi, buf[t : p + t][::-1]) if p else 0.0
    return buf[p:].copy()


def oracle_forecasts(x: np.ndarray, n: int, h: int, p: int, ks: np.ndarray):
    """Yule-Walker fit + forecast on the most recent k points, for each k.

    Each window is centered by its own sample mean before fitting and the
    mean is restored on the forecasts. Returns ``(forecasts, sigma2s,
    status)`` with one row/entry per k.
    """
    x = np.asarray(x, dtype=float)
    ks = np.asarray(ks, dtype=np.int64)
    m = ks.size
    fc = np.full((m, h), np.nan)
    sig = np.full(m, np.nan)
    status = np.zeros(m, dtype=np.int64)
    for i, k in enumerate(ks):
        window = x[n - k : n]
        mu = window.mean()
        g = autocov(window, p)
        phi, s2, st = levinson(g, p)
        if st:
            status[i] = 1
            continue
        tail = window[k - p :] - mu if p else np.empty(0)
        fc[i] = ar_forecast(phi, tail, h) + mu
        sig[i] = s2
    return fc, sig, status


def fukuchi_risks(x: np.ndarray, n: int, h: int, p: int, ks: np.ndarray):
    """Mean squared forecast risk over every placement of a length-k window.

    For window size k there are n-k-h+1 placements; each fits on the window
    and scores the following h points. Placements with degenerate fits are
    skipped; status 1 marks a k where every placement failed.
    """
    x = np.asarray(x, dtype=float)
    ks = np.asarray(ks, dtype=np.int64)
    m = ks.size
    risks = np.full(m, np.nan)
    status = np.zeros(m, dtype=np.int64)
    for i, k in enumerate(ks):
        total = 0.0
        count = 0
        for left in range(n - k - h + 1):
            window = x[left : left + k]
            mu = window.mean()
            g = autocov(window, p)
            phi, _, st = levinson(g, p)
            if st:
                continue
            tail = window[k - p :] - mu if p else np.empty(0)
            fc = ar_forecast(phi, tail, h) + mu
            err = x[left + k : left + k + h] - fc
            total += np.mean(err**2)
            count += 1
        if count == 0:
            status[i] = 1
        else:
            risks[i] = total / count
    return risks, status


def _soft(a, b):
    return np.sign(a) * np.maximum(np.abs(a) - b, 0.0)


def cd_enet(G, c, w, l1, l2, phi, tol, max_sweeps, check_objective=False):
    """Cyclic coordinate descent for
    ``||y - Z phi||^2 + l2 ||phi||^2 + l1 sum_j w_j |phi_j|``
    in Gram form (G = Z'Z, c = Z'y). ``phi`` is updated in place.

    Returns ``(n_sweeps, converged)``. With ``check_objective`` the Gram-form
    objective is asserted non-increasing after every sweep (debug aid).
    """
    G = np.asarray(G, dtype=float)
    c = np.asarray(c, dtype=float)
    w = np.asarray(w, dtype=float)
    p = phi.size
    diag = np.diag(G)

    def objective():
        return (phi @ G @ phi - 2.0 * np.dot(c, phi)
                + l2 * np.dot(phi, phi) + l1 * np.dot(w, np.abs(phi)))

    prev_obj = objective() if check_objective else None
    for sweep in range(1, max_sweeps + 1):
        delta = 0.0
        for j in range(p):
            rho = c[j] - np.dot(G[j], phi) + diag[j] * phi[j]
            denom = diag[j] + l2
            new = _soft(rho, 0.5 * l1 * w[j]) / denom if denom > 0.0 else 0.0
            d = abs(new - phi[j])
            if d > delta:
                delta = d
            phi[j] = new
        if check_objective:
            obj = objective()
            scale = max(1.0, abs(prev_obj))
            assert obj <= prev_obj + 1e-10 * scale, "objective increased"
            prev_obj = obj
        if delta < tol:
            return sweep, True
    return max_sweeps, False


def sw_scores(Z, y, w, l1s, l2s, factors, start_row, tol, max_sweeps):
    """Leave-future-out one-step scores for a grid of penalty settings.

    Row i (i >= start_row) is predicted from a fit on rows [0, i); the
    squared errors are averaged per grid point. All grid points share the
    incrementally updated Gram matrix and are re-converged (warm started,
    vectorized across the grid) after each row is absorbed.

    Returns ``(scores, ses)``: mean squared one-step error per grid point
    and the Monte Carlo standard error of that mean across scored rows.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    l1s = np.asarray(l1s, dtype=float)
    l2s = np.asarray(l2s, dtype=float)
    factors = np.asarray(factors, dtype=float)
    k_m, p = Z.shape
    m = l1s.size
    thr = 0.5 * np.outer(l1s, w)          # (m, p) soft thresholds
    Phi = np.zeros((m, p))
    Zs = Z[:start_row]
    G = Zs.T @ Zs
    cvec = Zs.T @ y[:start_row]
    sse = np.zeros(m)
    sse2 = np.zeros(m)
    count = 0

    def converge():
        for _ in range(max_sweeps):
            delta = 0.0
            for j in range(p):
                rho = cvec[j] - Phi @ G[:, j] + Phi[:, j] * G[j, j]
                denom = G[j, j] + l2s
                new = np.where(denom > 0.0, _soft(rho, thr[:, j]) / np.where(denom > 0.0, denom, 1.0), 0.0)
                d = np.max(np.abs(new - Phi[:, j]))
                if d > delta:
                    delta = d
                Phi[:, j] = new
            if delta < tol:
                break

    for i in range(start_row, k_m):
        converge()
        pred = factors * (Phi @ Z[i])
        sq = (y[i] - pred) ** 2
        sse += sq
        sse2 += sq**2
        count += 1
        G += np.outer(Z[i], Z[i])
        cvec += y[i] * Z[i]
    scores = sse / count
    var = np.maximum(sse2 / count - scores**2, 0.0)
    ses = np.sqrt(var / count)
    return scores, ses
