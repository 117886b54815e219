# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels. Reference semantics live in ``_purepy``;
the two must stay interchangeable."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, isfinite

cnp.import_array()

BACKEND_NAME = "compiled"


cdef void _autocov(const double* x, Py_ssize_t n, Py_ssize_t max_lag, double* out) noexcept nogil:
    cdef Py_ssize_t j, t
    cdef double mu = 0.0, acc
    for t in range(n):
        mu += x[t]
    mu /= n
    for j in range(max_lag + 1):
        acc = 0.0
        for t in range(n - j):
            acc += (x[t] - mu) * (x[t + j] - mu)
        out[j] = acc / n


def autocov(x, Py_ssize_t max_lag):
    """Biased (1/n) sample autocovariances gamma(0..max_lag), de-meaned."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] g = np.empty(max_lag + 1)
    _autocov(<const double*> xa.data, xa.shape[0], max_lag, <double*> g.data)
    return g


cdef int _levinson(const double* gamma, Py_ssize_t p, double* phi, double* sigma2, double* work) noexcept nogil:
    """Order-recursive Toeplitz solve; returns 0 ok, 1 degenerate."""
    cdef Py_ssize_t m, i
    cdef double acc, kappa, s2 = gamma[0]
    if not (isfinite(s2) and s2 > 0.0):
        return 1
    for m in range(p):
        acc = gamma[m + 1]
        for i in range(m):
            acc -= phi[i] * gamma[m - i]
        kappa = acc / s2
        if not (isfinite(kappa) and fabs(kappa) < 1.0):
            return 1
        for i in range(m):
            work[i] = phi[i] - kappa * phi[m - 1 - i]
        for i in range(m):
            phi[i] = work[i]
        phi[m] = kappa
        s2 *= 1.0 - kappa * kappa
        if not s2 > 0.0:
            return 1
    sigma2[0] = s2
    return 0


def levinson(gamma, Py_ssize_t p):
    """Levinson-Durbin solve; returns (phi, sigma2, status)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] g = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] phi = np.zeros(p)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] work = np.zeros(p if p > 0 else 1)
    cdef double sigma2 = 0.0
    cdef int status
    if p == 0:
        if g[0] > 0.0 and isfinite(g[0]):
            return phi, float(g[0]), 0
        return phi, 0.0, 1
    status = _levinson(<const double*> g.data, p, <double*> phi.data, &sigma2, <double*> work.data)
    return phi, float(sigma2), status


cdef void _ar_forecast(const double* phi, Py_ssize_t p, double* buf, Py_ssize_t h) noexcept nogil:
    """buf holds the p de-meaned tail values; forecasts are appended in place."""
    cdef Py_ssize_t t, i
    cdef double acc
    for t in range(h):
        acc = 0.0
        for i in range(p):
            acc += phi[i] * buf[p + t - 1 - i]
        buf[p + t] = acc


def ar_forecast(phi, tail, Py_ssize_t h):
    """Recursive h-step forecast from the de-meaned last-p values (oldest first)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ph = np.ascontiguousarray(phi, dtype=np.float64)
    cdef Py_ssize_t p = ph.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] buf = np.zeros(p + h)
    buf[:p] = np.asarray(tail, dtype=np.float64)
    _ar_forecast(<const double*> ph.data, p, <double*> buf.data, h)
    return buf[p:].copy()


def oracle_forecasts(x, Py_ssize_t n, Py_ssize_t h, Py_ssize_t p, ks):
    """Per k: Yule-Walker fit on the most recent k points (centered by the
    window mean) and h-step forecast. Returns (forecasts, sigma2s, status)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ka = np.ascontiguousarray(ks, dtype=np.int64)
    cdef Py_ssize_t m = ka.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] fc = np.full((m, h), np.nan)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sig = np.full(m, np.nan)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] status = np.zeros(m, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] gamma = np.zeros(p + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] phi = np.zeros(p if p > 0 else 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] work = np.zeros(p if p > 0 else 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] buf = np.zeros(p + h)
    cdef double* xp = <double*> xa.data
    cdef double* gp = <double*> gamma.data
    cdef double* pp = <double*> phi.data
    cdef double* wp = <double*> work.data
    cdef double* bp = <double*> buf.data
    cdef Py_ssize_t i, k, t
    cdef double mu, sigma2
    for i in range(m):
        k = ka[i]
        _autocov(xp + (n - k), k, p, gp)
        if p == 0:
            if gp[0] > 0.0:
                sig[i] = gp[0]
                mu = 0.0
                for t in range(k):
                    mu += xp[n - k + t]
                mu /= k
                for t in range(h):
                    fc[i, t] = mu
            else:
                status[i] = 1
            continue
        sigma2 = 0.0
        if _levinson(gp, p, pp, &sigma2, wp):
            status[i] = 1
            continue
        mu = 0.0
        for t in range(k):
            mu += xp[n - k + t]
        mu /= k
        for t in range(p):
            bp[t] = xp[n - p + t] - mu
        _ar_forecast(pp, p, bp, h)
        for t in range(h):
            fc[i, t] = bp[p + t] + mu
        sig[i] = sigma2
    return fc, sig, status


def fukuchi_risks(x, Py_ssize_t n, Py_ssize_t h, Py_ssize_t p, ks):
    """Mean squared h-step risk over every placement of a length-k window."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ka = np.ascontiguousarray(ks, dtype=np.int64)
    cdef Py_ssize_t m = ka.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] risks = np.full(m, np.nan)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] status = np.zeros(m, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] gamma = np.zeros(p + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] phi = np.zeros(p if p > 0 else 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] work = np.zeros(p if p > 0 else 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] buf = np.zeros(p + h)
    cdef double* xp = <double*> xa.data
    cdef double* gp = <double*> gamma.data
    cdef double* pp = <double*> phi.data
    cdef double* wp = <double*> work.data
    cdef double* bp = <double*> buf.data
    cdef Py_ssize_t i, k, left, t, count
    cdef double mu, sigma2, total, sse, err
    for i in range(m):
        k = ka[i]
        total = 0.0
        count = 0
        for left in range(n - k - h + 1):
            _autocov(xp + left, k, p, gp)
            sigma2 = 0.0
            if _levinson(gp, p, pp, &sigma2, wp):
                continue
            mu = 0.0
            for t in range(k):
                mu += xp[left + t]
            mu /= k
            for t in range(p):
                bp[t] = xp[left + k - p + t] - mu
            _ar_forecast(pp, p, bp, h)
            sse = 0.0
            for t in range(h):
                err = xp[left + k + t] - (bp[p + t] + mu)
                sse += err * err
            total += sse / h
            count += 1
        if count == 0:
            status[i] = 1
        else:
            risks[i] = total / count
    return risks, status


cdef inline double _soft(double a, double b) noexcept nogil:
    if a > b:
        return a - b
    if a < -b:
        return a + b
    return 0.0


cdef Py_ssize_t _cd_sweeps(const double* G, const double* c, const double* w,
                           double l1, double l2, double* phi, Py_ssize_t p,
                           double tol, Py_ssize_t max_sweeps, int* converged) noexcept nogil:
    """Cyclic coordinate descent on the Gram form; phi updated in place."""
    cdef Py_ssize_t sweep, j, i
    cdef double rho, denom, new, d, delta
    for sweep in range(1, max_sweeps + 1):
        delta = 0.0
        for j in range(p):
            rho = c[j]
            for i in range(p):
                rho -= G[j * p + i] * phi[i]
            rho += G[j * p + j] * phi[j]
            denom = G[j * p + j] + l2
            if denom > 0.0:
                new = _soft(rho, 0.5 * l1 * w[j]) / denom
            else:
                new = 0.0
            d = fabs(new - phi[j])
            if d > delta:
                delta = d
            phi[j] = new
        if delta < tol:
            converged[0] = 1
            return sweep
    converged[0] = 0
    return max_sweeps


def cd_enet(G, c, w, double l1, double l2, phi, double tol, Py_ssize_t max_sweeps,
            check_objective=False):
    """Coordinate descent for ||y - Z phi||^2 + l2||phi||^2 + l1 sum w|phi|
    in Gram form. ``check_objective`` is accepted for interface parity with
    the pure backend and ignored here."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Ga = np.ascontiguousarray(G, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ca = np.ascontiguousarray(c, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] wa = np.ascontiguousarray(w, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ph = np.asarray(phi, dtype=np.float64)
    cdef int converged = 0
    cdef Py_ssize_t sweeps = _cd_sweeps(
        <const double*> Ga.data, <const double*> ca.data, <const double*> wa.data,
        l1, l2, <double*> ph.data, ph.shape[0], tol, max_sweeps, &converged)
    if ph is not phi and isinstance(phi, np.ndarray):
        phi[...] = ph
    return sweeps, bool(converged)


def sw_scores(Z, y, w, l1s, l2s, factors, Py_ssize_t start_row, double tol,
              Py_ssize_t max_sweeps):
    """Leave-future-out one-step scores for a grid of penalty settings.

    Row i >= start_row is predicted from a warm-started fit on rows [0, i);
    the Gram matrix grows by one rank-1 update per row and every grid point
    is re-converged before predicting. Returns ``(scores, ses)``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Za = np.ascontiguousarray(Z, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ya = np.ascontiguousarray(y, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] wa = np.ascontiguousarray(w, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] l1a = np.ascontiguousarray(l1s, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] l2a = np.ascontiguousarray(l2s, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] fa = np.ascontiguousarray(factors, dtype=np.float64)
    cdef Py_ssize_t k_m = Za.shape[0]
    cdef Py_ssize_t p = Za.shape[1]
    cdef Py_ssize_t m = l1a.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Phi = np.zeros((m, p))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Gm = np.zeros((p, p))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cv = np.zeros(p)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sse = np.zeros(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sse2 = np.zeros(m)
    cdef double* Zp = <double*> Za.data
    cdef double* yp = <double*> ya.data
    cdef double* Gp = <double*> Gm.data
    cdef double* cp = <double*> cv.data
    cdef double* Pp = <double*> Phi.data
    cdef double* sp = <double*> sse.data
    cdef double* s2p = <double*> sse2.data
    cdef Py_ssize_t i, r, a, b, g, t
    cdef double pred, err, sq
    cdef int converged = 0
    cdef Py_ssize_t count = 0
    with nogil:
        for r in range(start_row):
            for a in range(p):
                cp[a] += yp[r] * Zp[r * p + a]
                for b in range(p):
                    Gp[a * p + b] += Zp[r * p + a] * Zp[r * p + b]
        for i in range(start_row, k_m):
            for g in range(m):
                _cd_sweeps(Gp, cp, <const double*> wa.data, l1a[g], l2a[g],
                           Pp + g * p, p, tol, max_sweeps, &converged)
                pred = 0.0
                for t in range(p):
                    pred += Pp[g * p + t] * Zp[i * p + t]
                err = yp[i] - fa[g] * pred
                sq = err * err
                sp[g] += sq
                s2p[g] += sq * sq
            count += 1
            for a in range(p):
                cp[a] += yp[i] * Zp[i * p + a]
                for b in range(p):
                    Gp[a * p + b] += Zp[i * p + a] * Zp[i * p + b]
    scores = sse / count
    var = np.maximum(sse2 / count - scores**2, 0.0)
    return scores, np.sqrt(var / count)
