"""The subsample-size engine: dual-efficiency sweeps over the development
size k, optimal-k selection, reproducible Monte Carlo studies, and the
overlapping-sliding-window baseline that PaEBack is compared against.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ._backend import kernels
from .ar import ARModel, SimSpec, Tar1, forecast, simulate, yule_walker_fit
from .errors import DataError, FitError, PaebackError
from .order_select import tune_sw
from .series import Criterion, TimeSeries, evaluate

__all__ = [
    "CurvePoint",
    "EfficiencyCurve",
    "StudyConfig",
    "StudySummary",
    "efficiency_curve",
    "select_optimal_k",
    "monte_carlo_study",
    "fukuchi_baseline",
    "default_k_grid",
]

PENALIZED_METHODS = ("al", "ae", "ate")
DEFAULT_P_MAX = 10


@dataclass(frozen=True)
class CurvePoint:
    k: int
    r_s: float
    score: float
    r_p: float


@dataclass(frozen=True)
class EfficiencyCurve:
    """Per-k records (k, r_s, score, r_p) for one series and method."""

    n: int
    h: int
    criterion: Criterion
    method: str
    points: tuple
    failures: tuple = ()

    def ks(self) -> np.ndarray:
        return np.array([pt.k for pt in self.points], dtype=int)

    def scores(self) -> np.ndarray:
        return np.array([pt.score for pt in self.points])

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "h": self.h,
            "criterion": self.criterion.value,
            "method": self.method,
            "points": [
                {"k": pt.k, "r_s": pt.r_s, "score": pt.score, "r_p": pt.r_p}
                for pt in self.points
            ],
            "failures": [{"k": k, "reason": reason} for k, reason in self.failures],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["k", "r_s", "score", "r_p"])
        for pt in self.points:
            writer.writerow([pt.k, repr(pt.r_s), repr(pt.score), repr(pt.r_p)])
        return buf.getvalue()


def default_k_grid(k_min: int, n: int) -> np.ndarray:
    """Every integer in [k_min, n] for n <= 300, else 100 evenly spaced
    values (always including n)."""
    if k_min > n:
        raise DataError(f"k_min {k_min} exceeds n {n}")
    if n <= 300:
        return np.arange(k_min, n + 1, dtype=int)
    grid = np.unique(np.round(np.linspace(k_min, n, 100)).astype(int))
    return grid


def _method_k_min(method: str, p: Optional[int], p_m: int) -> int:
    if method == "yw":
        return (p or 1) + 1
    return p_m + 2


def _fit_and_forecast(window: np.ndarray, h: int, method: str,
                      p: Optional[int], p_m: int,
                      lambda_grid, alpha_grid) -> np.ndarray:
    """One development-window fit + h-step forecast for the penalized
    methods. The window is centered here; the mean rides along in the model."""
    mu = float(window.mean())
    centered = window - mu
    _, phi = tune_sw(centered, p_m, method=method,
                     lambda_grid=lambda_grid, alpha_grid=alpha_grid)
    resid_var = _residual_variance(centered, phi, p_m)
    model = ARModel(tuple(phi), resid_var, mu)
    return forecast(model, TimeSeries(window), h)


def _residual_variance(centered: np.ndarray, phi: np.ndarray, p_m: int) -> float:
    from .order_select import build_design

    problem = build_design(centered, p_m)
    resid = problem.y - problem.Z @ phi
    return max(float(np.mean(resid**2)), 1e-300)


def efficiency_curve(
    series: TimeSeries,
    n: int,
    h: int,
    k_grid: Optional[Sequence[int]] = None,
    method: str = "yw",
    p: Optional[int] = None,
    p_m: int = DEFAULT_P_MAX,
    criterion: Union[str, Criterion] = Criterion.MSE,
    lambda_grid=None,
    alpha_grid=None,
) -> EfficiencyCurve:
    """Score every development size k on the held-out validation block.

    The most recent k of the first n observations are fit, the following h
    observations (never seen by any fit) are forecast, and scores are
    normalized by the full-history score so r_p(n) == 1 exactly. Per-k fit
    failures are recorded, not fatal; a failure at k = n is fatal since it
    breaks the normalization.
    """
    criterion = Criterion.parse(criterion)
    method = method.strip().lower()
    if method != "yw" and method not in PENALIZED_METHODS:
        raise DataError(f"unknown method {method!r}")
    if method == "yw" and p is None:
        raise DataError("method 'yw' requires the model order p")
    x = series.values
    if h < 1:
        raise DataError(f"horizon must be >= 1, got {h}")
    if n < 1 or n + h > x.size:
        raise DataError(
            f"insufficient data: need n + h = {n + h} observations, have {x.size}"
        )
    k_min = _method_k_min(method, p, p_m)
    if k_grid is None:
        grid = default_k_grid(k_min, n)
    else:
        grid = np.unique(np.asarray(k_grid, dtype=int))
        if grid.size == 0:
            raise DataError("k grid must be non-empty")
        if grid[0] < k_min or grid[-1] > n:
            raise DataError(f"k grid must lie within [{k_min}, {n}]")
    validation = x[n : n + h]

    ks = grid.tolist()
    if n not in ks:
        ks_all = ks + [n]
    else:
        ks_all = ks
    scores = {}
    failures = []

    if method == "yw":
        fc, _, status = kernels.oracle_forecasts(x, n, h, p, np.asarray(ks_all, dtype=np.int64))
        for i, k in enumerate(ks_all):
            if status[i]:
                failures.append((int(k), "degenerate Yule-Walker fit"))
            else:
                scores[k] = evaluate(validation, fc[i], criterion)
    else:
        for k in ks_all:
            window = x[n - k : n]
            try:
                fc = _fit_and_forecast(window, h, method, p, p_m, lambda_grid, alpha_grid)
            except PaebackError as exc:
                failures.append((int(k), str(exc)))
                continue
            scores[k] = evaluate(validation, fc, criterion)

    if n not in scores:
        raise FitError(f"fit failed at k = n = {n}; cannot normalize the curve")
    base = scores[n]
    if base == 0.0:
        raise FitError("full-history score is exactly zero; ratio undefined")
    points = tuple(
        CurvePoint(k=int(k), r_s=k / n, score=scores[k], r_p=scores[k] / base)
        for k in ks if k in scores
    )
    return EfficiencyCurve(
        n=n, h=h, criterion=criterion, method=method,
        points=points, failures=tuple(failures),
    )


def select_optimal_k(curve: EfficiencyCurve) -> int:
    """Smallest k attaining the minimum score (deterministic tie-break)."""
    if not curve.points:
        raise DataError("curve has no points")
    scores = curve.scores()
    ks = curve.ks()
    return int(ks[int(np.argmin(scores))])


@dataclass(frozen=True)
class StudyConfig:
    """A reproducible Monte Carlo study over (n, h) configurations.

    Replicate r draws its series with seed ``base_seed + r``; reductions run
    in replicate order so results are independent of parallelism.
    """

    generator: Union[ARModel, Tar1]
    n_values: tuple
    h_values: tuple
    replicates: int
    method: str = "yw"
    p: Optional[int] = None
    p_m: int = DEFAULT_P_MAX
    criterion: Criterion = Criterion.MSE
    base_seed: int = 0
    burn_in: int = 500
    k_grid: Union[str, tuple] = "default"   # "default", "endpoint", or explicit
    lambda_grid: Optional[tuple] = None
    alpha_grid: Optional[tuple] = None

    def __post_init__(self):
        if self.replicates < 1:
            raise DataError("replicates must be >= 1")
        object.__setattr__(self, "n_values", tuple(int(v) for v in self.n_values))
        object.__setattr__(self, "h_values", tuple(int(v) for v in self.h_values))
        object.__setattr__(self, "criterion", Criterion.parse(self.criterion))


@dataclass(frozen=True)
class ConfigSummary:
    n: int
    h: int
    ks: tuple
    r_s: tuple
    median_rp: tuple        # median over replicates of per-replicate r_p(k)
    median_score: tuple     # median over replicates of score(k)
    mean_score: tuple
    se_score: tuple
    counts: tuple
    mean_score_n: float
    se_score_n: float
    median_score_n: float

    def median_ratio(self) -> np.ndarray:
        """Ratio-of-medians curve: median score(k) / median score(n)."""
        return np.asarray(self.median_score) / self.median_score_n


@dataclass(frozen=True)
class StudySummary:
    method: str
    criterion: Criterion
    replicates: int
    base_seed: int
    configs: tuple

    def config(self, n: int, h: int) -> ConfigSummary:
        for cfg in self.configs:
            if cfg.n == n and cfg.h == h:
                return cfg
        raise KeyError(f"no config (n={n}, h={h}) in summary")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "criterion": self.criterion.value,
            "replicates": self.replicates,
            "base_seed": self.base_seed,
            "configs": [
                {
                    "n": c.n,
                    "h": c.h,
                    "mean_score_n": c.mean_score_n,
                    "se_score_n": c.se_score_n,
                    "median_score_n": c.median_score_n,
                    "points": [
                        {
                            "k": k, "r_s": rs, "median_rp": mrp,
                            "median_score": mds, "mean_score": ms,
                            "se_score": se, "replicates": cnt,
                        }
                        for k, rs, mrp, mds, ms, se, cnt in zip(
                            c.ks, c.r_s, c.median_rp, c.median_score,
                            c.mean_score, c.se_score, c.counts
                        )
                    ],
                }
                for c in self.configs
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["n", "h", "k", "r_s", "median_rp", "median_score",
                         "mean_score", "se_score", "replicates"])
        for c in self.configs:
            for k, rs, mrp, mds, ms, se, cnt in zip(
                c.ks, c.r_s, c.median_rp, c.median_score,
                c.mean_score, c.se_score, c.counts
            ):
                writer.writerow([c.n, c.h, k, repr(rs), repr(mrp), repr(mds),
                                 repr(ms), repr(se), cnt])
        return buf.getvalue()


def _study_grid(config: StudyConfig, n: int) -> np.ndarray:
    k_min = _method_k_min(config.method, config.p, config.p_m)
    if isinstance(config.k_grid, str):
        if config.k_grid == "endpoint":
            return np.array([n], dtype=int)
        if config.k_grid == "default":
            return default_k_grid(k_min, n)
        raise DataError(f"unknown k_grid rule {config.k_grid!r}")
    return np.unique(np.asarray(config.k_grid, dtype=int))


def _study_replicate(args) -> tuple:
    config, n, h, grid, r = args
    spec = SimSpec(n=n + h, seed=config.base_seed + r,
                   generator=config.generator, burn_in=config.burn_in)
    series = simulate(spec)
    curve = efficiency_curve(
        series, n, h, k_grid=grid, method=config.method, p=config.p,
        p_m=config.p_m, criterion=config.criterion,
        lambda_grid=config.lambda_grid, alpha_grid=config.alpha_grid,
    )
    row_scores = np.full(grid.size, np.nan)
    row_rp = np.full(grid.size, np.nan)
    pos = {int(k): i for i, k in enumerate(grid)}
    for pt in curve.points:
        row_scores[pos[pt.k]] = pt.score
        row_rp[pos[pt.k]] = pt.r_p
    score_n = next(pt.score for pt in curve.points if pt.k == n)
    return r, row_scores, row_rp, score_n


def monte_carlo_study(config: StudyConfig, jobs: int = 1) -> StudySummary:
    """Run the study; per (n, h): median r_p per k, mean score per k with
    Monte Carlo standard errors, and the full-history score summary."""
    summaries = []
    for n in config.n_values:
        for h in config.h_values:
            grid = _study_grid(config, n)
            if n not in grid:
                grid = np.unique(np.append(grid, n))
            tasks = [(config, n, h, grid, r) for r in range(config.replicates)]
            results = [None] * config.replicates
            if jobs > 1:
                with ProcessPoolExecutor(max_workers=jobs) as pool:
                    for r, row_scores, row_rp, score_n in pool.map(
                        _study_replicate, tasks, chunksize=max(1, config.replicates // (8 * jobs))
                    ):
                        results[r] = (row_scores, row_rp, score_n)
            else:
                for task in tasks:
                    r, row_scores, row_rp, score_n = _study_replicate(task)
                    results[r] = (row_scores, row_rp, score_n)

            scores = np.vstack([res[0] for res in results])
            rps = np.vstack([res[1] for res in results])
            score_n = np.array([res[2] for res in results])

            counts = np.sum(~np.isnan(scores), axis=0)
            with np.errstate(invalid="ignore"):
                mean_score = np.nanmean(scores, axis=0)
                median_score = np.nanmedian(scores, axis=0)
                se_score = np.nanstd(scores, axis=0, ddof=1) / np.sqrt(np.maximum(counts, 1))
                median_rp = np.nanmedian(rps, axis=0)
            ok_n = score_n[~np.isnan(score_n)]
            if ok_n.size == 0:
                raise FitError(f"every replicate failed at k = n = {n}")
            summaries.append(ConfigSummary(
                n=n, h=h,
                ks=tuple(int(k) for k in grid),
                r_s=tuple(float(k / n) for k in grid),
                median_rp=tuple(float(v) for v in median_rp),
                median_score=tuple(float(v) for v in median_score),
                mean_score=tuple(float(v) for v in mean_score),
                se_score=tuple(float(v) for v in se_score),
                counts=tuple(int(v) for v in counts),
                mean_score_n=float(np.mean(ok_n)),
                se_score_n=float(np.std(ok_n, ddof=1) / np.sqrt(ok_n.size)) if ok_n.size > 1 else 0.0,
                median_score_n=float(np.median(ok_n)),
            ))
    return StudySummary(
        method=config.method,
        criterion=config.criterion,
        replicates=config.replicates,
        base_seed=config.base_seed,
        configs=tuple(summaries),
    )


def fukuchi_baseline(
    series: TimeSeries,
    h: int,
    k_grid: Optional[Sequence[int]] = None,
    p: int = 5,
) -> Tuple[int, np.ndarray, np.ndarray]:
    """Overlapping-window risk estimation: for each window size k, fit on
    every contiguous length-k window of the first n = len - h observations
    and score the following h points, averaging over all n-k-h+1 placements.

    Returns ``(k_selected, ks, risks)``; the selected k minimizes the mean
    risk (smallest k on ties). The final h observations are reserved and
    untouched, mirroring the engine's validation split.
    """
    x = series.values
    if h < 1:
        raise DataError(f"horizon must be >= 1, got {h}")
    n = x.size - h
    k_min = p + 2
    k_max = n - h
    if k_max < k_min:
        raise DataError(f"series too short: usable k range [{k_min}, {k_max}] is empty")
    if k_grid is None:
        grid = np.arange(k_min, k_max + 1, dtype=np.int64)
    else:
        grid = np.unique(np.asarray(k_grid, dtype=np.int64))
        if grid.size == 0:
            raise DataError("k grid must be non-empty")
        if grid[0] < k_min or grid[-1] > k_max:
            raise DataError(f"k grid must lie within [{k_min}, {k_max}]")
    risks, status = kernels.fukuchi_risks(x, n, h, p, grid)
    ok = status == 0
    if not np.any(ok):
        raise FitError("every window size failed to fit")
    masked = np.where(ok, risks, np.inf)
    k_selected = int(grid[int(np.argmin(masked))])
    return k_selected, grid.astype(int), risks
