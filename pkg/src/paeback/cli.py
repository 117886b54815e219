"""Command-line front-end.

Subcommands map one-to-one onto library operations; output values are the
library outputs serialized as JSON (default) or CSV. Exit codes: 0 success,
1 data/fit error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import asymptotics
from ._backend import BACKEND
from .ar import ARModel, SimSpec, Tar1, forecast, simulate, yule_walker_fit
from .engine import (
    StudyConfig,
    efficiency_curve,
    fukuchi_baseline,
    monte_carlo_study,
    select_optimal_k,
)
from .errors import DataError, PaebackError
from .order_select import tune_sw
from .series import Criterion, TimeSeries, load_csv

SEED_ENV = "PAEBACK_SEED"


def _parse_floats(text: str) -> tuple:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError:
        raise DataError(f"cannot parse float list {text!r}")


def _parse_ints(text: str) -> tuple:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError:
        raise DataError(f"cannot parse integer list {text!r}")


def _resolve_seed(value) -> int:
    """Seeds must be explicit: an integer, the literal 'auto', or the
    PAEBACK_SEED environment variable."""
    if value is None:
        value = os.environ.get(SEED_ENV)
    if value is None:
        raise UsageError(
            "no seed given: pass --seed <int> (or --seed auto, or set PAEBACK_SEED)"
        )
    if isinstance(value, str) and value.strip().lower() == "auto":
        seed = int(np.random.SeedSequence().entropy % (2**63))
        print(f"seed auto -> {seed}", file=sys.stderr)
        return seed
    try:
        return int(value)
    except (TypeError, ValueError):
        raise UsageError(f"invalid seed {value!r}: expected an integer or 'auto'")


class UsageError(Exception):
    pass


def _load_series(args) -> TimeSeries:
    if args.input is None:
        raise UsageError("--input is required")
    return load_csv(args.input, args.column, args.label_column)


def _emit(args, payload: dict, csv_text: str = None) -> None:
    if args.format == "csv":
        text = csv_text if csv_text is not None else _dict_to_csv(payload)
    else:
        text = json.dumps(payload, indent=2) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dict_to_csv(payload: dict) -> str:
    lines = ["key,value"]
    for key, value in payload.items():
        lines.append(f"{key},{json.dumps(value)}")
    return "\n".join(lines) + "\n"


def _series_csv(values, labels=None) -> str:
    lines = ["label,value"]
    for i, v in enumerate(values):
        label = labels[i] if labels is not None else i
        lines.append(f"{label},{float(v)!r}")
    return "\n".join(lines) + "\n"


def cmd_simulate(args) -> int:
    seed = _resolve_seed(args.seed)
    if args.tar1:
        generator = Tar1(sigma=args.tar_sigma)
    else:
        if args.phi is None:
            raise UsageError("pass --phi for an AR generator or use --tar1")
        generator = ARModel(_parse_floats(args.phi), args.sigma2, args.mean)
    spec = SimSpec(n=args.n, seed=seed, generator=generator, burn_in=args.burn_in)
    series = simulate(spec)
    if args.format == "csv":
        _emit(args, {}, _series_csv(series.values))
    else:
        _emit(args, {"values": [float(v) for v in series.values], "seed": seed})
    return 0


def _fit_model(args, series: TimeSeries):
    if args.method == "yw":
        if args.p is None:
            raise UsageError("method 'yw' requires --p")
        return yule_walker_fit(series, args.p), None
    mu = float(series.values.mean())
    spec, phi = tune_sw(series.values - mu, args.p_max, method=args.method)
    from .engine import _residual_variance

    model = ARModel(tuple(phi), _residual_variance(series.values - mu, phi, args.p_max), mu)
    return model, spec


def cmd_fit(args) -> int:
    series = _load_series(args)
    model, spec = _fit_model(args, series)
    payload = {"model": model.to_dict()}
    if spec is not None:
        payload["penalty"] = spec.to_dict()
    _emit(args, payload)
    return 0


def cmd_forecast(args) -> int:
    series = _load_series(args)
    model, _ = _fit_model(args, series)
    fc = forecast(model, series, args.h)
    _emit(args, {"forecast": [float(v) for v in fc], "model": model.to_dict()},
          _series_csv(fc))
    return 0


def cmd_curve(args) -> int:
    series = _load_series(args)
    grid = _parse_ints(args.k_grid) if args.k_grid else None
    curve = efficiency_curve(
        series, args.n, args.h, k_grid=grid, method=args.method,
        p=args.p, p_m=args.p_max, criterion=args.criterion,
    )
    payload = curve.to_dict()
    payload["k_opt"] = select_optimal_k(curve)
    _emit(args, payload, curve.to_csv())
    return 0


def cmd_asym(args) -> int:
    if args.phi is not None:
        phi = np.asarray(_parse_floats(args.phi))
        report = asymptotics.ab_ratio(phi, args.sigma2, args.h)
    else:
        series = _load_series(args)
        if args.p is None:
            raise UsageError("estimating the ratio from data requires --p")
        report = asymptotics.estimate_ab_ratio(series, args.p, args.h)
    payload = report.to_dict()
    if args.lam is not None:
        if args.n is None:
            raise UsageError("--lam requires --n")
        payload["lambda"] = args.lam
        payload["k_opt"] = asymptotics.optimal_k(args.n, args.lam, report)
        payload["epsilon_n"] = asymptotics.IrrelevancySpec.from_lambda(args.lam, args.n).epsilon_n
    _emit(args, payload)
    return 0


def cmd_tune(args) -> int:
    series = _load_series(args)
    mu = float(series.values.mean())
    spec, phi = tune_sw(series.values - mu, args.p_max, method=args.method)
    _emit(args, {"penalty": spec.to_dict(), "phi": [float(v) for v in phi], "mean": mu})
    return 0


def cmd_mc(args) -> int:
    seed = _resolve_seed(args.seed)
    if args.tar1:
        generator = Tar1(sigma=args.tar_sigma)
    else:
        if args.phi is None:
            raise UsageError("pass --phi for an AR generator or use --tar1")
        generator = ARModel(_parse_floats(args.phi), args.sigma2, args.mean)
    config = StudyConfig(
        generator=generator,
        n_values=_parse_ints(args.n_values),
        h_values=_parse_ints(args.h_values),
        replicates=args.replicates,
        method=args.method,
        p=args.p,
        p_m=args.p_max,
        criterion=Criterion.parse(args.criterion),
        base_seed=seed,
        k_grid="endpoint" if args.endpoint_only else "default",
    )
    summary = monte_carlo_study(config, jobs=args.jobs)
    _emit(args, summary.to_dict(), summary.to_csv())
    return 0


def cmd_fukuchi(args) -> int:
    series = _load_series(args)
    grid = _parse_ints(args.k_grid) if args.k_grid else None
    k_sel, ks, risks = fukuchi_baseline(series, args.h, k_grid=grid, p=args.p)
    payload = {
        "k_selected": k_sel,
        "points": [{"k": int(k), "risk": float(rk)} for k, rk in zip(ks, risks)],
    }
    csv_text = "k,risk\n" + "\n".join(f"{int(k)},{float(rk)!r}" for k, rk in zip(ks, risks)) + "\n"
    _emit(args, payload, csv_text)
    return 0


def _add_io(parser, needs_input=True):
    if needs_input:
        parser.add_argument("--input", help="input CSV path")
        parser.add_argument("--column", default="value", help="value column name or index")
        parser.add_argument("--label-column", default=None, help="optional label column")
    parser.add_argument("--output", default=None, help="output path (default stdout)")
    parser.add_argument("--format", choices=["json", "csv"], default="json")
    parser.add_argument("--config", default=None, help="JSON file of defaults for this subcommand")


def _add_generator(parser):
    parser.add_argument("--phi", default=None, help="comma-separated AR coefficients")
    parser.add_argument("--sigma2", type=float, default=1.0, help="AR innovation variance")
    parser.add_argument("--mean", type=float, default=0.0, help="AR process mean")
    parser.add_argument("--tar1", action="store_true", help="use the fixed threshold-AR generator")
    parser.add_argument("--tar-sigma", type=float, default=0.75, help="TAR innovation scale")
    parser.add_argument("--seed", default=None, help="integer seed or 'auto'")
    parser.add_argument("--burn-in", type=int, default=500)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paeback",
        description="How much recent history does a forecast actually need? "
                    f"(numerical backend: {BACKEND})",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", help="simulate an AR or threshold-AR series")
    _add_generator(p)
    p.add_argument("--n", type=int, required=True, help="series length after burn-in")
    _add_io(p, needs_input=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit an AR model (Yule-Walker or penalized)")
    p.add_argument("--method", choices=["yw", "al", "ae", "ate"], default="yw")
    p.add_argument("--p", type=int, default=None, help="order for method 'yw'")
    p.add_argument("--p-max", type=int, default=10, help="max order for penalized methods")
    _add_io(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("forecast", help="fit and forecast h steps ahead")
    p.add_argument("--method", choices=["yw", "al", "ae", "ate"], default="yw")
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--p-max", type=int, default=10)
    p.add_argument("--h", type=int, required=True)
    _add_io(p)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("curve", help="dual-efficiency sweep over development sizes")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--method", choices=["yw", "al", "ae", "ate"], default="yw")
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--p-max", type=int, default=10)
    p.add_argument("--criterion", default="mse")
    p.add_argument("--k-grid", default=None, help="comma-separated k values")
    _add_io(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("asym", help="closed-form A/B report and optimal k")
    p.add_argument("--phi", default=None, help="comma-separated AR coefficients")
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--p", type=int, default=None, help="fit order when estimating from --input")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--lam", type=float, default=None, help="irrelevancy limit n*eps")
    _add_io(p)
    p.set_defaults(func=cmd_asym)

    p = sub.add_parser("tune", help="sliding-window penalty tuning on a window")
    p.add_argument("--method", choices=["al", "ae", "ate"], default="ate")
    p.add_argument("--p-max", type=int, default=10)
    _add_io(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("mc", help="Monte Carlo study over (n, h) configurations")
    _add_generator(p)
    p.add_argument("--n-values", required=True, help="comma-separated history lengths")
    p.add_argument("--h-values", required=True, help="comma-separated horizons")
    p.add_argument("--replicates", type=int, required=True)
    p.add_argument("--method", choices=["yw", "al", "ae", "ate"], default="yw")
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--p-max", type=int, default=10)
    p.add_argument("--criterion", default="mse")
    p.add_argument("--endpoint-only", action="store_true",
                   help="score only k = n (full-history baseline)")
    p.add_argument("--jobs", type=int, default=1, help="parallel replicate workers")
    _add_io(p, needs_input=False)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("fukuchi", help="overlapping-window baseline selection")
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--k-grid", default=None)
    _add_io(p)
    p.set_defaults(func=cmd_fukuchi)

    return parser


def _apply_config(parser, argv):
    """Merge --config JSON values as defaults for the chosen subcommand."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        return argv
    path = argv[idx + 1]
    try:
        with open(path) as fh:
            values = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot open config {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON in config {path}: {exc}")
    if not isinstance(values, dict):
        raise DataError(f"config {path} must hold a JSON object")
    out = list(argv)
    known = set()
    for action_group in parser._subparsers._group_actions:
        for sub in action_group.choices.values():
            for action in sub._actions:
                known.add(action.dest)
    for key, value in values.items():
        dest = key.replace("-", "_")
        if dest not in known:
            raise UsageError(f"unknown config key {key!r}")
        flag = "--" + dest.replace("_", "-")
        if flag in argv:
            continue  # explicit flags win
        if isinstance(value, bool):
            if value:
                out.append(flag)
        else:
            out.extend([flag, str(value)])
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"paeback: {exc}", file=sys.stderr)
        return 2
    except PaebackError as exc:
        print(f"paeback: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
