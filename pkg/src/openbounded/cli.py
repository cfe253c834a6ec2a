"""Command-line interface: simulate, analyze, power, analytic.

Exit codes: 0 success, 1 usage or configuration problem, 2 malformed data,
3 structurally valid but insufficient data. Errors print a single
``error: ...`` line to stderr. Every output document embeds the resolved
configuration, the seed, and the tool version; rerunning a command with the
same configuration produces byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Sequence

from . import __version__
from .analytic import (
    ORACLE_MAX_DAYS,
    WEEKEND_SHARE,
    ClosedFormUnavailable,
    Model1Params,
    Model2Params,
    enumeration_oracle,
    model1_bias,
    model1_variance_coeffs,
    model2_bias,
    model2_variance_coeffs,
)
from .core import (
    OPEN,
    ConfigurationError,
    DataFormatError,
    ExperimentCalendar,
    ExperimentError,
    InclusionPolicy,
    InsufficientDataError,
    Weekday,
    bounded,
)
from .eventlog import read_event_log, write_event_log, write_metadata
from .metrics import TestKind, delta_estimate, weekend_ratio_gamma
from .power import compare_policies
from .simulate import EffectKind, EffectSpec, Seed, inject_effect, simulate_model1, simulate_model2

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INSUFFICIENT = 3

SEED_ENV_VAR = "OPENBOUNDED_SEED"
REJECT_ERROR_FRACTION = 0.10


def _parse_float_list(text: str) -> list[float]:
    """Parse '0.1,0.2,0.5' or 'start:stop:step' (stop inclusive)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigurationError(f"range syntax is start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigurationError("range step must be positive")
        values = []
        x = start
        while x <= stop + 1e-9:
            values.append(round(x, 10))
            x += step
        return values
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse number list {text!r}") from exc


def _resolve_seed(args: argparse.Namespace) -> Seed:
    if args.seed is not None:
        return Seed(args.seed)
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return Seed(int(env))
        except ValueError as exc:
            raise ConfigurationError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from exc
    return Seed(0)


def _calendar(args: argparse.Namespace) -> ExperimentCalendar:
    return ExperimentCalendar(k=args.k, start_dow=Weekday.parse(args.start_dow))


def _policies(args: argparse.Namespace) -> list[InclusionPolicy]:
    names = args.policy or ["open", "bounded"]
    out = []
    for name in names:
        if name == "open":
            policy = OPEN
        elif name == "bounded":
            policy = bounded(args.d)
        else:
            raise ConfigurationError(f"unknown policy {name!r}")
        if policy not in out:
            out.append(policy)
    return out


def _config_dict(args: argparse.Namespace) -> dict:
    skip = {"func", "config"}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        out[key] = value
    return out


def _apply_config_file(args: argparse.Namespace) -> None:
    """Values from --config override parsed flags (documented precedence)."""
    if not getattr(args, "config", None):
        return
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {args.config} is not valid JSON: {exc}") from exc
    if not isinstance(overrides, dict):
        raise ConfigurationError("config file must hold a JSON object")
    known = set(vars(args))
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("func", "config"):
            raise ConfigurationError(f"config file sets unknown option {key!r}")
        setattr(args, dest, value)


def _sanitize(obj):
    """Make a payload strictly JSON-serializable (finite floats or null)."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


def _emit(text: str, output: str | None) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _json_document(payload: dict) -> str:
    return json.dumps(_sanitize(payload), sort_keys=True, indent=2) + "\n"


def _csv_document(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


def _model_params(args: argparse.Namespace, calendar: ExperimentCalendar):
    if args.model == "model1":
        return Model1Params(
            p=args.p, tau=args.tau, tau_prime=args.tau_prime, sigma=args.sigma,
            c=args.c, calendar=calendar, d=args.d,
        )
    if args.model == "model2":
        return Model2Params(
            ns=args.ns, tau=args.tau, tau_prime=args.tau_prime, sigma=args.sigma,
            c=args.c, calendar=calendar, d=args.d,
        )
    raise ConfigurationError(f"unknown model {args.model!r}")


def _simulate_traces(args: argparse.Namespace, calendar: ExperimentCalendar, seed: Seed):
    params = _model_params(args, calendar)
    if args.model == "model1":
        return params, simulate_model1(
            params, args.n_per_arm, seed, sigma_user=args.sigma_user, noise_kind=args.noise
        )
    return params, simulate_model2(
        params, seed, sigma_user=args.sigma_user, noise_kind=args.noise
    )


def cmd_simulate(args: argparse.Namespace) -> int:
    calendar = _calendar(args)
    seed = _resolve_seed(args)
    params, traces = _simulate_traces(args, calendar, seed)
    try:
        rows = write_event_log(args.output, traces)
        write_metadata(
            args.output,
            {
                "model": args.model,
                "params": {
                    "p": getattr(params, "p", None),
                    "ns": getattr(params, "ns", None),
                    "tau": params.tau,
                    "tau_prime": params.tau_prime,
                    "sigma": params.sigma,
                    "c": params.c,
                    "k": calendar.k,
                    "start_dow": calendar.start_dow.name,
                    "d": params.d,
                },
                "seed": seed.base,
                "tool_version": __version__,
                "config": _sanitize(_config_dict(args)),
            },
        )
    except OSError as exc:
        raise DataFormatError(f"cannot write event log {args.output}: {exc}") from exc
    print(f"wrote {rows} rows for {len(traces)} users to {args.output}", file=sys.stderr)
    return EXIT_OK


def _load_traces(args: argparse.Namespace, calendar: ExperimentCalendar, require_variant: bool):
    traces, report = read_event_log(args.input, calendar, require_variant=require_variant)
    if report.total_rows == 0:
        raise InsufficientDataError(f"event log {args.input} holds no rows")
    if report.n_rejected:
        detail = ", ".join(f"{k}={v}" for k, v in sorted(report.rejected.items()))
        if report.reject_fraction > REJECT_ERROR_FRACTION:
            raise DataFormatError(
                f"rejected {report.n_rejected}/{report.total_rows} rows ({detail})"
            )
        print(
            f"warning: rejected {report.n_rejected}/{report.total_rows} rows ({detail})",
            file=sys.stderr,
        )
    return traces, report


def cmd_analyze(args: argparse.Namespace) -> int:
    calendar = _calendar(args)
    policies = _policies(args)
    test = TestKind(args.test)
    traces, report = _load_traces(args, calendar, require_variant=True)
    results = []
    for policy in policies:
        res = delta_estimate(traces, policy, calendar, test)
        gamma = weekend_ratio_gamma(traces, policy, calendar)
        results.append(
            {
                "policy": policy.label,
                "d": policy.d,
                "delta": res.delta,
                "variance": res.variance,
                "n_treatment": res.n_treatment,
                "n_control": res.n_control,
                "n_included": res.n_treatment + res.n_control,
                "statistic": res.statistic,
                "p_value": res.p_value,
                "gamma": gamma,
            }
        )
    if args.format == "csv":
        header = [
            "policy", "d", "delta", "variance", "n_treatment", "n_control",
            "n_included", "statistic", "p_value", "gamma",
        ]
        text = _csv_document(header, [[r[h] for h in header] for r in results])
    else:
        text = _json_document(
            {
                "config": _config_dict(args),
                "tool_version": __version__,
                "ingest": {
                    "total_rows": report.total_rows,
                    "accepted_rows": report.accepted_rows,
                    "rejected": report.rejected,
                },
                "results": results,
            }
        )
    _emit(text, args.output)
    return EXIT_OK


def cmd_power(args: argparse.Namespace) -> int:
    calendar = _calendar(args)
    policies = _policies(args)
    seed = _resolve_seed(args)
    test = TestKind(args.test)
    fractions = _parse_float_list(args.fractions)

    if args.input and args.model:
        raise ConfigurationError("give either --input or --model, not both")
    if args.model and args.inject_lift is not None:
        raise ConfigurationError("--inject-lift applies to --input logs; model runs carry "
                                 "their effect in --tau/--tau-prime")
    if args.input:
        traces, _ = _load_traces(args, calendar, require_variant=False)
        has_variants = any(t.variant is not None for t in traces)
        wants_injection = args.inject_lift is not None
        if has_variants and wants_injection:
            raise ConfigurationError("input already carries variants; drop the --inject flags")
        if not has_variants:
            if not wants_injection:
                raise ConfigurationError(
                    "input carries no variants; provide --inject-lift (and optionally "
                    "--inject-weekend-lift) to assign and inject an effect"
                )
            spec = EffectSpec(
                kind=EffectKind.ABSOLUTE if args.inject_absolute else EffectKind.RELATIVE_LIFT,
                tau=args.inject_lift,
                tau_prime=args.inject_weekend_lift,
            )
            traces = inject_effect(traces, spec, calendar, seed)
    elif args.model:
        _, traces = _simulate_traces(args, calendar, seed)
    else:
        raise ConfigurationError("either --input or --model is required")

    curves = compare_policies(
        traces, calendar, fractions,
        repetitions=args.reps, alpha=args.alpha, seed=seed, test=test, policies=policies,
    )
    rows = []
    for curve in curves:
        for pt in curve.points:
            rows.append(
                [
                    curve.policy.label, pt.fraction, pt.power,
                    pt.est_p05, pt.est_p50, pt.est_p95,
                    pt.n_effective_treatment, pt.n_effective_control,
                    pt.degenerate_repetitions,
                ]
            )
    header = [
        "policy", "fraction", "power", "est_p05", "est_p50", "est_p95",
        "n_effective_treatment", "n_effective_control", "degenerate_repetitions",
    ]
    if args.format == "csv":
        text = _csv_document(header, [[None if isinstance(v, float) and not math.isfinite(v) else v for v in row] for row in rows])
    else:
        text = _json_document(
            {
                "config": _config_dict(args),
                "seed": seed.base,
                "tool_version": __version__,
                "curves": [
                    {
                        "policy": curve.policy.label,
                        "d": curve.policy.d,
                        "alpha": curve.alpha,
                        "repetitions": curve.repetitions,
                        "points": [
                            {
                                "fraction": pt.fraction,
                                "power": pt.power,
                                "est_p05": pt.est_p05,
                                "est_p50": pt.est_p50,
                                "est_p95": pt.est_p95,
                                "n_effective_treatment": pt.n_effective_treatment,
                                "n_effective_control": pt.n_effective_control,
                                "degenerate_repetitions": pt.degenerate_repetitions,
                            }
                            for pt in curve.points
                        ],
                    }
                    for curve in curves
                ],
            }
        )
    _emit(text, args.output)
    return EXIT_OK


def _analytic_model1_rows(args: argparse.Namespace, calendar: ExperimentCalendar, policies):
    grid = _parse_float_list(args.p_grid)
    use_oracle = calendar.k <= ORACLE_MAX_DAYS and not args.no_oracle
    rows = []
    for policy in policies:
        for p in grid:
            bias = eta = zeta = None
            source = "closed-form"
            try:
                bias = model1_bias(policy, p, 1.0, calendar, args.d)
                eta, zeta = model1_variance_coeffs(policy, p, calendar, args.d, args.n_per_arm)
            except ClosedFormUnavailable:
                source = "oracle-only"
            oracle_bias = None
            if use_oracle:
                oracle_bias = enumeration_oracle(calendar, policy, p).ratio - WEEKEND_SHARE
            rows.append(
                ["model1", policy.label, p, bias, eta, zeta, oracle_bias, source]
            )
    return ["model", "policy", "p", "bias_per_tau_prime", "eta", "zeta", "oracle_bias", "source"], rows


def _model2_pipeline_bias(policy: InclusionPolicy, calendar: ExperimentCalendar, d: int) -> float:
    """Independent check: run the noiseless simulator through the estimator."""
    params = Model2Params(ns=1, tau=0.0, tau_prime=1.0, sigma=0.0, calendar=calendar, d=d)
    traces = simulate_model2(params, Seed(0))
    res = delta_estimate(traces, policy, calendar, TestKind.Z)
    return res.delta - WEEKEND_SHARE


def _analytic_model2_rows(args: argparse.Namespace, calendar: ExperimentCalendar, policies):
    rows = []
    for policy in policies:
        bias = eta = zeta = pipeline_bias = None
        source = "closed-form"
        try:
            bias = model2_bias(policy, calendar, args.d)
            eta, zeta = model2_variance_coeffs(policy, calendar, args.d, args.ns)
        except ClosedFormUnavailable:
            source = "oracle-only"
        try:
            pipeline_bias = _model2_pipeline_bias(policy, calendar, args.d)
        except ExperimentError:
            pipeline_bias = None
        rows.append(["model2", policy.label, calendar.k, bias, eta, zeta, pipeline_bias, source])
    return ["model", "policy", "k", "bias_per_tau_prime", "eta", "zeta", "oracle_bias", "source"], rows


def cmd_analytic(args: argparse.Namespace) -> int:
    calendar = _calendar(args)
    policies = _policies(args)
    if args.model == "model1":
        header, rows = _analytic_model1_rows(args, calendar, policies)
    elif args.model == "model2":
        header, rows = _analytic_model2_rows(args, calendar, policies)
    else:
        raise ConfigurationError(f"unknown model {args.model!r}")
    if args.format == "json":
        text = _json_document(
            {
                "config": _config_dict(args),
                "tool_version": __version__,
                "rows": [dict(zip(header, row)) for row in rows],
            }
        )
    else:
        text = _csv_document(header, rows)
    _emit(text, args.output)
    return EXIT_OK


def _add_calendar_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--k", type=int, default=14, help="experiment length in days")
    sub.add_argument("--start-dow", default="monday", help="weekday of day 1 (default monday)")
    sub.add_argument("--d", type=int, default=7, help="bounded observation length in days")


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=None,
                     help=f"base seed (default: ${SEED_ENV_VAR} or 0)")
    sub.add_argument("--config", default=None,
                     help="JSON file whose values override the flags")
    sub.add_argument("--output", "-o", default="-", help="output path ('-' = stdout)")


def _add_model_flags(sub: argparse.ArgumentParser, require_model: bool) -> None:
    sub.add_argument("--model", choices=["model1", "model2"], required=require_model, default=None)
    sub.add_argument("--n-per-arm", type=int, default=1000, help="model1 users per arm")
    sub.add_argument("--ns", type=int, default=100, help="model2 arrivals per day per arm")
    sub.add_argument("--p", type=float, default=0.5, help="model1 daily activity probability")
    sub.add_argument("--tau", type=float, default=0.0, help="base treatment effect")
    sub.add_argument("--tau-prime", type=float, default=0.0, help="extra weekend effect")
    sub.add_argument("--sigma", type=float, default=1.0, help="day-level noise std dev")
    sub.add_argument("--c", type=float, default=0.0, help="common control outcome level")
    sub.add_argument("--sigma-user", type=float, default=0.0,
                     help="spread of per-user outcome levels (default 0: homogeneous)")
    sub.add_argument("--noise", choices=["normal", "lognormal"], default="normal",
                     help="day-level noise family (lognormal for heavy-tail stress tests)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="openbounded",
        description="Compare open and bounded data-inclusion policies for experiment analysis.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="generate a synthetic event log")
    _add_model_flags(sim, require_model=True)
    _add_calendar_flags(sim)
    _add_common_flags(sim)
    sim.set_defaults(func=cmd_simulate)

    ana = subs.add_parser("analyze", help="estimate the treatment effect from an event log")
    ana.add_argument("--input", "-i", required=True, help="event log (JSONL, or CSV by extension)")
    ana.add_argument("--policy", action="append", choices=["open", "bounded"],
                     help="repeatable; default: both")
    ana.add_argument("--test", choices=["z", "welch"], default="z")
    ana.add_argument("--format", choices=["json", "csv"], default="json")
    _add_calendar_flags(ana)
    _add_common_flags(ana)
    ana.set_defaults(func=cmd_analyze)

    pwr = subs.add_parser("power", help="estimate detection power over sample-fraction sweeps")
    pwr.add_argument("--input", "-i", default=None, help="event log to subsample")
    _add_model_flags(pwr, require_model=False)
    pwr.add_argument("--policy", action="append", choices=["open", "bounded"],
                     help="repeatable; default: both")
    pwr.add_argument("--fractions", default="0.1:1.0:0.1",
                     help="comma list or start:stop:step (default 0.1:1.0:0.1)")
    pwr.add_argument("--reps", type=int, default=500, help="repetitions per fraction")
    pwr.add_argument("--alpha", type=float, default=0.05, help="significance level")
    pwr.add_argument("--test", choices=["z", "welch"], default="z")
    pwr.add_argument("--format", choices=["json", "csv"], default="json")
    pwr.add_argument("--inject-lift", type=float, default=None,
                     help="treatment lift to inject into a variant-less log")
    pwr.add_argument("--inject-weekend-lift", type=float, default=0.0,
                     help="extra weekend lift to inject")
    pwr.add_argument("--inject-absolute", action="store_true",
                     help="treat injected lifts as absolute instead of relative")
    _add_calendar_flags(pwr)
    _add_common_flags(pwr)
    pwr.set_defaults(func=cmd_power)

    aly = subs.add_parser("analytic", help="tabulate closed-form bias and variance")
    aly.add_argument("--model", choices=["model1", "model2"], required=True)
    aly.add_argument("--policy", action="append", choices=["open", "bounded"],
                     help="repeatable; default: both")
    aly.add_argument("--p-grid", default="0.05:0.95:0.05",
                     help="model1 activity-probability grid (comma list or start:stop:step)")
    aly.add_argument("--n-per-arm", type=int, default=1, help="per-arm scale for eta/zeta")
    aly.add_argument("--ns", type=int, default=1, help="model2 arrivals per day per arm")
    aly.add_argument("--no-oracle", action="store_true",
                     help="skip the enumeration-oracle verification column")
    aly.add_argument("--format", choices=["csv", "json"], default="csv")
    _add_calendar_flags(aly)
    _add_common_flags(aly)
    aly.set_defaults(func=cmd_analytic)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        _apply_config_file(args)
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {' '.join(str(exc).split())}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, OSError) as exc:
        print(f"error: {' '.join(str(exc).split())}", file=sys.stderr)
        return EXIT_DATA
    except InsufficientDataError as exc:
        print(f"error: {' '.join(str(exc).split())}", file=sys.stderr)
        return EXIT_INSUFFICIENT


if __name__ == "__main__":
    sys.exit(main())
