"""Command line front end.

Subcommands: ``fit`` (estimate from a sample file), ``simulate`` (generate
a sample file), ``study`` (run a replicated simulation study from a JSON
config) and ``demo`` (full analysis of the bundled dataset).

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bayes as bayes_mod
from . import least_squares as ls_mod
from . import mle as mle_mod
from .censoring import (
    CensoringScheme,
    EstimationError,
    generate_sample,
    read_sample,
    write_sample,
)
from .data import plasma_cell_myeloma
from .distribution import WeibullParams
from .montecarlo import StudyConfig, run_study

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

TARGETS = ("kappa", "tau", "cv_p", "cv_k")
_INTERVALS_BY_METHOD = {
    "mle": ("aci", "maci"),
    "llse": ("pbi",),
    "nllse": ("pbi",),
    "bayes": ("hpdi",),
}


def _substream(seed: int, key: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(key,)))
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weibullcv",
        description=(
            "Estimate Weibull shape, rate and both coefficients of variation "
            "from type-I progressively interval-censored data."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit one estimator to a sample file")
    fit.add_argument("input", help="sample file (.json or .csv)")
    fit.add_argument("--method", choices=("mle", "llse", "nllse", "bayes"), default="mle")
    fit.add_argument(
        "--intervals",
        default="",
        help="comma-separated subset of aci,maci (mle), pbi (llse/nllse), hpdi (bayes)",
    )
    fit.add_argument("--level", type=float, default=0.95)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--bootstrap", type=int, default=2000, metavar="B")
    fit.add_argument("--mcmc", type=int, default=50_000, metavar="M")
    fit.add_argument("--burn-in", type=int, default=5_000, metavar="M_B")
    fit.add_argument("--thin", type=int, default=1)
    fit.add_argument(
        "--proposal-var",
        type=float,
        default=None,
        help="diagonal proposal variance for bayes (default: tuned pilot runs)",
    )
    fit.add_argument("--nllse-variant", choices=ls_mod.NLLSE_VARIANTS, default="weighted")
    fit.add_argument("--format", choices=("table", "csv", "json"), default="table")
    fit.add_argument("--output", default=None, help="write the report here instead of stdout")

    sim = sub.add_parser("simulate", help="generate a censored sample file")
    sim.add_argument("--shape", type=float, required=True)
    sim.add_argument("--rate", type=float, required=True)
    sim.add_argument("--boundaries", required=True, help="comma-separated inspection times")
    sim.add_argument(
        "--withdrawals", required=True, help="comma-separated proportions, last must be 1"
    )
    sim.add_argument("-n", "--units", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--rounding", choices=("floor", "round"), default="floor")
    sim.add_argument("--output", required=True)

    study = sub.add_parser("study", help="run a replicated simulation study")
    study.add_argument("config", help="JSON study configuration")
    study.add_argument("--out-dir", default=".")

    demo = sub.add_parser("demo", help="full analysis of the bundled dataset")
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--bootstrap", type=int, default=2000, metavar="B")
    demo.add_argument("--retained", type=int, default=4500)
    demo.add_argument("--thin", type=int, default=100)
    demo.add_argument("--burn-in", type=int, default=10_000)
    demo.add_argument("--level", type=float, default=0.95)
    demo.add_argument("--format", choices=("table", "csv", "json"), default="table")
    demo.add_argument("--output", default=None)
    return parser


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _format_report(points: dict, intervals: dict, fmt: str) -> str:
    """points: {method: {target: value}}; intervals: {name: {target: IntervalEstimate}}."""
    if fmt == "json":
        payload = {
            "estimates": points,
            "intervals": {
                name: {
                    t: {"lower": iv.lower, "upper": iv.upper, "level": iv.level}
                    for t, iv in per.items()
                }
                for name, per in intervals.items()
            },
        }
        return json.dumps(payload, indent=2) + "\n"
    if fmt == "csv":
        lines = ["kind,method,target,value,lower,upper,level"]
        for method, per in points.items():
            for target, value in per.items():
                lines.append(f"estimate,{method},{target},{value:.6g},,,")
        for name, per in intervals.items():
            for target, iv in per.items():
                lines.append(
                    f"interval,{name},{target},,{iv.lower:.6g},{iv.upper:.6g},{iv.level}"
                )
        return "\n".join(lines) + "\n"

    width = 12
    out = []
    methods = list(points)
    header = "parameter".ljust(width) + "".join(m.upper().rjust(width) for m in methods)
    out.append(header)
    for target in TARGETS:
        row = target.ljust(width)
        for method in methods:
            row += f"{points[method][target]:.4f}".rjust(width)
        out.append(row)
    if intervals:
        out.append("")
        out.append(
            "interval".ljust(width)
            + "target".ljust(width)
            + "lower".rjust(width)
            + "upper".rjust(width)
            + "width".rjust(width)
        )
        for name, per in intervals.items():
            for target, iv in per.items():
                out.append(
                    name.ljust(width)
                    + target.ljust(width)
                    + f"{iv.lower:.4f}".rjust(width)
                    + f"{iv.upper:.4f}".rjust(width)
                    + f"{iv.upper - iv.lower:.4f}".rjust(width)
                )
    return "\n".join(out) + "\n"


def _fit_points(fit) -> dict:
    return {
        "kappa": fit.params.kappa,
        "tau": fit.params.tau,
        "cv_p": fit.cv_p,
        "cv_k": fit.cv_k,
    }


def cmd_fit(args) -> int:
    sample = read_sample(args.input)
    wanted = tuple(s for s in args.intervals.split(",") if s)
    allowed = _INTERVALS_BY_METHOD[args.method]
    for name in wanted:
        if name not in allowed:
            raise UsageError(
                f"interval {name!r} is not available with method {args.method!r} "
                f"(choose from {', '.join(allowed)})"
            )
    points = {}
    intervals = {}
    if args.method in ("mle", "llse", "nllse"):
        if args.method == "mle":
            fit = mle_mod.fit_alternative_mle(sample)
        elif args.method == "llse":
            fit = ls_mod.llse(sample)
        else:
            fit = ls_mod.nllse(sample, variant=args.nllse_variant)
        if not fit.converged:
            raise EstimationError(f"{args.method} did not converge: {fit.message}")
        points[args.method] = _fit_points(fit)
        if args.method == "mle" and wanted:
            cov = mle_mod.covariance(
                mle_mod.observed_information(fit.params, sample)
            )
            for name in wanted:
                build = mle_mod.aci if name == "aci" else mle_mod.maci
                intervals[name] = {
                    t: build(
                        points["mle"][t],
                        mle_mod.delta_variance(fit.params, cov, t),
                        args.level,
                    )
                    for t in TARGETS
                }
        elif wanted:
            intervals["pbi"] = ls_mod.pbi(
                sample,
                args.method,
                B=args.bootstrap,
                level=args.level,
                rng=_substream(args.seed, 1),
                variant=args.nllse_variant,
            )
    else:
        prior = bayes_mod.Prior.noninformative()
        if args.proposal_var is not None:
            sigma = np.diag([args.proposal_var, args.proposal_var])
        else:
            sigma = bayes_mod.tune_sigma(
                sample, prior, pilot_M=2000, rng=_substream(args.seed, 2)
            )
        chain = bayes_mod.rwmh(
            sample,
            prior,
            M=args.mcmc,
            M_b=args.burn_in,
            sigma=sigma,
            thin=args.thin,
            rng=_substream(args.seed, 3),
        )
        points["bayes"] = bayes_mod.bayes_estimate(chain).as_dict()
        if wanted:
            intervals["hpdi"] = {
                t: bayes_mod.hpdi(chain.column(t), args.level) for t in TARGETS
            }
    _emit(_format_report(points, intervals, args.format), args.output)
    return EXIT_OK


def _parse_floats(text: str, label: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"could not parse {label}: {text!r}") from None


def cmd_simulate(args) -> int:
    scheme = CensoringScheme(
        boundaries=_parse_floats(args.boundaries, "boundaries"),
        proportions=_parse_floats(args.withdrawals, "withdrawal proportions"),
    )
    params = WeibullParams(kappa=args.shape, tau=args.rate)
    sample = generate_sample(
        params, scheme, args.units, _substream(args.seed, 0), rounding=args.rounding
    )
    write_sample(sample, args.output)
    print(f"wrote {args.output}: n = {sample.n}, failures = {sample.total_failures}")
    return EXIT_OK


def _study_config(path: str) -> StudyConfig:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    prior_raw = raw.get("prior", "jeffreys")
    if prior_raw == "jeffreys":
        prior = bayes_mod.Prior.noninformative()
    else:
        prior = bayes_mod.Prior(**prior_raw)
    try:
        return StudyConfig(
            truth=WeibullParams(kappa=raw["kappa"], tau=raw["tau"]),
            scheme=CensoringScheme(
                boundaries=tuple(raw["boundaries"]),
                proportions=tuple(raw["proportions"]),
            ),
            n=raw["n"],
            L=raw.get("L", 300),
            B=raw.get("B", 500),
            M=raw.get("M", 10_000),
            M_b=raw.get("M_b", 1_000),
            prior=prior,
            level=raw.get("level", 0.95),
            methods=tuple(raw.get("methods", ("mle", "llse", "nllse", "bayes"))),
            intervals=tuple(raw.get("intervals", ("maci", "hpdi"))),
            seed=raw.get("seed", 0),
            thin=raw.get("thin", 1),
            nllse_variant=raw.get("nllse_variant", "weighted"),
        )
    except KeyError as err:
        raise ValueError(f"study config is missing field {err}") from None


def cmd_study(args) -> int:
    config = _study_config(args.config)
    report = run_study(config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report.write_json(out_dir / "report.json")
    report.write_csv(out_dir / "report.csv")
    print(
        f"study: n = {report.n}, m = {report.m}, L = {report.L}, "
        f"rejected_samples = {report.rejected_samples}"
    )
    for kind, method, target, metric, value in report.csv_rows():
        print(f"  {kind:8s} {method:7s} {target:5s} {metric} = {value:.4f}")
    if report.unreliable:
        print(f"  unreliable cells (failure rate > 20%): {', '.join(report.unreliable)}")
    print(f"wrote {out_dir / 'report.json'} and {out_dir / 'report.csv'}")
    return EXIT_OK


def cmd_demo(args) -> int:
    sample = plasma_cell_myeloma()
    points = {}
    intervals = {}

    fit = mle_mod.fit_alternative_mle(sample)
    points["mle"] = _fit_points(fit)
    cov = mle_mod.covariance(mle_mod.observed_information(fit.params, sample))
    intervals["maci"] = {
        t: mle_mod.maci(
            points["mle"][t], mle_mod.delta_variance(fit.params, cov, t), args.level
        )
        for t in TARGETS
    }

    linear = ls_mod.llse(sample)
    points["llse"] = _fit_points(linear)
    intervals["pbi_l"] = ls_mod.pbi(
        sample, "llse", B=args.bootstrap, level=args.level, rng=_substream(args.seed, 1)
    )

    nonlinear = ls_mod.nllse(sample)
    points["nllse"] = _fit_points(nonlinear)
    intervals["pbi_nl"] = ls_mod.pbi(
        sample, "nllse", B=args.bootstrap, level=args.level, rng=_substream(args.seed, 2)
    )

    prior = bayes_mod.Prior.noninformative()
    total = args.burn_in + args.retained * args.thin
    chain = bayes_mod.rwmh(
        sample,
        prior,
        M=total,
        M_b=args.burn_in,
        sigma=np.diag([5e-5, 5e-5]),
        thin=args.thin,
        rng=_substream(args.seed, 3),
    )
    points["bayes"] = bayes_mod.bayes_estimate(chain).as_dict()
    intervals["hpdi"] = {
        t: bayes_mod.hpdi(chain.column(t), args.level) for t in TARGETS
    }

    text = _format_report(points, intervals, args.format)
    if args.format == "table":
        text += f"\nmcmc acceptance rate: {chain.acceptance_rate:.3f}\n"
    _emit(text, args.output)
    return EXIT_OK


class UsageError(Exception):
    pass


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "fit":
            return cmd_fit(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "study":
            return cmd_study(args)
        return cmd_demo(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, json.JSONDecodeError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except EstimationError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
