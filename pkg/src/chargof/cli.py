"""Command-line front end.

Payload (JSON or CSV) goes to stdout only; errors are machine-readable
JSON {code, message} on stderr with the documented exit codes.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np
import scipy

from . import __version__
from .errors import CacheError, ChargofError, PreconditionError
from .limitdist import build_limit, p_value, quantile
from .model import Sample, builtin_names, builtin_spec, load_sample
from .simulate import (
    StudyConfig,
    estimation_effect,
    make_alternative,
    null_convergence,
    power_study,
    ustat_convergence,
)
from .spectral import Spectrum, discretize, eigenvalues, spectrum_pair
from .stat_engine import estimate, vstat


def _emit(obj):
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _load_cache(path: str) -> Spectrum:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise CacheError(f"cannot read cache {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise CacheError(f"cache {path} is not valid JSON: {exc}")
    return Spectrum.from_json(obj)


def cmd_test(args) -> int:
    spec = builtin_spec(args.spec)
    sample = load_sample(args.input)
    est = estimate(spec, sample)
    v = vstat(spec, sample, est)
    scaled = sample.n * v
    if args.eigen_cache:
        spectrum = _load_cache(args.eigen_cache)
        provenance = {"N": spectrum.N, "K": spectrum.K, "source": args.eigen_cache}
    else:
        spectrum = eigenvalues(discretize(spec, spec.canonical_params, "star", args.N), args.K)
        provenance = {"N": args.N, "K": args.K, "source": "inline"}
    model = build_limit(spectrum, form="V")
    pv = p_value(model, scaled, args.draws, args.seed)
    _emit(
        {
            "spec_id": spec.id,
            "n": sample.n,
            "estimate": [float(x) for x in est.values],
            "statistic": v,
            "scaled_statistic": scaled,
            "p_value": pv["p"],
            "mc_se": pv["mc_se"],
            "spectrum": provenance,
            "seed": args.seed,
            "versions": {"chargof": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
        }
    )
    return 0


def cmd_eigen(args) -> int:
    spec = builtin_spec(args.spec)
    spectrum = eigenvalues(discretize(spec, spec.canonical_params, args.kernel, args.N), args.K)
    payload = json.dumps(spectrum.to_json(), sort_keys=True) + "\n"
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    except OSError as exc:
        raise CacheError(f"cannot write {args.out}: {exc}")
    return 0


def cmd_quantiles(args) -> int:
    spectrum = _load_cache(args.eigen_cache)
    model = build_limit(spectrum, form="V")
    levels = sorted(float(s) for s in args.levels.split(","))
    values = quantile(model, np.array(levels), args.draws, args.seed)
    sys.stdout.write("q,value\n")
    for q, v in zip(levels, values):
        sys.stdout.write(f"{q},{v}\n")
    return 0


def _parse_alt(text):
    if text is None:
        return None
    name, _, rest = text.partition(":")
    params = [float(p) for p in rest.split(",")] if rest else []
    return make_alternative(name, *params)


def cmd_simulate(args) -> int:
    spec = builtin_spec(args.spec)
    if args.mode == "effect":
        if args.spec != "polya" and builtin_spec(args.spec).has_zero_d1mu:
            pass  # estimation_effect raises NoEffectExpected with context
        _emit(estimation_effect(spec, args.N, args.K, args.draws, args.seed))
        return 0
    if args.mode == "ustat":
        report = ustat_convergence(spec, args.n, args.reps, args.seed, args.draws, args.N, args.K)
    else:
        config = StudyConfig(
            spec=spec,
            n=args.n,
            reps=args.reps,
            seed=args.seed,
            limit_draws=args.draws,
            N=args.N,
            K=args.K,
            alpha=args.alpha,
            alternative=_parse_alt(args.alt),
        )
        report = null_convergence(config) if args.mode == "null" else power_study(config)
    _emit(report.to_json(include_sample=args.dump_sample))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chargof", description="characterization-based goodness-of-fit tests")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, n_k=True, draws=True):
        p.add_argument("--seed", type=int, default=0)
        if n_k:
            p.add_argument("--N", type=int, default=1000)
            p.add_argument("--K", type=int, default=100)
        if draws:
            p.add_argument("--draws", type=int, default=10**6)

    p = sub.add_parser("test", help="run a goodness-of-fit test on a CSV sample")
    p.add_argument("--spec", required=True, help=f"one of {builtin_names()}")
    p.add_argument("--input", required=True)
    p.add_argument("--eigen-cache")
    common(p)
    p.set_defaults(fn=cmd_test)

    p = sub.add_parser("eigen", help="build and cache an operator spectrum")
    p.add_argument("--spec", required=True)
    p.add_argument("--kernel", choices=["star", "plain"], default="star")
    p.add_argument("--out", required=True)
    common(p, draws=False)
    p.set_defaults(fn=cmd_eigen)

    p = sub.add_parser("quantiles", help="quantile table (CSV) from a cached spectrum")
    p.add_argument("--eigen-cache", required=True)
    p.add_argument("--levels", default="0.90,0.95,0.99")
    common(p, n_k=False)
    p.set_defaults(fn=cmd_quantiles)

    p = sub.add_parser("simulate", help="run a Monte Carlo study")
    p.add_argument("--spec", required=True)
    p.add_argument("--mode", choices=["null", "power", "ustat", "effect"], required=True)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--alt", help="alternative sampler, e.g. weibull:2 or normal:0,1")
    p.add_argument("--dump-sample", action="store_true")
    common(p)
    p.set_defaults(fn=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ChargofError as exc:
        sys.stderr.write(json.dumps(exc.to_json()) + "\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(json.dumps({"code": "IOError", "message": str(exc)}) + "\n")
        return 5


if __name__ == "__main__":
    sys.exit(main())
