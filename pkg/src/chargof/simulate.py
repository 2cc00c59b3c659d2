"""Desk-scale Monte Carlo studies: null convergence of the scaled V- and
U-statistics to their spectral limits, the effect of parameter estimation
on critical values, and size/power runs.

Replicates use independent streams derived from (seed, replicate index),
so reports are bit-identical for a given config at any thread count.
"""

from __future__ import annotations

import dataclasses
import math
import time
from typing import Callable, Optional

import numpy as np
from scipy.stats import ks_2samp

from .errors import InsufficientReps, NoEffectExpected, PreconditionError
from .limitdist import build_limit, quantile, quantile_with_se, sample_limit
from .model import CharacterizationSpec, Sample
from .spectral import spectrum_pair
from .stat_engine import ustat, vstat

_QUANTILE_LEVELS = (0.90, 0.95, 0.99)


@dataclasses.dataclass(frozen=True)
class StudyConfig:
    spec: CharacterizationSpec
    n: int
    reps: int
    seed: int = 0
    limit_draws: int = 10**5
    N: int = 1000
    K: int = 100
    alpha: float = 0.05
    alternative: Optional[Callable[[int, np.random.Generator], np.ndarray]] = None
    null_params: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.reps < 100:
            raise InsufficientReps(f"reps={self.reps} < 100")
        if self.n < 2 * self.spec.m:
            raise PreconditionError(f"n={self.n} < 2m={2 * self.spec.m}")


@dataclasses.dataclass(frozen=True)
class StudyReport:
    spec_id: str
    mode: str
    n: int
    reps: int
    seed: int
    statistics: np.ndarray
    ks_distance: Optional[float] = None
    quantile_table: Optional[list] = None
    rejection_rate: Optional[float] = None
    extra: dict = dataclasses.field(default_factory=dict)
    runtime_seconds: float = 0.0

    def to_json(self, include_sample: bool = False):
        out = {
            "spec_id": self.spec_id,
            "mode": self.mode,
            "n": self.n,
            "reps": self.reps,
            "seed": self.seed,
            "ks_distance": self.ks_distance,
            "quantile_table": self.quantile_table,
            "rejection_rate": self.rejection_rate,
            "runtime_seconds": self.runtime_seconds,
        }
        out.update(self.extra)
        if include_sample:
            out["statistics"] = [float(v) for v in self.statistics]
        return out


def _rep_rng(seed: int, r: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(r,)))


def _null_sampler(spec: CharacterizationSpec, params):
    params = spec.canonical_params if params is None else np.atleast_1d(params)
    return lambda n, rng: spec.null_family.sampler(params, n, rng)


def _replicate_vstats(spec, n, reps, seed, sampler) -> np.ndarray:
    stats = np.empty(reps)
    for r in range(reps):
        values = sampler(n, _rep_rng(seed, r))
        stats[r] = n * vstat(spec, Sample(values))
    return stats


def _quantile_table(stats, limit_sample):
    table = []
    for q in _QUANTILE_LEVELS:
        emp = float(np.quantile(stats, q))
        lim = float(np.quantile(limit_sample, q))
        table.append({"q": q, "empirical": emp, "limit": lim, "rel_diff": emp / lim - 1.0 if lim != 0 else None})
    return table


def null_convergence(config: StudyConfig) -> StudyReport:
    """Distribution of n V_n(lambda_hat) under the null versus the
    starred-spectrum limit law."""
    t0 = time.time()
    spec = config.spec
    sampler = _null_sampler(spec, config.null_params)
    stats = _replicate_vstats(spec, config.n, config.reps, config.seed, sampler)
    spectra = spectrum_pair(spec, spec.canonical_params, config.N, config.K)
    model = build_limit(spectra["starred"], form="V")
    limit_sample = sample_limit(model, config.limit_draws, config.seed + 1)
    return StudyReport(
        spec_id=spec.id,
        mode="null",
        n=config.n,
        reps=config.reps,
        seed=config.seed,
        statistics=stats,
        ks_distance=float(ks_2samp(stats, limit_sample).statistic),
        quantile_table=_quantile_table(stats, limit_sample),
        extra={"limit_mean": model.mean, "empirical_mean": float(stats.mean())},
        runtime_seconds=time.time() - t0,
    )


def estimation_effect(spec: CharacterizationSpec, N: int, K: int, draws: int, seed: int) -> dict:
    """95% limit quantiles from the starred versus plain spectra, and their
    separation in combined MC standard errors."""
    if spec.has_zero_d1mu:
        raise NoEffectExpected(f"spec {spec.id} has d1mu = 0, the two operators coincide")
    spectra = spectrum_pair(spec, spec.canonical_params, N, K)
    star_model = build_limit(spectra["starred"], form="V")
    plain_model = build_limit(spectra["plain"], form="V")
    q_star, se_star = quantile_with_se(star_model, 0.95, draws, seed)
    q_plain, se_plain = quantile_with_se(plain_model, 0.95, draws, seed + 1)
    sep = abs(q_star - q_plain) / math.sqrt(se_star**2 + se_plain**2)
    return {"q95_star": q_star, "q95_plain": q_plain, "separation": sep}


def power_study(config: StudyConfig) -> StudyReport:
    """Rejection rate of the level-alpha test under the configured
    alternative (or the null itself, for a size check)."""
    t0 = time.time()
    spec = config.spec
    sampler = config.alternative or _null_sampler(spec, config.null_params)
    spectra = spectrum_pair(spec, spec.canonical_params, config.N, config.K)
    model = build_limit(spectra["starred"], form="V")
    critical = quantile(model, 1.0 - config.alpha, config.limit_draws, config.seed + 1)
    stats = _replicate_vstats(spec, config.n, config.reps, config.seed, sampler)
    rate = float(np.mean(stats > critical))
    return StudyReport(
        spec_id=spec.id,
        mode="power",
        n=config.n,
        reps=config.reps,
        seed=config.seed,
        statistics=stats,
        rejection_rate=rate,
        extra={"critical_value": critical, "alpha": config.alpha},
        runtime_seconds=time.time() - t0,
    )


def ustat_convergence(spec: CharacterizationSpec, n: int, reps: int, seed: int, draws: int = 10**5,
                      N: int = 1000, K: int = 100) -> StudyReport:
    """Distribution of n U_n(lambda_hat) versus the shifted U-form limit."""
    t0 = time.time()
    if reps < 100:
        raise InsufficientReps(f"reps={reps} < 100")
    sampler = _null_sampler(spec, None)
    stats = np.empty(reps)
    for r in range(reps):
        values = sampler(n, _rep_rng(seed, r))
        stats[r] = n * ustat(spec, Sample(values))
    spectra = spectrum_pair(spec, spec.canonical_params, N, K)
    model = build_limit(spectra["starred"], spectra["plain"], form="U")
    limit_sample = sample_limit(model, draws, seed + 1)
    emp_mean = float(stats.mean())
    emp_se = float(stats.std(ddof=1) / math.sqrt(reps))
    lim_mean = float(limit_sample.mean())
    lim_se = float(limit_sample.std(ddof=1) / math.sqrt(draws))
    return StudyReport(
        spec_id=spec.id,
        mode="ustat",
        n=n,
        reps=reps,
        seed=seed,
        statistics=stats,
        ks_distance=float(ks_2samp(stats, limit_sample).statistic),
        quantile_table=_quantile_table(stats, limit_sample),
        extra={
            "empirical_mean": emp_mean,
            "empirical_mean_se": emp_se,
            "limit_mean": lim_mean,
            "limit_mean_se": lim_se,
            "mean_gap_in_se": abs(emp_mean - lim_mean) / math.sqrt(emp_se**2 + lim_se**2),
        },
        runtime_seconds=time.time() - t0,
    )


def make_alternative(name: str, *params) -> Callable[[int, np.random.Generator], np.ndarray]:
    """Named alternative samplers for power studies."""
    if name == "weibull":
        (shape,) = params
        return lambda n, rng: rng.weibull(shape, size=n)
    if name == "gamma":
        (shape,) = params
        return lambda n, rng: rng.gamma(shape, size=n)
    if name == "exp":
        (rate,) = params
        return lambda n, rng: rng.exponential(scale=1.0 / rate, size=n)
    if name == "uniform":
        lo, hi = params
        return lambda n, rng: rng.uniform(lo, hi, size=n)
    if name == "normal":
        loc, scale = params
        return lambda n, rng: rng.normal(loc, scale, size=n)
    if name == "t":
        (df,) = params
        return lambda n, rng: rng.standard_t(df, size=n)
    raise PreconditionError(f"unknown alternative {name!r}")
