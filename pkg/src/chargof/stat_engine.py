"""Compute the V- and U-statistics from data.

The fast V path exploits that for indicator kernels the V-empirical mean
process t -> (1/n^m) sum g(X_{i_1..i_m}, t) is a step function, so the
squared integral against the measure is exact given the measure's closed
survival function: O(n^m log n) instead of O(n^{2m}).
"""

from __future__ import annotations

import dataclasses
import itertools
import math

import numpy as np

from .errors import SampleTooSmall, TooLargeForNaive
from .kernels import KernelContext, symmetrized_kernel
from .model import CharacterizationSpec, Sample


@dataclasses.dataclass(frozen=True)
class ParamEstimate:
    values: np.ndarray
    spec_id: str

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite parameter estimate")
        object.__setattr__(self, "values", v)


@dataclasses.dataclass(frozen=True)
class GMeanProcess:
    """Step representation of the V-empirical mean of g: piecewise constant
    with value `levels[k]` on (breaks[k], breaks[k+1])."""

    breaks: np.ndarray
    levels: np.ndarray


def estimate(spec: CharacterizationSpec, sample: Sample) -> ParamEstimate:
    if sample.n < 1:
        raise SampleTooSmall("need at least one observation")
    spec.validate_sample(sample.values)
    return ParamEstimate(spec.estimator.estimate(sample.values), spec.id)


def _working(spec: CharacterizationSpec, sample: Sample):
    """Prepared data and the plug-in parameter the statistic is evaluated at."""
    spec.validate_sample(sample.values)
    values = spec.prepare(sample.values)
    gamma = spec.estimator.estimate(values)
    return values, gamma


def _all_tuples(values: np.ndarray, m: int) -> np.ndarray:
    n = values.size
    idx = np.indices((n,) * m).reshape(m, -1).T
    return values[idx]


def g_mean_process(spec: CharacterizationSpec, values: np.ndarray, gamma: np.ndarray) -> GMeanProcess:
    """Sorted breakpoint representation of (1/n^m) sum over m-tuples of g."""
    n = values.size
    if spec.process_form is not None:
        flat, weights = spec.process_form(values, gamma)
    else:
        xs = _all_tuples(values, spec.m)
        breaks, coefs = spec.indicator_form(xs, gamma)
        flat = breaks.reshape(-1)
        weights = np.broadcast_to(coefs / n**spec.m, breaks.shape).reshape(-1)
    order = np.argsort(flat)
    flat = flat[order]
    levels = np.cumsum(weights[order])
    return GMeanProcess(breaks=flat, levels=levels)


def vstat(spec: CharacterizationSpec, sample: Sample, est: ParamEstimate | None = None) -> float:
    """V_n(lambda_hat) = int [G_n(t)]^2 dM(t)."""
    if sample.n < 2 * spec.m:
        raise SampleTooSmall(f"n={sample.n} < 2m={2 * spec.m}")
    values, gamma = _working(spec, sample)
    if spec.indicator_form is not None:
        proc = g_mean_process(spec, values, gamma)
        surv = spec.measure.survival(proc.breaks)
        # integral of the squared step function, interval by interval
        dmass = surv - np.concatenate([surv[1:], [0.0]])
        return float(np.sum(proc.levels**2 * dmass))
    ctx = KernelContext(spec, gamma)
    xs = _all_tuples(values, spec.m)
    gv = spec.g(xs[:, None, :], ctx.t_nodes, gamma).mean(axis=0)
    return float(np.sum(ctx.t_weights * gv**2))


def vstat_naive(
    spec: CharacterizationSpec, sample: Sample, est: ParamEstimate | None = None, guard: float = 1e8
) -> float:
    """Oracle path: direct average of the symmetrized kernel over all
    n^{2m} index tuples."""
    n = sample.n
    if n < 2 * spec.m:
        raise SampleTooSmall(f"n={n} < 2m={2 * spec.m}")
    if n ** (2 * spec.m) > guard:
        raise TooLargeForNaive(f"n^(2m) = {n ** (2 * spec.m):.3g} exceeds guard {guard:.3g}")
    values, gamma = _working(spec, sample)
    ctx = KernelContext(spec, gamma)
    xs = _all_tuples(values, 2 * spec.m)
    return float(np.mean(symmetrized_kernel(ctx, xs, gamma)))


def ustat(spec: CharacterizationSpec, sample: Sample, est: ParamEstimate | None = None) -> float:
    """Average of the symmetrized kernel over strictly increasing tuples."""
    n = sample.n
    k = 2 * spec.m
    if n < k:
        raise SampleTooSmall(f"n={n} < 2m={k}")
    if n > 200:
        raise TooLargeForNaive(f"n={n} > 200 enumeration bound")
    values, gamma = _working(spec, sample)
    ctx = KernelContext(spec, gamma)
    total = 0.0
    count = 0
    it = itertools.combinations(range(n), k)
    while True:
        block = np.array(list(itertools.islice(it, 1_000_000)), dtype=np.intp)
        if block.size == 0:
            break
        vals = symmetrized_kernel(ctx, values[block], gamma)
        total += float(np.sum(vals))
        count += block.shape[0]
    assert count == math.comb(n, k)
    return total / count


def scaled_statistic(spec: CharacterizationSpec, sample: Sample) -> dict:
    est = estimate(spec, sample)
    v = vstat(spec, sample, est)
    return {"statistic": v, "scaled": sample.n * v, "estimate": est}
