"""Symmetrized kernels, their estimation-corrected versions and projections.

Everything here is a pure function of immutable inputs.  The symmetrized
kernel of order 2m is evaluated as an average over the distinct splits of
the arguments into two m-sets (the full permutation sum collapses to those
splits because g is symmetric in its sample arguments).
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from functools import lru_cache
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ArityError
from .model import CharacterizationSpec


def projection_prefactor(m: int) -> float:
    """Share of cross-block argument placements: 2 m^2 (2m-2)! / (2m)!."""
    return 2.0 * m * m * math.factorial(2 * m - 2) / math.factorial(2 * m)


@lru_cache(maxsize=None)
def _splits(m: int):
    """Distinct unordered splits of 2m argument slots into two m-sets."""
    idx = tuple(range(2 * m))
    out = []
    for combo in itertools.combinations(idx[1:], m - 1):
        first = (0,) + combo
        second = tuple(i for i in idx if i not in first)
        out.append((np.array(first), np.array(second)))
    return tuple(out)


@dataclasses.dataclass(frozen=True)
class KernelContext:
    """Binds a spec to the parameter value used for projections and caches
    the measure quadrature plan."""

    spec: CharacterizationSpec
    lam: np.ndarray
    t_nodes: np.ndarray = dataclasses.field(init=False, repr=False)
    t_weights: np.ndarray = dataclasses.field(init=False, repr=False)
    d1mu_gram: np.ndarray = dataclasses.field(init=False, repr=False)

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        object.__setattr__(self, "lam", lam)
        t, w = self.spec.measure.grid()
        object.__setattr__(self, "t_nodes", t)
        object.__setattr__(self, "t_weights", w)
        if abs(w.sum() - 1.0) > 1e-8:
            raise ValueError("measure quadrature weights do not sum to 1")
        d = self.spec.d1mu(t)  # (Q, p)
        object.__setattr__(self, "d1mu_gram", (d * w[:, None]).T @ d)


def make_context(spec: CharacterizationSpec, lam=None) -> KernelContext:
    return KernelContext(spec, spec.canonical_params if lam is None else lam)


def _check_arity(spec, xs):
    xs = np.asarray(xs, dtype=float)
    if xs.shape[-1] != 2 * spec.m:
        raise ArityError(f"expected {2 * spec.m} arguments, got {xs.shape[-1]}")
    return xs


def _split_pair_integral(spec, breaks_a, coefs_a, breaks_b, coefs_b):
    surv = spec.measure.survival(np.maximum(breaks_a[..., :, None], breaks_b[..., None, :]))
    return np.einsum("...kl,k,l->...", surv, coefs_a, coefs_b)


def symmetrized_kernel(ctx: KernelContext, xs, gamma=None):
    """Average over splits of int g(first m, t) g(last m, t) dM(t).

    Uses the measure's closed pair integral when the spec exposes an
    indicator representation of g, otherwise the fixed quadrature plan.
    Accepts batched input of shape (..., 2m).
    """
    spec = ctx.spec
    xs = _check_arity(spec, xs)
    gamma = ctx.lam if gamma is None else np.atleast_1d(np.asarray(gamma, dtype=float))
    total = 0.0
    for ia, ib in _splits(spec.m):
        if spec.indicator_form is not None:
            ba, ca = spec.indicator_form(xs[..., ia], gamma)
            bb, cb = spec.indicator_form(xs[..., ib], gamma)
            total = total + _split_pair_integral(spec, ba, ca, bb, cb)
        else:
            ga = spec.g(xs[..., ia][..., None, :], ctx.t_nodes, gamma)
            gb = spec.g(xs[..., ib][..., None, :], ctx.t_nodes, gamma)
            total = total + np.sum(ctx.t_weights * ga * gb, axis=-1)
    return total / len(_splits(spec.m))


def starred_kernel(ctx: KernelContext, xs):
    """Estimation-corrected kernel: g is augmented with d1mu^T alpha / m on
    each m-block before the product is integrated against dM."""
    spec = ctx.spec
    xs = _check_arity(spec, xs)
    if spec.has_zero_d1mu:
        return symmetrized_kernel(ctx, xs, ctx.lam)
    alpha = spec.estimator.influence(xs, ctx.lam)  # (..., 2m, p)
    total = 0.0
    for ia, ib in _splits(spec.m):
        aa = alpha[..., ia, :].mean(axis=-2)  # (..., p)
        ab = alpha[..., ib, :].mean(axis=-2)
        if spec.indicator_form is not None:
            ba, ca = spec.indicator_form(xs[..., ia], ctx.lam)
            bb, cb = spec.indicator_form(xs[..., ib], ctx.lam)
            val = _split_pair_integral(spec, ba, ca, bb, cb)
            tda = _indicator_d1mu_tail(ctx, ba, ca)  # (..., p)
            tdb = _indicator_d1mu_tail(ctx, bb, cb)
            val = val + np.sum(tda * ab, axis=-1) + np.sum(tdb * aa, axis=-1)
            val = val + np.einsum("...r,rs,...s->...", aa, ctx.d1mu_gram, ab)
        else:
            ga = spec.g(xs[..., ia][..., None, :], ctx.t_nodes, ctx.lam)
            gb = spec.g(xs[..., ib][..., None, :], ctx.t_nodes, ctx.lam)
            d = spec.d1mu(ctx.t_nodes)  # (Q, p)
            ha = ga + np.sum(d * aa[..., None, :], axis=-1)
            hb = gb + np.sum(d * ab[..., None, :], axis=-1)
            val = np.sum(ctx.t_weights * ha * hb, axis=-1)
        total = total + val
    return total / len(_splits(spec.m))


def _indicator_d1mu_tail(ctx, breaks, coefs):
    """sum_k coefs[k] * int_{breaks[...,k]}^{inf} d1mu(t) dM(t), per component."""
    spec = ctx.spec
    p = spec.estimator.p
    out = np.zeros(breaks.shape[:-1] + (p,))
    for r in range(p):
        tails = spec.measure.tail_integral(lambda t: spec.d1mu(t)[..., r], breaks)
        out[..., r] = np.sum(coefs * tails, axis=-1)
    return out


def g1_eval(ctx: KernelContext, x, t):
    """First projection g1(x, t) = E g(x, X_2, ..., X_m, t) under the null."""
    spec = ctx.spec
    if spec.g1_closed is not None:
        return spec.g1_closed(np.asarray(x, dtype=float), np.asarray(t, dtype=float), ctx.lam)
    if spec.m != 2:
        raise NotImplementedError("numeric first projection only for m = 2")
    # average g(x, X, t) over null-quantile midpoints
    q = 512
    u = (np.arange(q) + 0.5) / q
    xn = spec.null_family.quantile(u, ctx.lam)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    xb, tb = np.broadcast_arrays(x, t)
    xs = np.stack([np.broadcast_to(xb[..., None], xb.shape + (q,)), np.broadcast_to(xn, xb.shape + (q,))], axis=-1)
    return spec.g(xs, tb[..., None], ctx.lam).mean(axis=-1)


def corrected_g1(ctx: KernelContext, x, t, starred=True):
    """g1 plus the estimation correction d1mu(t)^T alpha(x) / m."""
    val = g1_eval(ctx, x, t)
    if starred and not ctx.spec.has_zero_d1mu:
        alpha = ctx.spec.estimator.influence(np.asarray(x, dtype=float), ctx.lam)
        d = ctx.spec.d1mu(np.asarray(t, dtype=float))
        val = val + np.sum(d * alpha, axis=-1) / ctx.spec.m
    return val


def second_projection(ctx: KernelContext, x, y, starred=True):
    """Second projection of the (corrected) symmetrized kernel.

    Equals prefactor * int h(x,t) h(y,t) dM(t) with h = g1 (+ d1mu^T alpha/m).
    Dispatches to the closed form when the spec provides one; otherwise the
    integral runs on Gauss-Legendre panels split at the probability-space
    images of x and y, where the indicator part of g1 jumps.
    """
    spec = ctx.spec
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if spec.phi2_closed is not None and (spec.has_zero_d1mu or not starred):
        lam = ctx.lam[0]
        return spec.phi2_closed(lam * x, lam * y)
    xb, yb = np.broadcast_arrays(x, y)
    pref = projection_prefactor(spec.m)
    # per-pair panels in probability space, split at M(x) and M(y)
    q = 48
    gn, gw = leggauss(q)
    ux = np.clip(spec.measure.cdf(xb), 0.0, 1.0)
    uy = np.clip(spec.measure.cdf(yb), 0.0, 1.0)
    lo = np.minimum(ux, uy)
    hi = np.maximum(ux, uy)
    edges = np.stack([np.zeros_like(lo), lo, hi, np.ones_like(lo)], axis=-1)
    a = edges[..., :-1, None]
    b = edges[..., 1:, None]
    un = (a + b) / 2 + (b - a) / 2 * gn
    wn = (b - a) / 2 * gw
    tn = spec.measure.quantile(np.clip(un, 0.0, 1.0))
    hx = corrected_g1(ctx, xb[..., None, None], tn, starred)
    hy = corrected_g1(ctx, yb[..., None, None], tn, starred)
    return pref * np.sum(wn * hx * hy, axis=(-2, -1))


def second_projection_star(ctx: KernelContext, x, y):
    return second_projection(ctx, x, y, starred=True)


def second_projection_plain(ctx: KernelContext, x, y):
    return second_projection(ctx, x, y, starred=False)
