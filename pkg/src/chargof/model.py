"""Domain types, builtin characterization specs, data ingestion and diagnostics.

A characterization spec packages everything needed to run one
equidistribution-based goodness-of-fit test: the indicator kernel g, its
null mean mu and parameter derivative d1mu, the integrating measure, the
null family and the plug-in estimator with its influence function.
"""

from __future__ import annotations

import dataclasses
import io
import math
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate
from scipy.special import ndtr, ndtri

from .errors import (
    DegenerateSample,
    EmptyInput,
    InsufficientReps,
    InvalidValue,
    ParseError,
    SupportError,
    UnknownSpec,
)

SQRT2 = math.sqrt(2.0)


def _norm_pdf(x):
    return np.exp(-0.5 * np.asarray(x, dtype=float) ** 2) / math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# measures


@dataclasses.dataclass(frozen=True)
class MeasureSpec:
    """Finite measure M(t) the kernel integrates against (normalized to 1).

    `survival(b)` is the closed form of M((b, +inf)); together with indicator
    kernels it yields the exact pair integral
    int I{u<t} I{v<t} dM(t) = survival(max(u, v)).
    """

    name: str
    density: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]
    cdf: Callable[[np.ndarray], np.ndarray]
    quantile: Callable[[np.ndarray], np.ndarray]
    survival: Callable[[np.ndarray], np.ndarray]
    q_nodes: int = 256

    def __post_init__(self):
        lo, hi = self.support
        total, _ = integrate.quad(lambda t: float(self.density(t)), lo, hi)
        if abs(total - 1.0) > 1e-8:
            raise ValueError(f"measure {self.name} integrates to {total}, not 1")
        probe = self.quantile(np.linspace(0.01, 0.99, 25))
        if np.any(self.density(probe) < 0):
            raise ValueError(f"measure {self.name} has negative density")

    def pair_integral(self, u, v):
        """Exact int I{u<t} I{v<t} dM(t)."""
        return self.survival(np.maximum(u, v))

    def grid(self, breakpoints: Optional[Sequence[float]] = None, q: Optional[int] = None):
        """Quadrature nodes/weights for int f dM, in probability space.

        Gauss-Legendre panels on (0, 1) split at the M-cdf of the given
        breakpoints, mapped back through the quantile function.  Exact for
        integrands piecewise smooth between the breakpoints.
        """
        if breakpoints is None or len(breakpoints) == 0:
            edges = np.array([0.0, 1.0])
            q = self.q_nodes if q is None else q
        else:
            u = np.clip(self.cdf(np.asarray(breakpoints, dtype=float)), 0.0, 1.0)
            edges = np.unique(np.concatenate([[0.0, 1.0], u]))
            q = 64 if q is None else q
        gn, gw = leggauss(q)
        a = edges[:-1, None]
        b = edges[1:, None]
        un = (a + b) / 2 + (b - a) / 2 * gn[None, :]
        wn = (b - a) / 2 * gw[None, :]
        keep = (b - a).ravel() > 1e-15
        un = un[keep].ravel()
        wn = wn[keep].ravel()
        return self.quantile(un), wn

    def integrate(self, fn, breakpoints=(), q=64):
        t, w = self.grid(breakpoints, q)
        return float(np.sum(w * fn(t)))

    def tail_integral(self, fn, b, q=64):
        """Vectorized int_{b}^{inf} fn(t) dM(t) for an array of lower limits."""
        b = np.asarray(b, dtype=float)
        u0 = np.clip(self.cdf(b), 0.0, 1.0)
        gn, gw = leggauss(q)
        un = u0[..., None] + (1.0 - u0[..., None]) * (gn[None, :] + 1.0) / 2.0
        wn = (1.0 - u0[..., None]) * gw[None, :] / 2.0
        t = self.quantile(np.clip(un, 0.0, 1.0))
        return np.sum(wn * fn(t), axis=-1)


def exponential_measure() -> MeasureSpec:
    return MeasureSpec(
        name="exp-weight",
        density=lambda t: np.exp(-np.asarray(t, dtype=float)),
        support=(0.0, np.inf),
        cdf=lambda t: -np.expm1(-np.maximum(np.asarray(t, dtype=float), 0.0)),
        quantile=lambda u: -np.log1p(-np.asarray(u, dtype=float)),
        survival=lambda b: np.exp(-np.maximum(np.asarray(b, dtype=float), 0.0)),
    )


def standard_normal_measure() -> MeasureSpec:
    return MeasureSpec(
        name="std-normal-weight",
        density=_norm_pdf,
        support=(-np.inf, np.inf),
        cdf=lambda t: ndtr(np.asarray(t, dtype=float)),
        quantile=lambda u: ndtri(np.asarray(u, dtype=float)),
        survival=lambda b: ndtr(-np.asarray(b, dtype=float)),
    )


# ---------------------------------------------------------------------------
# null families and estimators


@dataclasses.dataclass(frozen=True)
class NullFamily:
    name: str
    sampler: Callable[[np.ndarray, int, np.random.Generator], np.ndarray]
    cdf: Callable[[np.ndarray, np.ndarray], np.ndarray]
    quantile: Callable[[np.ndarray, np.ndarray], np.ndarray]
    density: Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclasses.dataclass(frozen=True)
class EstimatorSpec:
    """Plug-in estimator with influence function alpha.

    influence(x, params) returns shape x.shape + (p,), with zero mean under
    the null at `params`.
    """

    p: int
    estimate: Callable[[np.ndarray], np.ndarray]
    influence: Callable[[np.ndarray, np.ndarray], np.ndarray]
    scale_equivariant: bool = False
    location_equivariant: bool = False


# ---------------------------------------------------------------------------
# samples


@dataclasses.dataclass(frozen=True)
class Sample:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size < 1:
            raise InvalidValue("sample must hold at least one value")
        if not np.all(np.isfinite(v)):
            raise InvalidValue("sample contains NaN or Inf")

    @property
    def n(self) -> int:
        return self.values.size


def load_sample(source, format: str = "csv") -> Sample:
    """Read a one-column CSV (optional single header row) into a Sample."""
    if format != "csv":
        raise ParseError(f"unsupported format: {format}")
    if hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    else:
        with io.open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    rows = [line.strip() for line in text.splitlines()]
    rows = [r for r in rows if r != ""]
    if not rows:
        raise EmptyInput("no data rows in input")
    values = []
    for idx, row in enumerate(rows):
        cell = row.split(",")[0].strip()
        try:
            x = float(cell)
        except ValueError:
            if idx == 0:
                continue  # single header row
            raise ParseError(f"non-numeric cell at row {idx + 1}: {cell!r}")
        if not math.isfinite(x):
            raise InvalidValue(f"non-finite value at row {idx + 1}: {cell!r}")
        values.append(x)
    if not values:
        raise EmptyInput("no data rows in input")
    return Sample(np.array(values, dtype=float))


# ---------------------------------------------------------------------------
# characterization specs


@dataclasses.dataclass(frozen=True)
class CharacterizationSpec:
    """One equidistribution characterization test.

    g(xs, t, params) takes xs of shape (..., m) and broadcasts over t.
    indicator_form(xs, params) -> (breaks (..., K), coefs (K,)) rewrites
    g(xs, t) as sum_k coefs[k] * I{t > breaks[..., k]}, enabling exact
    integration against the measure's survival function.
    """

    id: str
    m: int
    g: Callable
    mu: Callable
    d1mu: Callable
    measure: MeasureSpec
    null_family: NullFamily
    estimator: EstimatorSpec
    has_zero_d1mu: bool
    canonical_params: np.ndarray
    indicator_form: Optional[Callable] = None
    process_form: Optional[Callable] = None
    prepare: Callable[[np.ndarray], np.ndarray] = staticmethod(lambda v: v)
    validate_sample: Callable[[np.ndarray], None] = staticmethod(lambda v: None)
    g1_closed: Optional[Callable] = None
    phi2_closed: Optional[Callable] = None

    @property
    def coefficient(self) -> int:
        return math.comb(2 * self.m, 2)


def _puri_rubin() -> CharacterizationSpec:
    def g(xs, t, params):
        gam = params[0]
        x1 = np.asarray(xs)[..., 0]
        x2 = np.asarray(xs)[..., 1]
        return (
            (gam * np.abs(x1 - x2) < t).astype(float)
            - 0.5 * (gam * x1 < t)
            - 0.5 * (gam * x2 < t)
        )

    def indicator_form(xs, params):
        gam = params[0]
        x1 = np.asarray(xs, dtype=float)[..., 0]
        x2 = np.asarray(xs, dtype=float)[..., 1]
        breaks = np.stack([gam * np.abs(x1 - x2), gam * x1, gam * x2], axis=-1)
        return breaks, np.array([1.0, -0.5, -0.5])

    def process_form(values, params):
        # aggregated breakpoints of (1/n^2) sum g: the two marginal
        # indicator terms collapse to n entries of weight -1/n
        gam = params[0]
        n = values.size
        x = gam * values
        breaks = np.concatenate([np.abs(x[:, None] - x[None, :]).ravel(), x])
        weights = np.concatenate([np.full(n * n, 1.0 / (n * n)), np.full(n, -1.0 / n)])
        return breaks, weights

    def mu(t, params):
        return np.zeros(np.broadcast(np.asarray(t)).shape)

    def d1mu(t):
        return np.zeros(np.shape(np.asarray(t)) + (1,))

    def g1_closed(x, t, params):
        lam = params[0]
        y = lam * np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        upper = -np.expm1(-np.maximum(y + t, 0.0))
        lower = -np.expm1(-np.maximum(y - t, 0.0))
        return upper - lower - 0.5 * (y < t) + 0.5 * np.expm1(-np.maximum(t, 0.0))

    def phi2_closed(s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        mn = np.minimum(s, t)
        mx = np.maximum(s, t)
        return (
            1.0 / 18.0
            + 0.5 * (np.exp(-2 * s - t) + np.exp(-s - 2 * t))
            - 0.25 * (np.exp(-2 * t) + np.exp(-2 * s))
            - (16.0 / 9.0) * np.exp(-s - t)
            + (1.0 / 9.0) * np.exp(-mn) * (2.0 - 3.0 * mn)
            + (1.0 / 18.0) * np.exp(-mx) * (19.0 - 6.0 * mn)
        )

    def validate(values):
        if np.any(values <= 0):
            raise SupportError("exponential null requires strictly positive data")

    family = NullFamily(
        name="exponential",
        sampler=lambda params, n, rng: rng.exponential(scale=1.0 / params[0], size=n),
        cdf=lambda x, params: -np.expm1(-params[0] * np.maximum(np.asarray(x, dtype=float), 0.0)),
        quantile=lambda u, params: -np.log1p(-np.asarray(u, dtype=float)) / params[0],
        density=lambda x, params: np.where(
            np.asarray(x, dtype=float) >= 0, params[0] * np.exp(-params[0] * np.asarray(x, dtype=float)), 0.0
        ),
    )
    estimator = EstimatorSpec(
        p=1,
        estimate=lambda values: np.array([1.0 / np.mean(values)]),
        influence=lambda x, params: (params[0] - params[0] ** 2 * np.asarray(x, dtype=float))[..., None],
        scale_equivariant=True,
    )
    return CharacterizationSpec(
        id="puri-rubin",
        m=2,
        g=g,
        mu=mu,
        d1mu=d1mu,
        measure=exponential_measure(),
        null_family=family,
        estimator=estimator,
        has_zero_d1mu=True,
        canonical_params=np.array([1.0]),
        indicator_form=indicator_form,
        process_form=process_form,
        validate_sample=validate,
        g1_closed=g1_closed,
        phi2_closed=phi2_closed,
    )


def _polya() -> CharacterizationSpec:
    c = SQRT2 - 1.0

    def g(xs, t, params):
        th = params[0]
        x1 = np.asarray(xs)[..., 0]
        x2 = np.asarray(xs)[..., 1]
        return (
            ((x1 + x2) / SQRT2 <= t + th * c).astype(float)
            - 0.5 * (x1 <= t)
            - 0.5 * (x2 <= t)
        )

    def indicator_form(xs, params):
        th = params[0]
        x1 = np.asarray(xs, dtype=float)[..., 0]
        x2 = np.asarray(xs, dtype=float)[..., 1]
        breaks = np.stack([(x1 + x2) / SQRT2 - th * c, x1, x2], axis=-1)
        return breaks, np.array([1.0, -0.5, -0.5])

    def process_form(values, params):
        # aggregated breakpoints of (1/n^2) sum g: the two marginal
        # indicator terms collapse to n entries of weight -1/n
        th = params[0]
        n = values.size
        breaks = np.concatenate([((values[:, None] + values[None, :]) / SQRT2 - th * c).ravel(), values])
        weights = np.concatenate([np.full(n * n, 1.0 / (n * n)), np.full(n, -1.0 / n)])
        return breaks, weights

    def mu(t, params):
        gam = params[0]
        t = np.asarray(t, dtype=float)
        return ndtr(t + gam * c) - ndtr(t)

    def d1mu(t):
        return (_norm_pdf(t) * c)[..., None]

    def g1_closed(x, t, params):
        th = params[0]
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        return (
            ndtr(SQRT2 * (t + th * c) - (x + th))
            - 0.5 * ndtr(t - th)
            - 0.5 * (x <= t)
        )

    def prepare(values):
        sd = np.std(values, ddof=1) if values.size > 1 else 0.0
        if not sd > 0:
            raise DegenerateSample("zero sample variance")
        return (values - np.mean(values)) / sd

    def validate(values):
        if values.size > 1 and not np.std(values, ddof=1) > 0:
            raise DegenerateSample("zero sample variance")

    family = NullFamily(
        name="normal-location",
        sampler=lambda params, n, rng: params[0] + rng.standard_normal(n),
        cdf=lambda x, params: ndtr(np.asarray(x, dtype=float) - params[0]),
        quantile=lambda u, params: params[0] + ndtri(np.asarray(u, dtype=float)),
        density=lambda x, params: _norm_pdf(np.asarray(x, dtype=float) - params[0]),
    )
    estimator = EstimatorSpec(
        p=1,
        estimate=lambda values: np.array([np.mean(values)]),
        influence=lambda x, params: (np.asarray(x, dtype=float) - params[0])[..., None],
        location_equivariant=True,
    )
    return CharacterizationSpec(
        id="polya",
        m=2,
        g=g,
        mu=mu,
        d1mu=d1mu,
        measure=standard_normal_measure(),
        null_family=family,
        estimator=estimator,
        has_zero_d1mu=False,
        canonical_params=np.array([0.0]),
        indicator_form=indicator_form,
        process_form=process_form,
        prepare=prepare,
        validate_sample=validate,
        g1_closed=g1_closed,
    )


_BUILTINS = {"puri-rubin": _puri_rubin, "polya": _polya}


def builtin_spec(name: str) -> CharacterizationSpec:
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise UnknownSpec(f"unknown spec {name!r}; available: {sorted(_BUILTINS)}")
    return factory()


def builtin_names():
    return sorted(_BUILTINS)


# ---------------------------------------------------------------------------
# condition diagnostics


@dataclasses.dataclass(frozen=True)
class DiagnosticReport:
    spec_id: str
    mu_max_abs: float
    mu_se: float
    alpha_mean: list
    alpha_se: list
    passed: bool

    def to_json(self):
        return {
            "spec_id": self.spec_id,
            "mu_max_abs": self.mu_max_abs,
            "mu_se": self.mu_se,
            "alpha_mean": self.alpha_mean,
            "alpha_se": self.alpha_se,
            "pass": self.passed,
        }


def check_conditions(spec: CharacterizationSpec, reps: int, seed: int, tol: float = 3.0) -> DiagnosticReport:
    """Monte Carlo check that mu(t; lambda) = 0 on a t-grid and E alpha = 0.

    `tol` is the allowed deviation in standard errors.
    """
    if reps < 100:
        raise InsufficientReps(f"reps={reps} < 100")
    params = spec.canonical_params
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0,)))
    draws = spec.null_family.sampler(params, reps * spec.m, rng).reshape(reps, spec.m)
    tgrid = spec.measure.quantile(np.linspace(0.05, 0.95, 19))
    gvals = spec.g(draws[:, None, :], tgrid[None, :], params)
    mu_mean = gvals.mean(axis=0)
    mu_se = gvals.std(axis=0, ddof=1) / math.sqrt(reps)
    k = int(np.argmax(np.abs(mu_mean)))
    mu_ok = np.all(np.abs(mu_mean) <= tol * np.maximum(mu_se, 1e-300))

    alpha = spec.estimator.influence(draws[:, 0], params)
    a_mean = alpha.mean(axis=0)
    a_se = alpha.std(axis=0, ddof=1) / math.sqrt(reps)
    alpha_ok = np.all(np.abs(a_mean) <= tol * np.maximum(a_se, 1e-300))

    return DiagnosticReport(
        spec_id=spec.id,
        mu_max_abs=float(np.abs(mu_mean[k])),
        mu_se=float(mu_se[k]),
        alpha_mean=[float(v) for v in a_mean],
        alpha_se=[float(v) for v in a_se],
        passed=bool(mu_ok and alpha_ok),
    )
