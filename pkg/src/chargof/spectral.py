"""Nystrom discretization of the projection operators and their spectra.

Nodes are null-quantile midpoints with equal weights 1/N, which keeps the
discretized operator exactly symmetric.  For specs without a closed-form
projection the matrix is assembled in Gram form B = pref/N * H W H^T,
where H samples the (corrected) first projection on a panel quadrature of
the measure split at every node, so the indicator discontinuities always
sit on panel boundaries.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import eigh

from .errors import NumericalFailure, PreconditionError, TooCoarse, CacheError
from .kernels import KernelContext, corrected_g1, projection_prefactor
from .model import CharacterizationSpec


@dataclasses.dataclass(frozen=True)
class OperatorDiscretization:
    spec_id: str
    kernel_tag: str
    nodes: np.ndarray
    matrix: np.ndarray
    coefficient: int


@dataclasses.dataclass(frozen=True)
class Spectrum:
    spec_id: str
    kernel_tag: str
    N: int
    K: int
    coefficient: int
    eigenvalues: np.ndarray
    trace_estimate: float
    kept_sum: float

    @property
    def tail_mass(self) -> float:
        return self.trace_estimate - self.kept_sum

    def to_json(self):
        return {
            "spec_id": self.spec_id,
            "kernel_tag": self.kernel_tag,
            "N": self.N,
            "K": self.K,
            "coefficient": self.coefficient,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "trace_estimate": self.trace_estimate,
            "tail_mass": self.tail_mass,
        }

    @classmethod
    def from_json(cls, obj):
        try:
            eig = np.asarray(obj["eigenvalues"], dtype=float)
            return cls(
                spec_id=str(obj["spec_id"]),
                kernel_tag=str(obj["kernel_tag"]),
                N=int(obj["N"]),
                K=int(obj["K"]),
                coefficient=int(obj["coefficient"]),
                eigenvalues=eig,
                trace_estimate=float(obj["trace_estimate"]),
                kept_sum=float(eig.sum()),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CacheError(f"malformed spectrum cache: {exc}")


def quantile_nodes(spec: CharacterizationSpec, lam, N: int) -> np.ndarray:
    u = (np.arange(N) + 0.5) / N
    return spec.null_family.quantile(u, lam)


def _gram_matrix(spec, ctx, nodes, starred, panel_q=8):
    ubreaks = np.unique(np.concatenate([[0.0, 1.0], np.clip(spec.measure.cdf(nodes), 0.0, 1.0)]))
    gn, gw = leggauss(panel_q)
    a = ubreaks[:-1, None]
    b = ubreaks[1:, None]
    un = ((a + b) / 2 + (b - a) / 2 * gn[None, :]).ravel()
    wn = ((b - a) / 2 * gw[None, :]).ravel()
    s = spec.measure.quantile(np.clip(un, 0.0, 1.0))
    H = corrected_g1(ctx, nodes[:, None], s[None, :], starred=starred)
    Hw = H * np.sqrt(wn)[None, :]
    B = projection_prefactor(spec.m) / nodes.size * (Hw @ Hw.T)
    return (B + B.T) / 2


def discretize(spec: CharacterizationSpec, lam, kernel_tag: str, N: int) -> OperatorDiscretization:
    """Equal-weight Nystrom matrix of the projection kernel on F-quantile
    midpoints; kernel_tag is "star" (estimation-corrected) or "plain"."""
    if N < 16:
        raise TooCoarse(f"N={N} < 16")
    if kernel_tag not in ("star", "plain"):
        raise PreconditionError(f"unknown kernel tag {kernel_tag!r}")
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    nodes = quantile_nodes(spec, lam, N)
    ctx = KernelContext(spec, lam)
    starred = kernel_tag == "star"
    if spec.phi2_closed is not None and (spec.has_zero_d1mu or not starred):
        matrix = spec.phi2_closed(lam[0] * nodes[:, None], lam[0] * nodes[None, :]) / N
    else:
        matrix = _gram_matrix(spec, ctx, nodes, starred)
    return OperatorDiscretization(
        spec_id=spec.id, kernel_tag=kernel_tag, nodes=nodes, matrix=matrix, coefficient=spec.coefficient
    )


def discretize_callable(kernel, quantile, N: int, tag="custom", spec_id="custom", coefficient=1):
    """Low-level Nystrom discretization of an arbitrary symmetric kernel
    against the law with the given quantile function (oracle hook)."""
    if N < 16:
        raise TooCoarse(f"N={N} < 16")
    u = (np.arange(N) + 0.5) / N
    nodes = np.asarray(quantile(u), dtype=float)
    matrix = np.asarray(kernel(nodes[:, None], nodes[None, :]), dtype=float) / N
    matrix = (matrix + matrix.T) / 2
    return OperatorDiscretization(spec_id=spec_id, kernel_tag=tag, nodes=nodes, matrix=matrix, coefficient=coefficient)


def eigenvalues(disc: OperatorDiscretization, K: int) -> Spectrum:
    N = disc.nodes.size
    if not 1 <= K <= N:
        raise PreconditionError(f"K={K} outside [1, N={N}]")
    try:
        ev = eigh(disc.matrix, eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigenvalue solver failed: {exc}")
    ev = np.sort(ev)[::-1][:K]
    return Spectrum(
        spec_id=disc.spec_id,
        kernel_tag=disc.kernel_tag,
        N=N,
        K=K,
        coefficient=disc.coefficient,
        eigenvalues=ev,
        trace_estimate=float(np.trace(disc.matrix)),
        kept_sum=float(ev.sum()),
    )


def spectrum_pair(spec: CharacterizationSpec, lam, N: int, K: int) -> dict:
    """Starred and plain spectra on the same node set.  For specs with
    d1mu = 0 the two operators coincide and are computed once."""
    plain = eigenvalues(discretize(spec, lam, "plain", N), K)
    if spec.has_zero_d1mu:
        starred = dataclasses.replace(plain, kernel_tag="star")
    else:
        starred = eigenvalues(discretize(spec, lam, "star", N), K)
    return {"starred": starred, "plain": plain}
