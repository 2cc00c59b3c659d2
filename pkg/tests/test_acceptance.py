"""Acceptance gate: twelve numbered criteria, one pass/fail line each.

The lines are printed in the terminal summary (see conftest).  Oracle
targets were computed independently before being frozen here.
"""

import math
import subprocess
import sys

import numpy as np

from chargof.kernels import make_context, second_projection_star
from chargof.limitdist import chi_square_model, quantile, sample_limit
from chargof.model import Sample, builtin_spec
from chargof.simulate import estimation_effect, ustat_convergence
from chargof.spectral import discretize, discretize_callable, eigenvalues, spectrum_pair
from chargof.stat_engine import vstat, vstat_naive


def test_criterion_01_projection_correctness(pr_spec, criterion):
    ctx = make_context(pr_spec)
    anchor = float(second_projection_star(ctx, 0.0, 0.0))
    anchor_ok = abs(anchor - 1.0 / 18.0) < 1e-12

    # MC conditional-expectation oracle: phi2(s,t) = (2/3) E g1(s,T) g1(t,T)
    rng = np.random.default_rng(101)
    T = rng.exponential(size=1_000_000)
    pairs = rng.uniform(0.0, 3.0, size=(20, 2))
    worst = 0.0
    for s, t in pairs:
        prod = pr_spec.g1_closed(s, T, ctx.lam) * pr_spec.g1_closed(t, T, ctx.lam)
        est = (2.0 / 3.0) * prod.mean()
        se = (2.0 / 3.0) * prod.std(ddof=1) / math.sqrt(T.size)
        closed = float(second_projection_star(ctx, s, t))
        worst = max(worst, abs(closed - est) / se)
    mc_ok = worst < 3.0

    degen = max(
        abs(pr_spec.measure.integrate(lambda t: pr_spec.phi2_closed(s, t), breakpoints=[s]))
        for s in (0.2, 0.7, 1.5)
    )
    degen_ok = degen < 1e-8
    criterion(
        1,
        anchor_ok and mc_ok and degen_ok,
        f"phi2(0,0)={anchor:.12f} (want 1/18), MC worst dev {worst:.2f} se, "
        f"degeneracy max |int| = {degen:.2e}",
    )


def test_criterion_02_statistic_oracle(criterion, rng):
    worst = 0.0
    for name in ("puri-rubin", "polya"):
        spec = builtin_spec(name)
        for _ in range(50):
            n = int(rng.integers(4, 9))
            s = Sample(spec.null_family.sampler(spec.canonical_params, n, rng))
            f, nv = vstat(spec, s), vstat_naive(spec, s)
            worst = max(worst, abs(f - nv) / abs(nv))
    criterion(2, worst < 1e-9, f"fast vs naive vstat, 100 samples, worst rel err {worst:.2e}")


def test_criterion_03_invariance(pr_spec, polya_spec, criterion, rng):
    x = rng.exponential(size=40)
    base = vstat(pr_spec, Sample(x))
    worst_pr = max(
        abs(vstat(pr_spec, Sample(c * x)) / base - 1.0) for c in (0.5, 3.0, 17.0)
    )
    z = rng.standard_normal(40)
    base_z = vstat(polya_spec, Sample(z))
    worst_po = max(
        abs(vstat(polya_spec, Sample(a + b * z)) / base_z - 1.0)
        for a, b in ((2.0, 3.0), (-1.0, 0.5), (5.0, 10.0))
    )
    criterion(
        3,
        worst_pr < 1e-10 and worst_po < 1e-10,
        f"scale invariance {worst_pr:.2e}, affine invariance {worst_po:.2e}",
    )


def test_criterion_04_spectral_oracle(criterion):
    disc = discretize_callable(lambda x, y: np.minimum(x, y) - x * y, lambda u: u, N=1000)
    eig = eigenvalues(disc, 5).eigenvalues
    want = 1.0 / (np.arange(1, 6) ** 2 * math.pi**2)
    cvm_err = float(np.max(np.abs(eig - want)))
    rank1 = eigenvalues(discretize_callable(lambda x, y: x * y, lambda u: u, N=1000), 1)
    r1_err = abs(rank1.eigenvalues[0] - 1.0 / 3.0)
    criterion(
        4,
        cvm_err < 1e-4 and r1_err < 1e-6,
        f"Brownian-bridge eigs max abs err {cvm_err:.2e}, rank-one err {r1_err:.2e}",
    )


def test_criterion_05_spectral_stability(pr_spec, polya_spec, pr_spectra, polya_spectra, criterion):
    worst = 0.0
    for spec, spectra in ((pr_spec, pr_spectra), (polya_spec, polya_spectra)):
        e500 = eigenvalues(discretize(spec, spec.canonical_params, "star", 500), 10).eigenvalues
        e1000 = spectra["starred"].eigenvalues[:10]
        worst = max(worst, float(np.max(np.abs(e500 / e1000 - 1.0))))
    star = pr_spectra["starred"]
    kept_frac = star.kept_sum / star.trace_estimate
    criterion(
        5,
        worst < 1e-3 and abs(kept_frac - 1.0) < 0.02,
        f"top-10 N=500 vs N=1000 worst rel change {worst:.2e}, "
        f"puri-rubin kept_sum/trace = {kept_frac:.4f}",
    )


def test_criterion_06_limit_law_oracles(criterion):
    q1 = quantile(chi_square_model([1.0]), 0.95, 10**6, seed=21)
    q2 = quantile(chi_square_model([0.5, 0.5]), 0.95, 10**6, seed=22)
    err1 = abs(q1 - 3.841)
    err2 = abs(q2 - math.log(20.0))
    criterion(
        6,
        err1 < 0.02 and err2 < 0.03,
        f"chi2(1) q95 {q1:.4f} (err {err1:.4f}), Exp(1) q95 {q2:.4f} (err {err2:.4f})",
    )


def test_criterion_07_v_convergence(pr_null_report, polya_null_report, criterion):
    detail = []
    ok = True
    for report in (pr_null_report, polya_null_report):
        q95 = next(row for row in report.quantile_table if row["q"] == 0.95)
        rel = abs(q95["rel_diff"])
        ok = ok and report.ks_distance < 0.07 and rel < 0.05
        detail.append(f"{report.spec_id}: KS={report.ks_distance:.3f}, q95 rel diff {rel:.3f}")
    criterion(7, ok, "; ".join(detail))


def test_criterion_08_v_mean(pr_null_report, pr_spectra, criterion):
    want = 6.0 * pr_spectra["starred"].trace_estimate
    got = float(np.mean(pr_null_report.statistics))
    rel = abs(got / want - 1.0)
    criterion(8, rel < 0.10, f"mean n*V_n = {got:.5f} vs 6*trace = {want:.5f} (rel {rel:.3f})")


def test_criterion_09_estimation_effect(pr_spec, polya_spec, criterion):
    effect = estimation_effect(polya_spec, N=1000, K=100, draws=10**6, seed=31)
    pair = spectrum_pair(pr_spec, pr_spec.canonical_params, 500, 100)
    pr_gap = float(np.max(np.abs(pair["starred"].eigenvalues - pair["plain"].eigenvalues)))
    criterion(
        9,
        effect["separation"] > 3.0 and pr_gap < 1e-10,
        f"polya q95 star {effect['q95_star']:.4f} vs plain {effect['q95_plain']:.4f} "
        f"({effect['separation']:.1f} combined se); puri-rubin star/plain gap {pr_gap:.1e}",
    )


def test_criterion_10_u_convergence(pr_spec, criterion):
    report = ustat_convergence(pr_spec, n=30, reps=500, seed=17, draws=10**5, N=1000, K=100)
    gap = report.extra["mean_gap_in_se"]
    ok = gap < 3.0 and report.ks_distance < 0.10
    criterion(
        10,
        ok,
        f"n*U_n mean {report.extra['empirical_mean']:.4f} vs limit "
        f"{report.extra['limit_mean']:.4f} ({gap:.2f} combined se), KS={report.ks_distance:.3f}",
    )


def test_criterion_11_size_control(pr_null_report, polya_null_report, criterion):
    detail = []
    ok = True
    for report in (pr_null_report, polya_null_report):
        q95 = next(row for row in report.quantile_table if row["q"] == 0.95)
        rate = float(np.mean(report.statistics > q95["limit"]))
        ok = ok and 0.03 <= rate <= 0.07
        detail.append(f"{report.spec_id}: rejection {rate:.3f}")
    criterion(11, ok, "; ".join(detail) + " (alpha=0.05, n=500, 1000 reps)")


def test_criterion_12_determinism(tmp_path, criterion):
    model = chi_square_model([0.7, 0.2])
    lib_ok = np.array_equal(sample_limit(model, 50_000, seed=4), sample_limit(model, 50_000, seed=4))

    data = tmp_path / "d.csv"
    rng = np.random.default_rng(5)
    data.write_text("".join(f"{v}\n" for v in rng.exponential(size=60)))

    def run(*args):
        return subprocess.run(
            [sys.executable, "-m", "chargof.cli", *args], capture_output=True
        )

    cmd = ("test", "--spec", "puri-rubin", "--input", str(data), "--N", "64", "--K", "20", "--draws", "10000")
    cli_ok = run(*cmd).stdout == run(*cmd).stdout

    out1, out2 = tmp_path / "e1.json", tmp_path / "e2.json"
    run("eigen", "--spec", "polya", "--out", str(out1), "--N", "64", "--K", "20")
    run("eigen", "--spec", "polya", "--out", str(out2), "--N", "64", "--K", "20")
    eigen_ok = out1.read_bytes() == out2.read_bytes()
    criterion(
        12,
        lib_ok and cli_ok and eigen_ok,
        f"seeded sampling identical: {lib_ok}, CLI test stdout identical: {cli_ok}, "
        f"eigen cache byte-identical: {eigen_ok}",
    )
