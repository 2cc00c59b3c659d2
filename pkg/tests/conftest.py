"""Shared fixtures and the acceptance-criteria reporter.

The expensive desk-scale artifacts (builtin spectra, replicated null
statistics at n=500) are session-scoped so the acceptance tests that
share them pay for each only once.
"""

from __future__ import annotations

import numpy as np
import pytest

from chargof.model import builtin_spec
from chargof.simulate import StudyConfig, null_convergence
from chargof.spectral import spectrum_pair

_ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion and assert it."""

    def record(num: int, passed: bool, detail: str):
        _ACCEPTANCE_LINES[num] = f"criterion {num:2d}: {'PASS' if passed else 'FAIL'} - {detail}"
        assert passed, f"criterion {num}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for num in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(_ACCEPTANCE_LINES[num])


@pytest.fixture(scope="session")
def pr_spec():
    return builtin_spec("puri-rubin")


@pytest.fixture(scope="session")
def polya_spec():
    return builtin_spec("polya")


@pytest.fixture(scope="session")
def pr_spectra(pr_spec):
    return spectrum_pair(pr_spec, pr_spec.canonical_params, N=1000, K=100)


@pytest.fixture(scope="session")
def polya_spectra(polya_spec):
    return spectrum_pair(polya_spec, polya_spec.canonical_params, N=1000, K=100)


def _null_report(spec):
    config = StudyConfig(spec=spec, n=500, reps=1000, seed=11, limit_draws=10**5, N=1000, K=100)
    return null_convergence(config)


@pytest.fixture(scope="session")
def pr_null_report(pr_spec):
    return _null_report(pr_spec)


@pytest.fixture(scope="session")
def polya_null_report(polya_spec):
    return _null_report(polya_spec)


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)
