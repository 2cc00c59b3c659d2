"""Goodness-of-fit tests built on equidistribution characterizations.

The statistics are degenerate V- and U-statistics with plug-in parameter
estimates; their limit laws are weighted chi-square series whose weights
are eigenvalues of an estimation-corrected integral operator, extracted
here by Nystrom discretization.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    CharacterizationSpec,
    DiagnosticReport,
    Sample,
    builtin_names,
    builtin_spec,
    check_conditions,
    load_sample,
)
from .kernels import (  # noqa: F401
    KernelContext,
    g1_eval,
    make_context,
    second_projection_plain,
    second_projection_star,
    starred_kernel,
    symmetrized_kernel,
)
from .stat_engine import ParamEstimate, estimate, scaled_statistic, ustat, vstat, vstat_naive  # noqa: F401
from .spectral import Spectrum, discretize, discretize_callable, eigenvalues, spectrum_pair  # noqa: F401
from .limitdist import LimitModel, build_limit, chi_square_model, p_value, quantile, sample_limit  # noqa: F401
