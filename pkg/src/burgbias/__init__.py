"""Order-1/n bias and variance of autoregressive estimators.

The package evaluates asymptotic bias and variance coefficients of
estimators that are smooth functions of lagged-product statistics
``S[m,k,i]``, using exact limiting covariances of those statistics for a
Gaussian AR(1)/AR(2) process, and checks the results by simulation.
"""

from burgbias.errors import (
    BurgBiasError,
    ConvergenceError,
    DegenerateInputError,
    DomainError,
    ExprSyntaxError,
    InvalidAtomError,
    SingularExpansionError,
)
from burgbias.model import ArModel, CharRoots, MomentContext, acvf, acvf_sum, admissible, char_roots
from burgbias.statdsl import LinearStat, MeanMode, StatAtom, atom_mean, lbias, lcov
from burgbias.expansion import (
    ExpansionResult,
    differentiate,
    evaluate_at_mean,
    expand,
    format_expr,
    parse_expr,
)
from burgbias.estimators import (
    EstimatorDef,
    burg_ar1_def,
    burg_ar2_def,
    burg_fit,
    estimator_def,
    ls_ar_def,
    ls_fit,
    yw_ar_def,
    yw_fit,
)
from burgbias.simulator import McConfig, McReport, mc_bias, simulate

__version__ = "0.1.0"
