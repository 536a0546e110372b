"""Shot-budgeted kernel acquisition.

Simulates per-pair Bernoulli shot noise on a ground-truth kernel, computes
sensitivity-weighted variance-optimal shot allocations for ridge regression
and SVM, runs the multi-round acquisition loop against baseline allocators,
and evaluates the closed-form variance bounds at desk scale.
"""

from .allocators import (
    AllocatorResult,
    AqkaConfig,
    BernoulliBackend,
    alloc_bernoulli_only,
    alloc_hybrid,
    alloc_multinomial,
    alloc_nystrom,
    alloc_random,
    alloc_shofar,
    alloc_uniform,
    aqka_run,
    kkt_targets,
    target_fill,
)
from .errors import (
    AqkaError,
    ConfigError,
    ConvergenceFailure,
    DegenerateWeights,
    EmptyDataset,
    InvalidInput,
    NotPositiveDefinite,
    ParseError,
    RegularityViolation,
)
from .kernels import (
    Dataset,
    FeatureMapConfig,
    haar_adhoc_labels,
    load_dataset_csv,
    planted_sparse_target,
    rbf_kernel,
    zz_fidelity_kernel,
)
from .krr import (
    KrrFit,
    SensitivityField,
    gauss_newton_diag,
    krr_fit,
    krr_gradient,
    krr_sensitivity,
    leverage_scores,
    predict_and_score,
)
from .numerics import opnorm, psd_project, solve_spd, sym_eig
from .shotsim import AllocationPlan, ShotLedger, merge, pair_count, sample_shots
from .svm import SvmFit, svm_dual_solve, svm_envelope_gradient
from .theory import (
    BoundReport,
    cs_ratio,
    plugin_inflation,
    remainder_bound,
    sparse_ceiling,
    svm_ceiling,
)

__version__ = "0.1.0"
