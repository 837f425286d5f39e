"""Full-history recursive multilevel Picard approximation of McKean-Vlasov
SDEs with additive noise and law-linear drift, plus the machinery needed to
verify it: keyed splittable randomness, grid Brownian paths, cost accounting
against a budget recursion, discrete Gronwall-type closed forms and bounds,
an interacting-particle reference solver, and a batch experiment harness.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .brownian import GridPath, generate, snap
from .errors import ConfigError, ResourceLimitError
from .hier_rng import IndexKey, child, derive_seed, gaussian_vector, normals, uniform, uniforms
from .ledger import CostLedger
from .mlp import (
    L2ErrorResult,
    MlpCall,
    RealizeResult,
    l2_error_estimate,
    mlp_evaluate,
    realize_estimate,
)
from .models import (
    DriftModel,
    Oracle,
    Problem,
    builtin_problem,
    lipschitz_selfcheck,
    make_drift,
    oracle_mean,
    oracle_pathwise,
    pathwise_value,
)
from .particles import EnsembleStats, ensemble_stats, simulate_particles
from .recursions import (
    CertificateResult,
    complexity_certificate,
    cost_bound,
    cost_budget,
    error_bound,
    gronwall_beta,
    gronwall_bound,
    gronwall_closed_form,
    log_error_bound,
    log_moment_bound,
    moment_bound,
    two_step_closed_form,
    two_step_roots,
)

__all__ = [
    "CertificateResult",
    "ConfigError",
    "CostLedger",
    "DriftModel",
    "EnsembleStats",
    "GridPath",
    "IndexKey",
    "L2ErrorResult",
    "MlpCall",
    "Oracle",
    "Problem",
    "RealizeResult",
    "ResourceLimitError",
    "builtin_problem",
    "child",
    "complexity_certificate",
    "cost_bound",
    "cost_budget",
    "derive_seed",
    "ensemble_stats",
    "error_bound",
    "gaussian_vector",
    "generate",
    "gronwall_beta",
    "gronwall_bound",
    "gronwall_closed_form",
    "l2_error_estimate",
    "lipschitz_selfcheck",
    "log_error_bound",
    "log_moment_bound",
    "make_drift",
    "mlp_evaluate",
    "moment_bound",
    "normals",
    "oracle_mean",
    "oracle_pathwise",
    "pathwise_value",
    "realize_estimate",
    "simulate_particles",
    "snap",
    "two_step_closed_form",
    "two_step_roots",
    "uniform",
    "uniforms",
]
