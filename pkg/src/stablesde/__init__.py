"""Simulation and scaling-limit checks for SDEs driven by strictly stable noise."""
from __future__ import annotations

from .drift import DriftSpec, check_g_remainder_bound, check_theorem_hypotheses, eval_f, eval_g
from .errors import DomainError
from .limits import (
    counterexample_gap,
    derive_exponents,
    ito_terms,
    remainder_statistic,
    rescale_path,
    sample_limit_process,
    sample_Y_integral,
)
from .records import JumpLedger, PathRecord
from .sde_engine import (
    ExactIncrement,
    FixedStep,
    GeometricStep,
    JumpAdapted,
    SimConfig,
    run_ensemble,
    simulate_path,
)
from .stable_core import StableParams, make_stable_params, sample_stable_increment, sample_stable_path
from .stats import compare_cf, ecdf, ks_two_sample, loglog_slope

__version__ = "0.1.0"
