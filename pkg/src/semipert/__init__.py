"""Desk-scale verification of boundary-feedback perturbations of the left
shift semigroup on a truncated weighted-seminorm grid."""

__version__ = "0.1.0"

from .config import RunConfig, load_config
from .errors import (
    AlignmentError,
    ConfigError,
    ContractionError,
    ConvergenceError,
    DomainMembershipError,
    GridMismatchError,
    SemipertError,
)
from .evolve import (
    EvolutionResult,
    OracleSolution,
    characteristics_oracle,
    compare_solutions,
    observed_orders,
    picard_semigroup,
    resolvent_crosscheck,
)
from .funcspace import (
    Grid,
    GridFunction,
    TimePath,
    in_domain_dirichlet,
    in_domain_feedback,
    l1_seminorm,
    load_grid_function,
    load_time_path,
    save_grid_function,
    save_time_path,
    seminorm,
    sup_seminorm,
)
from .perturbation import (
    BoundaryFunctional,
    NeumannConfig,
    NeumannResult,
    contraction_factor,
    dembart_check,
    estimate_contraction,
    g_primitive,
    neumann_resolvent,
    perturb_integral_h,
    phi_apply,
    rbar_b,
    resolvent_R,
    resolvent_path,
)
from .reports import CheckRecord, CheckReport
from .semigroup import (
    GeneratorSpec,
    ShiftSemigroup,
    check_semigroup_axioms,
    equicontinuity_constants,
    generator_residual,
)
from .suites import RUNNERS, SuiteOutcome, run_contraction, run_evolve, run_resolvent, run_verify

__all__ = [name for name in dir() if not name.startswith("_")]
