"""Numerical potential theory for finitely generated polynomial semigroups."""

from .backward import (
    EmpiricalMeasure,
    SampleConfig,
    calibrate_card_bound,
    card_bound_rhs,
    default_base_point,
    disc_count,
    escapes,
    exhaustive_leaves,
    iterate_pullback,
    julia_sample,
    pullback_dirac,
)
from .capacity import (
    CapacityReport,
    capacity_leja,
    capacity_report,
    diameter,
    f_functional,
    holder_mass_estimate,
    leja_points,
    nondense_witness,
    orbit_witness,
    uniform_perfectness_check,
)
from .exceptions import (
    ConfigError,
    InadmissibleGeneratorError,
    NumericalError,
    OutputError,
    PolysemiError,
    SolverError,
)
from .poly import ComplexPoly, RootSet, compose, critical_points, derivative, local_order, roots
from .potential import (
    GridField,
    GridSpec,
    IdentityReport,
    energy,
    green_partial,
    log_potential,
    robin_constant,
    robin_partial,
    verify_identity,
)
from .semigroup import (
    EscapeData,
    GeneratorSet,
    Word,
    check_main_condition,
    critical_sets,
    enumerate_words,
    escape_radius,
    minimal_generating_set,
    representation_bound,
    select_kappa,
    validate,
    word_eval,
)

__version__ = "0.1.0"
