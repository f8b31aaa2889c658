"""Primitivity-constrained Diophantine approximation toolkit.

Exact counting oracles for coprimality-constrained lattice sums, membership
and Monte Carlo measure estimation for the associated hitting sets in the
unit cube, and a reproducible experiment harness for the governing
divergence/convergence dichotomies.
"""

from .arith import (
    BoundReport,
    SieveTable,
    build_sieve,
    count_coprime_shell,
    count_primitive_ball,
    dirichlet_identity_check,
    sum_phi_gcd_ball,
    totient_average,
)
from .experiment import (
    ApproxFunction,
    DichotomyConfig,
    ExperimentRun,
    SeriesReport,
    emit_report,
    psi_make,
    run_dichotomy,
    series_ds,
    series_kg,
)
from .limsup import (
    BoxUnion,
    MeasureEstimate,
    TargetBall,
    ball_at,
    in_A,
    in_A_pi,
    in_A_prime,
    mc_measure,
    measure_A_exact,
    qi_ratio,
    uniformity_ratio,
)
from .partition import (
    Box,
    Dims,
    Partition,
    count_coprime_interval,
    count_primitive_box,
    counting_sum,
    full_box,
    funny_sum,
    has_ell,
    in_P_pi,
    in_Q_pi,
    make_box,
    make_partition,
    niederreiter_threshold,
    parse_partition,
    trivial_partition,
)
from .shells import Budget, ResourceLimitError

__version__ = "0.1.0"

__all__ = [
    "ApproxFunction",
    "BoundReport",
    "Box",
    "BoxUnion",
    "Budget",
    "DichotomyConfig",
    "Dims",
    "ExperimentRun",
    "MeasureEstimate",
    "Partition",
    "ResourceLimitError",
    "SeriesReport",
    "SieveTable",
    "TargetBall",
    "ball_at",
    "build_sieve",
    "count_coprime_interval",
    "count_coprime_shell",
    "count_primitive_ball",
    "count_primitive_box",
    "counting_sum",
    "dirichlet_identity_check",
    "emit_report",
    "full_box",
    "funny_sum",
    "has_ell",
    "in_A",
    "in_A_pi",
    "in_A_prime",
    "in_P_pi",
    "in_Q_pi",
    "make_box",
    "make_partition",
    "mc_measure",
    "measure_A_exact",
    "niederreiter_threshold",
    "parse_partition",
    "psi_make",
    "qi_ratio",
    "run_dichotomy",
    "series_ds",
    "series_kg",
    "sum_phi_gcd_ball",
    "totient_average",
    "trivial_partition",
    "uniformity_ratio",
]
