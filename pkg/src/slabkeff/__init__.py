"""Criticality eigenvalue ``k_eff`` for slab transport and diffusion problems.

Matrix-free discrete operators, two independent ``k_eff`` solvers, the
variational ``tau_plus``/``tau_minus`` bounds, explicit certified bounds and
a dense reference oracle.
"""

__version__ = "0.1.0"

from .problem import (  # noqa: E402
    CrossSectionSet, DiffusionData, EnergyGrid, Kind, ProblemError, ProblemModel,
    SlabGeometry, VelocityGrid, build_problem, compress_problem, degenerate_approx,
    diffusion_problem, transport_problem, validate_irreducibility,
)
from .operators import operator_for  # noqa: E402
from .solver import (  # noqa: E402
    Criticality, CriticalitySolution, ExistenceError, approximate_eigenfunction,
    check_existence, classify, solve_keff, solve_keff_direct, solve_keff_rootfind,
    spectral_radius, spectral_radius_map,
)
from .variational import ratio_field, sandwich_verify, tau_minus, tau_plus  # noqa: E402
from .bounds import bounds_report, pao_criterion  # noqa: E402
from .oracle import assemble_dense, oracle_keff  # noqa: E402

__all__ = [
    "CrossSectionSet", "DiffusionData", "EnergyGrid", "Kind", "ProblemError", "ProblemModel",
    "SlabGeometry", "VelocityGrid", "build_problem", "compress_problem", "degenerate_approx",
    "diffusion_problem", "transport_problem", "validate_irreducibility", "operator_for",
    "Criticality", "CriticalitySolution", "ExistenceError", "approximate_eigenfunction",
    "check_existence", "classify", "solve_keff", "solve_keff_direct", "solve_keff_rootfind",
    "spectral_radius", "spectral_radius_map", "ratio_field", "sandwich_verify", "tau_minus",
    "tau_plus", "bounds_report", "pao_criterion", "assemble_dense", "oracle_keff",
]
