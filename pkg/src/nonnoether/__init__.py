"""Symbolic-numeric verification of structures generated by non-Noether symmetries.

Given coordinates, a regular Poisson bivector W, a Hamiltonian h and a
symmetry generator E, the package builds [E, W], the integrals Y^(k), a Lax
pair, the bi-Hamiltonian pair, the differentials (d, d~) and the operator
R_E, and checks every identity they should satisfy at seeded sample points.
"""

from .bicomplex import Bicomplex, check_bicomplex, check_lenard
from .checks import CheckResult
from .expr import Chart, DomainError, Expr, ParseError, Sampler, UnknownIdentifierError, diff, evaluate, is_zero, parse
from .flow import Trajectory, conservation_drift, integrate, isospectral_drift
from .lax import LaxPair, build_lax, check_lax_equation, lax_traces
from .multifield import (
    Form,
    Multivector,
    PoissonMap,
    RegularityError,
    exterior_d,
    interior_product,
    lie_bracket,
    lie_derivative,
    schouten,
    top_ratio,
    wedge,
)
from .nijenhuis import TangentOperator, auxiliary_forms, build_r_e, torsion
from .report import VerificationReport, render, run
from .symcheck import (
    PhaseSystem,
    check_involutivity,
    check_non_noether,
    check_symmetry,
    check_yang_baxter,
    conserved_quantities,
    poisson_bracket,
    secular_roots,
)
from .sysdef import SystemDefinition, load, loads

__version__ = "0.1.0"
