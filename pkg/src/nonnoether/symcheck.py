"""Symmetry conditions, conserved quantities and secular roots.

Hamiltonian convention: ``X_h = W(h) = phi_w(dh)`` has components
``X^b = sum_a W^{ab} d_a h`` and the flow obeys ``df/dt = {h, f} = X_h(f)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import Sequence

import numpy as np

from .checks import FAIL, PASS, CheckResult
from .expr import ONE, Chart, Expr, Sampler, T, ZeroTest, as_expr, diff, mul, neg, parse, sum_exprs
from .multifield import (
    Multivector,
    PoissonMap,
    RegularityError,
    lie_bracket,
    lie_derivative,
    poisson_bracket,
    schouten,
    top_ratio,
    wedge,
    wedge_power,
)

__all__ = [
    "PhaseSystem",
    "SymmetryAnalysis",
    "poisson_bracket",
    "check_symmetry",
    "check_non_noether",
    "conserved_quantities",
    "check_conservation",
    "secular_polynomial",
    "secular_roots",
    "root_clusters",
    "quantities_from_roots",
    "check_yang_baxter",
    "check_bihamiltonian",
    "check_involutivity",
    "analyze",
]


@dataclass
class PhaseSystem:
    """A regular Hamiltonian system together with a candidate symmetry generator."""

    chart: Chart
    W: Multivector
    h: Expr
    E: Multivector

    def __post_init__(self):
        if self.W.degree != 2 or self.E.degree != 1:
            raise ValueError("W must be a bivector and E a vector field")
        if self.W.chart != self.chart or self.E.chart != self.chart:
            raise ValueError("W and E must live on the system chart")

    @classmethod
    def from_strings(cls, names: Sequence[str], W: Sequence[tuple[int, int, str]], h: str, E: Sequence[str]) -> "PhaseSystem":
        """Build from 1-based ``(a, b, expr)`` bivector entries and expression strings."""
        chart = Chart(tuple(names))
        terms = [((a - 1, b - 1), parse(s, chart) if isinstance(s, str) else as_expr(s)) for a, b, s in W]
        bivector = Multivector.from_terms(chart, 2, terms)
        gen = Multivector.vector(chart, [parse(s, chart) if isinstance(s, str) else as_expr(s) for s in E])
        return cls(chart, bivector, parse(h, chart) if isinstance(h, str) else as_expr(h), gen)

    def with_generator(self, E: Multivector) -> "PhaseSystem":
        return PhaseSystem(self.chart, self.W, self.h, E)

    @property
    def n(self) -> int:
        return self.chart.n

    @cached_property
    def poisson(self) -> PoissonMap:
        return PoissonMap(self.W)

    @cached_property
    def W_hat(self) -> Multivector:
        return schouten(self.E, self.W)

    @cached_property
    def hamiltonian_vf(self) -> Multivector:
        return self.poisson.hamiltonian_vector_field(self.h)

    def bracket(self, f: Expr, g: Expr) -> Expr:
        return poisson_bracket(f, g, self.W)

    def total_derivative(self, f: Expr) -> Expr:
        """d/dt f along the flow: partial_t f + {h, f}."""
        return diff(f, T) + self.hamiltonian_vf.apply(f)

    def check_poisson(self, sampler: Sampler) -> CheckResult:
        return CheckResult.from_zero("poisson", schouten(self.W, self.W).is_zero(sampler), "[W,W] = 0")

    def check_regular(self, sampler: Sampler) -> CheckResult:
        zt = self.poisson.check_regular(sampler)
        res = CheckResult.from_zero("regular", ZeroTest(zt.ok, zt.residual, zt.witness), "min |det W| over samples")
        res.status = PASS if zt.ok else FAIL
        return res


def check_symmetry(sys: PhaseSystem, sampler: Sampler) -> CheckResult:
    """partial_t E = [E, W(h)] with the Lie bracket of vector fields."""
    residual = sys.E.time_derivative() - lie_bracket(sys.E, sys.hamiltonian_vf)
    return CheckResult.from_zero("symmetry", residual.is_zero(sampler), "dE/dt - [E, W(h)]")


def check_non_noether(sys: PhaseSystem, sampler: Sampler) -> CheckResult:
    """Passes when [E, W] does not vanish; residual is max |[E, W]|."""
    zt = sys.W_hat.is_zero(sampler)
    return CheckResult(
        "non_noether",
        FAIL if zt.ok else PASS,
        float(zt.residual),
        {"point": list(zt.witness[0]), "t": zt.witness[1]} if zt.witness else None,
        "max |[E,W]| (must be nonzero)",
    )


def conserved_quantities(sys: PhaseSystem, sampler: Sampler | None = None) -> list[Expr]:
    """Y^(k) = (What^k ^ W^(n-k)) / W^n for k = 1..n."""
    n = sys.n
    W_powers = [wedge_power(sys.W, j) for j in range(n + 1)]
    top = W_powers[n]
    if top.coeffs == {}:
        raise RegularityError("W^n vanishes identically")
    Y = []
    What_k = Multivector.scalar(sys.chart, ONE)
    for k in range(1, n + 1):
        What_k = wedge(What_k, sys.W_hat)
        Y.append(top_ratio(wedge(What_k, W_powers[n - k]), top, sampler if k == 1 else None))
    return Y


def check_conservation(
    sys: PhaseSystem, quantities: Sequence[Expr], sampler: Sampler, name: str = "conserved", label: str = "Y"
) -> CheckResult:
    tests = {f"{label}{k + 1}": sampler.is_zero(sys.total_derivative(q)) for k, q in enumerate(quantities)}
    return CheckResult.from_parts(name, tests, f"d/dt {label} = partial_t {label} + {{h, {label}}}")


def secular_polynomial(quantities: Sequence[Expr]) -> list[Expr]:
    """Coefficients (highest power first) of the monic secular polynomial.

    The coefficient of c^(n-k) is (-1)^k C(n, k) Y^(k).
    """
    n = len(quantities)
    coeffs = [ONE]
    for k in range(1, n + 1):
        c = mul(as_expr(comb(n, k)), quantities[k - 1])
        coeffs.append(c if k % 2 == 0 else neg(c))
    return coeffs


def _sort_roots(roots: np.ndarray) -> np.ndarray:
    roots = np.asarray(roots, dtype=complex)
    order = np.lexsort((roots.imag, roots.real))
    return roots[order]


def roots_of(coeffs: Sequence[float]) -> np.ndarray:
    """Roots of a monic polynomial, closed form for degree <= 2."""
    coeffs = [complex(c) for c in coeffs]
    n = len(coeffs) - 1
    if n == 1:
        return np.array([-coeffs[1]])
    if n == 2:
        b, c = coeffs[1], coeffs[2]
        disc = np.sqrt(complex(b * b - 4 * c))
        # avoid cancellation: q = -(b + sign(b) sqrt(disc)) / 2
        s = 1.0 if (b.conjugate() * disc).real >= 0 else -1.0
        q = -0.5 * (b + s * disc)
        if q == 0:
            return np.array([0j, 0j])
        return np.array([q, c / q])
    companion = np.zeros((n, n), dtype=complex)
    companion[0, :] = [-c for c in coeffs[1:]]
    companion[1:, :-1] = np.eye(n - 1)
    return np.linalg.eigvals(companion)


def secular_roots(sys_or_quantities, point, time: float = 0.0) -> np.ndarray:
    """The n roots of the secular equation at one point, sorted by (real, imag)."""
    quantities = (
        conserved_quantities(sys_or_quantities)
        if isinstance(sys_or_quantities, PhaseSystem)
        else list(sys_or_quantities)
    )
    poly = secular_polynomial(quantities)
    from .expr import evaluate_batch

    vals = evaluate_batch(poly, np.asarray(point, dtype=float)[None, :], [time])[:, 0]
    return _sort_roots(roots_of(vals))


def root_clusters(roots: Sequence[complex], tol: float = 1e-6) -> list[tuple[complex, int]]:
    """Group nearly equal roots, reporting each cluster mean with its multiplicity."""
    out: list[list[complex]] = []
    for r in _sort_roots(np.asarray(roots)):
        for cluster in out:
            if abs(cluster[0] - r) < tol:
                cluster.append(r)
                break
        else:
            out.append([r])
    return [(complex(np.mean(c)), len(c)) for c in out]


def elementary_symmetric(roots: Sequence[complex]) -> list[complex]:
    """e_0..e_n of the roots, from the expansion of prod (x + r)."""
    e = [1.0 + 0j]
    for r in roots:
        e = [a + r * b for a, b in zip(e + [0j], [0j] + e)]
    return e


def quantities_from_roots(roots: Sequence[complex]) -> list[complex]:
    """Y^(k) = [(n-k)! k! / n!] * e_k(c): normalised elementary symmetric sums."""
    n = len(roots)
    e = elementary_symmetric(roots)
    return [e[k] / comb(n, k) for k in range(1, n + 1)]


def check_yang_baxter(sys: PhaseSystem, sampler: Sampler) -> CheckResult:
    """[[E,[E,W]],W] = 0, reporting [What,W] and [What,What] alongside."""
    What = sys.W_hat
    yb = schouten(schouten(sys.E, What), sys.W)
    parts = {
        "yang_baxter": yb.is_zero(sampler),
        "compatible": schouten(What, sys.W).is_zero(sampler),
        "what_poisson": schouten(What, What).is_zero(sampler),
    }
    res = CheckResult.from_parts("yang_baxter", parts, "[[E,[E,W]],W]; [What,W]; [What,What]")
    res.status = PASS if parts["yang_baxter"].ok else FAIL
    res.residual = float(parts["yang_baxter"].residual)
    return res


def check_bihamiltonian(sys: PhaseSystem, sampler: Sampler) -> CheckResult:
    What = sys.W_hat
    parts = {
        "W_W": schouten(sys.W, sys.W).is_zero(sampler),
        "W_What": schouten(sys.W, What).is_zero(sampler),
        "What_What": schouten(What, What).is_zero(sampler),
    }
    return CheckResult.from_parts("bihamiltonian", parts, "[W,W] = [W,What] = [What,What] = 0")


def check_involutivity(sys: PhaseSystem, quantities: Sequence[Expr], sampler: Sampler) -> CheckResult:
    """{Y_k, Y_m} and {Y_k, Y_m}_What vanish for all pairs."""
    parts = {}
    for k in range(len(quantities)):
        for m in range(k + 1, len(quantities)):
            a, b = quantities[k], quantities[m]
            parts[f"W:Y{k + 1},Y{m + 1}"] = sampler.is_zero(poisson_bracket(a, b, sys.W))
            parts[f"What:Y{k + 1},Y{m + 1}"] = sampler.is_zero(poisson_bracket(a, b, sys.W_hat))
    if not parts:
        return CheckResult("involution", PASS, 0.0, None, "fewer than two integrals: vacuous")
    return CheckResult.from_parts("involution", parts, "{Y_k,Y_m} = {Y_k,Y_m}_What = 0")


def check_liouville(V: Multivector, f: Expr, sampler: Sampler) -> ZeroTest:
    """L_{V(f)} V = 0, which holds exactly when V is Poisson."""
    Xf = PoissonMap(V).hamiltonian_vector_field(f)
    return lie_derivative(Xf, V).is_zero(sampler)


@dataclass
class SymmetryAnalysis:
    W_hat: Multivector
    Y: list[Expr]
    secular_poly_coeffs: list[Expr]
    is_symmetry: CheckResult
    is_non_noether: CheckResult
    yang_baxter_holds: CheckResult
    extra: dict = field(default_factory=dict)


def analyze(sys: PhaseSystem, sampler: Sampler) -> SymmetryAnalysis:
    Y = conserved_quantities(sys, sampler)
    return SymmetryAnalysis(
        sys.W_hat,
        Y,
        secular_polynomial(Y),
        check_symmetry(sys, sampler),
        check_non_noether(sys, sampler),
        check_yang_baxter(sys, sampler),
    )
