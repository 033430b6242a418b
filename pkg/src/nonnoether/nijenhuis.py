"""The (1,1)-tensor R_E, its Frölicher–Nijenhuis torsion and the 2-form chain."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import linalg
from .checks import CheckResult
from .expr import Chart, Expr, Sampler, ZeroTest, as_expr, collect, mul, sum_exprs
from .multifield import Form, Multivector, exterior_d, interior_product, lie_bracket, lie_derivative, pairing, schouten, wedge
from .symcheck import PhaseSystem


@dataclass(frozen=True)
class TangentOperator:
    """R(d/dz_a) = sum_b M[a][b] d/dz_b, i.e. R = sum M[a][b] dz_a (x) d/dz_b."""

    chart: Chart
    matrix: list[list[Expr]]

    @property
    def dim(self) -> int:
        return self.chart.dim

    @classmethod
    def identity(cls, chart: Chart) -> "TangentOperator":
        return cls(chart, linalg.identity(chart.dim))

    def apply(self, X: Multivector) -> Multivector:
        x = X.vector_components()
        n = self.dim
        return Multivector.vector(self.chart, [sum_exprs(mul(x[a], self.matrix[a][b]) for a in range(n)) for b in range(n)])

    def transpose_apply(self, u: Form) -> Form:
        """Dual action on 1-forms: (R^T u)(X) = u(R X)."""
        if u.degree != 1:
            raise ValueError("transpose_apply acts on 1-forms")
        n = self.dim
        return Form.covector(self.chart, [sum_exprs(mul(self.matrix[a][b], u[b]) for b in range(n)) for a in range(n)])

    def power_traces(self, kmax: int) -> list[Expr]:
        out, power = [], self.matrix
        for k in range(1, kmax + 1):
            if k > 1:
                power = linalg.matmul(power, self.matrix)
            out.append(linalg.trace(power))
        return out

    def terms(self) -> list[tuple[int, int, Expr]]:
        """Nonzero ``(a, b, coeff)`` triples, 1-based, for dz_a (x) d/dz_b."""
        n = self.dim
        return [(a + 1, b + 1, self.matrix[a][b]) for a in range(n) for b in range(n) if not self.matrix[a][b].is_const_value(0)]

    def pretty(self) -> str:
        names = self.chart.names
        return " + ".join(f"({c}) d{names[a - 1]}(x)d/d{names[b - 1]}" for a, b, c in self.terms()) or "0"


def apply_r_e(sys: PhaseSystem, X: Multivector) -> Multivector:
    """R_E X = phi(L_E phi^{-1} X) - [E, X]."""
    pm = sys.poisson
    return pm.phi(lie_derivative(sys.E, pm.phi_inverse(X))) - lie_bracket(sys.E, X)


def apply_r_e_bar(sys: PhaseSystem, u: Form) -> Form:
    """Dual operator on forms of any degree: phi^{-1}([E, phi u]) + L_E u."""
    pm = sys.poisson
    return pm.phi_inverse(schouten(sys.E, pm.phi(u))) + lie_derivative(sys.E, u)


def build_r_e(sys: PhaseSystem) -> TangentOperator:
    """Component matrix of R_E from its action on the coordinate vector fields."""
    chart = sys.chart
    rows = []
    for a in range(chart.dim):
        img = apply_r_e(sys, Multivector.basis(chart, a))
        rows.append([collect(c) for c in img.vector_components()])
    return TangentOperator(chart, rows)


def torsion(R: TangentOperator, X: Multivector, Y: Multivector) -> Multivector:
    """T(R)(X,Y) = [RX,RY] - R([RX,Y] + [X,RY] - R[X,Y])."""
    RX, RY = R.apply(X), R.apply(Y)
    inner = lie_bracket(RX, Y) + lie_bracket(X, RY) - R.apply(lie_bracket(X, Y))
    return lie_bracket(RX, RY) - R.apply(inner)


def check_torsion(R: TangentOperator, pairs: Sequence[tuple[Multivector, Multivector]], sampler: Sampler) -> CheckResult:
    chart = R.chart
    parts: dict[str, ZeroTest] = {}
    basis = [Multivector.basis(chart, a) for a in range(chart.dim)]
    coord = [torsion(R, basis[a], basis[b]) for a in range(chart.dim) for b in range(a + 1, chart.dim)]
    parts["coordinate_pairs"] = sampler.is_zero([c for t in coord for c in t.components()])
    if pairs:
        rand = [torsion(R, X, Y) for X, Y in pairs]
        parts["random_pairs"] = sampler.is_zero([c for t in rand for c in t.components()])
    return CheckResult.from_parts("torsion", parts, f"{len(coord)} coordinate pairs + {len(pairs)} random pairs")


def lie_derivative_operator(R: TangentOperator, X: Multivector) -> TangentOperator:
    """(L_X R)(Y) = [X, R Y] - R [X, Y], tabulated on coordinate fields."""
    chart = R.chart
    rows = []
    for a in range(chart.dim):
        Y = Multivector.basis(chart, a)
        rows.append((lie_bracket(X, R.apply(Y)) - R.apply(lie_bracket(X, Y))).vector_components())
    return TangentOperator(chart, rows)


def check_invariance(R: TangentOperator, sys: PhaseSystem, sampler: Sampler) -> CheckResult:
    """partial_t R + L_{W(h)} R = 0."""
    from .expr import T, diff

    L = lie_derivative_operator(R, sys.hamiltonian_vf)
    comps = [diff(R.matrix[a][b], T) + L.matrix[a][b] for a in range(R.dim) for b in range(R.dim)]
    return CheckResult.from_zero("r_e_invariance", sampler.is_zero(comps), "d/dt R_E along the flow")


def check_pairing(R: TangentOperator, sys: PhaseSystem, pairs: Sequence[tuple[Multivector, Form]], sampler: Sampler) -> CheckResult:
    """u(R X) = (R-bar u)(X), with R-bar built independently from E and W."""
    diffs = [pairing(u, R.apply(X)) - pairing(apply_r_e_bar(sys, u), X) for X, u in pairs]
    return CheckResult.from_zero("r_e_pairing", sampler.is_zero(diffs), "i_{R X} u = i_X R-bar u")


@dataclass(frozen=True)
class AuxiliaryForms:
    omega: Form
    omega_bullet: Form
    omega_bullet2: Form


def auxiliary_forms(sys: PhaseSystem) -> AuxiliaryForms:
    """omega = phi^{-1}(W), omega. = R-bar omega, omega.. = R-bar omega."""
    omega = sys.poisson.phi_inverse(sys.W)
    ob = apply_r_e_bar(sys, omega)
    return AuxiliaryForms(omega, ob, apply_r_e_bar(sys, ob))


def check_auxiliary_forms(sys: PhaseSystem, forms: AuxiliaryForms, sampler: Sampler) -> CheckResult:
    parts = {
        "d_omega": exterior_d(forms.omega).is_zero(sampler),
        "d_omega_bullet": exterior_d(forms.omega_bullet).is_zero(sampler),
        "d_omega_bullet2": exterior_d(forms.omega_bullet2).is_zero(sampler),
        "omega_bullet_relation": (forms.omega_bullet - sys.poisson.phi_inverse(sys.W_hat) * as_expr(2)).is_zero(sampler),
        "phi_omega": (sys.poisson.phi(forms.omega) - sys.W).is_zero(sampler),
    }
    return CheckResult.from_parts("closed_forms", parts, "d omega = d omega. = d omega.. = 0")


def omega_pairing_sign(sys: PhaseSystem, omega: Form, sampler: Sampler) -> int:
    """The sign s with i_{phi(u)} omega = s u, checked on the coordinate 1-forms."""
    chart = sys.chart
    for s in (1, -1):
        diffs = []
        for a in range(chart.dim):
            u = Form.basis(chart, a)
            diffs.append(interior_product(sys.poisson.phi(u), omega) - u * as_expr(s))
        if sampler.is_zero([c for f in diffs for c in f.components()]).ok:
            return s
    raise ValueError("i_{phi(u)} omega is not proportional to u")
