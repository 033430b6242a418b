"""The pair of anticommuting differentials (d, d~) induced by [E, W]."""

from __future__ import annotations

from functools import cached_property
from typing import Sequence

from .checks import CheckResult
from .expr import ONE, Expr, Sampler, T, ZeroTest, as_expr, diff, mul, sum_exprs
from .multifield import Form, Multivector, exterior_d, lie_derivative, schouten, wedge
from .symcheck import PhaseSystem


class Bicomplex:
    """d u = usual exterior derivative; d~ u = phi^{-1}([What, phi(u)])."""

    def __init__(self, sys: PhaseSystem):
        self.sys = sys
        self.chart = sys.chart
        self.poisson = sys.poisson
        self._cache: dict[tuple[int, ...], Form] = {}

    def d(self, u: Form) -> Form:
        return exterior_d(u)

    def d_tilde(self, u: Form) -> Form:
        """Bracket route, valid in every degree."""
        if not isinstance(u, Form):
            raise TypeError("d_tilde acts on differential forms")
        return self.poisson.phi_inverse(schouten(self.sys.W_hat, self.poisson.phi(u)))

    def d_tilde_scalar(self, f) -> Form:
        return self.d_tilde(Form.scalar(self.chart, as_expr(f)))

    @cached_property
    def table(self) -> list[Form]:
        """d~ z_a for every coordinate."""
        return [self.d_tilde_scalar(z) for z in self.chart.coords]

    def _d_tilde_basis(self, key: tuple[int, ...]) -> Form:
        # d~(dz_I) from d~(dz_a) = -d(d~ z_a) and the derivation rule
        if key not in self._cache:
            if not key:
                self._cache[key] = Form.zero(self.chart, 1)
            else:
                a, rest = key[0], key[1:]
                first = -exterior_d(self.table[a])
                rest_form = Form.basis(self.chart, *rest)
                dz_a = Form.basis(self.chart, a)
                self._cache[key] = wedge(first, rest_form) - wedge(dz_a, self._d_tilde_basis(rest))
        return self._cache[key]

    def d_tilde_derivation(self, u: Form) -> Form:
        """Independent route: extend the coordinate table by linearity,
        the derivation rule and anticommutation with d."""
        coords = self.chart.coords
        out = Form.zero(self.chart, u.degree + 1)
        for key, f in u.coeffs.items():
            df_tilde = Form.zero(self.chart, 1)
            for a, z in enumerate(coords):
                df_tilde = df_tilde + self.table[a] * diff(f, z)
            out = out + wedge(df_tilde, Form.basis(self.chart, *key)) + self._d_tilde_basis(key) * f
        return out


def _degree_sum(forms: Sequence[Form]) -> list[Expr]:
    return [c for u in forms for c in u.components()]


def check_bicomplex(bc: Bicomplex, forms: Sequence[Form], sampler: Sampler) -> CheckResult:
    """d^2 = d~^2 = d d~ + d~ d = 0 on coordinate functions, their differentials and ``forms``."""
    chart = bc.chart
    tests_in: list[Form] = [Form.scalar(chart, z) for z in chart.coords]
    tests_in += [Form.basis(chart, a) for a in range(chart.dim)]
    tests_in += list(forms)
    d2, dt2, anti = [], [], []
    for u in tests_in:
        du, dtu = bc.d(u), bc.d_tilde(u)
        d2.append(bc.d(du))
        dt2.append(bc.d_tilde(dtu))
        anti.append(bc.d(dtu) + bc.d_tilde(du))
    parts = {
        "d2": sampler.is_zero(_degree_sum(d2)),
        "dt2": sampler.is_zero(_degree_sum(dt2)),
        "anticommute": sampler.is_zero(_degree_sum(anti)),
    }
    return CheckResult.from_parts("bicomplex", parts, "d^2, d~^2, d d~ + d~ d")


def check_d_tilde_routes(bc: Bicomplex, forms: Sequence[Form], sampler: Sampler) -> CheckResult:
    """Bracket route against the derivation extension of the coordinate table."""
    diffs = [bc.d_tilde(u) - bc.d_tilde_derivation(u) for u in forms]
    return CheckResult.from_zero("d_tilde_routes", sampler.is_zero(_degree_sum(diffs)), "bracket vs derivation extension")


def check_lenard(bc: Bicomplex, I: Sequence[Expr], sampler: Sampler) -> CheckResult:
    """(k+1) d~ I^(k) = k d I^(k+1) for k = 1..len(I)-1."""
    chart = bc.chart
    parts: dict[str, ZeroTest] = {}
    for k in range(1, len(I)):
        lhs = bc.d_tilde_scalar(I[k - 1]) * as_expr(k + 1)
        rhs = exterior_d(Form.scalar(chart, I[k])) * as_expr(k)
        parts[f"k={k}"] = (lhs - rhs).is_zero(sampler)
    if not parts:
        return CheckResult("lenard", "pass", 0.0, None, "fewer than two traces: vacuous")
    return CheckResult.from_parts("lenard", parts, "(k+1) d~ I^(k) - k d I^(k+1)")


def check_invariance(bc: Bicomplex, forms: Sequence[Form], sampler: Sampler) -> CheckResult:
    """partial_t(d~ u) + L_X(d~ u) - d~(L_X u) = 0 with X = W(h), for t-free u."""
    X = bc.sys.hamiltonian_vf
    diffs = []
    for u in forms:
        du = bc.d_tilde(u)
        diffs.append(du.time_derivative() + lie_derivative(X, du) - bc.d_tilde(lie_derivative(X, u)))
    return CheckResult.from_zero("d_tilde_invariance", sampler.is_zero(_degree_sum(diffs)), "[d/dt, d~] = 0 along the flow")
