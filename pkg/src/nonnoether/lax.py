"""Lax pair built from a symmetry generator, and the Lax equation check."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg
from .checks import CheckResult
from .expr import Expr, Sampler, T, diff, evaluate_batch, mul, neg, sum_exprs
from .multifield import bivector_matrix
from .symcheck import PhaseSystem

Matrix = list[list[Expr]]


@dataclass(frozen=True)
class LaxPair:
    """Matrices with ``dL/dt = L P - P L`` along the flow."""

    L: Matrix
    P: Matrix

    @property
    def dim(self) -> int:
        return len(self.L)

    def nonzero_entries(self) -> dict[tuple[int, int], Expr]:
        """1-based ``(row, col) -> entry`` for the structurally nonzero entries of L."""
        return {
            (a + 1, b + 1): self.L[a][b]
            for a in range(self.dim)
            for b in range(self.dim)
            if not self.L[a][b].is_const_value(0)
        }

    def evaluate(self, points: np.ndarray, times) -> np.ndarray:
        """L at many points, shape ``(count, dim, dim)``."""
        n = self.dim
        flat = [x for row in self.L for x in row]
        vals = evaluate_batch(flat, points, times)
        return vals.T.reshape(-1, n, n)


def build_lax(sys: PhaseSystem) -> LaxPair:
    """L_ab = sum_dc Winv_ad (-E_c d_c W_db + W_cb d_c E_d + W_dc d_c E_b).

    The bracketed term is the (d, b) component of [E, W], so ``L`` equals the
    matrix product ``W^{-1} [E, W]``; P_ab = d_a (W(h)^b).
    """
    dim = sys.chart.dim
    z = sys.chart.coords
    Wm = bivector_matrix(sys.W)
    Em = sys.E.vector_components()
    M = [
        [
            sum_exprs(
                [neg(mul(Em[c], diff(Wm[d][b], z[c]))) for c in range(dim)]
                + [mul(Wm[c][b], diff(Em[d], z[c])) for c in range(dim)]
                + [mul(Wm[d][c], diff(Em[b], z[c])) for c in range(dim)]
            )
            for b in range(dim)
        ]
        for d in range(dim)
    ]
    L = linalg.matmul(sys.poisson.inverse_matrix, M)
    X = sys.hamiltonian_vf.vector_components()
    P = [[diff(X[b], z[a]) for b in range(dim)] for a in range(dim)]
    return LaxPair(L, P)


def lax_traces(lp: LaxPair, kmax: int) -> list[Expr]:
    """I^(k) = Tr(L^k) for k = 1..kmax."""
    if kmax < 1:
        raise ValueError("kmax must be at least 1")
    out = []
    power = lp.L
    for k in range(1, kmax + 1):
        if k > 1:
            power = linalg.matmul(power, lp.L)
        out.append(linalg.trace(power))
    return out


def lax_residual(lp: LaxPair, sys: PhaseSystem, sign: int = 1) -> Matrix:
    """dL/dt - sign * (L P - P L), with dL/dt = partial_t L + W(h)(L) entrywise."""
    LP = linalg.matmul(lp.L, lp.P)
    PL = linalg.matmul(lp.P, lp.L)
    n = lp.dim
    out = []
    for a in range(n):
        row = []
        for b in range(n):
            comm = LP[a][b] - PL[a][b]
            row.append(sys.total_derivative(lp.L[a][b]) - (comm if sign > 0 else neg(comm)))
        out.append(row)
    return out


def check_lax_equation(lp: LaxPair, sys: PhaseSystem, sampler: Sampler, sign: int = 1) -> CheckResult:
    res = lax_residual(lp, sys, sign)
    name = "lax" if sign > 0 else "lax_flipped"
    return CheckResult.from_zero(
        name, sampler.is_zero([x for row in res for x in row]), "dL/dt - (LP - PL)" if sign > 0 else "dL/dt + (LP - PL)"
    )


def spectral_multiplicity(lp: LaxPair, roots_at, points: np.ndarray, times) -> int:
    """How many times each secular root appears in the spectrum of L.

    ``roots_at(point, time)`` returns the n secular roots.  The multiplicity
    is the ratio of the L-spectrum size to n, confirmed by matching the sorted
    spectrum against the repeated roots at every point.
    """
    mats = lp.evaluate(points, times)
    m = None
    for Lp, p, t in zip(mats, points, np.broadcast_to(times, (len(points),))):
        roots = np.asarray(roots_at(p, t))
        k = lp.dim // len(roots)
        eig = np.sort_complex(np.linalg.eigvals(Lp))
        rep = np.sort_complex(np.repeat(roots, k))
        if not np.allclose(eig, rep, atol=1e-6):
            raise ValueError("spectrum of L is not a uniform repetition of the secular roots")
        m = k if m is None else m
        if k != m:
            raise ValueError("multiplicity varies between points")
    return int(m)


def check_trace_identity(traces: Sequence[Expr], roots_at, multiplicity: int, sampler: Sampler, tol: float = 1e-8) -> CheckResult:
    """Tr L^k = multiplicity * sum_i c_i^k at every sample point."""
    vals, pts, ts = sampler.evaluate(list(traces))
    worst, witness = 0.0, None
    for j in range(pts.shape[0]):
        c = np.asarray(roots_at(pts[j], ts[j]))
        for k in range(len(traces)):
            r = abs(vals[k, j] - multiplicity * np.sum(c ** (k + 1)).real)
            if r > worst:
                worst, witness = r, {"point": [float(x) for x in pts[j]], "t": float(ts[j])}
    status = "pass" if worst < tol else "fail"
    return CheckResult("trace_identity", status, float(worst), witness, f"Tr L^k = {multiplicity} * sum c_i^k")
