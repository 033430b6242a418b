"""Small dense matrix helpers over Expr entries."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .expr import ONE, ZERO, Expr, as_expr, div, inverse_entry, mul, neg, sum_exprs
from .expr import DomainError

Matrix = list[list[Expr]]

SYMBOLIC_INVERSE_MAX_DIM = 6


def _minor_det(M: Sequence[Sequence[Expr]]):
    n = len(M)
    ncols = len(M[0]) if M else 0
    cache: dict[tuple[int, int], Expr] = {}

    def det(row: int, cols: int) -> Expr:
        # determinant of rows row..n-1 restricted to the column bitmask
        if row == n:
            return ONE
        key = (row, cols)
        if key in cache:
            return cache[key]
        terms = []
        sign = 1
        for c in range(ncols):
            if not cols & (1 << c):
                continue
            a = M[row][c]
            if not a.is_const_value(0):
                sub = det(row + 1, cols & ~(1 << c))
                t = mul(a, sub)
                terms.append(t if sign > 0 else neg(t))
            sign = -sign
        cache[key] = sum_exprs(terms)
        return cache[key]

    return det


def det(M: Sequence[Sequence]) -> Expr:
    M = [[as_expr(x) for x in row] for row in M]
    n = len(M)
    return _minor_det(M)(0, (1 << n) - 1)


def matmul(A: Sequence[Sequence[Expr]], B: Sequence[Sequence[Expr]]) -> Matrix:
    n, m, p = len(A), len(B), len(B[0])
    return [[sum_exprs(mul(A[i][k], B[k][j]) for k in range(m)) for j in range(p)] for i in range(n)]


def transpose(A: Sequence[Sequence[Expr]]) -> Matrix:
    return [list(col) for col in zip(*A)]


def trace(A: Sequence[Sequence[Expr]]) -> Expr:
    return sum_exprs(A[i][i] for i in range(len(A)))


def identity(n: int) -> Matrix:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def _exact_inverse(M: Matrix) -> Matrix | None:
    """Gauss-Jordan over Fractions when every entry is an exact constant."""
    if not all(x.op == "const" and isinstance(x.value, Fraction) for row in M for x in row):
        return None
    n = len(M)
    A = [[x.value for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            raise DomainError("singular constant matrix")
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        A[col] = [x / p for x in A[col]]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return [[as_expr(x) for x in row[n:]] for row in A]


def inverse(M: Sequence[Sequence]) -> Matrix:
    """Inverse matrix with Expr entries.

    Exact for constant rational matrices, adjugate/determinant for
    dimension <= 6, pointwise numeric entries beyond.
    """
    M = [[as_expr(x) for x in row] for row in M]
    n = len(M)
    exact = _exact_inverse(M)
    if exact is not None:
        return exact
    if n > SYMBOLIC_INVERSE_MAX_DIM:
        return [[inverse_entry(M, i, j) for j in range(n)] for i in range(n)]
    d = det(M)
    if d.is_const_value(0):
        raise DomainError("matrix determinant is identically zero")
    inv: Matrix = [[ZERO] * n for _ in range(n)]
    full = (1 << n) - 1
    for i in range(n):
        # cofactor C_ij = (-1)^(i+j) det(M without row i, col j); inv[j][i] = C_ij / det
        rows = [M[r] for r in range(n) if r != i]
        mdet = _minor_det(rows)
        for j in range(n):
            c = mdet(0, full & ~(1 << j))
            if (i + j) % 2:
                c = neg(c)
            inv[j][i] = div(c, d)
    return inv
