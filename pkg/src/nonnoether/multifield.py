"""Multivector fields and differential forms with Expr coefficients.

Both are stored sparsely: a mapping from strictly increasing index tuples
to coefficients.  Indices are 0-based internally.

Sign convention of the Schouten bracket
---------------------------------------
``schouten`` is the *negative* of the bracket built from right
derivatives in odd variables.  With this normalisation the bracket of a
bivector with a function is ``[W, f] = W(df, .)`` contracted on the first
slot, which makes ``d = phi_w^{-1} o [W, .] o phi_w`` the ordinary exterior
derivative, and ``schouten(X, A) = -lie_derivative(X, A)`` for a vector
field ``X``.  ``lie_derivative`` is the usual geometric Lie derivative.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping, Sequence

from .expr import (
    ONE,
    Chart,
    ZERO,
    Expr,
    Sampler,
    T,
    ZeroTest,
    as_expr,
    collect,
    diff,
    div,
    mul,
    neg,
    sum_exprs,
)
from . import linalg


class RegularityError(ValueError):
    """The Poisson bivector is degenerate at some point."""

    def __init__(self, message: str, witness=None):
        self.witness = witness
        super().__init__(message if witness is None else f"{message} (witness {witness})")


def _sort_sign(indices: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sign of the permutation sorting ``indices``; 0 if an index repeats."""
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return 0, ()
    sign = 1
    # insertion sort counting transpositions; k is tiny
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(idx)


class _Alternating:
    """Common storage for multivectors and forms."""

    __slots__ = ("chart", "degree", "coeffs")
    kind = "field"

    def __init__(self, chart: Chart, degree: int, coeffs: Mapping[tuple[int, ...], Expr] | None = None):
        if degree < 0:
            raise ValueError("degree must be non-negative")
        self.chart = chart
        self.degree = degree
        dim = chart.dim
        clean = {}
        for key, c in (coeffs or {}).items():
            c = as_expr(c)
            if c.is_const_value(0):
                continue
            key = tuple(key)
            if len(key) != degree or any(b <= a for a, b in zip(key, key[1:])):
                raise ValueError(f"key {key} is not a strictly increasing {degree}-index")
            if key and (key[0] < 0 or key[-1] >= dim):
                raise ValueError(f"index out of range in {key}")
            clean[key] = c
        self.coeffs: dict[tuple[int, ...], Expr] = clean

    @property
    def dim(self) -> int:
        return self.chart.dim

    @classmethod
    def from_terms(cls, chart: Chart, degree: int, terms: Iterable[tuple[Sequence[int], Expr]]):
        """Accumulate ``(indices, coefficient)`` pairs with any index order."""
        buckets: dict[tuple[int, ...], list[Expr]] = {}
        for idx, c in terms:
            sign, key = _sort_sign(idx)
            if sign == 0:
                continue
            c = as_expr(c)
            if c.is_const_value(0):
                continue
            buckets.setdefault(key, []).append(c if sign > 0 else neg(c))
        return cls(chart, degree, {k: sum_exprs(v) for k, v in buckets.items()})

    @classmethod
    def zero(cls, chart: Chart, degree: int):
        return cls(chart, degree, {})

    @classmethod
    def scalar(cls, chart: Chart, f) -> "_Alternating":
        return cls(chart, 0, {(): as_expr(f)})

    @classmethod
    def basis(cls, chart: Chart, *indices: int, coeff=ONE):
        return cls.from_terms(chart, len(indices), [(indices, as_expr(coeff))])

    # ------------------------------------------------------------------
    def __getitem__(self, idx) -> Expr:
        if isinstance(idx, int):
            idx = (idx,)
        sign, key = _sort_sign(idx)
        if sign == 0:
            return ZERO
        c = self.coeffs.get(key, ZERO)
        return c if sign > 0 else neg(c)

    def _check(self, other):
        if type(other) is not type(self) or other.chart != self.chart:
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.degree != self.degree:
            raise ValueError(f"degree mismatch: {self.degree} vs {other.degree}")

    def __add__(self, other):
        self._check(other)
        keys = set(self.coeffs) | set(other.coeffs)
        return type(self)(self.chart, self.degree, {k: sum_exprs([self[k], other[k]]) for k in keys})

    def __sub__(self, other):
        self._check(other)
        keys = set(self.coeffs) | set(other.coeffs)
        return type(self)(self.chart, self.degree, {k: sum_exprs([self[k], neg(other[k])]) for k in keys})

    def __neg__(self):
        return type(self)(self.chart, self.degree, {k: neg(c) for k, c in self.coeffs.items()})

    def __mul__(self, f):
        f = as_expr(f)
        return type(self)(self.chart, self.degree, {k: mul(f, c) for k, c in self.coeffs.items()})

    __rmul__ = __mul__

    def map(self, fn: Callable[[Expr], Expr]):
        return type(self)(self.chart, self.degree, {k: fn(c) for k, c in self.coeffs.items()})

    def components(self) -> list[Expr]:
        return [self.coeffs[k] for k in sorted(self.coeffs)]

    @property
    def scalar_part(self) -> Expr:
        if self.degree != 0:
            raise ValueError("not a degree-0 field")
        return self.coeffs.get((), ZERO)

    def time_derivative(self):
        return self.map(lambda c: diff(c, T))

    def is_zero(self, sampler: Sampler, tol: float | None = None) -> ZeroTest:
        return sampler.is_zero(self.components(), tol)

    def __repr__(self):
        return f"{type(self).__name__}(deg={self.degree}, {self.pretty()})"

    def pretty(self, names: Sequence[str] | None = None) -> str:
        names = names or self.chart.names
        if not self.coeffs:
            return "0"
        parts = []
        for key in sorted(self.coeffs):
            basis = self._basis_str(key, names)
            parts.append(f"({collect(self.coeffs[key])})" + (f" {basis}" if basis else ""))
        return " + ".join(parts)


class Multivector(_Alternating):
    """Degree-k antisymmetric contravariant field."""

    __slots__ = ()
    kind = "multivector"

    @staticmethod
    def _basis_str(key, names):
        return "^".join(f"d/d{names[k]}" for k in key)

    @classmethod
    def vector(cls, chart: Chart, components: Sequence) -> "Multivector":
        return cls(chart, 1, {(a,): as_expr(c) for a, c in enumerate(components)})

    def vector_components(self) -> list[Expr]:
        if self.degree != 1:
            raise ValueError("not a vector field")
        return [self[a] for a in range(self.dim)]

    def apply(self, f: Expr) -> Expr:
        """Directional derivative X(f) of a scalar along a vector field."""
        return directional(self, f)


class Form(_Alternating):
    """Degree-k differential form."""

    __slots__ = ()
    kind = "form"

    @staticmethod
    def _basis_str(key, names):
        return "^".join(f"d{names[k]}" for k in key)

    @classmethod
    def covector(cls, chart: Chart, components: Sequence) -> "Form":
        return cls(chart, 1, {(a,): as_expr(c) for a, c in enumerate(components)})


def _coords(field: _Alternating) -> tuple[Expr, ...]:
    return field.chart.coords


def directional(X: Multivector, f: Expr) -> Expr:
    coords = X.chart.coords
    return sum_exprs(mul(c, diff(f, coords[key[0]])) for key, c in X.coeffs.items())


# ---------------------------------------------------------------------------
# wedge / schouten


def wedge(A: _Alternating, B: _Alternating) -> _Alternating:
    """Exterior product; degree overflow gives the zero field of clamped degree."""
    if type(A) is not type(B) or A.chart != B.chart:
        raise TypeError("wedge needs two fields of the same kind on one chart")
    degree = A.degree + B.degree
    if degree > A.dim:
        return type(A).zero(A.chart, A.dim)
    terms = []
    for I, a in A.coeffs.items():
        for J, b in B.coeffs.items():
            if set(I) & set(J):
                continue
            terms.append((I + J, mul(a, b)))
    return type(A).from_terms(A.chart, degree, terms)


def wedge_power(A: _Alternating, k: int) -> _Alternating:
    if k < 0:
        raise ValueError("negative power")
    result = type(A).scalar(A.chart, ONE)
    for _ in range(k):
        result = wedge(result, A)
    return result


def _right_derivative(key: tuple[int, ...], a: int) -> tuple[int, tuple[int, ...]]:
    """Remove index ``a`` after moving it to the right end; returns sign."""
    j = key.index(a)
    sign = -1 if (len(key) - 1 - j) % 2 else 1
    return sign, key[:j] + key[j + 1:]


def schouten(P: Multivector, Q: Multivector) -> Multivector:
    """Schouten bracket, normalised so that ``[X, Y]`` is minus the Lie bracket."""
    if not isinstance(P, Multivector) or not isinstance(Q, Multivector) or P.chart != Q.chart:
        raise TypeError("schouten needs two multivectors on one chart")
    p, q, dim = P.degree, Q.degree, P.dim
    if p + q < 1:
        raise ValueError("bracket of two functions is undefined (degree -1)")
    degree = p + q - 1
    if degree > dim:
        return Multivector.zero(P.chart, dim)
    coords = _coords(P)
    sgn = -1 if ((p - 1) * (q - 1)) % 2 else 1
    terms = []

    def half(A: Multivector, B: Multivector, factor: int):
        for I, a in A.coeffs.items():
            for idx in I:
                s, rest = _right_derivative(I, idx)
                z = coords[idx]
                for J, b in B.coeffs.items():
                    db = diff(b, z)
                    if db.is_const_value(0) or set(rest) & set(J):
                        continue
                    c = mul(a, db)
                    terms.append((rest + J, c if s * factor > 0 else neg(c)))

    # negated right-derivative formula: -(P<-d) ^ dQ + sgn (Q<-d) ^ dP
    half(P, Q, -1)
    half(Q, P, sgn)
    return Multivector.from_terms(P.chart, degree, terms)


def lie_bracket(X: Multivector, Y: Multivector) -> Multivector:
    """Lie bracket of vector fields, [X, Y](f) = X(Y f) - Y(X f)."""
    return lie_derivative(X, Y)


def lie_derivative(X: Multivector, A: _Alternating) -> _Alternating:
    """Lie derivative of a multivector field or form along a vector field."""
    if X.degree != 1:
        raise ValueError("Lie derivative needs a vector field")
    dim = A.dim
    coords = _coords(A)
    Xc = [X[a] for a in range(dim)]
    terms = []
    contravariant = isinstance(A, Multivector)
    for I, a in A.coeffs.items():
        terms.append((I, directional(X, a)))
        for s, i in enumerate(I):
            for c in range(dim):
                if contravariant:
                    # [X, d_i] = -sum_c d_i X^c d_c
                    coef = diff(Xc[c], coords[i])
                    sign = -1
                else:
                    # L_X dz_i = d X^i = sum_c d_c X^i dz_c
                    coef = diff(Xc[i], coords[c])
                    sign = 1
                if coef.is_const_value(0):
                    continue
                key = I[:s] + (c,) + I[s + 1:]
                v = mul(a, coef)
                terms.append((key, v if sign > 0 else neg(v)))
    return type(A).from_terms(A.chart, A.degree, terms)


# ---------------------------------------------------------------------------
# forms


def exterior_d(u: Form) -> Form:
    if not isinstance(u, Form):
        raise TypeError("exterior derivative acts on forms")
    if u.degree >= u.dim:
        return Form.zero(u.chart, u.dim)
    coords = _coords(u)
    terms = []
    for I, a in u.coeffs.items():
        for c in range(u.dim):
            if c in I:
                continue
            dc = diff(a, coords[c])
            if not dc.is_const_value(0):
                terms.append(((c,) + I, dc))
    return Form.from_terms(u.chart, u.degree + 1, terms)


def interior_product(X: Multivector, u: Form) -> Form:
    """Contraction of a vector field into the first slot of a form."""
    if X.degree != 1:
        raise ValueError("interior product needs a vector field")
    if u.degree < 1:
        raise ValueError("cannot contract into a 0-form")
    terms = []
    for I, a in u.coeffs.items():
        for s, i in enumerate(I):
            xi = X[i]
            if xi.is_const_value(0):
                continue
            v = mul(xi, a)
            terms.append((I[:s] + I[s + 1:], v if s % 2 == 0 else neg(v)))
    return Form.from_terms(u.chart, u.degree - 1, terms)


def pairing(u: Form, X: Multivector) -> Expr:
    """u(X) for a 1-form and a vector field."""
    return interior_product(X, u).scalar_part


def top_ratio(A: Multivector, B: Multivector, sampler: Sampler | None = None) -> Expr:
    """Quotient of two top-degree fields as a scalar function.

    When ``sampler`` is given, ``B`` is first checked to be non-vanishing at
    every sample point.
    """
    dim = A.dim
    if A.degree != dim or B.degree != dim:
        raise ValueError("top_ratio needs two top-degree fields")
    key = tuple(range(dim))
    den = B[key]
    if den.is_const_value(0):
        raise RegularityError("denominator volume field is identically zero")
    if sampler is not None:
        vals, pts, ts = sampler.evaluate([den])
        j = int(abs(vals[0]).argmin())
        if not abs(vals[0, j]) > sampler.tol:
            raise RegularityError("denominator volume field vanishes", (tuple(pts[j]), float(ts[j])))
    return div(A[key], den)


# ---------------------------------------------------------------------------
# the isomorphism induced by a regular Poisson bivector


def bivector_matrix(W: Multivector) -> list[list[Expr]]:
    """Full antisymmetric matrix W^{ab} of a bivector (W^{ab} = -W^{ba})."""
    if W.degree != 2:
        raise ValueError("not a bivector")
    return [[W[a, b] for b in range(W.dim)] for a in range(W.dim)]


def bivector_from_matrix(chart: Chart, M: Sequence[Sequence]) -> Multivector:
    dim = chart.dim
    return Multivector(chart, 2, {(a, b): as_expr(M[a][b]) for a in range(dim) for b in range(a + 1, dim)})


class PoissonMap:
    """phi_w: forms -> multivectors, phi_w(dz_a) = sum_b W^{ab} d/dz_b.

    Extended multiplicatively, phi_w(u ^ v) = phi_w(u) ^ phi_w(v).  The
    inverse uses a symbolic adjugate for dimension <= 6 and a pointwise
    numeric inverse beyond.
    """

    def __init__(self, W: Multivector):
        self.W = W
        self.chart = W.chart
        self.dim = W.dim
        self.matrix = bivector_matrix(W)
        self._inverse = None
        self._img: dict[tuple[int, ...], Multivector] = {}
        self._preimg: dict[tuple[int, ...], Form] = {}

    @property
    def inverse_matrix(self) -> list[list[Expr]]:
        if self._inverse is None:
            self._inverse = linalg.inverse(self.matrix)
        return self._inverse

    def determinant(self) -> Expr:
        return linalg.det(self.matrix)

    def check_regular(self, sampler: Sampler) -> ZeroTest:
        """Regularity: the determinant is bounded away from zero at samples."""
        det = self.determinant()
        vals, pts, ts = sampler.evaluate([det])
        j = int(abs(vals[0]).argmin())
        ok = bool(abs(vals[0, j]) > sampler.tol)
        return ZeroTest(ok, float(abs(vals[0, j])), (tuple(float(x) for x in pts[j]), float(ts[j])))

    def _image(self, key: tuple[int, ...]) -> Multivector:
        if key not in self._img:
            out = Multivector.scalar(self.chart, ONE)
            for a in key:
                out = wedge(out, Multivector.vector(self.chart, self.matrix[a]))
            self._img[key] = out
        return self._img[key]

    def _preimage(self, key: tuple[int, ...]) -> Form:
        if key not in self._preimg:
            inv = self.inverse_matrix
            out = Form.scalar(self.chart, ONE)
            for b in key:
                # phi^{-1}(d/dz_b) = sum_a (W^{-1})_{ba} dz_a
                out = wedge(out, Form.covector(self.chart, inv[b]))
            self._preimg[key] = out
        return self._preimg[key]

    def __call__(self, u: Form) -> Multivector:
        return self.phi(u)

    def phi(self, u: Form) -> Multivector:
        if not isinstance(u, Form):
            raise TypeError("phi_w maps forms")
        terms = []
        for I, a in u.coeffs.items():
            for J, b in self._image(I).coeffs.items():
                terms.append((J, mul(a, b)))
        return Multivector.from_terms(self.chart, u.degree, terms)

    def phi_inverse(self, A: Multivector) -> Form:
        if not isinstance(A, Multivector):
            raise TypeError("phi_w_inverse maps multivectors")
        terms = []
        for I, a in A.coeffs.items():
            for J, b in self._preimage(I).coeffs.items():
                terms.append((J, mul(a, b)))
        return Form.from_terms(self.chart, A.degree, terms)

    def bracket(self, f: Expr, g: Expr) -> Expr:
        """{f, g} = W(df ^ dg) = sum W^{ab} d_a f d_b g."""
        return poisson_bracket(f, g, self.W)

    def hamiltonian_vector_field(self, f: Expr) -> Multivector:
        """W(f) = phi_w(df), so that X_f(g) = {f, g}."""
        return self.phi(exterior_d(Form.scalar(self.chart, f)))

    def exterior_d(self, u: Form) -> Form:
        """d realised through the bivector: phi_w^{-1}([W, phi_w(u)])."""
        return self.phi_inverse(schouten(self.W, self.phi(u)))


def poisson_bracket(f: Expr, g: Expr, V: Multivector) -> Expr:
    """{f, g}_V = V(df ^ dg) = sum_{a<b} V^{ab} (d_a f d_b g - d_b f d_a g)."""
    coords = V.chart.coords
    df = [diff(f, z) for z in coords]
    dg = [diff(g, z) for z in coords]
    terms = []
    for (a, b), c in V.coeffs.items():
        terms.append(mul(c, mul(df[a], dg[b])))
        terms.append(neg(mul(c, mul(df[b], dg[a]))))
    return sum_exprs(terms)
