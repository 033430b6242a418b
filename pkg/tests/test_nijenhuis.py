import pytest

from conftest import same, vector
from nonnoether.expr import Sampler, parse
from nonnoether.lax import build_lax, lax_traces
from nonnoether.multifield import Form, Multivector, exterior_d, pairing
from nonnoether.nijenhuis import (
    TangentOperator,
    apply_r_e,
    apply_r_e_bar,
    auxiliary_forms,
    build_r_e,
    check_auxiliary_forms,
    check_invariance,
    check_pairing,
    check_torsion,
    omega_pairing_sign,
    torsion,
)
from nonnoether.randfields import random_expr, random_form, random_multivector

EXPANSION = {
    (1, 1): "z1", (1, 4): "-1", (2, 2): "z2", (2, 3): "1",
    (3, 3): "z1", (3, 2): "exp(z3-z4)", (4, 4): "z2", (4, 1): "-exp(z3-z4)",
}


@pytest.fixture(scope="module")
def R(sample):
    return build_r_e(sample)


def test_sample_operator_expansion(R, chart, sampler):
    terms = {(a, b): c for a, b, c in R.terms()}
    assert set(terms) == set(EXPANSION)
    for k, src in EXPANSION.items():
        assert same(terms[k], parse(src, chart), sampler)


def test_matrix_agrees_with_lax(R, sample, sampler):
    L = build_lax(sample).L
    assert all(sampler.is_zero(R.matrix[a][b] - L[a][b]).ok for a in range(4) for b in range(4))
    diffs = [x - y for x, y in zip(R.power_traces(4), lax_traces(build_lax(sample), 4))]
    assert sampler.is_zero(diffs, 1e-9).ok


def test_zero_generator_gives_zero_operator(sample):
    R0 = build_r_e(sample.with_generator(Multivector.zero(sample.chart, 1)))
    assert R0.terms() == []


def test_operator_is_tensorial(sample, chart, sampler, rng):
    X = random_multivector(chart, 1, rng)
    f = random_expr(chart, rng)
    assert same(apply_r_e(sample, X * f), apply_r_e(sample, X) * f, sampler)
    u = random_form(chart, 1, rng)
    assert same(apply_r_e_bar(sample, u * f), apply_r_e_bar(sample, u) * f, sampler)


def test_pairing_with_dual_operator(R, sample, chart, sampler, rng):
    pairs = [(random_multivector(chart, 1, rng), random_form(chart, 1, rng)) for _ in range(10)]
    assert check_pairing(R, sample, pairs, Sampler(4, count=100)).passed
    u = random_form(chart, 1, rng)
    assert same(R.transpose_apply(u), apply_r_e_bar(sample, u), sampler)


def test_dual_operator_on_coordinate_differentials_is_d_tilde(sample, chart, sampler):
    from nonnoether.bicomplex import Bicomplex

    bc = Bicomplex(sample)
    for a in range(4):
        assert same(apply_r_e_bar(sample, Form.basis(chart, a)), bc.table[a], sampler)


def test_torsion_vanishes(R, chart, sampler, rng):
    pairs = [(random_multivector(chart, 1, rng), random_multivector(chart, 1, rng)) for _ in range(20)]
    res = check_torsion(R, pairs, sampler)
    assert res.passed and res.residual < 1e-9


def test_torsion_of_identity_and_diagonal(R, chart, sampler, rng):
    I = TangentOperator.identity(chart)
    X, Y = random_multivector(chart, 1, rng), random_multivector(chart, 1, rng)
    assert torsion(I, X, Y).is_zero(sampler).ok
    assert torsion(R, X, X).is_zero(sampler).ok


def test_torsion_antisymmetric_and_tensorial(R, chart, sampler, rng):
    X, Y = random_multivector(chart, 1, rng), random_multivector(chart, 1, rng)
    f = random_expr(chart, rng)
    assert (torsion(R, X, Y) + torsion(R, Y, X)).is_zero(sampler, 1e-8).ok
    assert (torsion(R, X * f, Y) - torsion(R, X, Y) * f).is_zero(sampler, 1e-8).ok


def test_torsion_detects_non_nijenhuis_operator(chart, sampler):
    z = chart.coords
    M = [[z[1] if (a, b) == (0, 0) else (z[0] if (a, b) == (1, 1) else parse("0", chart)) for b in range(4)] for a in range(4)]
    # diag(z2, z1, 0, 0) has non-vanishing torsion on (d/dz1, d/dz2)
    T = TangentOperator(chart, M)
    t = torsion(T, Multivector.basis(chart, 0), Multivector.basis(chart, 1))
    assert not t.is_zero(sampler).ok


def test_operator_is_invariant_along_flow(R, sample, sampler):
    assert check_invariance(R, sample, sampler).passed


def test_auxiliary_forms(sample, chart, sampler):
    forms = auxiliary_forms(sample)
    assert forms.omega.coeffs.keys() == {(0, 2), (1, 3)}
    assert exterior_d(forms.omega).coeffs == {}
    res = check_auxiliary_forms(sample, forms, sampler)
    assert res.passed
    assert res.parts["omega_bullet_relation"] == 0.0
    assert omega_pairing_sign(sample, forms.omega, sampler) == -1


def test_omega_is_nondegenerate(sample, sampler):
    from nonnoether.multifield import wedge

    forms = auxiliary_forms(sample)
    top = wedge(forms.omega, forms.omega)
    assert not sampler.is_zero(top.components()).ok
