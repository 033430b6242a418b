import math

import numpy as np
import pytest

from conftest import same, vector
from nonnoether.expr import Chart, Sampler, parse
from nonnoether.multifield import Multivector, PoissonMap, RegularityError
from nonnoether.randfields import random_expr
from nonnoether.symcheck import (
    PhaseSystem,
    analyze,
    check_bihamiltonian,
    check_conservation,
    check_involutivity,
    check_liouville,
    check_non_noether,
    check_symmetry,
    check_yang_baxter,
    conserved_quantities,
    elementary_symmetric,
    poisson_bracket,
    quantities_from_roots,
    root_clusters,
    roots_of,
    secular_polynomial,
    secular_roots,
)


def test_bracket_examples(sample, sampler, chart):
    z = chart.coords
    assert poisson_bracket(z[0], z[2], sample.W).value == 1
    f = parse("z1*exp(z3) + z2^2", chart)
    assert sampler.is_zero(poisson_bracket(f, f, sample.W)).ok
    Y = conserved_quantities(sample)
    assert sampler.is_zero(poisson_bracket(Y[0], Y[1], sample.W)).ok


def test_bracket_is_antisymmetric_leibniz_and_jacobi(sample, sampler, rng):
    W = sample.W_hat  # non-constant Poisson bivector
    f, g, k = (random_expr(sample.chart, rng) for _ in range(3))
    pb = lambda a, b: poisson_bracket(a, b, W)
    assert sampler.is_zero(pb(f, g) + pb(g, f)).ok
    assert sampler.is_zero(pb(f, g * k) - pb(f, g) * k - g * pb(f, k)).ok
    assert sampler.is_zero(pb(f, pb(g, k)) + pb(g, pb(k, f)) + pb(k, pb(f, g))).ok


def test_flow_derivative_is_bracket_with_h(sample, sampler, chart):
    # d/dt z_b = {h, z_b} reproduces the vector field W(h)
    for b, z in enumerate(chart.coords):
        assert sampler.is_zero(poisson_bracket(sample.h, z, sample.W) - sample.hamiltonian_vf[b]).ok


def test_sample_generator_is_a_non_noether_symmetry(sample, sampler):
    assert check_symmetry(sample, sampler).passed
    nn = check_non_noether(sample, sampler)
    assert nn.passed and nn.residual > 1


def test_flow_generator_is_a_noether_symmetry(sample, sampler):
    s = sample.with_generator(sample.hamiltonian_vf)
    assert check_symmetry(s, sampler).passed
    assert not check_non_noether(s, sampler).passed


def test_coordinate_shift_is_not_a_symmetry(sample, sampler):
    res = check_symmetry(sample.with_generator(Multivector.basis(sample.chart, 0)), sampler)
    assert not res.passed
    assert res.witness is not None and res.residual > 0.1


def test_hamiltonian_generator_of_integral_is_noether(sample, sampler, chart):
    # f = z1 + z2 is conserved ({f, h} = 0); E = 2 W(h) + W(f) preserves W
    f = parse("z1 + z2", chart)
    assert sampler.is_zero(poisson_bracket(f, sample.h, sample.W)).ok
    E = sample.hamiltonian_vf * 2 + sample.poisson.hamiltonian_vector_field(f)
    s = sample.with_generator(E)
    assert check_symmetry(s, sampler).passed
    assert not check_non_noether(s, sampler).passed
    assert all(sampler.is_zero(y).ok for y in conserved_quantities(s))


def test_sample_integrals(sample, sampler, chart):
    Y = conserved_quantities(sample, sampler)
    assert same(Y[0], parse("(z1+z2)/2", chart), sampler)
    assert same(Y[1], parse("z1*z2 - exp(z3-z4)", chart), sampler)
    assert check_conservation(sample, Y, sampler).passed


def test_non_integral_fails_conservation(sample, sampler, chart):
    assert not check_conservation(sample, [chart.coords[0]], sampler).passed


def test_integrals_match_root_reconstruction(sample, sampler):
    Y = conserved_quantities(sample)
    vals, pts, ts = sampler.evaluate(Y)
    for j in range(len(pts)):
        rec = quantities_from_roots(secular_roots(Y, pts[j], ts[j]))
        assert np.max(np.abs(np.array(rec) - vals[:, j])) < 1e-8


def test_secular_polynomial_coefficients(sample, sampler, chart):
    coeffs = secular_polynomial(conserved_quantities(sample))
    assert coeffs[0].value == 1
    assert same(coeffs[1], parse("-(z1+z2)", chart), sampler)
    assert same(coeffs[2], parse("z1*z2 - exp(z3-z4)", chart), sampler)


def test_secular_roots_at_frozen_point(sample):
    roots = secular_roots(sample, (1, 2, 0, 0), 0.0)
    expected = [(3 - math.sqrt(5)) / 2, (3 + math.sqrt(5)) / 2]
    np.testing.assert_allclose(roots.real, expected, atol=1e-12)
    assert np.all(roots.imag == 0)


def test_proportional_bivector_gives_repeated_root(sample, sampler, chart):
    lam = 3
    E = vector(chart, *[f"{lam}/2*{n}" for n in chart.names])
    s = sample.with_generator(E)
    assert same(s.W_hat, sample.W * lam, sampler)
    roots = secular_roots(s, (0.3, -0.2, 0.1, 0.5))
    np.testing.assert_allclose(roots, [lam, lam], atol=1e-7)
    assert root_clusters(roots) == [(pytest.approx(lam), 2)]


def test_root_finding_paths():
    np.testing.assert_allclose(roots_of([1, -5]), [5])
    np.testing.assert_allclose(sorted(roots_of([1, 0, 1]).imag), [-1, 1])
    cubic = [1, -6, 11, -6]
    np.testing.assert_allclose(sorted(roots_of(cubic).real), [1, 2, 3], atol=1e-10)
    # cancellation-safe quadratic
    r = sorted(roots_of([1, -1e8, 1]).real)
    assert r[0] == pytest.approx(1e-8, rel=1e-12)
    e = elementary_symmetric([1, 2, 3])
    assert [x.real for x in e] == [1, 6, 11, 6]


def test_yang_baxter_and_bihamiltonian(sample, sampler):
    yb = check_yang_baxter(sample, sampler)
    assert yb.passed and set(yb.parts) == {"yang_baxter", "compatible", "what_poisson"}
    assert check_bihamiltonian(sample, sampler).passed


def test_yang_baxter_vacuous_for_noether_generator(sample, sampler):
    assert check_yang_baxter(sample.with_generator(sample.hamiltonian_vf), sampler).passed


def test_yang_baxter_violation_detected(sample, sampler, chart):
    s = sample.with_generator(vector(chart, "z1*z2", "0", "0", "0"))
    res = check_yang_baxter(s, sampler)
    assert not res.passed and res.residual > 0.1
    assert not check_bihamiltonian(s, sampler).passed


def test_involutivity(sample, sampler):
    Y = conserved_quantities(sample)
    res = check_involutivity(sample, Y, sampler)
    assert res.passed and len(res.parts) == 2


def test_involutivity_vacuous_for_one_degree_of_freedom():
    s = PhaseSystem.from_strings(("q", "p"), [(1, 2, "1")], "p^2/2 + q^2/2", ["q", "p"])
    Y = conserved_quantities(s)
    assert len(Y) == 1
    assert check_involutivity(s, Y, Sampler(2)).passed


def test_liouville_theorem(sample, sampler, rng):
    for V in (sample.W, sample.W_hat):
        f = random_expr(sample.chart, rng)
        assert check_liouville(V, f, sampler).ok


def test_liouville_fails_for_non_poisson_bivector(sample, sampler, chart):
    V = sample.with_generator(vector(chart, "z1*z2", "0", "0", "0")).W_hat
    f = parse("z3*z4 + z1", chart)
    assert not check_liouville(V, f, sampler).ok


def test_degenerate_bivector_rejected(sampler, chart):
    s = PhaseSystem.from_strings(chart.names, [(1, 2, "1")], "z1", ["0"] * 4)
    assert not s.check_regular(sampler).passed
    with pytest.raises(RegularityError):
        conserved_quantities(s)


def test_analysis_bundle(sample, sampler):
    a = analyze(sample, sampler)
    assert a.is_symmetry.passed and a.is_non_noether.passed and a.yang_baxter_holds.passed
    assert len(a.Y) == 2 and len(a.secular_poly_coeffs) == 3


def test_constructor_validates(sample, chart):
    with pytest.raises(ValueError):
        PhaseSystem(chart, sample.E, sample.h, sample.E)
    with pytest.raises(ValueError):
        PhaseSystem(Chart.standard(4, "x"), sample.W, sample.h, sample.E)
