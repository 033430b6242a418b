"""Acceptance criteria 1-7 on the four-dimensional Toda sample.

Each test prints one line "[acceptance] criterion N: PASS|FAIL ..." on the
terminal (also under pytest's output capture).  Run directly with
``python tests/test_acceptance.py`` for just these lines.
"""

import re
import sys
import time

import numpy as np
import pytest

from nonnoether.bicomplex import Bicomplex, check_lenard
from nonnoether.expr import Sampler
from nonnoether.flow import conservation_drift, integrate
from nonnoether.lax import build_lax, check_lax_equation, check_trace_identity, lax_traces, spectral_multiplicity
from nonnoether.multifield import (
    Form,
    Multivector,
    exterior_d,
    interior_product,
    lie_bracket,
    lie_derivative,
    schouten,
    wedge,
)
from nonnoether.nijenhuis import auxiliary_forms, build_r_e, torsion
from nonnoether.randfields import random_form, random_multivector
from nonnoether.report import run
from nonnoether.symcheck import (
    check_non_noether,
    check_symmetry,
    conserved_quantities,
    poisson_bracket,
    quantities_from_roots,
    secular_roots,
)
from nonnoether.sysdef import toda_definition
from nonnoether.systems import toda

TOL = 1e-9
ORACLE = 1e-8
PROPERTY = 1e-8
N_RANDOM = 50


@pytest.fixture
def announce(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance] criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")

    return emit


@pytest.fixture(scope="module")
def s():
    return toda()


@pytest.fixture
def pts():
    return Sampler(4, count=100, seed=42, tol=TOL)


def residual(obj, sampler):
    if hasattr(obj, "coeffs"):
        return obj.is_zero(sampler, TOL).residual
    return sampler.is_zero(obj, TOL).residual


# --- reading rendered fields back -------------------------------------------------

TERM = re.compile(r"\((.+?)\) ((?:d/d|d)\w+(?:(?:\^|\(x\))d/?d?\w+)*)(?: \+ |$)")


def parse_terms(text, chart):
    """Inverse of the (coeff) basis + ... rendering used in reports."""
    out = {}
    for m in TERM.finditer(text):
        out[m.group(2)] = chart.parse(m.group(1))
    return out


def terms_match(text, expected, chart, sampler):
    got = parse_terms(text, chart)
    if set(got) != set(expected):
        return False, f"basis mismatch {sorted(got)} vs {sorted(expected)}"
    worst = max(residual(got[k] - chart.parse(v), sampler) for k, v in expected.items())
    return worst < TOL, f"{worst:.1e}"


E34 = "exp(z3-z4)"
W_HAT = {"d/dz1^d/dz3": "z1", "d/dz2^d/dz4": "z2", "d/dz1^d/dz2": E34, "d/dz3^d/dz4": "1"}
LAX = {"L[1,1]": "z1", "L[3,3]": "z1", "L[2,2]": "z2", "L[4,4]": "z2",
       "L[3,2]": E34, "L[4,1]": f"-{E34}", "L[2,3]": "1", "L[1,4]": "-1"}
D_TILDE = {
    "d~z1": {"dz1": "z1", "dz4": f"-{E34}"},
    "d~z2": {"dz2": "z2", "dz3": E34},
    "d~z3": {"dz2": "1", "dz3": "z1"},
    "d~z4": {"dz1": "-1", "dz4": "z2"},
}
R_E = {"dz1(x)d/dz1": "z1", "dz1(x)d/dz4": "-1", "dz2(x)d/dz2": "z2", "dz2(x)d/dz3": "1",
       "dz3(x)d/dz3": "z1", "dz3(x)d/dz2": E34, "dz4(x)d/dz4": "z2", "dz4(x)d/dz1": f"-{E34}"}
Y = ["(z1+z2)/2", f"z1*z2 - {E34}"]
I = ["2*(z1+z2)", f"2*z1^2 + 2*z2^2 + 4*{E34}"]


def test_criterion_1_sample_reproduction(s, pts, announce):
    t0 = time.perf_counter()
    report = run(toda_definition())
    elapsed = time.perf_counter() - t0
    a = report.artifacts
    chart = s.chart
    results = {}
    results["W_hat"] = terms_match(a["W_hat"], W_HAT, chart, pts)
    for name, got, exp in (("Y", a["Y"], Y), ("I", a["traces"][:2], I)):
        worst = max(residual(chart.parse(g) - chart.parse(e), pts) for g, e in zip(got, exp))
        results[name] = (len(got) == len(exp) and worst < TOL, f"{worst:.1e}")
    lax_ok = set(a["lax_L"]) == set(LAX)
    worst = max(residual(chart.parse(a["lax_L"][k]) - chart.parse(v), pts) for k, v in LAX.items()) if lax_ok else np.inf
    results["lax"] = (lax_ok and worst < TOL, f"{worst:.1e}")
    dt_parts = [terms_match(a["d_tilde"][k], v, chart, pts) for k, v in D_TILDE.items()]
    results["d_tilde"] = (len(a["d_tilde"]) == 4 and all(ok for ok, _ in dt_parts), "; ".join(d for _, d in dt_parts))
    results["R_E"] = terms_match(a["R_E"], R_E, chart, pts)
    ok = all(v[0] for v in results.values()) and elapsed < 10
    detail = ", ".join(f"{k}={'ok' if v[0] else 'BAD'}" for k, v in results.items())
    announce(1, ok, f"({detail}; demo {elapsed:.2f}s < 10s)")
    assert all(v[0] for v in results.values()), results
    assert elapsed < 10


def test_criterion_2_identity_suite(s, pts, announce):
    rng = np.random.default_rng(2)
    chart = s.chart
    bc = Bicomplex(s)
    forms = [random_form(chart, k, rng) for k in (0, 1, 1, 2, 2, 3)] + [Form.basis(chart, a) for a in range(4)]
    forms += [Form.scalar(chart, z) for z in chart.coords]
    R = build_r_e(s)
    aux = auxiliary_forms(s)
    vecs = [Multivector.basis(chart, a) for a in range(4)]
    pairs = [(vecs[a], vecs[b]) for a in range(4) for b in range(a + 1, 4)]
    pairs += [(random_multivector(chart, 1, rng), random_multivector(chart, 1, rng)) for _ in range(20)]
    r = {
        "[W,W]": residual(schouten(s.W, s.W), pts),
        "symmetry": residual(s.E.time_derivative() - lie_bracket(s.E, s.hamiltonian_vf), pts),
        "[[E,[E,W]],W]": residual(schouten(schouten(s.E, s.W_hat), s.W), pts),
        "[What,W]": residual(schouten(s.W_hat, s.W), pts),
        "[What,What]": residual(schouten(s.W_hat, s.W_hat), pts),
        "d2": max(residual(exterior_d(exterior_d(u)), pts) for u in forms),
        "dt2": max(residual(bc.d_tilde(bc.d_tilde(u)), pts) for u in forms),
        "dd~+d~d": max(residual(exterior_d(bc.d_tilde(u)) + bc.d_tilde(exterior_d(u)), pts) for u in forms),
        "d omega": residual(exterior_d(aux.omega), pts),
        "d omega*": residual(exterior_d(aux.omega_bullet), pts),
        "d omega**": residual(exterior_d(aux.omega_bullet2), pts),
        "torsion": max(residual(torsion(R, X, Yv), pts) for X, Yv in pairs),
    }
    worst = max(r, key=r.get)
    ok = r[worst] < TOL and len(pairs) == 26
    announce(2, ok, f"(max residual {r[worst]:.1e} at {worst}; {len(r)} identities, 26 torsion pairs)")
    assert ok, r


def test_criterion_3_involutivity(s, pts, announce):
    Yq = conserved_quantities(s)
    r1 = residual(poisson_bracket(Yq[0], Yq[1], s.W), pts)
    r2 = residual(poisson_bracket(Yq[0], Yq[1], s.W_hat), pts)
    ok = r1 < TOL and r2 < TOL
    announce(3, ok, f"({{Y1,Y2}}={r1:.1e}, {{Y1,Y2}}*={r2:.1e})")
    assert ok


def test_criterion_4_cross_oracles(s, pts, announce):
    Yq = conserved_quantities(s)
    vals, P, T = pts.evaluate(Yq)
    recon = max(
        np.max(np.abs(np.array(quantities_from_roots(secular_roots(Yq, P[j], T[j]))) - vals[:, j]))
        for j in range(len(P))
    )
    lp = build_lax(s)
    roots_at = lambda p, t: secular_roots(Yq, p, t)
    m = spectral_multiplicity(lp, roots_at, P, T)
    traces = check_trace_identity(lax_traces(lp, 4), roots_at, m, pts, tol=ORACLE)
    lenard = check_lenard(Bicomplex(s), lax_traces(lp, 2), pts)
    ok = recon < ORACLE and traces.passed and traces.residual < ORACLE and lenard.passed and lenard.residual < TOL
    announce(4, ok, f"(roots->Y {recon:.1e}, Tr L^k vs roots {traces.residual:.1e} [multiplicity {m}], "
                    f"Lenard {lenard.residual:.1e})")
    assert ok


def test_criterion_5_dynamics(s, announce):
    t0 = time.perf_counter()
    report = run(toda_definition())
    flow = report.check("flow")
    elapsed = time.perf_counter() - t0
    drift = flow.parts
    z0 = (1.0, -1.0, 0.0, 0.0)
    # halving from the stated step, plus two coarse steps where truncation error
    # clearly dominates round-off
    hd = [conservation_drift(integrate(s, z0, 10.0, dt), s.h) for dt in (1e-3, 5e-4, 0.1, 0.05, 0.025)]
    ratios = [hd[0] / hd[1], hd[2] / hd[3], hd[3] / hd[4]]
    required = {"h", "Y1", "Y2", "TrL^1", "TrL^2", "spectrum"}
    ok = (flow.passed and required <= set(drift) and max(drift.values()) < 1e-6
          and min(ratios) >= 8 and elapsed < 30)
    announce(5, ok, f"(max drift {max(drift.values()):.1e}; h-drift ratios on halving "
                    f"{ratios[0]:.1f} (dt=1e-3), {ratios[1]:.1f}, {ratios[2]:.1f} (dt=0.1); run {elapsed:.2f}s < 30s)")
    assert ok, (drift, ratios, elapsed)


def test_criterion_6_negative_controls(s, pts, announce):
    chart = s.chart
    zero = s.with_generator(Multivector.zero(chart, 1))
    nn = check_non_noether(zero, pts)
    bad = s.with_generator(Multivector.vector(chart, [chart.parse("z1^2"), *[chart.parse("0")] * 3]))
    sym = check_symmetry(bad, pts)
    flipped = check_lax_equation(build_lax(s), s, pts, sign=-1)
    ok = (not nn.passed and not sym.passed and sym.residual > 0 and sym.witness is not None
          and not flipped.passed)
    announce(6, ok, f"(E=0 non_noether {nn.status}; E'=z1^2 d/dz1 symmetry {sym.status} residual "
                    f"{sym.residual:.2e} witness {sym.witness}; flipped Lax {flipped.status})")
    assert ok


def _properties(chart, pm, seed, small):
    rng = np.random.default_rng(seed)
    p, q, r = (int(k) for k in rng.integers(0, 3, size=3))
    A, B, C = (random_multivector(chart, k, rng) for k in (p, q, r))
    out = {}
    if p + q >= 1:
        out["antisymmetry"] = schouten(A, B) - schouten(B, A) * (-((-1) ** ((p - 1) * (q - 1))))
    if p >= 1:
        out["leibniz"] = schouten(A, wedge(B, C)) - wedge(schouten(A, B), C) - wedge(B, schouten(A, C)) * ((-1) ** ((p - 1) * q))
    a, b, c = (random_multivector(chart, int(k), rng) for k in rng.integers(1, 3, size=3))
    pa, pb, pc = a.degree, b.degree, c.degree
    sg = lambda x, y: (-1) ** ((x - 1) * (y - 1))
    out["jacobi"] = schouten(a, schouten(b, c)) * sg(pa, pc) + schouten(b, schouten(c, a)) * sg(pb, pa) \
        + schouten(c, schouten(a, b)) * sg(pc, pb)
    out["wedge_assoc"] = wedge(wedge(A, B), C) - wedge(A, wedge(B, C))
    u, v = random_form(chart, int(p), rng), random_form(chart, int(q), rng)
    out["phi_hom"] = pm.phi(wedge(u, v)) - wedge(pm.phi(u), pm.phi(v))
    out["d2"] = exterior_d(exterior_d(random_form(chart, int(p), rng)))
    X, Yv = random_multivector(chart, 1, rng), random_multivector(chart, 1, rng)
    w = random_form(chart, int(rng.integers(1, 4)), rng)
    out["L_X i_Y"] = lie_derivative(X, interior_product(Yv, w)) - interior_product(Yv, lie_derivative(X, w)) \
        - interior_product(lie_bracket(X, Yv), w)
    return {k: residual_at(v, small) for k, v in out.items()}


def residual_at(field, sampler):
    return field.is_zero(sampler, PROPERTY).residual


def test_criterion_7_property_suite(s, announce):
    small = Sampler(4, count=30, seed=7, tol=PROPERTY)
    worst, counts = {}, {}
    for seed in range(N_RANDOM * 2):
        for k, v in _properties(s.chart, s.poisson, seed, small).items():
            worst[k] = max(worst.get(k, 0.0), v)
            counts[k] = counts.get(k, 0) + 1
    enough = all(c >= N_RANDOM for c in counts.values()) and len(counts) == 7
    ok = enough and max(worst.values()) < PROPERTY
    announce(7, ok, f"(max residual {max(worst.values()):.1e}; cases per property "
                    f"{min(counts.values())}..{max(counts.values())})")
    assert ok, (worst, counts)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
