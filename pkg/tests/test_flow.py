import io
import math

import numpy as np
import pytest

from nonnoether.flow import (
    DivergenceError,
    conservation_drift,
    integrate,
    isospectral_drift,
    step_count,
    trace_drift,
)
from nonnoether.lax import build_lax, lax_traces
from nonnoether.multifield import Multivector
from nonnoether.symcheck import PhaseSystem, conserved_quantities

Z0 = (1.0, -1.0, 0.0, 0.0)


@pytest.fixture(scope="module")
def traj(sample):
    return integrate(sample, Z0, 10.0, 1e-3)


def test_trajectory_shape(traj):
    assert len(traj) == 10001
    assert traj.times[-1] == pytest.approx(10.0)
    assert traj.integrator == "rk4"


def test_step_count_rounding():
    assert step_count(1.0, 0.1) == 10
    assert step_count(0.3, 0.1) == 3
    assert step_count(1.05, 0.1) == 10


def test_energy_and_integrals_conserved(traj, sample):
    assert conservation_drift(traj, sample.h) < 1e-8
    for y in conserved_quantities(sample):
        assert conservation_drift(traj, y) < 1e-8


def test_coordinates_actually_move(traj, sample):
    assert conservation_drift(traj, sample.chart.coords[0]) > 0.1


def test_isospectral(traj, sample):
    lp = build_lax(sample)
    assert isospectral_drift(traj, lp) < 1e-8
    assert max(trace_drift(traj, lax_traces(lp, 4))) < 1e-7


def test_matches_closed_form_free_motion():
    # with W = d/dq ^ d/dp the flow of h = p^2/2 is q(t) = q0 - p0 t
    s = PhaseSystem.from_strings(("q", "p"), [(1, 2, "1")], "p^2/2", ["0", "0"])
    tr = integrate(s, (0.5, 2.0), 3.0, 0.01)
    np.testing.assert_allclose(tr.states[:, 0], 0.5 - 2.0 * tr.times, atol=1e-12)
    assert np.all(tr.states[:, 1] == 2.0)


def test_harmonic_oscillator_accuracy():
    s = PhaseSystem.from_strings(("q", "p"), [(1, 2, "1")], "p^2/2 + q^2/2", ["q", "p"])
    tr = integrate(s, (1.0, 0.0), 2 * math.pi, 2 * math.pi / 1000)
    np.testing.assert_allclose(tr.states[-1], [1.0, 0.0], atol=1e-10)


def test_fourth_order_convergence(sample):
    drifts = [conservation_drift(integrate(sample, Z0, 10.0, dt), sample.h) for dt in (0.1, 0.05)]
    assert drifts[0] / drifts[1] >= 8


def test_stationary_for_constant_hamiltonian(sample):
    s = PhaseSystem(sample.chart, sample.W, sample.chart.parse("3"), Multivector.zero(sample.chart, 1))
    tr = integrate(s, Z0, 1.0, 0.1)
    assert np.all(tr.states == np.array(Z0))


def test_divergence_reported():
    s = PhaseSystem.from_strings(("x", "y"), [(1, 2, "1")], "-x^2*y", ["0", "0"])
    # dx/dt = x^2 blows up at t = 1
    with pytest.raises(DivergenceError) as info:
        integrate(s, (1.0, 0.0), 2.0, 1e-3)
    assert 0.9 < info.value.time <= 1.1 and info.value.step > 0


def test_invalid_arguments(sample):
    with pytest.raises(ValueError):
        integrate(sample, Z0, 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate(sample, (1.0, 2.0), 1.0, 0.1)


def test_csv_dump(sample):
    tr = integrate(sample, Z0, 0.2, 0.1)
    buf = io.StringIO()
    tr.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,z1,z2,z3,z4"
    assert len(lines) == 4
    assert [float(x) for x in lines[1].split(",")] == [0.0, *Z0]
