"""Fixed-step RK4 integration of Hamilton's equations and drift measurements."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .expr import Expr, evaluate_batch, lambdify
from .symcheck import PhaseSystem


class DivergenceError(RuntimeError):
    def __init__(self, message: str, step: int, time: float, state):
        super().__init__(f"{message} at step {step} (t={time:g}): state={list(state)}")
        self.step = step
        self.time = time
        self.state = state


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    dt: float
    names: tuple[str, ...]
    integrator: str = "rk4"

    def __len__(self):
        return len(self.times)

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t",) + tuple(self.names))
        for t, z in zip(self.times, self.states):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in z])


def step_count(T: float, dt: float) -> int:
    # tolerate T/dt landing just below an integer
    return int(math.floor(T / dt + 1e-9))


def integrate(sys: PhaseSystem, z0: Sequence[float], T: float, dt: float) -> Trajectory:
    """Classical RK4 on dz/dt = W(h), with compensated accumulation of the state."""
    if not dt > 0 or not T > 0:
        raise ValueError("T and dt must be positive")
    dim = sys.chart.dim
    z0 = [float(x) for x in z0]
    if len(z0) != dim:
        raise ValueError(f"initial point needs {dim} coordinates, got {len(z0)}")
    f = lambdify(sys.hamiltonian_vf.vector_components())
    steps = step_count(T, dt)
    times = np.arange(steps + 1) * dt
    states = np.empty((steps + 1, dim))
    states[0] = z0
    z = list(z0)
    comp = [0.0] * dim
    half = dt / 2
    for i in range(steps):
        t = times[i]
        try:
            k1 = f(z, t)
            k2 = f([z[j] + half * k1[j] for j in range(dim)], t + half)
            k3 = f([z[j] + half * k2[j] for j in range(dim)], t + half)
            k4 = f([z[j] + dt * k3[j] for j in range(dim)], t + dt)
        except (OverflowError, ZeroDivisionError, ValueError) as exc:
            raise DivergenceError(f"vector field not evaluable ({exc})", i + 1, float(times[i + 1]), z) from None
        for j in range(dim):
            inc = dt / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]) - comp[j]
            new = z[j] + inc
            comp[j] = (new - z[j]) - inc
            z[j] = new
        if not all(math.isfinite(x) for x in z):
            raise DivergenceError("non-finite state", i + 1, float(times[i + 1]), z)
        states[i + 1] = z
    return Trajectory(times, states, dt, sys.chart.names)


def along(traj: Trajectory, exprs: Sequence[Expr]) -> np.ndarray:
    return evaluate_batch(list(exprs), traj.states, traj.times)


def conservation_drift(traj: Trajectory, q: Expr) -> float:
    """max_t |q(z(t), t) - q(z0, 0)|."""
    vals = along(traj, [q])[0]
    return float(np.max(np.abs(vals - vals[0])))


def sorted_spectrum(mats: np.ndarray) -> np.ndarray:
    eig = np.linalg.eigvals(mats)
    order = np.lexsort((eig.imag, eig.real), axis=-1)
    return np.take_along_axis(eig, order, axis=-1)


def isospectral_drift(traj: Trajectory, lp) -> float:
    """Largest displacement of the sorted eigenvalues of L from the t=0 spectrum."""
    spec = sorted_spectrum(lp.evaluate(traj.states, traj.times))
    return float(np.max(np.abs(spec - spec[0])))


def trace_drift(traj: Trajectory, traces: Sequence[Expr]) -> list[float]:
    vals = along(traj, traces)
    return [float(x) for x in np.max(np.abs(vals - vals[:, :1]), axis=1)]
