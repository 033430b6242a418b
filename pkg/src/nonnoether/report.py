"""Run the verification pipeline for a system definition and render the result."""

from __future__ import annotations

import json
import time as _time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import bicomplex as bcx
from . import flow as flw
from . import lax as lx
from . import nijenhuis as nj
from . import symcheck as sc
from .checks import FAIL, PASS, SKIPPED, CheckResult
from .expr import ONE, DomainError, ExprError, ZeroTest, collect, evaluate_batch
from .multifield import Form, Multivector, RegularityError, lie_derivative, wedge
from .randfields import random_expr, random_form, random_multivector
from .sysdef import ALL_CHECKS, SystemDefinition

# check -> checks whose success it relies on
DEPENDS = {
    "symmetry": (),
    "non_noether": ("symmetry",),
    "conserved": ("non_noether",),
    "involution": ("conserved",),
    "yang_baxter": ("non_noether",),
    "bihamiltonian": ("yang_baxter",),
    "lax": ("non_noether",),
    "bicomplex": ("yang_baxter",),
    "lenard": ("lax", "bicomplex"),
    "nijenhuis": ("yang_baxter",),
    "flow": ("non_noether",),
}

ORACLE_TOL = 1e-8
RANDOM_PAIRS = 20


@dataclass
class VerificationReport:
    system: dict
    sampling: dict
    checks: list[CheckResult]
    artifacts: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    timing: dict | None = None

    @property
    def ok(self) -> bool:
        return all(c.status != FAIL for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        d = {
            "system": self.system,
            "sampling": self.sampling,
            "checks": [c.to_dict() for c in self.checks],
            "artifacts": self.artifacts,
            "warnings": list(self.warnings),
            "ok": self.ok,
        }
        if self.timing is not None:
            d["timing"] = self.timing
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        return cls(
            d["system"],
            d["sampling"],
            [CheckResult.from_dict(c) for c in d["checks"]],
            d.get("artifacts", {}),
            list(d.get("warnings", [])),
            d.get("timing"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "VerificationReport":
        return cls.from_dict(json.loads(text))


_COLORS = {PASS: "\033[32m", FAIL: "\033[31m", SKIPPED: "\033[33m"}


def render_text(report: VerificationReport, color: bool = False) -> str:
    lines = [f"system: {report.system.get('name', '?')}  coordinates: {', '.join(report.system['coordinates'])}"]
    s = report.sampling
    lines.append(f"sampling: {s['count']} points, seed {s['seed']}, tol {s['tol']:g}")
    lines.append("")
    width = max([len(c.name) for c in report.checks] + [5])
    for c in report.checks:
        status = c.status.upper()
        if color:
            status = f"{_COLORS[c.status]}{status}\033[0m"
        res = "" if c.residual is None else f"  residual {c.residual:.3e}"
        lines.append(f"  {c.name:<{width}}  {status}{res}  {c.detail}")
        if c.status == FAIL and c.witness:
            pt = ", ".join(f"{x:.6g}" for x in c.witness["point"])
            lines.append(f"  {'':<{width}}  witness z=({pt}) t={c.witness['t']:.6g}")
        for k, v in c.parts.items():
            lines.append(f"  {'':<{width}}    {k}: {v:.3e}")
    for w in report.warnings:
        lines.append(f"warning: {w}")
    a = report.artifacts
    if a:
        lines.append("")
        lines.append("derived structures:")
        for key in ("W_hat", "Y", "secular_polynomial", "lax_L", "traces", "spectral_multiplicity",
                    "d_tilde", "R_E", "omega", "omega_bullet", "omega_pairing_sign", "drift"):
            if key not in a:
                continue
            v = a[key]
            if isinstance(v, dict):
                lines.append(f"  {key}:")
                for k2, v2 in v.items():
                    lines.append(f"    {k2}: {v2}")
            elif isinstance(v, list):
                lines.append(f"  {key}:")
                for k2, v2 in enumerate(v, 1):
                    lines.append(f"    [{k2}] {v2}")
            else:
                lines.append(f"  {key}: {v}")
    if report.timing:
        lines.append("")
        lines.append("timing (s): " + ", ".join(f"{k}={v:.3f}" for k, v in report.timing.items()))
    lines.append("")
    lines.append("RESULT: " + ("PASS" if report.ok else "FAIL"))
    return "\n".join(lines) + "\n"


def render(report: VerificationReport, fmt: str = "text", color: bool = False) -> str:
    if fmt == "json":
        return report.to_json()
    if fmt == "text":
        return render_text(report, color)
    raise ValueError(f"unknown report format {fmt!r}")


def _s(e) -> str:
    return str(collect(e))


def _combine(name: str, results: list[CheckResult], detail: str) -> CheckResult:
    """Merge sub-checks: fails if any fails; worst residual reported."""
    parts = {}
    worst = max(results, key=lambda r: -1 if r.residual is None else r.residual)
    for r in results:
        if r.parts:
            parts.update({f"{r.name}.{k}": v for k, v in r.parts.items()})
        elif r.residual is not None:
            parts[r.name] = r.residual
    failing = [r for r in results if r.status == FAIL]
    src = failing[0] if failing else worst
    return CheckResult(name, FAIL if failing else PASS, src.residual, src.witness if failing else worst.witness, detail, parts)


class _Pipeline:
    def __init__(self, defn: SystemDefinition, timing: bool):
        self.defn = defn
        self.sys = defn.build()
        self.sampler = defn.sampling.sampler(self.sys.chart.dim)
        self.rng = np.random.default_rng(defn.sampling.seed)
        self.results: dict[str, CheckResult] = {}
        self.artifacts: dict = {}
        self.warnings: list[str] = []
        self.timing: dict | None = {} if timing else None
        self._cache: dict = {}

    # lazily built shared structures -------------------------------------
    def get(self, key: str, build: Callable):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    @property
    def Y(self):
        return self.get("Y", lambda: sc.conserved_quantities(self.sys, self.sampler))

    @property
    def lax_pair(self):
        return self.get("lax", lambda: lx.build_lax(self.sys))

    @property
    def traces(self):
        return self.get("traces", lambda: lx.lax_traces(self.lax_pair, self.sys.chart.dim))

    @property
    def bc(self):
        return self.get("bicomplex", lambda: bcx.Bicomplex(self.sys))

    def roots_at(self, p, t):
        return sc.secular_roots(self.Y, p, t)

    # individual checks ---------------------------------------------------
    def symmetry(self):
        return sc.check_symmetry(self.sys, self.sampler)

    def non_noether(self):
        self.artifacts["W_hat"] = self.sys.W_hat.pretty()
        return sc.check_non_noether(self.sys, self.sampler)

    def conserved(self):
        Y = self.Y
        self.artifacts["Y"] = [_s(y) for y in Y]
        names = self.sys.chart.names
        self.artifacts["secular_polynomial"] = " + ".join(
            f"({_s(c)})*c^{len(Y) - k}" if k < len(Y) else f"({_s(c)})"
            for k, c in enumerate(sc.secular_polynomial(Y))
        )
        cons = sc.check_conservation(self.sys, Y, self.sampler)
        return _combine("conserved", [cons, self._root_oracle()], "d/dt Y^(k) = 0; Y^(k) from secular roots")

    def _root_oracle(self) -> CheckResult:
        Y = self.Y
        vals, pts, ts = self.sampler.evaluate(Y)
        worst, witness, imag = 0.0, None, 0.0
        for j in range(pts.shape[0]):
            roots = self.roots_at(pts[j], ts[j])
            imag = max(imag, float(np.max(np.abs(roots.imag))))
            rec = sc.quantities_from_roots(roots)
            r = max(abs(rec[k] - vals[k, j]) for k in range(len(Y)))
            if r > worst:
                worst, witness = r, {"point": [float(x) for x in pts[j]], "t": float(ts[j])}
        if imag > self.sampler.tol:
            self.warnings.append(f"secular roots have imaginary parts up to {imag:.3e}")
        return CheckResult("root_reconstruction", PASS if worst < ORACLE_TOL else FAIL, worst, witness, "")

    def involution(self):
        return sc.check_involutivity(self.sys, self.Y, self.sampler)

    def yang_baxter(self):
        res = sc.check_yang_baxter(self.sys, self.sampler)
        if res.passed and self.sys.W_hat.coeffs:
            f = random_expr(self.sys.chart, self.rng)
            liou = sc.check_liouville(self.sys.W_hat, f, self.sampler)
            res.parts["what_liouville"] = float(liou.residual)
        return res

    def bihamiltonian(self):
        res = sc.check_bihamiltonian(self.sys, self.sampler)
        f = random_expr(self.sys.chart, self.rng)
        liou = sc.check_liouville(self.sys.W, f, self.sampler)
        return _combine("bihamiltonian", [res, CheckResult.from_zero("liouville", liou)], res.detail + "; L_{W(f)} W = 0")

    def lax(self):
        lp = self.lax_pair
        self.artifacts["lax_L"] = {f"L[{a},{b}]": _s(e) for (a, b), e in lp.nonzero_entries().items()}
        I = self.traces
        self.artifacts["traces"] = [_s(i) for i in I[: self.sys.n]]
        results = [lx.check_lax_equation(lp, self.sys, self.sampler)]
        results.append(sc.check_conservation(self.sys, I, self.sampler, name="trace_conservation", label="I"))
        try:
            m = lx.spectral_multiplicity(lp, self.roots_at, self.sampler.points[:10], self.sampler.times[:10])
        except ValueError as exc:
            results.append(CheckResult("trace_identity", FAIL, None, None, str(exc)))
        else:
            self.artifacts["spectral_multiplicity"] = m
            results.append(lx.check_trace_identity(I, self.roots_at, m, self.sampler, ORACLE_TOL))
        return _combine("lax", results, "dL/dt = LP - PL; Tr L^k conserved; Tr L^k = m sum c_i^k")

    def _random_forms(self):
        chart = self.sys.chart
        return self.get("forms", lambda: [random_form(chart, 1, self.rng) for _ in range(3)] + [random_form(chart, 2, self.rng, 0.3)])

    def bicomplex(self):
        bc = self.bc
        names = self.sys.chart.names
        self.artifacts["d_tilde"] = {f"d~{names[a]}": u.pretty() for a, u in enumerate(bc.table)}
        forms = self._random_forms()
        results = [
            bcx.check_bicomplex(bc, forms, self.sampler),
            bcx.check_d_tilde_routes(bc, forms, self.sampler),
            bcx.check_invariance(bc, forms, self.sampler),
        ]
        return _combine("bicomplex", results, "d^2 = d~^2 = d d~ + d~ d = 0; derivation route; flow invariance")

    def lenard(self):
        return bcx.check_lenard(self.bc, self.traces, self.sampler)

    def nijenhuis(self):
        sys, chart = self.sys, self.sys.chart
        R = nj.build_r_e(sys)
        self.artifacts["R_E"] = R.pretty()
        pairs = [(random_multivector(chart, 1, self.rng), random_multivector(chart, 1, self.rng)) for _ in range(RANDOM_PAIRS)]
        xu = [(random_multivector(chart, 1, self.rng), random_form(chart, 1, self.rng)) for _ in range(5)]
        forms = nj.auxiliary_forms(sys)
        self.artifacts["omega"] = forms.omega.pretty()
        self.artifacts["omega_bullet"] = forms.omega_bullet.pretty()
        try:
            self.artifacts["omega_pairing_sign"] = nj.omega_pairing_sign(sys, forms.omega, self.sampler)
        except ValueError as exc:
            self.warnings.append(str(exc))
        trace_diff = [a - b for a, b in zip(R.power_traces(chart.dim), self.traces)]
        results = [
            nj.check_torsion(R, pairs, self.sampler),
            nj.check_invariance(R, sys, self.sampler),
            nj.check_pairing(R, sys, xu, self.sampler),
            nj.check_auxiliary_forms(sys, forms, self.sampler),
            CheckResult.from_zero("trace_match", self.sampler.is_zero(trace_diff)),
        ]
        return _combine("nijenhuis", results, "torsion; invariance; pairing with R-bar; closed 2-forms; Tr R^k = Tr L^k")

    def flow(self):
        fc = self.defn.flow
        if fc.z0 is None:
            return CheckResult.skipped("flow", "no initial point given")
        traj = flw.integrate(self.sys, fc.z0, fc.T, fc.dt)
        drift = {"h": flw.conservation_drift(traj, self.sys.h)}
        for k, y in enumerate(self.Y, 1):
            drift[f"Y{k}"] = flw.conservation_drift(traj, y)
        for k, d in enumerate(flw.trace_drift(traj, self.traces[: self.sys.n]), 1):
            drift[f"TrL^{k}"] = d
        drift["spectrum"] = flw.isospectral_drift(traj, self.lax_pair)
        worst = max(drift, key=drift.get)
        self.artifacts["drift"] = {k: f"{v:.3e}" for k, v in drift.items()}
        ok = drift[worst] < fc.tol
        return CheckResult(
            "flow",
            PASS if ok else FAIL,
            drift[worst],
            None if ok else {"point": list(fc.z0), "t": 0.0},
            f"RK4 T={fc.T:g} dt={fc.dt:g}: max drift (worst: {worst}) < {fc.tol:g}",
            drift,
        )

    # orchestration -------------------------------------------------------
    def run(self) -> VerificationReport:
        checks = []
        pre = [self._timed("poisson", lambda: self.sys.check_poisson(self.sampler))]
        pre.append(self._timed("regular", lambda: self.sys.check_regular(self.sampler)))
        checks.extend(pre)
        regular = pre[1].passed
        requested = self.defn.checks
        for name in ALL_CHECKS:
            if name not in requested:
                continue
            blocked = None
            if not regular:
                blocked = "Poisson bivector is not regular"
            for dep in DEPENDS[name]:
                if dep not in requested:
                    self.warnings.append(f"{name} requested without {dep}; its prerequisites were not verified")
                elif self.results[dep].status != PASS:
                    blocked = blocked or f"requires {dep} to pass"
            if blocked:
                res = CheckResult.skipped(name, blocked)
            else:
                try:
                    res = self._timed(name, getattr(self, name))
                except (RegularityError, DomainError, ExprError, flw.DivergenceError) as exc:
                    res = CheckResult(name, FAIL, None, getattr(exc, "witness", None) and _wit(exc.witness), str(exc))
            self.results[name] = res
            checks.append(res)
        return VerificationReport(
            self.defn.to_dict(),
            {
                "count": self.sampler.count,
                "seed": self.defn.sampling.seed,
                "tol": self.sampler.tol,
                "box": [self.sampler.low, self.sampler.high],
                "t_range": [self.sampler.t_low, self.sampler.t_high],
            },
            checks,
            self.artifacts,
            self.warnings,
            self.timing,
        )

    def _timed(self, name, fn):
        t0 = _time.perf_counter()
        out = fn()
        if self.timing is not None:
            self.timing[name] = _time.perf_counter() - t0
        return out


def _wit(w):
    point, t = w
    return {"point": [float(x) for x in point], "t": float(t)}


def run(defn: SystemDefinition, timing: bool = False) -> VerificationReport:
    """Execute the requested checks in dependency order.

    Timing is omitted unless asked for, so equal seeds give identical reports.
    """
    return _Pipeline(defn, timing).run()
