"""System definition files (TOML) and the built-in demos.

Example::

    [system]
    coordinates = ["z1", "z2", "z3", "z4"]
    W = [[1, 3, "1"], [2, 4, "1"]]
    hamiltonian = "1/2*z1^2 + 1/2*z2^2 + exp(z3 - z4)"
    symmetry = ["...", "...", "...", "..."]
    checks = ["symmetry", "non_noether", "conserved"]

    [sampling]
    count = 100
    seed = 42
    tol = 1e-9

    [flow]
    z0 = [1, -1, 0, 0]
    T = 10
    dt = 1e-3
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .expr import Chart, ParseError, Sampler, parse
from .multifield import Multivector
from .symcheck import PhaseSystem
from . import systems

ALL_CHECKS = (
    "symmetry",
    "non_noether",
    "conserved",
    "involution",
    "yang_baxter",
    "bihamiltonian",
    "lax",
    "bicomplex",
    "lenard",
    "nijenhuis",
    "flow",
)


class DefinitionError(ValueError):
    """Input error, with a 1-based line/column when it can be located."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class SamplingConfig:
    count: int = 100
    low: float = -1.0
    high: float = 1.0
    t_low: float = 0.0
    t_high: float = 1.0
    seed: int = 42
    tol: float = 1e-9

    def sampler(self, dim: int) -> Sampler:
        return Sampler(dim, self.count, self.low, self.high, self.t_low, self.t_high, self.seed, self.tol)


@dataclass(frozen=True)
class FlowConfig:
    z0: tuple[float, ...] | None = None
    T: float = 10.0
    dt: float = 1e-3
    tol: float = 1e-6


@dataclass(frozen=True)
class SystemDefinition:
    coordinates: tuple[str, ...]
    W: tuple[tuple[int, int, str], ...]
    hamiltonian: str
    symmetry: tuple[str, ...]
    checks: tuple[str, ...] = ALL_CHECKS
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    flow: FlowConfig = field(default_factory=FlowConfig)
    name: str = "system"

    @property
    def dimension(self) -> int:
        return len(self.coordinates)

    def build(self) -> PhaseSystem:
        return PhaseSystem.from_strings(self.coordinates, self.W, self.hamiltonian, self.symmetry)

    def with_sampling(self, **changes) -> "SystemDefinition":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, sampling=replace(self.sampling, **changes))

    def with_symmetry(self, symmetry) -> "SystemDefinition":
        return replace(self, symmetry=tuple(symmetry))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "coordinates": list(self.coordinates),
            "W": [list(x) for x in self.W],
            "hamiltonian": self.hamiltonian,
            "symmetry": list(self.symmetry),
        }


def _locate(text: str, needle: str) -> tuple[int | None, int | None]:
    """1-based line/column of the first quoted occurrence of ``needle``."""
    for quote in ('"', "'"):
        pos = text.find(quote + needle + quote)
        if pos >= 0:
            pos += 1
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            return line, col
    return None, None


def _expr_error(text: str, src: str, exc: ParseError, what: str) -> DefinitionError:
    line, col = _locate(text, src)
    if col is not None:
        col += exc.position
    return DefinitionError(f"{what}: {exc}", line, col)


def _float_list(v, what: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in v)
    except (TypeError, ValueError):
        raise DefinitionError(f"{what} must be a list of numbers") from None


def loads(text: str, name: str = "system") -> SystemDefinition:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        col = getattr(exc, "colno", None)
        raise DefinitionError(f"syntax error: {exc}", line, col) from None

    sysd = data.get("system")
    if not isinstance(sysd, dict):
        raise DefinitionError("missing [system] section")
    for key in ("coordinates", "W", "hamiltonian", "symmetry"):
        if key not in sysd:
            raise DefinitionError(f"[system] is missing '{key}'")
    coords = sysd["coordinates"]
    if not isinstance(coords, list) or not all(isinstance(c, str) for c in coords):
        raise DefinitionError("coordinates must be a list of names")
    dim = sysd.get("dimension", len(coords))
    if dim != len(coords):
        raise DefinitionError(f"dimension {dim} does not match {len(coords)} coordinate names")
    try:
        chart = Chart(tuple(coords))
    except ValueError as exc:
        raise DefinitionError(str(exc)) from None

    W = []
    seen = set()
    for entry in sysd["W"]:
        if not (isinstance(entry, list) and len(entry) == 3 and all(isinstance(x, int) for x in entry[:2])):
            raise DefinitionError(f"W entry {entry!r} must be [a, b, \"expr\"]")
        a, b, src = entry
        if not 1 <= a < b <= dim:
            raise DefinitionError(f"W entry ({a}, {b}) needs 1 <= a < b <= {dim}")
        if (a, b) in seen:
            raise DefinitionError(f"W entry ({a}, {b}) given twice")
        seen.add((a, b))
        src = str(src)
        W.append((a, b, src))

    symmetry = sysd["symmetry"]
    if not isinstance(symmetry, list) or len(symmetry) != dim:
        raise DefinitionError(f"symmetry must list {dim} component expressions")
    exprs = [(s, f"W[{a},{b}]") for a, b, s in W]
    exprs.append((str(sysd["hamiltonian"]), "hamiltonian"))
    exprs += [(str(s), f"symmetry[{k + 1}]") for k, s in enumerate(symmetry)]
    for src, what in exprs:
        try:
            parse(src, chart)
        except ParseError as exc:
            raise _expr_error(text, src, exc, what) from None

    checks = sysd.get("checks", list(ALL_CHECKS))
    unknown = [c for c in checks if c not in ALL_CHECKS]
    if unknown:
        raise DefinitionError(f"unknown checks: {', '.join(unknown)}")

    samp = data.get("sampling", {})
    try:
        sampling = SamplingConfig(**{k: samp[k] for k in samp})
    except TypeError as exc:
        raise DefinitionError(f"[sampling]: {exc}") from None
    fl = dict(data.get("flow", {}))
    if "z0" in fl:
        fl["z0"] = _float_list(fl["z0"], "flow.z0")
        if len(fl["z0"]) != dim:
            raise DefinitionError(f"flow.z0 needs {dim} coordinates")
    try:
        flow = FlowConfig(**fl)
    except TypeError as exc:
        raise DefinitionError(f"[flow]: {exc}") from None

    return SystemDefinition(
        tuple(coords),
        tuple(W),
        str(sysd["hamiltonian"]),
        tuple(str(s) for s in symmetry),
        tuple(c for c in ALL_CHECKS if c in checks),
        sampling,
        flow,
        str(sysd.get("name", name)),
    )


def load(path) -> SystemDefinition:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DefinitionError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text, path.stem)


def toda_definition() -> SystemDefinition:
    return SystemDefinition(
        systems.TODA_COORDS,
        tuple(systems.TODA_W),
        systems.TODA_H,
        tuple(systems.TODA_E),
        flow=FlowConfig(z0=(1.0, -1.0, 0.0, 0.0)),
        name="toda",
    )


DEMOS = {"toda": toda_definition}
