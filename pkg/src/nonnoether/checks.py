"""Uniform record for every verification the package performs."""

from __future__ import annotations

from dataclasses import dataclass, field

from .expr import ZeroTest

PASS, FAIL, SKIPPED = "pass", "fail", "skipped"


@dataclass
class CheckResult:
    name: str
    status: str
    residual: float | None = None
    witness: dict | None = None
    detail: str = ""
    parts: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def __bool__(self):
        return self.passed

    @classmethod
    def from_zero(cls, name: str, zt: ZeroTest, detail: str = "", parts: dict | None = None) -> "CheckResult":
        return cls(
            name,
            PASS if zt.ok else FAIL,
            float(zt.residual),
            _witness(zt),
            detail,
            dict(parts or {}),
        )

    @classmethod
    def from_parts(cls, name: str, tests: dict[str, ZeroTest], detail: str = "") -> "CheckResult":
        """Combine named zero tests; the worst one supplies residual and witness."""
        combined = ZeroTest.combine(tests.values())
        return cls.from_zero(name, combined, detail, {k: float(v.residual) for k, v in tests.items()})

    @classmethod
    def skipped(cls, name: str, reason: str) -> "CheckResult":
        return cls(name, SKIPPED, None, None, reason)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "residual": self.residual,
            "witness": self.witness,
            "detail": self.detail,
            "parts": dict(self.parts),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CheckResult":
        return cls(d["name"], d["status"], d.get("residual"), d.get("witness"), d.get("detail", ""), dict(d.get("parts", {})))


def _witness(zt: ZeroTest) -> dict | None:
    if zt.witness is None:
        return None
    point, t = zt.witness
    return {"point": [float(x) for x in point], "t": float(t)}
