"""Three-way identity verdicts aggregated from per-coefficient equivalence checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from jetcalc._rng import PRNG_ID
from jetcalc.expr import Equivalence, Verdict

PROVED = "ProvedEqual"
NUMERIC = "NumericallyEqual"
FAILED = "Failed"


@dataclass(frozen=True)
class IdentityResult:
    name: str
    status: str
    path: str
    max_residual: Optional[float] = None
    witness: Optional[dict] = None
    samples: int = 0
    seed: Optional[int] = None
    tol: Optional[float] = None
    detail: str = ""
    prng: str = PRNG_ID
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status == FAILED and self.witness is None:
            raise ValueError(f"{self.name}: a Failed verdict needs a witness point")

    @property
    def ok(self) -> bool:
        return self.status != FAILED

    def to_dict(self) -> dict:
        d = {"name": self.name, "status": self.status, "path": self.path}
        if self.path != "symbolic":
            d.update(samples=self.samples, seed=self.seed, tol=self.tol, prng=self.prng)
        if self.max_residual is not None:
            d["max_residual"] = self.max_residual
        if self.witness is not None:
            d["witness"] = {k: self.witness[k] for k in sorted(self.witness)}
        if self.detail:
            d["detail"] = self.detail
        d.update(self.extra)
        return d

    def __str__(self):
        s = f"{self.name}: {self.status} [{self.path}]"
        if self.max_residual is not None and self.status != PROVED:
            s += f" max residual {self.max_residual:.3e}"
        if self.detail:
            s += f" ({self.detail})"
        return s


def combine(name: str, checks: Mapping[str, Equivalence], samples: int, seed: int,
            tol: float) -> IdentityResult:
    """Fold per-component checks into a single identity verdict."""
    worst = None
    numeric = False
    for label, eq in checks.items():
        if not eq.equal:
            return IdentityResult(
                name, FAILED, eq.path, max_residual=eq.max_residual,
                witness=eq.witness if eq.witness is not None else {},
                samples=samples, seed=seed, tol=tol, detail=f"component {label}",
            )
        if eq.verdict is Verdict.NUMERICALLY_EQUAL:
            numeric = True
            worst = max(worst or 0.0, eq.max_residual or 0.0)
    if numeric:
        return IdentityResult(name, NUMERIC, "symbolic+numeric", max_residual=worst,
                              samples=samples, seed=seed, tol=tol)
    return IdentityResult(name, PROVED, "symbolic")
