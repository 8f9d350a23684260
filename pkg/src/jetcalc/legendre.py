"""The five Legendre maps of a Lagrangian system and the identities relating
them to the canonical forms; Newton inversion of the reduced map.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

import numpy as np

from jetcalc import charts as ch
from jetcalc.charts import CoordMap, canonical_map, compose, maps_equal
from jetcalc.errors import NoConvergence, NotASection, SingularHessian
from jetcalc.expr import (
    Expr,
    Var,
    const,
    constant_value,
    equivalence_check,
    evaluate,
    is_constant,
    substitute,
)
from jetcalc.forms import DiffForm, canonical_form, compare_forms, dcoord, dm1x, pullback, volume_form
from jetcalc.lagrangian import LagrangianSystem, hessian, poincare_cartan
from jetcalc.numeric import PIVOT_TOL, evaluate_matrix, rank_of
from jetcalc.verdicts import IdentityResult, combine


class LegendreKind(str, enum.Enum):
    RESTRICTED = "Restricted"
    EXTENDED_FIRST = "ExtendedFirst"
    EXTENDED_SECOND = "ExtendedSecond"
    GENERALIZED = "Generalized"
    REDUCED = "Reduced"

    def __str__(self):
        return self.value


TARGETS = {
    LegendreKind.RESTRICTED: ch.J1PISTAR,
    LegendreKind.EXTENDED_FIRST: ch.MPI,
    LegendreKind.EXTENDED_SECOND: ch.MPI,
    LegendreKind.GENERALIZED: ch.J1ESTAR,
    LegendreKind.REDUCED: ch.PI,
}


def legendre_map(sys: LagrangianSystem, kind) -> CoordMap:
    kind = LegendreKind(kind)
    spec = sys.spec
    target = ch.make_chart(TARGETS[kind], spec)
    comps: dict = {n: Var(n) for n in target.base_coords + target.fiber_coords}
    momenta = sys.momenta()
    for (A, mu), p in momenta.items():
        comps[ch.pname(A, mu)] = p
    if kind in (LegendreKind.EXTENDED_FIRST, LegendreKind.EXTENDED_SECOND):
        vp = const(0)
        for (A, mu), p in momenta.items():
            vp = vp + Var(ch.vname(A, mu)) * p
        comps[ch.P0] = -vp if kind is LegendreKind.EXTENDED_FIRST else sys.L - vp
    if kind is LegendreKind.GENERALIZED:
        for mu in range(1, spec.m + 1):
            for nu in range(1, spec.m + 1):
                acc = const(0)
                for A in range(1, spec.N + 1):
                    acc = acc - Var(ch.vname(A, nu)) * momenta[(A, mu)]
                comps[ch.Pname(mu, nu)] = acc
    return CoordMap.from_dict(sys.chart, target, comps, name=kind.value)


def all_legendre_maps(sys: LagrangianSystem) -> dict:
    return {k: legendre_map(sys, k) for k in LegendreKind}


@dataclass(frozen=True)
class IdentityReport:
    title: str
    results: tuple
    samples: int
    seed: int
    tol: float

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    def __getitem__(self, name: str) -> IdentityResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def statuses(self) -> dict:
        return {r.name: r.status for r in self.results}

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "pass": self.ok,
            "samples": self.samples,
            "seed": self.seed,
            "tol": self.tol,
            "identities": [r.to_dict() for r in self.results],
        }

    def __str__(self):
        return "\n".join([f"{self.title}: {'pass' if self.ok else 'FAIL'}"]
                         + [f"  {r}" for r in self.results])


def _map_identity(name, f: CoordMap, g: CoordMap, samples, tol, seed, ranges) -> IdentityResult:
    checks = maps_equal(f, g, samples=samples, tol=tol, seed=seed, ranges=ranges)
    return combine(name, checks, samples, seed, tol)


def verify_diagram(sys: LagrangianSystem, samples: int = 200, tol: float = 1e-9,
                   seed: int = 0, ranges=None) -> IdentityReport:
    """Commutation of the Legendre maps with mu, iota, delta and Psi."""
    spec = sys.spec
    lm = all_legendre_maps(sys)
    R, F1, F2 = lm[LegendreKind.RESTRICTED], lm[LegendreKind.EXTENDED_FIRST], lm[LegendreKind.EXTENDED_SECOND]
    G, Red = lm[LegendreKind.GENERALIZED], lm[LegendreKind.REDUCED]
    mu = canonical_map("mu", spec)
    kw = dict(samples=samples, tol=tol, seed=seed, ranges=ranges)
    results = [
        _map_identity("Restricted = mu o ExtendedFirst", R, compose(mu, F1), **kw),
        _map_identity("Restricted = mu o ExtendedSecond", R, compose(mu, F2), **kw),
        _map_identity("ExtendedFirst = iota o Generalized", F1, compose(canonical_map("iota", spec), G), **kw),
        _map_identity("Reduced = delta o Generalized", Red, compose(canonical_map("delta", spec), G), **kw),
        _map_identity("Reduced = psi o Restricted", Red, compose(canonical_map("psi", spec), R), **kw),
    ]
    trace = const(0)
    for nu in range(1, spec.m + 1):
        trace = trace + G[ch.Pname(nu, nu)]
    results.append(combine(
        "trace: ExtendedFirst p0 = sum P{mu}_{mu} of Generalized",
        {"p0": equivalence_check(F1[ch.P0], trace, **kw)}, samples, seed, tol,
    ))
    results.append(combine(
        "ExtendedSecond p0 = ExtendedFirst p0 + L",
        {"p0": equivalence_check(F2[ch.P0], F1[ch.P0] + sys.L, **kw)}, samples, seed, tol,
    ))
    return IdentityReport("Legendre diagram", tuple(results), samples, seed, tol)


PULLBACK_IDENTITIES = (
    "ExtendedSecond* Theta = Theta_L",
    "ExtendedSecond* Omega = Omega_L",
    "ExtendedFirst* Theta = theta_L",
    "ExtendedFirst* Omega = -d theta_L",
    "Generalized* Theta_hat = theta_L",
    "Generalized* Omega_hat = -d theta_L",
)


def verify_pullbacks(sys: LagrangianSystem, mode: str = "symbolic", samples: int = 200,
                     tol: float = 1e-9, seed: int = 0, ranges=None) -> IdentityReport:
    """Pull the canonical forms back along the Legendre maps and compare with
    the Poincare-Cartan forms."""
    spec = sys.spec
    F1 = legendre_map(sys, LegendreKind.EXTENDED_FIRST)
    F2 = legendre_map(sys, LegendreKind.EXTENDED_SECOND)
    G = legendre_map(sys, LegendreKind.GENERALIZED)
    theta, omega = canonical_form(ch.MPI, "theta", spec), canonical_form(ch.MPI, "omega", spec)
    theta_hat = canonical_form(ch.J1ESTAR, "theta", spec)
    omega_hat = canonical_form(ch.J1ESTAR, "omega", spec)
    theta_L = poincare_cartan(sys, "theta_L")
    omega_L = poincare_cartan(sys, "omega_L")
    theta_lower = poincare_cartan(sys, "theta_lower")
    dtheta_lower = poincare_cartan(sys, "dtheta_lower")
    pairs = [
        (pullback(F2, theta), theta_L),
        (pullback(F2, omega), omega_L),
        (pullback(F1, theta), theta_lower),
        (pullback(F1, omega), dtheta_lower),
        (pullback(G, theta_hat), theta_lower),
        (pullback(G, omega_hat), dtheta_lower),
    ]
    results = tuple(
        compare_forms(name, lhs, rhs, mode=mode, samples=samples, tol=tol, seed=seed,
                      ranges=ranges)
        for name, (lhs, rhs) in zip(PULLBACK_IDENTITIES, pairs)
    )
    return IdentityReport(f"pullback identities ({mode})", results, samples, seed, tol)


# ---------------------------------------------------------------------------
# tautological characterisation


def section_as_form(section: CoordMap) -> DiffForm:
    """The m-form p d^m x + p^mu_A dy^A ^ d^{m-1}x_mu on E read off a section of Mpi."""
    E = section.source
    spec = E.spec
    out = volume_form(E) * section[ch.P0]
    for A, mu in spec.pairs:
        out = out + (dcoord(E, ch.yname(A)) ^ dm1x(E, mu)) * section[ch.pname(A, mu)]
    return out


def _check_section(section: CoordMap):
    if section.source.kind != ch.E:
        raise NotASection(f"a section must be defined on E, not {section.source}")
    for n in section.source.coords:
        if section[n] != Var(n):
            raise NotASection(f"component {n} = {section[n]} is not the identity")


def verify_tautology(space: str, section: CoordMap, samples: int = 200, tol: float = 1e-9,
                     seed: int = 0, ranges=None) -> IdentityReport:
    """section* Theta equals the section itself, read as an m-form on E."""
    _check_section(section)
    spec = section.source.spec
    if section.target.kind != space:
        raise NotASection(f"section lands in {section.target}, expected {space}")
    if space == ch.MPI:
        lhs = pullback(section, canonical_form(ch.MPI, "theta", spec))
        rhs = section_as_form(section)
        name = "phi* Theta = phi"
    elif space == ch.J1ESTAR:
        lhs = pullback(section, canonical_form(ch.J1ESTAR, "theta", spec))
        rhs = section_as_form(compose(canonical_map("iota", spec), section))
        name = "psi* Theta_hat = iota o psi"
    else:
        raise ValueError(f"tautology is defined on Mpi or J1Estar, not {space!r}")
    res = compare_forms(name, lhs, rhs, samples=samples, tol=tol, seed=seed, ranges=ranges)
    return IdentityReport(f"tautology on {space}", (res,), samples, seed, tol)


# ---------------------------------------------------------------------------
# inverting the reduced Legendre map


@dataclass(frozen=True)
class NewtonResult:
    point: dict
    iterations: int
    residual: float


def _velocity_names(spec):
    return [ch.vname(A, mu) for A, mu in spec.pairs]


def newton_solve(sys: LagrangianSystem, target: Mapping[str, float],
                 guess: Optional[Mapping[str, float]] = None, max_iter: int = 50,
                 tol: float = 1e-10, damping: float = 1.0,
                 rank_tol: float = PIVOT_TOL) -> NewtonResult:
    """Solve dL/dv(x, y, v) = p for v by plain (optionally damped) Newton."""
    spec = sys.spec
    pi = ch.make_chart(ch.PI, spec)
    missing = [n for n in pi.coords if n not in target]
    if missing:
        raise KeyError(f"target lacks Pi coordinates {missing}")
    vnames = _velocity_names(spec)
    momenta = [sys.momentum(A, mu) for A, mu in spec.pairs]
    p = np.array([target[ch.pname(A, mu)] for A, mu in spec.pairs], dtype=float)
    H = hessian(sys)
    point = {n: float(target[n]) for n in pi.base_coords + pi.fiber_coords}
    for n in vnames:
        point[n] = float(guess.get(n, 0.0)) if guess else 0.0
    for it in range(max_iter + 1):
        r = np.array([evaluate(e, point) for e in momenta]) - p
        res = float(np.max(np.abs(r))) if r.size else 0.0
        if res <= tol:
            return NewtonResult(point, it, res)
        if it == max_iter:
            break
        J = evaluate_matrix(H, point)
        rank = rank_of(J, rank_tol)
        if rank < len(vnames):
            raise SingularHessian(point, rank)
        step = np.linalg.solve(J, r)
        for n, s in zip(vnames, step):
            point[n] -= damping * float(s)
    raise NoConvergence(point, res, max_iter)


def invert_reduced(sys: LagrangianSystem, target: Mapping[str, float],
                   guess: Optional[Mapping[str, float]] = None, max_iter: int = 50,
                   tol: float = 1e-10, **kw) -> dict:
    """J1E point (x, y, v*) whose reduced Legendre image is ``target``."""
    return newton_solve(sys, target, guess, max_iter, tol, **kw).point


def hamiltonian_value(sys: LagrangianSystem, target: Mapping[str, float],
                      guess: Optional[Mapping[str, float]] = None, tol: float = 1e-10,
                      **kw) -> float:
    """H = p^mu_A v^A_mu - L at the preimage of ``target``."""
    point = invert_reduced(sys, target, guess, tol=tol, **kw)
    pv = sum(float(target[ch.pname(A, mu)]) * point[ch.vname(A, mu)] for A, mu in sys.spec.pairs)
    return pv - evaluate(sys.L, point)


def hamiltonian_expr(sys: LagrangianSystem) -> Optional[Expr]:
    """Closed-form Hamiltonian on Pi when the Hessian is constant and invertible.

    Then p = K v + b(x, y) is affine in v and can be solved exactly.  Returns
    None otherwise.
    """
    spec = sys.spec
    K = hessian(sys)
    if not all(is_constant(c) for row in K for c in row):
        return None
    inv = _invert([[_exact(c) for c in row] for row in K])
    if inv is None:
        return None
    vnames = _velocity_names(spec)
    at_zero = {v: 0 for v in vnames}
    pnames = [ch.pname(A, mu) for A, mu in spec.pairs]
    shifted = [Var(pn) - substitute(sys.momentum(A, mu), at_zero)
               for pn, (A, mu) in zip(pnames, spec.pairs)]
    vsol = {}
    for row, vn in zip(inv, vnames):
        acc = const(0)
        for coef, s in zip(row, shifted):
            if coef != 0:
                acc = acc + s * coef
        vsol[vn] = acc
    pv = const(0)
    for pn, vn in zip(pnames, vnames):
        pv = pv + Var(pn) * vsol[vn]
    return pv - substitute(sys.L, vsol)


def _exact(c):
    v = constant_value(c)
    return v if isinstance(v, float) else Fraction(v)


def _invert(A):
    n = len(A)
    M = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        pv = M[col][col]
        M[col] = [x / pv for x in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [row[n:] for row in M]
