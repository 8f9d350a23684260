"""Lagrangian systems on J1E: Poincare-Cartan forms, partial Hessian,
tangent map of the Legendre maps and the regularity classification.

The volume form is fixed to dx1^...^dxm, so a Lagrangian density is just
its Lagrangian function, an expression over the J1E coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from jetcalc import charts as ch
from jetcalc.charts import BundleSpec
from jetcalc.errors import DomainError, StrayCoordinate
from jetcalc.expr import (
    Expr,
    Rational,
    Var,
    const,
    constant_value,
    differentiate,
    free_vars,
    is_constant,
    normalize,
)
from jetcalc.forms import DiffForm, dcoord, dm1x, exterior_derivative, volume_form, zero_form
from jetcalc.numeric import (
    PIVOT_TOL,
    SampleConfig,
    evaluate_matrix,
    nondegeneracy_check,
    rank_of,
    restricted_kernel,
    sample_points,
)
from jetcalc.parser import parse_expr


@dataclass(frozen=True)
class LagrangianSystem:
    spec: BundleSpec
    L: Expr
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "L", normalize(self.L if isinstance(self.L, Expr) else const(self.L)))
        stray = free_vars(self.L) - set(self.chart.coords)
        if stray:
            raise StrayCoordinate(stray)

    @property
    def chart(self) -> ch.Chart:
        return ch.make_chart(ch.J1E, self.spec)

    def momentum(self, A: int, mu: int) -> Expr:
        """dL/dv{A}_{mu}."""
        return differentiate(self.L, ch.vname(A, mu))

    def momenta(self) -> dict:
        return {(A, mu): self.momentum(A, mu) for A, mu in self.spec.pairs}

    def energy(self) -> Expr:
        """v^A_mu dL/dv^A_mu - L."""
        acc = const(0)
        for (A, mu), p in self.momenta().items():
            acc = acc + Var(ch.vname(A, mu)) * p
        return acc - self.L

    def __str__(self):
        label = f"{self.name}: " if self.name else ""
        return f"{label}L = {self.L}  (m={self.spec.m}, N={self.spec.N})"


def load_system(spec: BundleSpec, src: str, name: str = "") -> LagrangianSystem:
    """Parse a Lagrangian function over the J1E chart.

    Momentum coordinates of the other charts are recognised so that they
    raise StrayCoordinate rather than UnknownIdentifier.
    """
    e = parse_expr(src, ch.all_coordinate_names(spec))
    return LagrangianSystem(spec, e, name)


# ---------------------------------------------------------------------------
# Poincare-Cartan forms


def _horizontal_momentum_form(sys: LagrangianSystem) -> DiffForm:
    chart = sys.chart
    out = zero_form(chart, sys.spec.m)
    for (A, mu), p in sys.momenta().items():
        out = out + (dcoord(chart, ch.yname(A)) ^ dm1x(chart, mu)) * p
    return out


def poincare_cartan(sys: LagrangianSystem, which: str = "theta_L") -> DiffForm:
    """``theta_L``, ``omega_L = -d theta_L`` or ``theta_lower = theta_L - L d^m x``."""
    chart = sys.chart
    vol = volume_form(chart)
    theta_L = _horizontal_momentum_form(sys) - vol * sys.energy()
    if which == "theta_L":
        return theta_L
    if which == "theta_lower":
        return theta_L - vol * sys.L
    if which == "omega_L":
        return -exterior_derivative(theta_L)
    if which == "dtheta_lower":
        return -exterior_derivative(theta_L - vol * sys.L)
    raise ValueError(f"unknown Poincare-Cartan form {which!r}")


def expanded_omega_L(sys: LagrangianSystem) -> DiffForm:
    """Omega_L assembled from second derivatives, independently of d."""
    spec, chart, L = sys.spec, sys.chart, sys.L
    vol = volume_form(chart)
    out = zero_form(chart, spec.m + 1)
    for A, mu in spec.pairs:
        va = ch.vname(A, mu)
        dLdv = differentiate(L, va)
        dy_a = dcoord(chart, ch.yname(A))
        horiz = dm1x(chart, mu)
        for B, nu in spec.pairs:
            vb = ch.vname(B, nu)
            h = differentiate(dLdv, vb)
            out = out - (dcoord(chart, vb) ^ dy_a ^ horiz) * h
            out = out + (dcoord(chart, vb) ^ vol) * (h * Var(va))
        for B in range(1, spec.N + 1):
            yb = ch.yname(B)
            g = differentiate(dLdv, yb)
            out = out - (dcoord(chart, yb) ^ dy_a ^ horiz) * g
            out = out + (dcoord(chart, yb) ^ vol) * (g * Var(va))
    for B in range(1, spec.N + 1):
        yb = ch.yname(B)
        coeff = -differentiate(L, yb)
        for mu in range(1, spec.m + 1):
            coeff = coeff + differentiate(differentiate(L, ch.xname(mu)), ch.vname(B, mu))
        out = out + (dcoord(chart, yb) ^ vol) * coeff
    return out


# ---------------------------------------------------------------------------
# Hessian and tangent map


def hessian(sys: LagrangianSystem) -> tuple:
    """Nm x Nm matrix d2L/dv^B_nu dv^A_mu, rows and columns in (A, mu) order."""
    return hessian_from_momenta(sys.spec, sys.momenta())


def hessian_from_momenta(spec: BundleSpec, momenta) -> tuple:
    """Velocity Jacobian of momentum expressions keyed by (A, mu)."""
    pairs = spec.pairs
    return tuple(
        tuple(differentiate(momenta[(A, mu)], ch.vname(B, nu)) for B, nu in pairs)
        for A, mu in pairs
    )


def legendre_jacobian(sys: LagrangianSystem) -> tuple:
    """Jacobian of the reduced/restricted Legendre map.

    Rows follow the target chart (x, y, p), columns the J1E chart (x, y, v)::

        [[Id, 0, 0], [0, Id, 0], [d2L/dx dv, d2L/dy dv, d2L/dv dv]]
    """
    spec = sys.spec
    m, N, n = spec.m, spec.N, spec.m * spec.N
    size = m + N + n
    zero, one = Rational(0), Rational(1)
    rows = [[zero] * size for _ in range(size)]
    for i in range(m + N):
        rows[i][i] = one
    H = hessian(sys)
    for r, (A, mu) in enumerate(spec.pairs):
        p = sys.momentum(A, mu)
        for nu in range(1, m + 1):
            rows[m + N + r][nu - 1] = differentiate(p, ch.xname(nu))
        for B in range(1, N + 1):
            rows[m + N + r][m + B - 1] = differentiate(p, ch.yname(B))
        for c in range(n):
            rows[m + N + r][m + N + c] = H[r][c]
    return tuple(tuple(r) for r in rows)


# ---------------------------------------------------------------------------
# symbolic determinant


def _exact_det(M) -> object:
    n = len(M)
    A = [[constant_value(c) for c in row] for row in M]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            A[col], A[piv] = A[piv], A[col]
            det = -det
        det = det * A[col][col]
        for r in range(col + 1, n):
            f = A[r][col] / A[col][col]
            if f:
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return det


def symbolic_det(M, max_size: int = 8) -> Optional[Expr]:
    """Determinant as an expression; None when the matrix is too large to expand."""
    n = len(M)
    if n == 0:
        return Rational(1)
    if all(is_constant(c) for row in M for c in row):
        return const(_exact_det(M))
    if n > max_size:
        return None
    memo: dict = {}

    def minor(row: int, cols: tuple) -> Expr:
        if row == n:
            return Rational(1)
        key = (row, cols)
        if key in memo:
            return memo[key]
        acc = Rational(0)
        for k, c in enumerate(cols):
            entry = M[row][c]
            if is_constant(entry) and constant_value(entry) == 0:
                continue
            sub = minor(row + 1, cols[:k] + cols[k + 1:])
            term = entry * sub
            acc = acc - term if k % 2 else acc + term
        memo[key] = acc
        return acc

    return minor(0, tuple(range(n)))


# ---------------------------------------------------------------------------
# regularity


REGULAR = "Regular"
CONSTANT_RANK = "SingularConstantRank"
VARIABLE_RANK = "SingularVariableRank"
INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class RegularityReport:
    hessian: tuple
    det: Optional[Expr]
    det_status: str
    sampled_ranks: tuple
    kind: str
    rank: Optional[int]
    qualifier: str
    almost_regular_candidate: bool
    hyper_regular: str
    equivalence_checks: tuple
    samples: int
    seed: int
    tol: float
    connectedness: str = "unchecked"
    skipped_points: tuple = field(default_factory=tuple)

    @property
    def classification(self) -> str:
        if self.kind == CONSTANT_RANK:
            return f"{CONSTANT_RANK}({self.rank})"
        return self.kind

    @property
    def is_regular(self) -> bool:
        return self.kind == REGULAR

    @property
    def discrepancies(self) -> tuple:
        return tuple(c for c in self.equivalence_checks if not c["consistent"])

    def to_dict(self, include_points: bool = False) -> dict:
        d = {
            "classification": self.classification,
            "qualifier": self.qualifier,
            "hessian": [[str(c) for c in row] for row in self.hessian],
            "det": None if self.det is None else str(self.det),
            "det_status": self.det_status,
            "almost_regular_candidate": self.almost_regular_candidate,
            "hyper_regular": self.hyper_regular,
            "connectedness": self.connectedness,
            "rank_profile": sorted({r for _, r in self.sampled_ranks}),
            "samples": self.samples,
            "seed": self.seed,
            "tol": self.tol,
            "hessian_omega_equivalence": [
                {k: v for k, v in c.items() if include_points or k != "point"}
                for c in self.equivalence_checks
            ],
            "discrepancies": len(self.discrepancies),
            "skipped_points": len(self.skipped_points),
        }
        if include_points:
            d["sampled_ranks"] = [{"point": p, "rank": r} for p, r in self.sampled_ranks]
        return d

    def __str__(self):
        lines = [
            f"classification: {self.classification} ({self.qualifier})",
            f"  det(Hessian) = {self.det}  [{self.det_status}]",
            f"  sampled rank profile: {sorted({r for _, r in self.sampled_ranks})}",
            f"  almost-regular candidate: {self.almost_regular_candidate}"
            f" (connectedness: {self.connectedness})",
            f"  hyper-regular: {self.hyper_regular}",
            f"  Hessian rank <=> Omega_L vertical kernel: "
            f"{len(self.equivalence_checks) - len(self.discrepancies)}/{len(self.equivalence_checks)} consistent",
        ]
        return "\n".join(lines)


def regularity_probes(spec: BundleSpec, first: Optional[dict]) -> list:
    """Forced probes: the origin, plus the first sample with each y zeroed in turn."""
    probes = [{}]
    if first is not None:
        ys = [ch.yname(A) for A in range(1, spec.N + 1)]
        for y in ys:
            probes.append({**first, y: 0.0})
        if len(ys) > 1:
            probes.append({**first, **{y: 0.0 for y in ys}})
    return probes


def minimal_kernel_dim(spec: BundleSpec) -> int:
    """Smallest possible kernel of v -> i(v)Omega_L.

    For m = 1 Omega_L is a 2-form on the odd-dimensional J1E, so its kernel
    is never trivial; a regular Lagrangian attains kernel dimension 1, spanned
    by a vector with nonzero dx-component.  The regularity cross-check
    therefore counts kernel vectors with vanishing dx^mu-components
    ("vertical kernel"), which is zero exactly when the Hessian is invertible.
    """
    return 1 if spec.m == 1 else 0


def _det_status(det: Optional[Expr]) -> str:
    if det is None or not is_constant(det):
        return "indeterminate"
    return "zero" if constant_value(det) == 0 else "nonzero-constant"


def classify_regularity(sys: LagrangianSystem, samples: int = 200, tol: float = PIVOT_TOL,
                        seed: int = 0, equivalence_points: int = 3,
                        ranges=None, momenta=None) -> RegularityReport:
    """Classify from the partial Hessian, or from the velocity Jacobian of
    ``momenta`` (the p-components of a Legendre map) when given."""
    spec = sys.spec
    chart = sys.chart
    n = spec.m * spec.N
    H = hessian(sys) if momenta is None else hessian_from_momenta(spec, momenta)
    det = symbolic_det(H)
    status = _det_status(det)

    base = sample_points(chart, SampleConfig(count=samples, seed=seed, ranges=dict(ranges or {})))
    probes = sample_points(
        chart, SampleConfig(count=0, seed=seed, probes=regularity_probes(spec, base[0] if base else None))
    )
    ranks = []
    skipped = []
    for point in base + probes:
        try:
            ranks.append((point, rank_of(evaluate_matrix(H, point), tol)))
        except DomainError:
            skipped.append(point)

    omega_L = poincare_cartan(sys, "omega_L")
    horizontal = chart.base_coords
    eq_points = [p for p, _ in ranks[:equivalence_points]] + [p for p in probes if p not in skipped]
    rank_at = {id(p): r for p, r in ranks}
    checks = []
    for p in eq_points:
        r = rank_at.get(id(p))
        if r is None:
            continue
        nd = nondegeneracy_check(omega_L, p, tol)
        vert = restricted_kernel(omega_L, p, horizontal, tol)
        checks.append({
            "point": p,
            "hessian_rank": r,
            "omega_kernel_dim": nd.kernel_dim,
            "vertical_kernel_dim": vert.kernel_dim,
            "probe": any(p is q for q in probes),
            "literal_consistent": (r == n) == nd.nondegenerate,
            "consistent": (r == n) == (vert.kernel_dim == 0),
        })

    rank_set = {r for _, r in ranks}
    constant_hessian = all(is_constant(c) for row in H for c in row)
    rank: Optional[int] = None
    if status == "nonzero-constant":
        kind, qualifier = REGULAR, "symbolic determinant"
    elif not ranks:
        kind, qualifier = INDETERMINATE, "no evaluable sample"
    elif status == "zero" or rank_set != {n}:
        if len(rank_set) == 1:
            kind, rank = CONSTANT_RANK, rank_set.pop()
        else:
            kind = VARIABLE_RANK
        qualifier = "symbolic determinant zero" if status == "zero" else "sampled-only"
    else:
        kind, qualifier = REGULAR, "sampled-only"

    if kind == REGULAR and constant_hessian:
        hyper = "hyper-regular (affine criterion)"
    elif kind == REGULAR:
        hyper = "unverified (global property)"
    else:
        hyper = "no (not regular)"

    return RegularityReport(
        hessian=H, det=det, det_status=status, sampled_ranks=tuple(ranks),
        kind=kind, rank=rank, qualifier=qualifier,
        almost_regular_candidate=(kind == CONSTANT_RANK),
        hyper_regular=hyper, equivalence_checks=tuple(checks),
        samples=samples, seed=seed, tol=tol, skipped_points=tuple(skipped),
    )


def hessian_matrix_at(sys: LagrangianSystem, point) -> np.ndarray:
    return evaluate_matrix(hessian(sys), point)
