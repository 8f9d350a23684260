"""Differential forms on a natural chart.

A degree-k form is a sparse map from strictly increasing k-tuples of chart
coordinate indices to normalized coefficient expressions.  The basis
(m-1)-forms follow ``d^{m-1}x_mu = i(d/dx^mu)(dx1^...^dxm)``, which equals
``(-1)^(mu-1) dx1^...^(omit dx^mu)^...^dxm``.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from jetcalc import charts as ch
from jetcalc._rng import make_rng
from jetcalc.charts import Chart, CoordMap
from jetcalc.errors import ChartMismatch, DegreeOverflow, DomainError, ZeroDegree
from jetcalc.expr import (
    Expr,
    Var,
    const,
    differentiate,
    equivalence_check,
    evaluate,
    free_vars,
    is_constant,
    constant_value,
    normalize,
    substitute,
)
from jetcalc.sampling import SampleConfig, sample_points
from jetcalc.verdicts import FAILED, NUMERIC, IdentityResult, combine


def _sort_sign(idx: Sequence[int]):
    """Sorted tuple and the sign of the sorting permutation (0 if repeated)."""
    s = tuple(sorted(idx))
    if len(set(s)) != len(s):
        return s, 0
    inversions = sum(1 for i in range(len(idx)) for j in range(i + 1, len(idx)) if idx[i] > idx[j])
    return s, (-1 if inversions % 2 else 1)


def _is_zero(e: Expr) -> bool:
    return is_constant(e) and constant_value(e) == 0


class DiffForm:
    __slots__ = ("chart", "degree", "terms")

    def __init__(self, chart: Chart, degree: int, terms: Mapping[tuple, object] = ()):
        if degree < 0 or degree > chart.dim:
            raise DegreeOverflow(f"degree {degree} on {chart} of dimension {chart.dim}")
        clean = {}
        allowed = set(chart.coords)
        for idx, c in dict(terms).items():
            idx = tuple(idx)
            if len(idx) != degree or any(i < 0 or i >= chart.dim for i in idx):
                raise ValueError(f"bad index tuple {idx} for a {degree}-form on {chart}")
            if any(idx[i] >= idx[i + 1] for i in range(len(idx) - 1)):
                raise ValueError(f"index tuple {idx} is not strictly increasing")
            c = normalize(c if isinstance(c, Expr) else const(c))
            if _is_zero(c):
                continue
            stray = free_vars(c) - allowed
            if stray:
                raise ChartMismatch(f"coefficient {c} uses {sorted(stray)} outside {chart}")
            clean[idx] = c
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "terms", MappingProxyType(dict(sorted(clean.items()))))

    def __setattr__(self, name, value):
        raise AttributeError("DiffForm is immutable")

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, DiffForm):
            return NotImplemented
        return (self.chart == other.chart and self.degree == other.degree
                and dict(self.terms) == dict(other.terms))

    def __hash__(self):
        return hash((self.chart, self.degree, tuple(self.terms.items())))

    def _check_same(self, other: "DiffForm"):
        if self.chart != other.chart:
            raise ChartMismatch(f"forms on {self.chart} and {other.chart}")

    def __add__(self, other):
        if not isinstance(other, DiffForm):
            return NotImplemented
        self._check_same(other)
        if self.degree != other.degree and self.terms and other.terms:
            raise ValueError(f"cannot add a {self.degree}-form and a {other.degree}-form")
        if not other.terms:
            return self
        if not self.terms:
            return other
        acc = dict(self.terms)
        for idx, c in other.terms.items():
            acc[idx] = acc[idx] + c if idx in acc else c
        return DiffForm(self.chart, self.degree, acc)

    def __neg__(self):
        return DiffForm(self.chart, self.degree, {i: -c for i, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, DiffForm):
            return NotImplemented
        return self + (-other)

    def __mul__(self, f):
        """Multiply by a scalar function (expression or number)."""
        if isinstance(f, DiffForm):
            return NotImplemented
        f = f if isinstance(f, Expr) else const(f)
        return DiffForm(self.chart, self.degree, {i: c * f for i, c in self.terms.items()})

    __rmul__ = __mul__

    def __xor__(self, other):
        return wedge(self, other)

    def coefficient(self, *names: str) -> Expr:
        """Coefficient of d(names[0])^d(names[1])^..., with the permutation sign."""
        idx = tuple(self.chart.index(n) for n in names)
        s, sign = _sort_sign(idx)
        if sign == 0:
            return const(0)
        return self.terms.get(s, const(0)) * sign

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for idx, c in self.terms.items():
            basis = "^".join(f"d{self.chart.coords[i]}" for i in idx)
            if not idx:
                parts.append(f"({c})")
            else:
                parts.append(f"({c})*{basis}")
        return " + ".join(parts)

    def __repr__(self):
        return f"DiffForm<{self.degree}, {self.chart}>({self})"


def zero_form(chart: Chart, degree: int) -> DiffForm:
    return DiffForm(chart, degree, {})


def scalar(chart: Chart, f) -> DiffForm:
    return DiffForm(chart, 0, {(): f})


def dcoord(chart: Chart, name: str) -> DiffForm:
    """The coordinate 1-form d(name)."""
    return DiffForm(chart, 1, {(chart.index(name),): 1})


def volume_form(chart: Chart) -> DiffForm:
    """d^m x = dx1 ^ ... ^ dxm."""
    idx = tuple(chart.index(n) for n in chart.base_coords)
    return DiffForm(chart, len(idx), {idx: 1})


@dataclass(frozen=True)
class VectorField:
    chart: Chart
    components: tuple

    def __post_init__(self):
        if len(self.components) != self.chart.dim:
            raise ChartMismatch(f"{len(self.components)} components on {self.chart}")
        object.__setattr__(
            self, "components",
            tuple(normalize(c if isinstance(c, Expr) else const(c)) for c in self.components),
        )


def coordinate_vector(chart: Chart, name: str) -> VectorField:
    comps = [0] * chart.dim
    comps[chart.index(name)] = 1
    return VectorField(chart, tuple(comps))


def wedge(a: DiffForm, b: DiffForm) -> DiffForm:
    a._check_same(b)
    k = a.degree + b.degree
    if k > a.chart.dim:
        raise DegreeOverflow(f"{a.degree} + {b.degree} exceeds dimension {a.chart.dim}")
    acc: dict = {}
    for ia, ca in a.terms.items():
        sa = set(ia)
        for ib, cb in b.terms.items():
            if sa.intersection(ib):
                continue
            idx, sign = _sort_sign(ia + ib)
            c = ca * cb
            if sign < 0:
                c = -c
            acc[idx] = acc[idx] + c if idx in acc else c
    return DiffForm(a.chart, k, acc)


def exterior_derivative(a: DiffForm) -> DiffForm:
    chart = a.chart
    if a.degree + 1 > chart.dim:
        raise DegreeOverflow(f"d of a {a.degree}-form on {chart} of dimension {chart.dim}")
    acc: dict = {}
    for idx, c in a.terms.items():
        present = set(idx)
        for name in sorted(free_vars(c), key=chart.index):
            j = chart.index(name)
            if j in present:
                continue
            dc = differentiate(c, name)
            if _is_zero(dc):
                continue
            new, sign = _sort_sign((j,) + idx)
            term = dc if sign > 0 else -dc
            acc[new] = acc[new] + term if new in acc else term
    return DiffForm(chart, a.degree + 1, acc)


d = exterior_derivative


def interior_product(v: VectorField, a: DiffForm) -> DiffForm:
    if v.chart != a.chart:
        raise ChartMismatch(f"vector on {v.chart}, form on {a.chart}")
    if a.degree == 0:
        raise ZeroDegree("interior product of a 0-form")
    acc: dict = {}
    for idx, c in a.terms.items():
        for pos, i in enumerate(idx):
            comp = v.components[i]
            if _is_zero(comp):
                continue
            rest = idx[:pos] + idx[pos + 1:]
            term = comp * c
            if pos % 2:
                term = -term
            acc[rest] = acc[rest] + term if rest in acc else term
    return DiffForm(a.chart, a.degree - 1, acc)


def dm1x(chart: Chart, mu: int) -> DiffForm:
    """d^{m-1}x_mu = i(d/dx^mu) d^m x."""
    return interior_product(coordinate_vector(chart, ch.xname(mu)), volume_form(chart))


def pullback(f: CoordMap, a: DiffForm) -> DiffForm:
    """Pull a form on ``f.target`` back to ``f.source``."""
    if a.chart != f.target:
        raise ChartMismatch(f"form lives on {a.chart}, map targets {f.target}")
    src = f.source
    if a.degree > src.dim:
        raise DegreeOverflow(f"cannot pull a {a.degree}-form back to {src}")
    subst = f.as_dict()
    diffs: dict = {}

    def dcomp(i: int) -> DiffForm:
        if i not in diffs:
            comp = f.components[i]
            terms = {}
            for name in free_vars(comp):
                dc = differentiate(comp, name)
                if not _is_zero(dc):
                    terms[(src.index(name),)] = dc
            diffs[i] = DiffForm(src, 1, terms)
        return diffs[i]

    result = zero_form(src, a.degree)
    for idx, c in a.terms.items():
        cs = substitute(c, subst)
        if _is_zero(cs):
            continue
        w = scalar(src, cs)
        for i in idx:
            w = wedge(w, dcomp(i))
            if w.is_zero():
                break
        result = result + w
    return result


def evaluate_form(a: DiffForm, at: Mapping[str, float], vectors: Sequence[Sequence[float]]) -> float:
    """Value of ``a`` at a point on a tuple of tangent vectors (chart components)."""
    if len(vectors) != a.degree:
        raise ValueError(f"a {a.degree}-form needs {a.degree} vectors, got {len(vectors)}")
    V = np.asarray(vectors, dtype=float).reshape(a.degree, a.chart.dim)
    total = 0.0
    for idx, c in a.terms.items():
        val = evaluate(c, at)
        if a.degree == 0:
            total += val
            continue
        sub = V[:, list(idx)]
        if a.degree == 1:
            det = sub[0, 0]
        elif a.degree == 2:
            det = sub[0, 0] * sub[1, 1] - sub[0, 1] * sub[1, 0]
        else:
            det = float(np.linalg.det(sub.T))
        total += val * det
    return total


# ---------------------------------------------------------------------------
# canonical forms of the multimomentum bundles


def _tautological_part(chart: Chart) -> DiffForm:
    """p^mu_A dy^A ^ d^{m-1}x_mu."""
    spec = chart.spec
    out = zero_form(chart, spec.m)
    for A, mu in spec.pairs:
        out = out + (dcoord(chart, ch.yname(A)) ^ dm1x(chart, mu)) * Var(ch.pname(A, mu))
    return out


def _energy_momentum(chart: Chart) -> Expr:
    if chart.kind == ch.MPI:
        return Var(ch.P0)
    return sum((Var(ch.Pname(nu, nu)) for nu in range(1, chart.spec.m + 1)), const(0))


def canonical_form(space: str, which: str, spec: ch.BundleSpec) -> DiffForm:
    """Liouville m-form (``theta``) or its negative differential (``omega``)."""
    if space not in (ch.MPI, ch.J1ESTAR):
        raise ValueError(f"canonical forms live on Mpi or J1Estar, not {space!r}")
    chart = ch.make_chart(space, spec)
    theta = volume_form(chart) * _energy_momentum(chart) + _tautological_part(chart)
    if which == "theta":
        return theta
    if which == "omega":
        return -exterior_derivative(theta)
    raise ValueError(f"which must be 'theta' or 'omega', not {which!r}")


def expanded_canonical_omega(space: str, spec: ch.BundleSpec) -> DiffForm:
    """-dp ^ d^m x - dp^mu_A ^ dy^A ^ d^{m-1}x_mu written out term by term."""
    chart = ch.make_chart(space, spec)
    if space == ch.MPI:
        dp = dcoord(chart, ch.P0)
    else:
        dp = zero_form(chart, 1)
        for nu in range(1, spec.m + 1):
            dp = dp + dcoord(chart, ch.Pname(nu, nu))
    out = -(dp ^ volume_form(chart))
    for A, mu in spec.pairs:
        out = out - (dcoord(chart, ch.pname(A, mu)) ^ dcoord(chart, ch.yname(A)) ^ dm1x(chart, mu))
    return out


# ---------------------------------------------------------------------------
# comparing forms


def compare_forms(name: str, a: DiffForm, b: DiffForm, mode: str = "symbolic",
                  samples: int = 200, tol: float = 1e-9, seed: int = 0,
                  ranges=None) -> IdentityResult:
    """Decide a == b term by term (``symbolic``) or by pointwise evaluation (``numeric``).

    Symbolic mode proves each coefficient by normal form and falls back to
    sampling per coefficient; numeric mode evaluates both forms at random
    points on random vector tuples.
    """
    a._check_same(b)
    if a.degree != b.degree and not (a.is_zero() and b.is_zero()):
        return IdentityResult(name, FAILED, "symbolic", witness={},
                              detail=f"degrees {a.degree} and {b.degree} differ")
    if mode == "symbolic":
        checks = {}
        for idx in sorted(set(a.terms) | set(b.terms)):
            label = "^".join(f"d{a.chart.coords[i]}" for i in idx) or "1"
            checks[label] = equivalence_check(
                a.terms.get(idx, const(0)), b.terms.get(idx, const(0)),
                samples=samples, tol=tol, seed=seed, ranges=ranges,
            )
            if not checks[label].equal:
                break
        return combine(name, checks, samples, seed, tol)
    if mode != "numeric":
        raise ValueError(f"mode must be 'symbolic' or 'numeric', not {mode!r}")
    return _compare_numeric(name, a, b, samples, tol, seed, ranges)


def _compare_numeric(name, a, b, samples, tol, seed, ranges):
    chart = a.chart
    cfg = SampleConfig(count=samples, seed=seed, ranges=dict(ranges or {}))
    rng = make_rng(seed + 1)
    worst = 0.0
    used = 0
    for point in sample_points(chart, cfg):
        vecs = rng.uniform(-1.0, 1.0, size=(a.degree, chart.dim))
        try:
            va = evaluate_form(a, point, vecs)
            vb = evaluate_form(b, point, vecs)
        except DomainError:
            continue
        used += 1
        delta = abs(va - vb)
        worst = max(worst, delta)
        if not delta <= tol * (1.0 + max(abs(va), abs(vb))):
            return IdentityResult(name, FAILED, "numeric", max_residual=delta, witness=point,
                                  samples=samples, seed=seed, tol=tol,
                                  extra={"vectors": vecs.tolist()})
    if used == 0:
        raise DomainError(f"{name}: no sample point was inside the domain")
    return IdentityResult(name, NUMERIC, "numeric", max_residual=worst,
                          samples=used, seed=seed, tol=tol)
