"""Natural charts of the configuration, jet and multimomentum bundles.

Coordinate naming (part of the public contract)::

    x{mu}        base coordinates              mu = 1..m
    y{A}         fiber coordinates             A  = 1..N
    v{A}_{mu}    jet (velocity) coordinates
    p{A}_{mu}    multimomenta p^mu_A
    P{mu}_{nu}   extra momenta p^mu_nu of J1E*
    p0           the extra momentum p of Mpi

Velocity and momentum pairs (A, mu) are flattened lexicographically, A outer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from jetcalc.errors import CapExceeded, ChartMismatch
from jetcalc.expr import Expr, Var, const, equivalence_check, free_vars, normalize, substitute

DEFAULT_CAP = 6

E = "E"
J1E = "J1E"
J1ESTAR = "J1Estar"
PI = "Pi"
MPI = "Mpi"
J1PISTAR = "J1piStar"
KINDS = (E, J1E, J1ESTAR, PI, MPI, J1PISTAR)


@dataclass(frozen=True)
class BundleSpec:
    m: int
    N: int
    cap: int = field(default=DEFAULT_CAP, compare=False)

    def __post_init__(self):
        if self.m < 1 or self.N < 1:
            raise ValueError(f"need m >= 1 and N >= 1, got m={self.m}, N={self.N}")
        if self.m > self.cap or self.N > self.cap:
            raise CapExceeded(f"m={self.m}, N={self.N} exceed cap {self.cap}")

    @property
    def pairs(self) -> list[tuple[int, int]]:
        """(A, mu) index pairs in flattening order."""
        return [(A, mu) for A in range(1, self.N + 1) for mu in range(1, self.m + 1)]


def xname(mu: int) -> str:
    return f"x{mu}"


def yname(A: int) -> str:
    return f"y{A}"


def vname(A: int, mu: int) -> str:
    return f"v{A}_{mu}"


def pname(A: int, mu: int) -> str:
    return f"p{A}_{mu}"


def Pname(mu: int, nu: int) -> str:
    return f"P{mu}_{nu}"


P0 = "p0"


@dataclass(frozen=True)
class Chart:
    kind: str
    spec: BundleSpec
    coords: tuple[str, ...]

    @property
    def dim(self) -> int:
        return len(self.coords)

    def index(self, name: str) -> int:
        return self._index[name]

    @property
    def _index(self) -> dict:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {c: i for i, c in enumerate(self.coords)}
            object.__setattr__(self, "_idx", idx)
        return idx

    def __contains__(self, name) -> bool:
        return name in self._index

    def var(self, name: str) -> Var:
        if name not in self:
            raise KeyError(f"{name!r} is not a coordinate of {self.kind}")
        return Var(name)

    @property
    def base_coords(self) -> tuple[str, ...]:
        return tuple(xname(mu) for mu in range(1, self.spec.m + 1))

    @property
    def fiber_coords(self) -> tuple[str, ...]:
        return tuple(yname(A) for A in range(1, self.spec.N + 1))

    def __str__(self):
        return f"{self.kind}(m={self.spec.m}, N={self.spec.N})"


def make_chart(kind: str, spec: BundleSpec) -> Chart:
    if kind not in KINDS:
        raise ValueError(f"unknown chart kind {kind!r}; expected one of {KINDS}")
    m, N = spec.m, spec.N
    names = [xname(mu) for mu in range(1, m + 1)] + [yname(A) for A in range(1, N + 1)]
    if kind == J1E:
        names += [vname(A, mu) for A, mu in spec.pairs]
    elif kind == J1ESTAR:
        names += [Pname(mu, nu) for mu in range(1, m + 1) for nu in range(1, m + 1)]
        names += [pname(A, mu) for A, mu in spec.pairs]
    elif kind == MPI:
        names += [P0] + [pname(A, mu) for A, mu in spec.pairs]
    elif kind in (PI, J1PISTAR):
        names += [pname(A, mu) for A, mu in spec.pairs]
    return Chart(kind, spec, tuple(names))


def all_coordinate_names(spec: BundleSpec) -> set:
    """Union of the coordinate names of the six charts."""
    names = set()
    for kind in KINDS:
        names |= set(make_chart(kind, spec).coords)
    return names


@dataclass(frozen=True)
class CoordMap:
    """A map between charts given by one source-coordinate expression per target coordinate."""

    source: Chart
    target: Chart
    components: tuple[Expr, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        comps = tuple(normalize(const(c) if not isinstance(c, Expr) else c)
                      for c in self.components)
        object.__setattr__(self, "components", comps)
        if len(comps) != self.target.dim:
            raise ChartMismatch(
                f"{self.name or 'map'}: {len(comps)} components for {self.target.dim} target coordinates"
            )
        allowed = set(self.source.coords)
        for tname, c in zip(self.target.coords, comps):
            stray = free_vars(c) - allowed
            if stray:
                raise ChartMismatch(
                    f"{self.name or 'map'}: component {tname} uses {sorted(stray)} outside {self.source}"
                )

    @classmethod
    def from_dict(cls, source: Chart, target: Chart, comps: Mapping[str, object], name=""):
        missing = set(target.coords) - comps.keys()
        extra = comps.keys() - set(target.coords)
        if missing or extra:
            raise ChartMismatch(f"{name}: missing {sorted(missing)}, extra {sorted(extra)}")
        return cls(source, target, tuple(comps[c] for c in target.coords), name)

    def __getitem__(self, target_coord: str) -> Expr:
        return self.components[self.target.index(target_coord)]

    def as_dict(self) -> dict[str, Expr]:
        return dict(zip(self.target.coords, self.components))

    def __str__(self):
        lines = [f"{self.name or 'map'}: {self.source} -> {self.target}"]
        lines += [f"  {t} = {c}" for t, c in zip(self.target.coords, self.components)]
        return "\n".join(lines)


def identity_map(chart: Chart) -> CoordMap:
    return CoordMap(chart, chart, tuple(Var(c) for c in chart.coords), name="id")


def compose(f: CoordMap, g: CoordMap) -> CoordMap:
    """f after g."""
    if g.target != f.source:
        raise ChartMismatch(f"cannot compose: target {g.target} != source {f.source}")
    subst = g.as_dict()
    comps = tuple(substitute(c, subst) for c in f.components)
    name = f"{f.name}∘{g.name}" if f.name and g.name else ""
    return CoordMap(g.source, f.target, comps, name)


CANONICAL_MAPS = ("mu", "delta", "iota", "iota0", "psi", "psi_inv")


def _passthrough(source: Chart, target: Chart, name: str, **overrides) -> CoordMap:
    comps = {}
    for c in target.coords:
        comps[c] = overrides[c] if c in overrides else Var(c)
    return CoordMap.from_dict(source, target, comps, name)


def canonical_map(kind: str, spec: BundleSpec) -> CoordMap:
    """Lagrangian-independent maps between the multimomentum bundles.

    mu: Mpi -> J1piStar forgets p0.  delta: J1Estar -> Pi forgets the P
    block.  iota, iota0: J1Estar -> Mpi contract, p0 = sum_mu P{mu}_{mu}.
    psi, psi_inv: identity in coordinates between J1piStar and Pi.
    """
    if kind == "mu":
        return _passthrough(make_chart(MPI, spec), make_chart(J1PISTAR, spec), "mu")
    if kind == "delta":
        return _passthrough(make_chart(J1ESTAR, spec), make_chart(PI, spec), "delta")
    if kind in ("iota", "iota0"):
        trace = sum((Var(Pname(mu, mu)) for mu in range(1, spec.m + 1)), const(0))
        return _passthrough(make_chart(J1ESTAR, spec), make_chart(MPI, spec), kind, p0=trace)
    if kind == "psi":
        return _passthrough(make_chart(J1PISTAR, spec), make_chart(PI, spec), "psi")
    if kind == "psi_inv":
        return _passthrough(make_chart(PI, spec), make_chart(J1PISTAR, spec), "psi_inv")
    raise ValueError(f"unknown canonical map {kind!r}; expected one of {CANONICAL_MAPS}")


def maps_equal(f: CoordMap, g: CoordMap, **check_kw):
    """Component-wise equivalence of two maps with identical charts."""
    if f.source != g.source or f.target != g.target:
        raise ChartMismatch(f"{f.name} and {g.name} live on different charts")
    return {
        t: equivalence_check(a, b, **check_kw)
        for t, a, b in zip(f.target.coords, f.components, g.components)
    }


@dataclass(frozen=True)
class DimensionTable:
    spec: BundleSpec
    dims: dict
    relations: tuple

    @property
    def passed(self) -> bool:
        return all(ok for _, _, _, ok in self.relations)

    def to_dict(self) -> dict:
        return {
            "m": self.spec.m,
            "N": self.spec.N,
            "dims": dict(self.dims),
            "relations": [
                {"relation": r, "lhs": lhs, "rhs": rhs, "pass": ok}
                for r, lhs, rhs, ok in self.relations
            ],
            "pass": self.passed,
        }

    def __str__(self):
        rows = [f"bundle m={self.spec.m} N={self.spec.N}"]
        rows += [f"  dim {k:<9}= {v}" for k, v in self.dims.items()]
        rows += [f"  [{'pass' if ok else 'FAIL'}] {r}: {lhs} = {rhs}"
                 for r, lhs, rhs, ok in self.relations]
        return "\n".join(rows)


def dimension_table(spec: BundleSpec) -> DimensionTable:
    dims = {k: make_chart(k, spec).dim for k in KINDS}
    base = dims[E]
    m = spec.m
    rel = [
        ("dim Mpi = dim J1E + 1", dims[MPI], dims[J1E] + 1),
        ("dim J1Estar = dim J1E + m^2", dims[J1ESTAR], dims[J1E] + m * m),
        ("dim Pi = dim J1piStar = dim J1E", (dims[PI], dims[J1PISTAR]), (dims[J1E], dims[J1E])),
        ("dim Mpi_y = dim Pi_y + 1 (fibers over E)", dims[MPI] - base, dims[PI] - base + 1),
    ]
    return DimensionTable(spec, dims, tuple((r, a, b, a == b) for r, a, b in rel))
