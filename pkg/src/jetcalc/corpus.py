"""Seeded generators for the test corpus: random polynomials, forms, maps,
sections, plus a fixed list of named Lagrangians."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

from jetcalc import charts as ch
from jetcalc._rng import make_rng
from jetcalc.charts import BundleSpec, Chart, CoordMap
from jetcalc.expr import Expr, Var, const
from jetcalc.forms import DiffForm
from jetcalc.lagrangian import LagrangianSystem, load_system


@dataclass(frozen=True)
class PolyConfig:
    max_terms: int = 3
    max_degree: int = 2
    coeff_range: int = 3


def random_poly(rng, names: Sequence[str], cfg: PolyConfig = PolyConfig()) -> Expr:
    """Sparse polynomial with small nonzero integer coefficients."""
    out = const(0)
    for _ in range(int(rng.integers(1, cfg.max_terms + 1))):
        c = 0
        while c == 0:
            c = int(rng.integers(-cfg.coeff_range, cfg.coeff_range + 1))
        term = const(c)
        for _ in range(int(rng.integers(0, cfg.max_degree + 1))):
            term = term * Var(names[int(rng.integers(len(names)))])
        out = out + term
    return out


def random_form(rng, chart: Chart, degree: int, cfg: PolyConfig = PolyConfig(),
                max_monomials: int = 2) -> DiffForm:
    if degree > chart.dim:
        return DiffForm(chart, degree, {})
    combos = list(itertools.combinations(range(chart.dim), degree))
    k = min(len(combos), int(rng.integers(1, max_monomials + 1)))
    picks = rng.choice(len(combos), size=k, replace=False)
    return DiffForm(chart, degree, {combos[int(i)]: random_poly(rng, chart.coords, cfg) for i in picks})


def random_map(rng, source: Chart, target: Chart, cfg: PolyConfig = PolyConfig(max_terms=2)) -> CoordMap:
    comps = {n: random_poly(rng, source.coords, cfg) for n in target.coords}
    return CoordMap.from_dict(source, target, comps, name="random")


def random_section(rng, space: str, spec: BundleSpec, cfg: PolyConfig = PolyConfig()) -> CoordMap:
    """Section of ``space`` over E: identity on (x, y), random momenta."""
    E = ch.make_chart(ch.E, spec)
    target = ch.make_chart(space, spec)
    comps: dict = {n: Var(n) for n in E.coords}
    for n in target.coords:
        if n not in comps:
            comps[n] = random_poly(rng, E.coords, cfg)
    return CoordMap.from_dict(E, target, comps, name=f"section of {space}")


def forms_corpus(spec: BundleSpec, count: int, seed: int = 0, kind: str = ch.E):
    """``count`` triples (a, b, f) with a, b forms on ``kind`` and f: kind -> kind.

    deg a <= dim - 2 so that d(d a) is defined; deg a + deg b <= dim.
    """
    rng = make_rng(seed)
    chart = ch.make_chart(kind, spec)
    for _ in range(count):
        p = int(rng.integers(0, min(chart.dim - 2, 3) + 1))
        q = int(rng.integers(0, min(chart.dim - p, 2) + 1))
        yield random_form(rng, chart, p), random_form(rng, chart, q), random_map(rng, chart, chart)


# ---------------------------------------------------------------------------
# named Lagrangians


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    m: int
    N: int
    L: str
    polynomial: bool = True

    def system(self) -> LagrangianSystem:
        return load_system(BundleSpec(self.m, self.N), self.L, self.name)


KLEIN_GORDON = "1/2*v1_1^2 - 1/2*v1_2^2 - 1/2*y1^2"

POLYNOMIAL_LAGRANGIANS = (
    CorpusEntry("klein-gordon", 2, 1, KLEIN_GORDON),
    CorpusEntry("zero", 2, 1, "0"),
    CorpusEntry("affine", 2, 1, "y1*v1_1"),
    CorpusEntry("coupled-quadratic", 2, 2,
                "1/2*(v1_1^2 + v1_2^2 + v2_1^2 + v2_2^2) + v1_1*v2_2 / 4 - y1*y2"),
    CorpusEntry("particle", 1, 1, "1/2*v1_1^2 - y1^2"),
    CorpusEntry("degenerate-cubic", 1, 1, "1/2*y1*v1_1^2"),
    CorpusEntry("two-particles", 1, 2, "1/2*v1_1^2 + 1/2*v2_1^2 - y1*y2^2 + x1*y1"),
    CorpusEntry("quartic", 2, 1, "v1_1^4/4 + v1_2^2 + x1*y1*v1_2"),
    CorpusEntry("source-coupled", 3, 1, "1/2*(v1_1^2 - v1_2^2 - v1_3^2) + x1*x2*y1 - y1^3/3"),
    CorpusEntry("null-lagrangian", 2, 2, "v1_1*v2_2 - v1_2*v2_1"),
    CorpusEntry("mixed", 2, 2, "y1*v2_1^2 + x2*v1_1*v1_2 - y2^2*v2_2"),
    CorpusEntry("wave-3d", 3, 2,
                "1/2*(v1_1^2 - v1_2^2 - v1_3^2) + 1/2*(v2_1^2 - v2_2^2 - v2_3^2) - y1*y2"),
)

TRANSCENDENTAL_LAGRANGIANS = (
    CorpusEntry("sine", 1, 1, "sin(v1_1)", polynomial=False),
    CorpusEntry("sine-gordon", 2, 1, "1/2*v1_1^2 - 1/2*v1_2^2 + cos(y1)", polynomial=False),
    CorpusEntry("exp-coupling", 2, 1, "exp(y1)*v1_1^2 + v1_2*sin(x1)", polynomial=False),
    CorpusEntry("born-infeld-like", 2, 1, "sqrt(1 + v1_1^2 + v1_2^2)", polynomial=False),
)

STRICTLY_CONVEX_N2 = CorpusEntry(
    "convex-quadratic", 2, 2,
    "v1_1^2 + 1/2*v1_2^2 + v2_1^2 + v2_2^2 + 1/2*v1_1*v2_1 + y1*v1_2 - x1*y2*v2_2 + y1^2",
)


def lagrangian_corpus(include_transcendental: bool = True) -> tuple:
    if include_transcendental:
        return POLYNOMIAL_LAGRANGIANS + TRANSCENDENTAL_LAGRANGIANS
    return POLYNOMIAL_LAGRANGIANS
