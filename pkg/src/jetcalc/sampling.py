"""Seeded, reproducible sample points on a chart."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from jetcalc._rng import PRNG_ID, make_rng

DEFAULT_RANGE = (-2.0, 2.0)


@dataclass(frozen=True)
class SampleConfig:
    """``count`` uniform points from ``seed``, followed by the forced ``probes``.

    ``ranges`` overrides the default [-2, 2] per coordinate name.  Probes are
    partial assignments; coordinates they omit are set to 0.
    """

    count: int = 200
    seed: int = 0
    ranges: Mapping[str, tuple] = field(default_factory=dict)
    probes: Sequence[Mapping[str, float]] = ()
    default_range: tuple = DEFAULT_RANGE

    def __post_init__(self):
        if self.count < 0 or (self.count == 0 and not self.probes):
            raise ValueError("need count >= 1, or count == 0 with forced probes")
        for name, (lo, hi) in {**self.ranges, "<default>": self.default_range}.items():
            if not lo < hi:
                raise ValueError(f"empty range [{lo}, {hi}] for {name}")

    def range_for(self, name: str) -> tuple:
        return tuple(self.ranges.get(name, self.default_range))

    @property
    def prng(self) -> str:
        return PRNG_ID


def sample_points(chart, cfg: SampleConfig) -> list[dict]:
    """Deterministic point list: the random draws first, forced probes last."""
    names = chart.coords if hasattr(chart, "coords") else tuple(chart)
    rng = make_rng(cfg.seed)
    points = []
    if cfg.count:
        u = rng.random((cfg.count, len(names)))
        lo = [cfg.range_for(n)[0] for n in names]
        hi = [cfg.range_for(n)[1] for n in names]
        for row in u:
            points.append({n: float(l + (h - l) * r) for n, l, h, r in zip(names, lo, hi, row)})
    for probe in cfg.probes:
        unknown = set(probe) - set(names)
        if unknown:
            raise ValueError(f"probe uses unknown coordinates {sorted(unknown)}")
        points.append({n: float(probe.get(n, 0.0)) for n in names})
    return points
