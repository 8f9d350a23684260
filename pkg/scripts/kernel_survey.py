"""Compare Hessian rank with the kernel of Omega_L pointwise.

For each Lagrangian the script samples J1E and reports, per point, the
Hessian rank, the full kernel dimension of v -> i(v)Omega_L and the
dimension of its vertical part (dx-components zero).  On a one-dimensional
base the full kernel never vanishes, so only the vertical count tracks
regularity there.

    python scripts/kernel_survey.py [--points 200] [--seed 0]
"""

import argparse
from collections import Counter
from dataclasses import dataclass

from jetcalc.charts import BundleSpec
from jetcalc.lagrangian import hessian, load_system, poincare_cartan
from jetcalc.numeric import (
    SampleConfig,
    evaluate_matrix,
    nondegeneracy_check,
    rank_of,
    restricted_kernel,
    sample_points,
)

CASES = [
    ("particle", 1, 1, "1/2*v1_1^2 - y1^2"),
    ("degenerate-cubic", 1, 1, "1/2*y1*v1_1^2"),
    ("degenerate-cubic", 2, 1, "1/2*y1*v1_1^2"),
    ("klein-gordon", 2, 1, "1/2*v1_1^2 - 1/2*v1_2^2 - 1/2*y1^2"),
    ("affine", 2, 1, "y1*v1_1"),
    ("rank-one", 2, 1, "1/2*(v1_1 + v1_2)^2"),
    ("coupled", 2, 2, "1/2*(v1_1^2 + v1_2^2 + v2_1^2 + v2_2^2) + v1_1*v2_2/4 - y1*y2"),
]


@dataclass
class Config:
    points: int = 200
    seed: int = 0


def survey_one(m, N, L, cfg):
    sys = load_system(BundleSpec(m, N), L)
    H = hessian(sys)
    omega = poincare_cartan(sys, "omega_L")
    probes = [{}, {"y1": 0.0}]
    counts = Counter()
    n = m * N
    for pt in sample_points(sys.chart, SampleConfig(count=cfg.points, seed=cfg.seed, probes=probes)):
        r = rank_of(evaluate_matrix(H, pt))
        full = nondegeneracy_check(omega, pt).kernel_dim
        vert = restricted_kernel(omega, pt, sys.chart.base_coords).kernel_dim
        counts[(r == n, full, vert)] += 1
    return counts


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=Config.points)
    ap.add_argument("--seed", type=int, default=Config.seed)
    args = ap.parse_args()
    cfg = Config(args.points, args.seed)
    print(f"{'case':<18} {'m':>2} {'N':>2}  {'hessian full rank':<18} {'kernel':>6} {'vertical':>8} {'points':>7}")
    for name, m, N, L in CASES:
        for (full_rank, k, v), c in sorted(survey_one(m, N, L, cfg).items()):
            print(f"{name:<18} {m:>2} {N:>2}  {str(full_rank):<18} {k:>6} {v:>8} {c:>7}")


if __name__ == "__main__":
    main()
