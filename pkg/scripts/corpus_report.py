"""Run the Legendre-map checks over the built-in Lagrangian corpus and print a table.

    python scripts/corpus_report.py [--samples 200] [--seed 0] [--json out.json]
"""

import argparse
import json
import time
from dataclasses import asdict, dataclass

from jetcalc.corpus import lagrangian_corpus
from jetcalc.lagrangian import classify_regularity
from jetcalc.legendre import verify_diagram, verify_pullbacks


@dataclass
class Config:
    samples: int = 200
    seed: int = 0
    tol: float = 1e-9


def survey(cfg: Config):
    rows = []
    for entry in lagrangian_corpus():
        sys = entry.system()
        t0 = time.perf_counter()
        mode = "symbolic" if entry.polynomial else "numeric"
        pull = verify_pullbacks(sys, mode=mode, samples=cfg.samples, tol=cfg.tol, seed=cfg.seed)
        diag = verify_diagram(sys, samples=cfg.samples, tol=cfg.tol, seed=cfg.seed)
        reg = classify_regularity(sys, samples=cfg.samples, seed=cfg.seed)
        rows.append({
            "name": entry.name, "m": entry.m, "N": entry.N, "L": entry.L,
            "pullbacks": sorted(set(pull.statuses.values())),
            "diagram": sorted(set(diag.statuses.values())),
            "regularity": reg.classification,
            "qualifier": reg.qualifier,
            "seconds": round(time.perf_counter() - t0, 3),
        })
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=Config.samples)
    ap.add_argument("--seed", type=int, default=Config.seed)
    ap.add_argument("--json", metavar="PATH")
    args = ap.parse_args()
    cfg = Config(samples=args.samples, seed=args.seed)
    rows = survey(cfg)
    print(f"{'name':<20} {'m':>2} {'N':>2}  {'pullbacks':<20} {'diagram':<20} {'regularity':<26} time")
    for r in rows:
        print(f"{r['name']:<20} {r['m']:>2} {r['N']:>2}  {','.join(r['pullbacks']):<20} "
              f"{','.join(r['diagram']):<20} {r['regularity']:<26} {r['seconds']:.2f}s")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"config": asdict(cfg), "rows": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
