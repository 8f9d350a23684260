"""Batch driver: ``jetcalc <check|legendre|invert|dims> [file] [options]``.

Exit status is 0 when every check passes, 1 when a check fails and 2 on
malformed input.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from jetcalc import __version__
from jetcalc import charts as ch
from jetcalc._rng import PRNG_ID, make_rng
from jetcalc.charts import BundleSpec, canonical_map, compose, dimension_table, identity_map, maps_equal
from jetcalc.corpus import random_section
from jetcalc.errors import ExprSyntaxError, JetcalcError, NoConvergence, SingularHessian, UnknownIdentifier
from jetcalc.forms import canonical_form, compare_forms, expanded_canonical_omega
from jetcalc.lagrangian import LagrangianSystem, classify_regularity, load_system
from jetcalc.legendre import (
    LegendreKind,
    all_legendre_maps,
    legendre_map,
    newton_solve,
    verify_diagram,
    verify_pullbacks,
    verify_tautology,
)
from jetcalc.numeric import nondegeneracy_check
from jetcalc.expr import evaluate
from jetcalc.sampling import SampleConfig, sample_points
from jetcalc.verdicts import FAILED, NUMERIC, PROVED, combine

CHECKS = ("dimensions", "canonical_forms", "pullbacks", "diagram", "tautology", "regularity", "inversion")

SCHEMA = {
    "bundle": {"base_dim": int, "fiber_dim": int},
    "lagrangian": {"L": str, "name": str},
    "checks": {
        **{c: bool for c in CHECKS},
        "require_regular": bool,
        "samples": int,
        "seed": int,
        "tol": float,
        "range": list,
        "sections": int,
        "round_trip_points": int,
    },
}


class InputError(Exception):
    """Bad spec file or arguments; reported with exit status 2."""


@dataclass
class RunSpec:
    bundle: BundleSpec
    L: str = "0"
    name: str = ""
    checks: dict = field(default_factory=lambda: {c: True for c in CHECKS})
    require_regular: bool = False
    samples: int = 200
    seed: int = 0
    tol: float = 1e-9
    range: tuple = (-2.0, 2.0)
    sections: int = 5
    round_trip_points: int = 20
    invert: Optional[dict] = None
    guess: Optional[dict] = None
    max_iter: int = 50
    path: str = ""
    L_line: Optional[int] = None

    def echo(self) -> dict:
        d = {
            "file": self.path,
            "bundle": {"base_dim": self.bundle.m, "fiber_dim": self.bundle.N},
            "lagrangian": {"L": self.L, "name": self.name},
            "checks": {c: self.checks[c] for c in CHECKS},
            "require_regular": self.require_regular,
            "samples": self.samples,
            "seed": self.seed,
            "tol": self.tol,
            "range": list(self.range),
            "sections": self.sections,
            "round_trip_points": self.round_trip_points,
        }
        if self.invert is not None:
            d["invert"] = {"target": self.invert, "guess": self.guess, "max_iter": self.max_iter}
        return d


# ---------------------------------------------------------------------------
# spec file


def _typed(section: str, key: str, value, kind):
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, bool) or not isinstance(value, kind):
        raise InputError(f"[{section}] {key}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def _line_of(text: str, section: str, key: str) -> Optional[int]:
    current = None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        head = re.match(r"^\[([^\]]+)\]", s)
        if head:
            current = head.group(1).strip()
        elif current == section and re.match(rf"^{re.escape(key)}\s*=", s):
            return n
    return None


def parse_spec_text(text: str, path: str = "<spec>") -> RunSpec:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"{path}: {exc}") from None
    unknown = set(raw) - set(SCHEMA) - {"invert"}
    if unknown:
        raise InputError(f"{path}: unknown section(s) {sorted(unknown)}")
    vals: dict = {}
    for section, keys in SCHEMA.items():
        body = raw.get(section, {})
        if not isinstance(body, dict):
            raise InputError(f"{path}: [{section}] must be a table")
        bad = set(body) - set(keys)
        if bad:
            line = _line_of(text, section, sorted(bad)[0])
            where = f"{path}:{line}" if line else path
            raise InputError(f"{where}: unknown key(s) {sorted(bad)} in [{section}]")
        for k, v in body.items():
            vals[(section, k)] = _typed(section, k, v, keys[k])
    if ("bundle", "base_dim") not in vals or ("bundle", "fiber_dim") not in vals:
        raise InputError(f"{path}: [bundle] needs base_dim and fiber_dim")
    try:
        bundle = BundleSpec(vals[("bundle", "base_dim")], vals[("bundle", "fiber_dim")])
    except (JetcalcError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None
    spec = RunSpec(bundle=bundle, path=path)
    spec.L = vals.get(("lagrangian", "L"), "0")
    spec.L_line = _line_of(text, "lagrangian", "L")
    spec.name = vals.get(("lagrangian", "name"), "")
    for c in CHECKS:
        spec.checks[c] = vals.get(("checks", c), True)
    for k in ("require_regular", "samples", "seed", "tol", "sections", "round_trip_points"):
        if ("checks", k) in vals:
            setattr(spec, k, vals[("checks", k)])
    if ("checks", "range") in vals:
        r = vals[("checks", "range")]
        if len(r) != 2 or not all(isinstance(x, (int, float)) for x in r) or not r[0] < r[1]:
            raise InputError(f"{path}: [checks] range must be [lo, hi] with lo < hi")
        spec.range = (float(r[0]), float(r[1]))
    if "invert" in raw:
        _parse_invert(raw["invert"], spec, text)
    return spec


def _parse_invert(body, spec: RunSpec, text: str):
    pi = ch.make_chart(ch.PI, spec.bundle)
    vnames = [ch.vname(A, mu) for A, mu in spec.bundle.pairs]
    target = {}
    for k, v in body.items():
        if k == "guess":
            if not isinstance(v, dict) or set(v) - set(vnames):
                raise InputError(f"{spec.path}: [invert] guess must map velocity names {vnames} to numbers")
            spec.guess = {n: float(v[n]) for n in sorted(v)}
        elif k == "max_iter":
            spec.max_iter = _typed("invert", k, v, int)
        elif k in pi:
            target[k] = _typed("invert", k, v, float)
        else:
            line = _line_of(text, "invert", k)
            where = f"{spec.path}:{line}" if line else spec.path
            raise InputError(f"{where}: unknown key {k!r} in [invert]; expected Pi coordinates {list(pi.coords)}")
    # omitted coordinates default to zero
    spec.invert = {n: target.get(n, 0.0) for n in pi.coords}


def load_spec(path: str) -> RunSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from None
    return parse_spec_text(text, path)


def build_system(spec: RunSpec) -> LagrangianSystem:
    try:
        return load_system(spec.bundle, spec.L, spec.name)
    except (ExprSyntaxError, UnknownIdentifier) as exc:
        where = f"{spec.path}:{spec.L_line}" if spec.L_line else spec.path
        pos = f" (position {exc.pos})" if isinstance(exc, UnknownIdentifier) and exc.pos >= 0 else ""
        raise InputError(f"{where}: in L = {spec.L!r}: {exc}{pos}") from None
    except JetcalcError as exc:
        raise InputError(f"{spec.path}: {exc}") from None


# ---------------------------------------------------------------------------
# checks


def _ranges(spec: RunSpec) -> dict:
    return {n: spec.range for n in sorted(ch.all_coordinate_names(spec.bundle))}


def _identity_entries(results) -> list:
    return [r.to_dict() for r in results]


def check_dimensions(spec: RunSpec, system):
    t = dimension_table(spec.bundle)
    return t.passed, t.to_dict()


def check_canonical_forms(spec: RunSpec, system):
    b = spec.bundle
    kw = dict(samples=spec.samples, tol=spec.tol, seed=spec.seed, ranges=_ranges(spec))
    results = []
    for space in (ch.MPI, ch.J1ESTAR):
        results.append(compare_forms(
            f"Omega on {space}: -d Theta = expanded formula",
            canonical_form(space, "omega", b), expanded_canonical_omega(space, b), **kw))
    pi = ch.make_chart(ch.PI, b)
    star = ch.make_chart(ch.J1PISTAR, b)
    psi, psi_inv = canonical_map("psi", b), canonical_map("psi_inv", b)
    mu, iota0, delta = canonical_map("mu", b), canonical_map("iota0", b), canonical_map("delta", b)
    for name, f, g in (
        ("psi o psi_inv = id", compose(psi, psi_inv), identity_map(pi)),
        ("psi_inv o psi = id", compose(psi_inv, psi), identity_map(star)),
        ("mu o iota0 = psi_inv o delta", compose(mu, iota0), compose(psi_inv, delta)),
    ):
        results.append(combine(name, maps_equal(f, g, **kw), spec.samples, spec.seed, spec.tol))
    omega = canonical_form(ch.MPI, "omega", b)
    cfg = SampleConfig(count=min(spec.samples, 100), seed=spec.seed, ranges=_ranges(spec), probes=[{}])
    kernels = [nondegeneracy_check(omega, p).kernel_dim for p in sample_points(omega.chart, cfg)]
    worst = max(kernels)
    bad_at = None if worst == 0 else sample_points(omega.chart, cfg)[kernels.index(worst)]
    nondeg = {
        "name": "Omega on Mpi is 1-nondegenerate",
        "status": "SampledNondegenerate" if worst == 0 else FAILED,
        "path": "numeric",
        "points": len(kernels),
        "max_kernel_dim": worst,
        "seed": spec.seed,
        "prng": PRNG_ID,
    }
    if bad_at is not None:
        nondeg["witness"] = bad_at
    ok = all(r.ok for r in results) and worst == 0
    return ok, {"identities": _identity_entries(results) + [nondeg]}


def check_pullbacks(spec: RunSpec, system):
    rep = verify_pullbacks(system, "symbolic", spec.samples, spec.tol, spec.seed, ranges=_ranges(spec))
    return rep.ok, {"identities": _identity_entries(rep.results)}


def check_diagram(spec: RunSpec, system):
    rep = verify_diagram(system, spec.samples, spec.tol, spec.seed, ranges=_ranges(spec))
    return rep.ok, {"identities": _identity_entries(rep.results)}


def check_tautology(spec: RunSpec, system):
    rng = make_rng(spec.seed)
    results = []
    for space in (ch.MPI, ch.J1ESTAR):
        for i in range(spec.sections):
            section = random_section(rng, space, spec.bundle)
            r = verify_tautology(space, section, spec.samples, spec.tol, spec.seed, ranges=_ranges(spec))
            res = r.results[0]
            results.append({**res.to_dict(), "name": f"{res.name} [random section {i}]"})
    return all(r["status"] != FAILED for r in results), {"sections_per_space": spec.sections,
                                                         "identities": results}


def check_regularity(spec: RunSpec, system):
    rep = classify_regularity(system, samples=spec.samples, seed=spec.seed, ranges=_ranges(spec))
    ok = not rep.discrepancies and (rep.is_regular or not spec.require_regular)
    body = rep.to_dict()
    body["require_regular"] = spec.require_regular
    return ok, body


def _invert_entry(system, target, guess, max_iter):
    try:
        res = newton_solve(system, target, guess, max_iter=max_iter)
    except (SingularHessian, NoConvergence) as exc:
        return False, {"status": FAILED, "error": type(exc).__name__, "detail": str(exc),
                       "witness": {k: exc.point[k] for k in sorted(exc.point)}}
    pv = sum(target[ch.pname(A, mu)] * res.point[ch.vname(A, mu)] for A, mu in system.spec.pairs)
    H = pv - evaluate(system.L, res.point)
    return True, {"status": "Converged", "point": {k: res.point[k] for k in sorted(res.point)},
                  "iterations": res.iterations, "residual": res.residual, "H": H}


def check_inversion(spec: RunSpec, system, regular: Optional[bool] = None):
    body: dict = {}
    ok = True
    if regular is None:
        regular = classify_regularity(system, samples=spec.samples, seed=spec.seed).is_regular
    if regular:
        red = legendre_map(system, LegendreKind.REDUCED)
        cfg = SampleConfig(count=spec.round_trip_points, seed=spec.seed, ranges=_ranges(spec))
        worst, failures = 0.0, []
        for point in sample_points(system.chart, cfg):
            target = {n: evaluate(red[n], point) for n in red.target.coords}
            good, entry = _invert_entry(system, target, None, spec.max_iter)
            if not good:
                failures.append({"start": point, **entry})
                continue
            err = max(abs(entry["point"][n] - point[n]) for n in point)
            worst = max(worst, err)
            if err > 1e-8:
                failures.append({"status": FAILED, "start": point, "witness": entry["point"], "error": err})
        ok = not failures
        body["round_trip"] = {"status": NUMERIC if ok else FAILED, "points": spec.round_trip_points,
                              "max_error": worst, "seed": spec.seed, "prng": PRNG_ID,
                              "failures": failures[:3]}
    else:
        body["round_trip"] = {"status": "Skipped", "detail": "Lagrangian is not regular"}
    if spec.invert is not None:
        good, entry = _invert_entry(system, spec.invert, spec.guess, spec.max_iter)
        body["target"] = {"target": spec.invert, **entry}
        ok = ok and good
    return ok, body


CHECK_FUNCS = {
    "dimensions": check_dimensions,
    "canonical_forms": check_canonical_forms,
    "pullbacks": check_pullbacks,
    "diagram": check_diagram,
    "tautology": check_tautology,
    "regularity": check_regularity,
    "inversion": check_inversion,
}


def run_checks(spec: RunSpec, timings: bool = True) -> dict:
    system = build_system(spec)
    sections = {}
    regular = None
    for name in CHECKS:
        if not spec.checks[name]:
            continue
        t0 = time.perf_counter()
        try:
            if name == "inversion":
                ok, body = check_inversion(spec, system, regular)
            else:
                ok, body = CHECK_FUNCS[name](spec, system)
        except JetcalcError as exc:
            # numerical trouble is a verdict, not a crash
            ok, body = False, {"error": type(exc).__name__, "detail": str(exc)}
        if name == "regularity" and "classification" in body:
            regular = body["classification"] == "Regular"
        sec = {"pass": ok, **body}
        if timings:
            sec["timing_s"] = round(time.perf_counter() - t0, 6)
        sections[name] = sec
    return {
        "artifact": "jetcalc",
        "version": __version__,
        "command": "check",
        "prng": PRNG_ID,
        "seed": spec.seed,
        "input": spec.echo(),
        "checks": sections,
        "pass": all(s["pass"] for s in sections.values()),
    }


# ---------------------------------------------------------------------------
# rendering


def _status_of(entry: dict) -> str:
    if "identities" in entry:
        statuses = {i["status"] for i in entry["identities"]}
        if FAILED in statuses:
            return FAILED
        return PROVED if statuses <= {PROVED} else "mixed: " + ", ".join(sorted(statuses))
    if "classification" in entry:
        return entry["classification"]
    if "round_trip" in entry:
        out = f"round trip {entry['round_trip']['status']}"
        if "target" in entry:
            out += f", target {entry['target']['status']}"
        return out
    if "error" in entry:
        return entry["error"]
    return "pass" if entry["pass"] else "FAIL"


def render_check_text(report: dict) -> str:
    spec = report["input"]
    lines = [
        f"jetcalc {report['version']}  check {spec['file']}",
        f"bundle m={spec['bundle']['base_dim']} N={spec['bundle']['fiber_dim']}  "
        f"L = {spec['lagrangian']['L']}",
        f"prng {report['prng']} seed {report['seed']} samples {spec['samples']} tol {spec['tol']}",
        "",
        f"{'check':<16} {'result':<6} {'detail':<48} time",
    ]
    for name, sec in report["checks"].items():
        t = f"{sec['timing_s']:.3f}s" if "timing_s" in sec else "-"
        lines.append(f"{name:<16} {'pass' if sec['pass'] else 'FAIL':<6} {_status_of(sec):<48} {t}")
    for name, sec in report["checks"].items():
        for ident in sec.get("identities", []):
            if ident["status"] == FAILED:
                lines.append(f"  FAILED {name}: {ident['name']} witness {ident.get('witness')}")
    lines.append("")
    lines.append("overall: " + ("PASS" if report["pass"] else "FAIL"))
    return "\n".join(lines)


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def cmd_check(args) -> int:
    spec = load_spec(args.file)
    _apply_overrides(spec, args)
    report = run_checks(spec, timings=not args.no_timings)
    text = dump_json(report) if args.json else render_check_text(report) + "\n"
    _emit(text, args.out)
    return 0 if report["pass"] else 1


def cmd_legendre(args) -> int:
    spec = load_spec(args.file)
    system = build_system(spec)
    maps = all_legendre_maps(system)
    doc = {
        "artifact": "jetcalc", "version": __version__, "command": "legendre",
        "input": spec.echo(),
        "maps": {
            k.value: {"target": maps[k].target.kind,
                      "components": {c: str(e) for c, e in zip(maps[k].target.coords, maps[k].components)}}
            for k in LegendreKind
        },
    }
    if args.json:
        _emit(dump_json(doc), args.out)
    else:
        lines = [f"L = {system.L}"]
        for kind, m in doc["maps"].items():
            lines.append(f"{kind}: J1E -> {m['target']}")
            lines += [f"  {c} = {e}" for c, e in m["components"].items()]
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_invert(args) -> int:
    spec = load_spec(args.file)
    if spec.invert is None:
        raise InputError(f"{spec.path}: the invert command needs an [invert] section")
    system = build_system(spec)
    good, entry = _invert_entry(system, spec.invert, spec.guess, spec.max_iter)
    doc = {"artifact": "jetcalc", "version": __version__, "command": "invert",
           "input": spec.echo(), "result": entry, "pass": good}
    if args.json:
        _emit(dump_json(doc), args.out)
    elif good:
        pt = ", ".join(f"{k}={v:.12g}" for k, v in entry["point"].items())
        _emit(f"converged in {entry['iterations']} iteration(s), residual {entry['residual']:.3e}\n"
              f"  point: {pt}\n  H = {entry['H']:.12g}\n", args.out)
    else:
        _emit(f"{entry['detail']}\n", args.out)
    return 0 if good else 1


def cmd_dims(args) -> int:
    if args.file:
        spec = load_spec(args.file).bundle
        if args.m is not None or args.N is not None:
            spec = BundleSpec(args.m or spec.m, args.N or spec.N)
    else:
        if args.m is None or args.N is None:
            raise InputError("dims needs a spec file or both --m and --N")
        try:
            spec = BundleSpec(args.m, args.N)
        except (JetcalcError, ValueError) as exc:
            raise InputError(str(exc)) from None
    table = dimension_table(spec)
    doc = {"artifact": "jetcalc", "version": __version__, "command": "dims", **table.to_dict()}
    _emit(dump_json(doc) if args.json else str(table) + "\n", args.out)
    return 0 if table.passed else 1


def _apply_overrides(spec: RunSpec, args):
    if args.samples is not None:
        if args.samples < 1:
            raise InputError("--samples must be >= 1")
        spec.samples = args.samples
    if args.seed is not None:
        spec.seed = args.seed
    if args.tol is not None:
        if not args.tol > 0:
            raise InputError("--tol must be positive")
        spec.tol = args.tol
    if args.m is not None or args.N is not None:
        raise InputError("--m/--N only apply to the dims command")


COMMANDS = {"check": cmd_check, "legendre": cmd_legendre, "invert": cmd_invert, "dims": cmd_dims}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="jetcalc", description="Multimomentum Legendre-map toolkit.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("file", nargs="?")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--no-timings", action="store_true", help="omit timings (byte-stable output)")
    p.add_argument("--m", type=int, help="base dimension (dims)")
    p.add_argument("--N", type=int, help="fiber dimension (dims)")
    return p


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command != "dims" and not args.file:
            raise InputError(f"{args.command} needs a spec file")
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"jetcalc: error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
