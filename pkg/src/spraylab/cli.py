"""Command-line front end.

    spraylab analyze      --preset anderson-thompson
    spraylab metrizable   --preset flat2 --finsler "sqrt(y1^2+y2^2)"
    spraylab involutivity --preset flat3 --n-points 10
    spraylab geodesics    --preset flat2 --x0 0,0 --y0 1,0 --compare "yang(0.5)"

Definitions come from --preset or a JSON file
{"dim": n, "G": [...], "F": "...", "theta": [...], "name": "..."}.
Reports are deterministic for a fixed (input, seed, tolerances): JSON with
stable key order, no timestamps.  Exit codes: 0 all requested checks
passed, 2 some check failed, 1 usage or input error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .evaluate import Point, ZeroVerdict, sample_points
from .expression import ExpressionError, parse
from .forms import semi_basic_one_form
from .geodesics import (
    integrate,
    ode_residual,
    projective_factor,
    trace_compare,
)
from .involutivity import run_cartan_suite
from .metrizability import (
    ConditionsNotMetError,
    check_conditions,
    euler_poincare,
    recover_finsler,
)
from .presets import SprayDefinition, get_preset
from .spray import classify, identity_suite, validate


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to status 2; we use 1
        raise UsageError(message)


def _point_dict(p: Point | None):
    if p is None:
        return None
    return {"x": list(p.x), "y": list(p.y)}


def _verdict_dict(v: ZeroVerdict) -> dict:
    return {
        "level": v.level,
        "zero": v.is_zero,
        "residual": v.residual,
        "value": v.value,
        "witness": _point_dict(v.witness),
        "skipped_samples": v.skipped,
    }


def _form_dict(form) -> dict:
    def axis(a: int) -> str:
        return f"dx{a + 1}" if a < form.n else f"dy{a - form.n + 1}"

    return {
        "degree": form.degree,
        "components": {
            "^".join(axis(a) for a in key): str(expr)
            for key, expr in sorted(form.coeffs.items())
        },
    }


def load_definition(args) -> SprayDefinition:
    if args.preset and args.input:
        raise UsageError("use either --preset or --input, not both")
    if args.preset:
        return get_preset(args.preset)
    if args.input:
        try:
            raw = json.loads(Path(args.input).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read {args.input}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.input} is not valid JSON: {exc}") from exc
        try:
            dim = int(raw["dim"])
            G = tuple(str(g) for g in raw["G"])
        except (KeyError, TypeError) as exc:
            raise UsageError(f"{args.input}: definitions need 'dim' and 'G'") from exc
        defn = SprayDefinition(
            name=str(raw.get("name", Path(args.input).stem)),
            dim=dim,
            G=G,
            F=raw.get("F"),
            theta=tuple(raw["theta"]) if raw.get("theta") else None,
        )
        if len(defn.G) != dim:
            raise UsageError(f"{args.input}: expected {dim} coefficients in G")
        return defn
    raise UsageError("a spray is required: --preset NAME or --input FILE")


def _digest(defn: SprayDefinition) -> str:
    canonical = json.dumps(defn.as_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _base_report(command: str, args, defn: SprayDefinition) -> dict:
    return {
        "tool": "spraylab",
        "version": __version__,
        "command": command,
        "input": defn.as_dict(),
        "input_digest": _digest(defn),
        "seed": args.seed,
        "samples": args.samples,
        "tol": args.tol,
    }


def _emit(report: dict, args, text_lines) -> None:
    if args.format == "json":
        payload = json.dumps(report, sort_keys=True, indent=2) + "\n"
    else:
        payload = "\n".join(text_lines(report)) + "\n"
    if args.out:
        Path(args.out).write_text(payload)
    else:
        sys.stdout.write(payload)


def _status_line(ok: bool, label: str) -> str:
    return f"[{'PASS' if ok else 'FAIL'}] {label}"


# ---------------------------------------------------------------------------
# analyze


def cmd_analyze(args) -> int:
    defn = load_definition(args)
    spray = defn.build()
    samples = sample_points(spray.n, args.samples, args.seed)

    validation = validate(spray, samples, args.tol)
    cls = classify(spray, samples, max(args.tol, 1e-8))
    identities = identity_suite(spray, samples, args.tol)

    passed = all(v.is_zero for v in validation) and all(
        v.is_zero for v in identities.values()
    )
    report = _base_report("analyze", args, defn)
    report["analyze"] = {
        "validation": [_verdict_dict(v) for v in validation],
        "classification": {
            "kind": cls.kind,
            "residual": cls.residual,
            "lambda_values": list(cls.lambda_values),
            "note": cls.note,
        },
        "identities": {k: _verdict_dict(v) for k, v in identities.items()},
    }
    report["passed"] = passed

    def text(rep):
        lines = [f"spraylab analyze: {defn.name} (n={defn.dim})"]
        for i, v in enumerate(validation):
            lines.append(_status_line(v.is_zero, f"2-homogeneity of G{i+1}: {v.describe()}"))
        lines.append(f"classification: {cls.kind}" + (f" ({cls.note})" if cls.note else ""))
        for k, v in identities.items():
            lines.append(_status_line(v.is_zero, f"{k}: {v.describe()}"))
        lines.append(_status_line(passed, "analyze"))
        return lines

    _emit(report, args, text)
    return 0 if passed else 2


# ---------------------------------------------------------------------------
# metrizable


def cmd_metrizable(args) -> int:
    defn = load_definition(args)
    spray = defn.build()
    samples = sample_points(spray.n, args.samples, args.seed)

    finsler = None
    theta = None
    candidate: dict = {}
    if args.finsler:
        finsler = parse(args.finsler, spray.n)
        candidate["F"] = args.finsler
    elif args.theta:
        comps = [s.strip() for s in args.theta.split(";")]
        if len(comps) != spray.n:
            raise UsageError(f"--theta needs {spray.n} ';'-separated components")
        theta = semi_basic_one_form(spray.n, [parse(s, spray.n) for s in comps])
        candidate["theta"] = comps
    elif defn.F:
        finsler = defn.finsler_expression()
        candidate["F"] = defn.F
    elif defn.theta:
        theta = semi_basic_one_form(spray.n, defn.theta_expressions())
        candidate["theta"] = list(defn.theta)
    else:
        raise UsageError("no candidate: supply --finsler EXPR or --theta 'c1;...;cn'")

    if finsler is not None:
        theta = euler_poincare(finsler, spray.n, samples, args.tol)
    rep = check_conditions(spray, theta=theta, samples=samples, tol=args.tol)

    recovery = None
    if rep.passed:
        rec = recover_finsler(spray, theta, samples, args.tol)
        recovery = {
            "F": str(rec.F),
            "P": str(rec.P),
            "geodesic_G": [str(g) for g in rec.geodesic_spray.G],
            "sf_annihilates_f": _verdict_dict(rec.sf_annihilates_f),
        }

    report = _base_report("metrizable", args, defn)
    report["metrizable"] = {
        "candidate": candidate,
        "conditions": {
            "lie_liouville": _verdict_dict(rep.lie_liouville),
            "d_j": _verdict_dict(rep.d_j),
            "d_h": _verdict_dict(rep.d_h),
            "positivity": {
                "status": rep.positivity.status,
                "minimum": rep.positivity.minimum,
                "witness": _point_dict(rep.positivity.witness),
            },
            "rank": {
                "expected": rep.rank.expected,
                "ranks": list(rep.rank.ranks),
                "passed": rep.rank.passed,
                "note": "rank checked pointwise on the seeded sample set; "
                        "on a connected region the rank condition extends "
                        "by continuity",
            },
            "obstruction": {
                "d_r_theta": _verdict_dict(rep.obstruction.d_r_verdict),
                "d_r_theta_form": _form_dict(rep.obstruction.d_r_theta),
                "bianchi": _verdict_dict(rep.obstruction.bianchi_verdict),
                "consistent": rep.obstruction.consistent,
            },
        },
        "recovery": recovery,
    }
    report["passed"] = rep.passed

    def text(r):
        lines = [f"spraylab metrizable: {defn.name} (n={defn.dim})"]
        lines += ["  " + line for line in rep.lines()]
        if recovery:
            lines.append(f"  recovered F = {recovery['F']}")
            lines.append(f"  recovered P = {recovery['P']}")
        lines.append(_status_line(rep.passed, "metrizable candidate"))
        return lines

    _emit(report, args, text)
    return 0 if rep.passed else 2


# ---------------------------------------------------------------------------
# involutivity


def cmd_involutivity(args) -> int:
    defn = load_definition(args)
    spray = defn.build()
    reports = run_cartan_suite(spray, args.n_points, args.seed)
    all_ok = all(r.involutive and r.matches_expected for r in reports)
    conditioned = all(r.well_conditioned for r in reports)

    report = _base_report("involutivity", args, defn)
    report["involutivity"] = {
        "n_points": args.n_points,
        "expected": {
            "dim_g1": reports[0].expected_g1,
            "dim_g2": reports[0].expected_g2,
            "prefix_dims": list(reports[0].expected_prefix),
        },
        "points": [
            {
                "point": _point_dict(r.point),
                "dim_g1": r.dim_g1,
                "dim_g2": r.dim_g2,
                "prefix_dims": list(r.prefix_dims),
                "cartan_sum": r.cartan_sum,
                "involutive": r.involutive,
                "matches_expected": r.matches_expected,
                "well_conditioned": r.well_conditioned,
            }
            for r in reports
        ],
        "all_points_match": all_ok,
        "well_conditioned": conditioned,
    }
    report["passed"] = all_ok

    def text(r):
        lines = [f"spraylab involutivity: {defn.name} (n={defn.dim}, "
                 f"{args.n_points} points)"]
        lines += ["  " + line for line in reports[0].lines()]
        lines.append(_status_line(all_ok, f"all {args.n_points} points match the "
                                  "universal dimension counts"))
        if not conditioned:
            lines.append("  warning: rank computation ill-conditioned at some point")
        return lines

    _emit(report, args, text)
    return 0 if all_ok else 2


# ---------------------------------------------------------------------------
# geodesics


def _parse_vector(text: str, n: int, flag: str) -> list:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"{flag} must be comma-separated numbers") from exc
    if len(vals) != n:
        raise UsageError(f"{flag} must have {n} components")
    return vals


def cmd_geodesics(args) -> int:
    defn = load_definition(args)
    spray = defn.build()
    n = spray.n
    x0 = _parse_vector(args.x0, n, "--x0")
    y0 = _parse_vector(args.y0, n, "--y0")

    trace = integrate(spray, x0, y0, args.T, args.steps)
    residual = ode_residual(trace, spray) if len(trace.t) >= 5 else None

    section: dict = {
        "x0": x0, "y0": y0, "T": args.T, "steps": args.steps,
        "trace": {
            "points": len(trace.t),
            "halted": trace.halted,
            "halt_reason": trace.halt_reason,
            "endpoint_x": [float(v) for v in trace.x[-1]],
            "endpoint_y": [float(v) for v in trace.y[-1]],
            "ode_residual": residual,
        },
    }
    passed = not trace.halted

    traces = [("trace", trace)]
    if args.compare:
        other_args = argparse.Namespace(preset=args.compare, input=None)
        try:
            other_defn = load_definition(other_args)
        except UsageError:
            other_defn = load_definition(argparse.Namespace(preset=None, input=args.compare))
        other = other_defn.build()
        if other.n != n:
            raise UsageError("cannot compare sprays of different dimensions")
        samples = sample_points(n, args.samples, args.seed)
        equivalence = projective_factor(spray, other, samples)
        other_trace = integrate(other, x0, y0, args.T, args.steps)
        distance = None
        if not (trace.halted or other_trace.halted):
            distance = trace_compare(trace, other_trace)
        section["compare"] = {
            "other": other_defn.as_dict(),
            "vertical_parallel": equivalence.vertical_parallel,
            "worst_defect": equivalence.worst_defect,
            "witness": _point_dict(equivalence.witness),
            "p_values": list(equivalence.p_values),
            "p_homogeneous": equivalence.p_homogeneous,
            "trace_distance": distance,
            "trace_tol": args.trace_tol,
        }
        passed = passed and equivalence.passed and (
            distance is not None and distance < args.trace_tol
        )
        traces.append(("trace2", other_trace))

    report = _base_report("geodesics", args, defn)
    report["geodesics"] = section
    report["passed"] = passed

    written = []
    if args.out:
        base = Path(args.out)
        for suffix, tr in traces:
            csv_path = base.with_suffix(f".{suffix}.csv")
            csv_path.write_text(tr.to_csv())
            written.append(str(csv_path))
            json_path = base.with_suffix(f".{suffix}.json")
            json_path.write_text(tr.to_json())
            written.append(str(json_path))
    section["trace_files"] = written

    def text(r):
        lines = [f"spraylab geodesics: {defn.name} (n={n})"]
        t = section["trace"]
        lines.append(f"  {t['points']} points, endpoint x = {t['endpoint_x']}")
        if trace.halted:
            lines.append(f"  halted: {trace.halt_reason}")
        if residual is not None:
            lines.append(f"  ode residual: {residual:.3e}")
        if "compare" in section:
            c = section["compare"]
            lines.append(_status_line(c["vertical_parallel"],
                                      "vertical difference parallel to y"))
            lines.append(_status_line(bool(c["p_homogeneous"]), "P is 1-homogeneous"))
            if c["trace_distance"] is not None:
                lines.append(_status_line(c["trace_distance"] < args.trace_tol,
                                          f"trace distance {c['trace_distance']:.3e}"))
        lines.append(_status_line(passed, "geodesics"))
        return lines

    _emit(report, args, text)
    return 0 if passed else 2


# ---------------------------------------------------------------------------
# driver


def build_parser() -> _Parser:
    parser = _Parser(prog="spraylab", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"spraylab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--input", help="JSON spray definition file")
        p.add_argument("--preset", help="built-in spray name")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--samples", type=int, default=50)
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("--out", help="write the report here instead of stdout")

    p = sub.add_parser("analyze", help="connection, curvature, classification, identities")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("metrizable", help="projective-metrizability conditions for a candidate")
    common(p)
    p.add_argument("--finsler", help="Finsler candidate expression F")
    p.add_argument("--theta", help="semi-basic 1-form components, ';'-separated")
    p.set_defaults(func=cmd_metrizable)

    p = sub.add_parser("involutivity", help="symbol kernel dimensions and the Cartan test")
    common(p)
    p.add_argument("--n-points", type=int, default=10)
    p.set_defaults(func=cmd_involutivity)

    p = sub.add_parser("geodesics", help="integrate geodesics; optionally compare two sprays")
    common(p)
    p.add_argument("--x0", required=True, help="initial base point, comma-separated")
    p.add_argument("--y0", required=True, help="initial velocity, comma-separated")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--compare", help="preset name or file of a second spray")
    p.add_argument("--trace-tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_geodesics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"spraylab: {exc}", file=sys.stderr)
        return 1
    except (ExpressionError, KeyError, ValueError, ConditionsNotMetError) as exc:
        print(f"spraylab: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
