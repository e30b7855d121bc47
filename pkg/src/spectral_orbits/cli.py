"""Command-line front end: ``spectral-orbits {decide,dist,plan,sandbox} FILE``.

Exit codes: 0 decided yes (or every checked inequality holds), 1 decided no
(or a bound or hypothesis failed), 2 input error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Any

import numpy as np

from .decisions import Verdict, decide_aue, decide_nilpotent_limit, decide_similarity, ii1_moment_obstruction
from .distances import distance_bounds, projection_gap_lower_bound
from .documents import Document, DocumentError, dump_document, parse_document, refine
from .geometry import point_hausdorff
from .matching import PairingPlan, ScheduleError, bipartite_schedule, partitioned_schedule, plan_validate, tree_schedule
from .sandbox import (
    NormalMatrixModel,
    PreconditionError,
    analytic_calculus_bound,
    execute_plan,
    lower_bound_check,
    projection_conjugator,
    semicontinuity_probe,
    triangular_similarity,
)

DEFAULT_TOL = 1e-10
MATRIX_TOL = 1e-8
SEED_ENV = "SPECTRAL_ORBITS_SEED"
EXIT_YES, EXIT_NO, EXIT_INPUT = 0, 1, 2

CONDITION_NAMES = {
    "aue": "approximate unitary equivalence condition",
    "simorbit": "similarity condition",
    "nilpotent": "nilpotent-limit condition",
    "ii1": "II_1 obstruction",
}


class InputError(Exception):
    pass


def _defaults(args, eps: float | None) -> dict:
    out = {"tol": args.tol, "frame_margin": "2*eps", "contour_refinement": "eps/4"}
    if eps is not None:
        out["frame_margin"] = 2 * eps
        out["contour_refinement"] = eps / 4
    return out


def _need(data: list, n: int, what: str) -> None:
    if len(data) != n:
        raise InputError(f"spectra: {what} needs exactly {n} spectrum payload(s), got {len(data)}")


def _verdict_report(v: Verdict) -> dict:
    out = v.to_dict()
    out["label"] = CONDITION_NAMES[v.kind]
    return out


def _resolution_check(kind: str, data: list, verdict: Verdict) -> dict:
    fine = [refine(d) for d in data]
    if kind == "aue":
        again = decide_aue(*fine)
    elif kind == "simorbit":
        again = decide_similarity(*fine)
    else:
        again = decide_nilpotent_limit(*fine)
    return {"factor": 3, "answer": again.answer, "stable": again.answer == verdict.answer}


def cmd_decide(args, doc: Document) -> tuple[dict, int]:
    kind = args.kind
    report: dict[str, Any] = {"command": f"decide {kind}"}
    if kind == "ii1":
        opts = doc.options
        try:
            mu1, mu2 = opts["mu1"], opts["mu2"]
        except KeyError as exc:
            raise InputError(f"options.{exc.args[0]}: missing") from exc
        degree = int(opts.get("max_degree", 4))
        v = ii1_moment_obstruction([tuple(a) for a in mu1], [tuple(a) for a in mu2], degree, tol=args.tol)
        report["defaults"] = _defaults(args, None)
        # an obstruction is a "no" to membership in the closed similarity orbit
        report["verdict"] = _verdict_report(v)
        report["obstruction"] = not v.answer
        return report, EXIT_YES if v.answer else EXIT_NO
    data = doc.data(args.profile)
    if kind == "nilpotent":
        _need(data, 1, "decide nilpotent")
        v = decide_nilpotent_limit(data[0])
    else:
        _need(data, 2, f"decide {kind}")
        v = decide_aue(*data) if kind == "aue" else decide_similarity(*data)
    report["defaults"] = _defaults(args, data[0].resolution)
    report["profile"] = data[0].profile.name
    report["verdict"] = _verdict_report(v)
    if args.resolution_check:
        report["resolution_check"] = _resolution_check(kind, data, v)
    if args.figure:
        from .plotting import plot_spectra

        plot_spectra([d.spectrum for d in data], args.figure, title=f"decide {kind}")
    return report, EXIT_YES if v.answer else EXIT_NO


def cmd_dist(args, doc: Document) -> tuple[dict, int]:
    data = doc.data(args.profile)
    _need(data, 2, "dist")
    rep = distance_bounds(*data)
    report: dict[str, Any] = {
        "command": "dist",
        "defaults": _defaults(args, data[0].resolution),
        "profile": data[0].profile.name,
        "bounds": rep.to_dict(),
    }
    opts = doc.options
    if "gap_region" in opts:
        offset = float(opts.get("gap_offset", data[0].resolution))
        gb = projection_gap_lower_bound(data[0], data[1], opts["gap_region"], offset, opts.get("gap_spacing"))
        if gb is None:
            report["gap_bound"] = {"applicable": False}
        else:
            report["gap_bound"] = {
                "applicable": True,
                "bound": gb.bound,
                "contour_length": gb.contour_length,
                "sup_factor": gb.sup_factor,
                "sampled_sup": gb.sampled_sup,
                "class1": list(gb.class1.coords),
                "class2": list(gb.class2.coords),
                "enclosed_components2": list(gb.selected2),
            }
    if args.resolution_check:
        fine = distance_bounds(*(refine(d) for d in data))
        report["resolution_check"] = {"factor": 3, "lower": fine.lower, "upper": fine.to_dict()["upper"], "upper_rule": fine.upper_rule}
    if args.figure:
        from .plotting import plot_spectra

        plot_spectra([d.spectrum for d in data], args.figure, title="dist")
    return report, EXIT_YES


def _plan_from(doc: Document, args) -> tuple[PairingPlan, list]:
    data = doc.data(args.profile)
    schedule = doc.options.get("schedule", "bipartite" if len(data) == 2 else "tree")
    if schedule == "tree":
        if not data:
            raise InputError("spectra: tree schedule needs one spectrum")
        return tree_schedule(data[0].spectrum), data[:1]
    _need(data, 2, f"{schedule} schedule")
    if schedule == "bipartite":
        return bipartite_schedule(*data), data
    if schedule == "partitioned":
        blocks = doc.options.get("blocks")
        if not isinstance(blocks, list):
            raise InputError("options.blocks: expected a list of [ids1, ids2] pairs")
        return partitioned_schedule(data[0], data[1], blocks), data
    raise InputError(f"options.schedule: unknown schedule {schedule!r}")


def cmd_plan(args, doc: Document) -> tuple[dict, int]:
    report: dict[str, Any] = {"command": "plan"}
    try:
        plan, data = _plan_from(doc, args)
    except ScheduleError as exc:
        report["error"] = str(exc)
        return report, EXIT_NO
    problems = plan_validate(plan)
    eps = data[0].resolution
    dh = point_hausdorff([v for v, _ in plan.atoms1], [v for v, _ in plan.atoms2])
    report.update(
        defaults=_defaults(args, eps),
        schedule=doc.options.get("schedule", "bipartite" if len(data) == 2 else "tree"),
        atoms=[len(plan.atoms1), len(plan.atoms2)],
        steps=len(plan.steps),
        cost=plan.cost,
        certified_bound=plan.bound,
        hausdorff_atoms=dh,
        violations=problems,
    )
    if args.emit_plan:
        Path(args.emit_plan).write_text(dump_document(Document(plan=plan.to_dict())), encoding="utf-8")
        report["plan_file"] = str(args.emit_plan)
    if args.figure:
        from .plotting import plot_plan

        plot_plan(plan, args.figure, [d.spectrum for d in data])
    ok = not problems and plan.cost <= plan.bound
    return report, EXIT_YES if ok else EXIT_NO


def _matrix(raw, where: str) -> np.ndarray:
    try:
        if isinstance(raw, dict):
            re = np.asarray(raw["re"], dtype=float)
            im = np.asarray(raw.get("im", np.zeros_like(re)), dtype=float)
            m = re + 1j * im
        else:
            m = np.asarray(raw, dtype=float).astype(complex)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{where}: expected a matrix (nested lists or {{re, im}})") from exc
    if m.ndim != 2:
        raise InputError(f"{where}: expected a 2-d matrix")
    return m


def _complex(raw, where: str) -> complex:
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return complex(raw)
    if isinstance(raw, list) and len(raw) == 2:
        return complex(float(raw[0]), float(raw[1]))
    raise InputError(f"{where}: expected a number or [re, im]")


def _function(raw, where: str):
    kind = raw.get("kind") if isinstance(raw, dict) else None
    if kind == "constant":
        c = _complex(raw.get("value", 1), f"{where}.value")
        return lambda z: np.full(np.shape(z), c, dtype=complex)
    if kind == "power":
        k = int(raw.get("degree", 1))
        return lambda z: np.asarray(z) ** k
    if kind == "resolvent":
        pole = _complex(raw["pole"], f"{where}.pole")
        return lambda z: 1.0 / (np.asarray(z) - pole)
    raise InputError(f"{where}: kind must be constant, power or resolvent")


def _run_check(check: dict, k: int) -> dict:
    where = f"checks[{k}]"
    if not isinstance(check, dict) or "kind" not in check:
        raise InputError(f"{where}: expected an object with a kind")
    kind = check["kind"]
    tol = float(check.get("tol", MATRIX_TOL))
    out: dict[str, Any] = {"kind": kind}
    expect_error = bool(check.get("expect_error", False))
    try:
        if kind == "conjugator":
            w, err = projection_conjugator(*(_matrix(check[x], f"{where}.{x}") for x in "PQV"))
            p, q = _matrix(check["P"], where), _matrix(check["Q"], where)
            rank_p, rank_q = (int(round(np.trace(m).real)) for m in (p, q))
            out.update(err=err, tol=tol, rank_P=rank_p, rank_Q=rank_q, holds=err < tol and rank_p == rank_q)
        elif kind == "triangular":
            diag = [(_complex(d[0], f"{where}.diagonal"), int(d[1])) for d in check["diagonal"]]
            _, err = triangular_similarity(diag, _matrix(check["upper"], f"{where}.upper"))
            out.update(err=err, tol=tol, holds=err < tol)
        elif kind == "analytic":
            a, b = _matrix(check["A"], f"{where}.A"), _matrix(check["B"], f"{where}.B")
            v = _matrix(check["V"], f"{where}.V") if "V" in check else np.eye(a.shape[0])
            contour = [_complex(z, f"{where}.contour") for z in check["contour"]]
            res = analytic_calculus_bound(a, b, v, _function(check.get("f", {"kind": "constant"}), f"{where}.f"), contour, int(check.get("per_edge", 64)))
            out.update(lhs=res.lhs, rhs=res.rhs, quadrature_error=res.quadrature_error, holds=res.holds)
        elif kind == "semicontinuity":
            seq = [NormalMatrixModel(tuple(_complex(z, where) for z in ev), (1,) * len(ev)) for ev in check["sequence"]]
            disk = check["disk"]
            idx = semicontinuity_probe(seq, (_complex(disk["center"], where), float(disk["radius"])), int(check.get("start", 0)))
            out.update(index="no intersection" if idx is None else idx, holds=idx is not None)
        else:
            raise InputError(f"{where}.kind: unknown check {kind!r}")
    except PreconditionError as exc:
        out.update(error=str(exc), holds=expect_error)
        return out
    except KeyError as exc:
        raise InputError(f"{where}.{exc.args[0]}: missing") from exc
    if expect_error:
        out.update(error="expected a precondition error", holds=False)
    return out


def _random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def cmd_sandbox(args, doc: Document) -> tuple[dict, int]:
    seed = int(os.environ.get(SEED_ENV, "0"))
    report: dict[str, Any] = {"command": "sandbox", "defaults": _defaults(args, doc.resolution), "seed": seed}
    results = []
    if doc.checks is not None:
        results = [_run_check(c, k) for k, c in enumerate(doc.checks)]
    if doc.plan is not None or doc.spectra:
        if doc.plan is not None:
            try:
                plan = PairingPlan.from_dict(doc.plan)
            except (KeyError, TypeError, ValueError, IndexError) as exc:
                raise InputError(f"plan: malformed ({exc})") from exc
        else:
            try:
                plan, _ = _plan_from(doc, args)
            except ScheduleError as exc:
                report["error"] = str(exc)
                return report, EXIT_NO
        problems = plan_validate(plan)
        entry: dict[str, Any] = {"kind": "plan", "violations": problems}
        if problems:
            entry["holds"] = False
        else:
            m1, m2, u, achieved = execute_plan(plan)
            norm = float(np.linalg.norm(m1 - u.conj().T @ m2 @ u, 2))
            entry.update(dimension=int(u.shape[0]), achieved=achieved, norm=norm, cost=plan.cost, certified_bound=plan.bound)
            checks = [abs(norm - achieved) <= args.tol * max(1.0, achieved)]
            if plan.bound is not None:
                checks.append(achieved <= plan.bound)
            checks.append(lower_bound_check(m1, m2, u, args.tol))
            if args.verify:
                rng = np.random.default_rng(seed)
                trials = int(doc.options.get("random_unitaries", 8))
                rand_ok = all(lower_bound_check(m1, m2, _random_unitary(rng, u.shape[0]), args.tol) for _ in range(trials))
                entry["random_lower_bound_trials"] = trials
                checks.append(rand_ok)
            entry["holds"] = all(checks)
            if args.figure:
                from .plotting import plot_plan

                plot_plan(plan, args.figure)
        results.append(entry)
    elif args.figure:
        raise InputError("--figure: sandbox draws plans only, and the document has neither a plan nor spectra")
    if not results:
        raise InputError("document: sandbox needs a plan, spectra or checks")
    report["results"] = results
    ok = all(r["holds"] for r in results)
    report["all_hold"] = ok
    code = EXIT_YES if ok or not args.verify else EXIT_NO
    return report, code


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def render_text(report: dict) -> str:
    lines = [f"command: {report['command']}"]
    if "error" in report:
        lines.append(f"error: {report['error']}")
    if "verdict" in report:
        v = report["verdict"]
        label = v["label"]
        for cond, status in v["conditions"].items():
            lines.append(f"{label} {cond}: {status}")
        for f in v["failed_conditions"]:
            lines.append(f"  {f['condition']}: {f['reason']}")
        lines.append("all conditions pass" if v["answer"] else "answer: no")
    if "bounds" in report:
        b = report["bounds"]
        lines.append(f"lower: {b['lower']:.6g} ({b['lower_rule']})")
        upper = b["upper"] if isinstance(b["upper"], str) else f"{b['upper']:.6g}"
        lines.append(f"upper: {upper} ({b['upper_rule']})")
        lines.append(f"discretization slack: {b['discretization_slack']:.6g}")
        if "note" in b:
            lines.append(f"note: {b['note']}")
    if "gap_bound" in report:
        g = report["gap_bound"]
        lines.append(f"projection gap bound: {g['bound']:.6g}" if g["applicable"] else "projection gap bound: not applicable")
    if "cost" in report:
        lines.append(f"plan cost: {report['cost']:.6g} (certified bound {report['certified_bound']:.6g})")
        lines.append("plan valid" if not report["violations"] else "violations: " + "; ".join(report["violations"]))
    for r in report.get("results", []):
        shown = {k: v for k, v in r.items() if k not in ("kind", "holds")}
        lines.append(f"{r['kind']}: {'OK' if r['holds'] else 'FAIL'} " + json.dumps(_jsonable(shown), sort_keys=True))
    if "resolution_check" in report:
        lines.append(f"resolution check: {json.dumps(_jsonable(report['resolution_check']), sort_keys=True)}")
    lines.append("defaults: " + json.dumps(_jsonable(report.get("defaults", {})), sort_keys=True))
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="numerical tolerance (default 1e-10)")
    common.add_argument("--profile", help="override the document's algebra profile (e.g. O2, O3, Oinf, Calkin, TypeIII)")
    common.add_argument("--resolution-check", action="store_true", help="repeat the computation on a 3x finer grid")
    common.add_argument("--report", choices=("text", "json"), default="text")
    common.add_argument("--figure", metavar="OUT", help="also write a figure (format from the file suffix)")

    parser = argparse.ArgumentParser(prog="spectral-orbits", description="Orbit relations between normal operators given by labelled spectra.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("decide", parents=[common], help="decide an orbit relation")
    p.add_argument("kind", choices=("aue", "simorbit", "nilpotent", "ii1"))
    p.add_argument("file")
    p = sub.add_parser("dist", parents=[common], help="bound the distance between unitary orbits")
    p.add_argument("file")
    p = sub.add_parser("plan", parents=[common], help="build a pairing plan")
    p.add_argument("file")
    p.add_argument("--emit-plan", metavar="OUT")
    p = sub.add_parser("sandbox", parents=[common], help="run finite-dimensional checks")
    p.add_argument("file")
    p.add_argument("--verify", action="store_true", help="exit 1 if any checked inequality fails")
    return parser


COMMANDS = {"decide": cmd_decide, "dist": cmd_dist, "plan": cmd_plan, "sandbox": cmd_sandbox}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.file).read_text(encoding="utf-8")
        doc = parse_document(text)
        report, code = COMMANDS[args.command](args, doc)
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: cannot read {args.file}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, DocumentError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    if args.report == "json":
        print(json.dumps(_jsonable(report), indent=2, sort_keys=True))
    else:
        print(render_text(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
