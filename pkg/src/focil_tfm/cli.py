"""Command-line entry point: check, minbribe, optz, simplified, generate."""

from __future__ import annotations

import argparse
import dataclasses
import enum
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .analysis import min_bribe_report, optimal_z, parse_simplified, verify_simplified_by_enumeration
from .bribery import bribe_bp_value_mbic_cap, bribe_cm_base
from .core import TfmKind, render_money
from .equilibrium import (
    PropertyReport,
    Verdict,
    check_censorship_resistance,
    check_dsic,
    check_fair_under_congestion,
    check_mbbn,
    check_mcbn,
    check_mcbn_all_types,
)
from .scenario import GeneratorKnobs, ScenarioError, generate_scenario, parse_scenario, render_scenario

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 1, 2, 3

PROPERTIES = ("dsic", "mcbn", "mbbn", "censorship", "fair")


def jsonable(obj):
    """Plain-JSON form with exact rationals as 'num/den' strings."""
    if isinstance(obj, Fraction):
        return render_money(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if dataclasses.is_dataclass(obj):
        out = {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj) if not f.name.startswith("_")}
        kind = getattr(type(obj), "kind", None)
        if isinstance(kind, str):
            out["kind"] = kind
        return out
    if isinstance(obj, dict):
        return {str(jsonable(k)) if not isinstance(k, str) else k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = [jsonable(x) for x in obj]
        return sorted(items, key=json.dumps) if isinstance(obj, (set, frozenset)) else items
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def render_report(report: dict, timings: Optional[dict]) -> str:
    doc = {"report": jsonable(report)}
    if timings is not None:
        doc["timings"] = {k: round(v, 6) for k, v in sorted(timings.items())}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _report_dict(rep: PropertyReport) -> dict:
    return {
        "verdict": rep.verdict,
        "witness": rep.witness,
        "utility_delta": rep.utility_delta,
        "details": rep.details,
        "evaluations": rep.evaluations,
    }


def _skipped(prop: str, reason: str) -> PropertyReport:
    return PropertyReport(prop, Verdict.INCONCLUSIVE, None, None, {"reason": reason})


def run_checks(text: str, properties: Sequence[str], all_types: bool = False) -> tuple[dict, dict]:
    """Run the selected checks on one scenario document; returns (report, timings)."""
    sc = parse_scenario(text)
    results, timings = {}, {}
    for prop in properties:
        start = time.perf_counter()
        if prop == "dsic":
            rep = check_dsic(sc)
        elif prop == "censorship":
            rep = check_censorship_resistance(sc)
        elif prop == "fair":
            rep = check_fair_under_congestion(sc)
        elif sc.target is None or sc.assignment is None:
            rep = _skipped(prop.upper(), "scenario has no target or type assignment")
        elif prop == "mbbn":
            rep = check_mbbn(sc)
        elif all_types:
            rep = check_mcbn_all_types(sc, sc.space.x_grid)
        else:
            rep = check_mcbn(sc)
        timings[prop] = time.perf_counter() - start
        results[rep.property] = _report_dict(rep)
    report = {
        "command": "check",
        "version": __version__,
        "input_sha256": _digest(text),
        "tfm": sc.tfm,
        "properties": results,
    }
    return report, timings


def exit_code_for(verdicts: Sequence[Verdict], strict: bool) -> int:
    if Verdict.VIOLATED in verdicts:
        return EXIT_VIOLATION
    if Verdict.INCONCLUSIVE_AT_GRID in verdicts:
        return EXIT_INCONCLUSIVE
    if strict and Verdict.INCONCLUSIVE in verdicts:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _verdicts(report: dict) -> list[Verdict]:
    return [Verdict(r["verdict"]) if not isinstance(r["verdict"], Verdict) else r["verdict"]
            for r in report["properties"].values()]


def _check_one(args):
    path, properties, all_types = args
    text = Path(path).read_text(encoding="utf-8")
    try:
        return path, run_checks(text, properties, all_types), None
    except ScenarioError as exc:
        return path, None, str(exc)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None


def cmd_check(ns) -> int:
    properties = _parse_properties(ns.properties)
    target = Path(ns.scenario)
    if target.is_dir():
        paths = sorted(str(p) for p in target.glob("*.json"))
        if not paths:
            raise ScenarioError(f"{target}: no *.json scenario files")
        jobs = [(p, properties, ns.all_types) for p in paths]
        if ns.jobs > 1:
            with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
                results = list(pool.map(_check_one, jobs))
        else:
            results = [_check_one(j) for j in jobs]
        reports, timings, verdicts, errors = {}, {}, [], {}
        for path, res, err in results:
            name = os.path.basename(path)
            if err is not None:
                errors[name] = err
                continue
            rep, tim = res
            reports[name] = rep
            timings.update({f"{name}:{k}": v for k, v in tim.items()})
            verdicts += _verdicts(rep)
        doc = {"command": "check", "version": __version__, "scenarios": reports, "errors": errors}
        _emit(render_report(doc, None if ns.no_timings else timings), ns.out)
        code = exit_code_for(verdicts, ns.strict)
        return EXIT_INPUT if errors and code == EXIT_OK else code
    text = _read(ns.scenario)
    report, timings = run_checks(text, properties, ns.all_types)
    _emit(render_report(report, None if ns.no_timings else timings), ns.out)
    return exit_code_for(_verdicts(report), ns.strict)


def cmd_minbribe(ns) -> int:
    text = _read(ns.scenario)
    sc = parse_scenario(text)
    ctx = sc.context()
    report = {"command": "minbribe", "version": __version__, "input_sha256": _digest(text)}
    terms = min_bribe_report(sc)
    report["bp"] = {"value": terms.value, "congested": terms.congested, "terms": dict(terms.terms),
                    "binding": list(terms.binding)}
    if not ctx.congested:
        report["bp"]["mbic_cap"] = bribe_bp_value_mbic_cap(ctx)
    if ctx.o is not None:
        report["cm1"] = {"value": bribe_cm_base(ctx), "g": ctx.g, "o": ctx.o, "target_order": ctx.target_order}
    _emit(render_report(report, None), ns.out)
    return EXIT_OK


def cmd_optz(ns) -> int:
    try:
        z = optimal_z(ns.c_t0, ns.r, ns.m, ns.s)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    report = {
        "command": "optz",
        "version": __version__,
        "inputs": {"c_t0": z.c_t0, "r": z.r, "m": z.m, "s": z.s},
        "z_star": z.z_star,
        "objective": z.objective,
        "f_cm": z.f_cm(z.z_star),
        "f_bp": z.f_bp(z.z_star),
    }
    _emit(render_report(report, None), ns.out)
    return EXIT_OK


def cmd_simplified(ns) -> int:
    text = _read(ns.scenario)
    sc = parse_simplified(text)
    rep = verify_simplified_by_enumeration(sc)
    report = {"command": "simplified", "version": __version__, "input_sha256": _digest(text)}
    report.update(_report_dict(rep))
    _emit(render_report(report, None), ns.out)
    return exit_code_for([rep.verdict], ns.strict)


def cmd_generate(ns) -> int:
    knobs = GeneratorKnobs(
        tfm=TfmKind(ns.tfm) if ns.tfm else None,
        max_m=ns.max_m,
        max_c_block=ns.max_c_block,
        max_c_incl=ns.max_c_incl,
        max_w=ns.max_w,
        congested={"yes": True, "no": False, "any": None}[ns.congested],
        with_target=not ns.no_target,
        recommended_bids=ns.recommended_bids,
    )
    _emit(render_scenario(generate_scenario(ns.seed, knobs)), ns.out)
    return EXIT_OK


def _parse_properties(text: str) -> list[str]:
    if text == "all":
        return list(PROPERTIES)
    chosen = [p.strip() for p in text.split(",") if p.strip()]
    bad = [p for p in chosen if p not in PROPERTIES]
    if bad or not chosen:
        raise ScenarioError(f"--properties: unknown {bad or text!r}; choose from {', '.join(PROPERTIES)}")
    return chosen


def _fraction_arg(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not an exact rational: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="focil-tfm", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="run property checks on a scenario file or directory")
    p.add_argument("scenario")
    p.add_argument("--properties", default="all", help=f"comma list of {', '.join(PROPERTIES)} (default all)")
    p.add_argument("--all-types", action="store_true", help="check MCBN for every admissible type assignment")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--strict", action="store_true", help="exit 3 on any inconclusive verdict")
    p.add_argument("--no-timings", action="store_true", help="omit the timings section")
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("minbribe", help="bribe caps for the scenario's target")
    p.add_argument("scenario")
    p.add_argument("--out")
    p.set_defaults(func=cmd_minbribe)

    p = sub.add_parser("optz", help="committee share z maximising the censoring bribe")
    p.add_argument("c_t0", type=_fraction_arg)
    p.add_argument("r", type=_fraction_arg)
    p.add_argument("m", type=int)
    p.add_argument("s", type=_fraction_arg, nargs="?", default=Fraction(1))
    p.add_argument("--out")
    p.set_defaults(func=cmd_optz)

    p = sub.add_parser("simplified", help="predicates and equilibria of a fake-free scenario")
    p.add_argument("scenario")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simplified)

    p = sub.add_parser("generate", help="seed-reproducible random scenario")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--tfm", choices=[k.value for k in TfmKind])
    p.add_argument("--max-m", type=int, default=3)
    p.add_argument("--max-c-block", type=int, default=4)
    p.add_argument("--max-c-incl", type=int, default=2)
    p.add_argument("--max-w", type=int, default=6)
    p.add_argument("--congested", choices=("yes", "no", "any"), default="any")
    p.add_argument("--no-target", action="store_true")
    p.add_argument("--recommended-bids", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return ns.func(ns)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
