"""Command-line interface: ``ppcd-stab {validate,analyze,quotient,simulate,bench}``.

Exit codes for ``analyze``: 0 both stable, 10 not absolutely stable,
20 not almost-surely stable, 30 neither, 2 input or precondition error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from . import wdtmc as W
from .bench import ExperimentConfig, gen_experiment
from .exactnum import Vec2Q, format_rat, inf_norm, log_rat, rat
from .geom2d import GeometryError
from .ppcd import (
    PpcdError,
    analyze_chain,
    build_quotient,
    model_from_json,
    model_to_json,
    replay_on_quotient,
    simulate_concrete,
    validate_ppcd,
    weight_conservation_check,
)

SCHEMA = "ppcd-stab/1"

_verdict_schema = {
    "type": "object",
    "required": ["decision", "witness"],
    "properties": {
        "decision": {"enum": ["Convergent", "NotConvergent", "Indeterminate"]},
        "witness": {
            "oneOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "required": ["kind"],
                    "properties": {"kind": {"enum": ["InfiniteEdge", "PositiveCycle", "EffectiveWeight"]}},
                },
            ]
        },
    },
}

REPORT_SCHEMAS = {
    "analyze": {
        "type": "object",
        "required": ["schema", "command", "input_digest", "kind", "absolute", "almost_sure",
                     "effective_weight_log", "quotient_size", "timings"],
        "properties": {
            "schema": {"const": SCHEMA},
            "command": {"const": "analyze"},
            "input_digest": {"type": "string", "pattern": "^sha256:[0-9a-f]{64}$"},
            "kind": {"enum": ["ppcd", "wdtmc"]},
            "absolute": _verdict_schema,
            "almost_sure": _verdict_schema,
            "effective_weight_log": {"type": ["number", "null"]},
            "quotient_size": {
                "type": "object",
                "required": ["states", "edges"],
                "properties": {"states": {"type": "integer"}, "edges": {"type": "integer"}},
            },
            "timings": {
                "type": "object",
                "required": ["build", "absolute", "almost_sure"],
                "additionalProperties": {"type": "number", "minimum": 0},
            },
        },
    },
    "validate": {
        "type": "object",
        "required": ["schema", "command", "input_digest", "kind", "ok", "errors", "warnings"],
        "properties": {
            "schema": {"const": SCHEMA},
            "ok": {"type": "boolean"},
            "errors": {"type": "array", "items": {"type": "string"}},
            "warnings": {"type": "array", "items": {"type": "string"}},
        },
    },
    "simulate": {
        "type": "object",
        "required": ["schema", "command", "input_digest", "kind", "rng", "seeds", "trials"],
        "properties": {
            "schema": {"const": SCHEMA},
            "seeds": {"type": "array", "items": {"type": "integer"}},
            "trials": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["seed", "steps"],
                    "properties": {"conservation": {"enum": ["pass", "fail"]}},
                },
            },
            "average": {
                "type": "object",
                "required": ["steps", "partial_average", "target", "std_error"],
            },
        },
    },
    "bench": {
        "type": "object",
        "required": ["schema", "command", "manifest", "row", "absolute", "almost_sure", "timings"],
        "properties": {
            "schema": {"const": SCHEMA},
            "row": {
                "type": "object",
                "required": ["N", "Locs", "AS", "ASS", "T_conv", "T_abs", "T_as"],
                "properties": {"AS": {"enum": ["Yes", "No"]}, "ASS": {"enum": ["Yes", "No"]}},
            },
        },
    },
}


class CliError(Exception):
    pass


def _load(path: str):
    raw = Path(path).read_bytes()
    digest = "sha256:" + hashlib.sha256(raw).hexdigest()
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: not valid JSON ({exc})") from exc
    if isinstance(obj, dict) and "locations" in obj:
        return "ppcd", model_from_json(obj), digest
    if isinstance(obj, dict) and "states" in obj:
        return "wdtmc", W.chain_from_json(obj), digest
    raise CliError(f"{path}: expected a top-level 'locations' (PPCD) or 'states' (WDTMC) key")


def _chain_of(kind, model) -> tuple[W.Wdtmc, float]:
    if kind == "wdtmc":
        return W.ensure_valid(model), 0.0
    t0 = time.process_time()
    chain = build_quotient(model)
    return chain, time.process_time() - t0


def _emit(obj, as_json: bool, human: str):
    if as_json:
        print(json.dumps(obj, indent=2))
    else:
        print(human)


def _exit_code(analysis) -> int:
    abs_ok = analysis.absolute.convergent
    as_ok = analysis.almost_sure.convergent
    return {(True, True): 0, (False, True): 10, (True, False): 20, (False, False): 30}[(abs_ok, as_ok)]


def _describe(chain: W.Wdtmc, v: W.Verdict) -> str:
    w = v.witness
    if isinstance(w, W.InfiniteEdge):
        return f"{v.decision.value} (infinite edge {chain.states[w.src]} -> {chain.states[w.dst]})"
    if isinstance(w, W.PositiveCycle):
        cyc = " -> ".join(chain.states[s] for s in w.cycle)
        prod = w.product.ratio
        return f"{v.decision.value} (cycle {cyc}, product {format_rat(prod)} > 1)"
    if isinstance(w, W.EffectiveWeight):
        return f"{v.decision.value} (effective weight {w.float_log:.6g}, sign {w.sign})"
    return v.decision.value


def cmd_validate(args) -> int:
    kind, model, digest = _load(args.path)
    if kind == "ppcd":
        rep = validate_ppcd(model)
        errors, warnings = [str(e) for e in rep.errors], list(rep.warnings)
    else:
        errors, warnings = [f"{type(e).__name__}: {e}" for e in W.validate(model)], []
    report = {"schema": SCHEMA, "command": "validate", "input_digest": digest, "kind": kind,
              "ok": not errors, "errors": errors, "warnings": warnings}
    lines = ["ok" if not errors else "invalid"] + [f"error: {e}" for e in errors] + [f"warning: {w}" for w in warnings]
    _emit(report, args.json, "\n".join(lines))
    return 0 if not errors else 2


def cmd_analyze(args) -> int:
    kind, model, digest = _load(args.path)
    chain, build = _chain_of(kind, model)
    analysis = analyze_chain(chain, build)
    report = {"schema": SCHEMA, "command": "analyze", "input_digest": digest, "kind": kind}
    report.update(analysis.to_json())
    t = analysis.timings
    human = "\n".join(
        [
            f"absolute: {analysis.absolute.decision.value}, almost_sure: {analysis.almost_sure.decision.value}",
            f"absolute:    {_describe(chain, analysis.absolute)}",
            f"almost_sure: {_describe(chain, analysis.almost_sure)}",
            f"quotient:    {chain.n} states, {len(chain.edges)} edges",
            f"time (s):    build {t['build']:.3f}  absolute {t['absolute']:.3f}  almost-sure {t['almost_sure']:.3f}",
        ]
    )
    _emit(report, args.json, human)
    return _exit_code(analysis)


def cmd_quotient(args) -> int:
    kind, model, _ = _load(args.path)
    if kind != "ppcd":
        raise CliError("quotient expects a PPCD model")
    print(json.dumps(W.chain_to_json(build_quotient(model)), indent=2))
    return 0


def _parse_point(text: str) -> Vec2Q:
    try:
        x, y = text.split(",")
        return Vec2Q(rat(x.strip()), rat(y.strip()))
    except ValueError as exc:
        raise CliError(f"bad point {text!r}; expected 'x,y' with rationals") from exc


def _trace_ppcd(cp) -> dict:
    return {
        "points": [{"location": lid, "facet": f, "point": p.to_json(), "log_norm": log_rat(inf_norm(p))}
                   for (lid, p), f in zip(cp.steps, cp.facets)],
        "scales": [s.to_json() for s in cp.step_scales],
        "halted": cp.halted,
    }


def cmd_simulate(args) -> int:
    kind, model, digest = _load(args.path)
    seeds = [args.seed + i for i in range(args.trials)]
    report = {"schema": SCHEMA, "command": "simulate", "input_digest": digest, "kind": kind,
              "rng": W.RNG_ALGORITHM, "steps": args.steps, "seeds": seeds, "trials": []}
    chain, _ = _chain_of(kind, model)
    lines = [f"# rng: {W.RNG_ALGORITHM}"]
    all_pass = True
    paths = []
    for seed in seeds:
        if kind == "ppcd":
            lid, tag = model.initial
            start = _parse_point(args.start) if args.start else model.location(lid).invariant.facet(tag).dir
            cp = simulate_concrete(model, start, args.steps, seed)
            trial = {"seed": seed, "steps": len(cp.step_scales)}
            if not args.summary:
                trial["trace"] = _trace_ppcd(cp)
            qpath = replay_on_quotient(chain, cp)
            paths.append(qpath)
            if args.check_conservation:
                rep = weight_conservation_check(model, args.steps, 1, seed, start, chain)
                ok = rep.all_passed
                all_pass &= ok
                trial["conservation"] = "pass" if ok else "fail"
            total = cp.scale_product()
            lines.append(
                f"seed {seed}: {trial['steps']} steps, log product {total.log():.6g}"
                + (f", halted: {cp.halted}" if cp.halted else "")
                + (f", conservation {trial['conservation']}" if "conservation" in trial else "")
            )
        else:
            path = W.sample_path(chain, args.steps, seed)
            trial = {"seed": seed, "steps": args.steps}
            if not args.summary:
                trial["trace"] = {"states": [chain.states[s] for s in path]}
            paths.append(path)
            lines.append(f"seed {seed}: {args.steps} steps, ends at {chain.states[path[-1]]}")
        report["trials"].append(trial)
    if args.average:
        stats = W.average_step_weight(chain, paths[0])
        report["average"] = {"steps": stats.steps, "partial_average": stats.partial_average,
                             "target": stats.target, "std_error": stats.std_error,
                             "within_3se": abs(stats.partial_average - stats.target) <= 3 * stats.std_error}
        lines.append(
            f"average step log-weight {stats.partial_average:.6g} vs effective weight {stats.target:.6g}"
            f" (std error {stats.std_error:.3g})"
        )
    if args.check_conservation:
        passed = sum(t.get("conservation") == "pass" for t in report["trials"])
        lines.append(f"conservation: {passed}/{len(seeds)} pass")
    _emit(report, args.json, "\n".join(lines))
    return 0 if all_pass else 1


def cmd_bench(args) -> int:
    cfg = ExperimentConfig(args.experiment, args.locs_per_region, (args.coeff_min, args.coeff_max), args.seed)
    model = gen_experiment(cfg)
    doc = model_to_json(model)
    doc["manifest"] = cfg.manifest()
    if args.emit:
        Path(args.emit).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    t0 = time.process_time()
    chain = build_quotient(model)
    analysis = analyze_chain(chain, time.process_time() - t0)
    t = analysis.timings
    yes = {True: "Yes", False: "No"}
    row = {"N": cfg.experiment, "Locs": len(model.locations), "AS": yes[analysis.absolute.convergent],
           "ASS": yes[analysis.almost_sure.convergent], "T_conv": t["build"], "T_abs": t["absolute"],
           "T_as": t["almost_sure"]}
    report = {"schema": SCHEMA, "command": "bench", "manifest": cfg.manifest()}
    report.update({"row": row}, **{k: v for k, v in analysis.to_json().items()})
    human = (
        "N  Locs  AS   ASS\n"
        f"{row['N']:<2} {row['Locs']:<5} {row['AS']:<4} {row['ASS']}\n"
        f"T_conv {row['T_conv']:.3f} s  T_abs {row['T_abs']:.3f} s  T_as {row['T_as']:.3f} s"
    )
    _emit(report, args.json, human)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ppcd-stab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a PPCD or WDTMC file")
    v.add_argument("path")
    v.add_argument("--json", action="store_true")
    v.set_defaults(func=cmd_validate)

    a = sub.add_parser("analyze", help="decide absolute and almost-sure stability")
    a.add_argument("path")
    a.add_argument("--json", action="store_true")
    a.set_defaults(func=cmd_analyze)

    q = sub.add_parser("quotient", help="print the quotient WDTMC of a PPCD as JSON")
    q.add_argument("path")
    q.set_defaults(func=cmd_quotient)

    s = sub.add_parser("simulate", help="seeded simulation traces and Monte-Carlo checks")
    s.add_argument("path")
    s.add_argument("--steps", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--start", help="start point 'x,y' on the initial facet (PPCD only)")
    s.add_argument("--check-conservation", action="store_true")
    s.add_argument("--average", action="store_true", help="compare the first trial's average log step weight with the effective weight")
    s.add_argument("--summary", action="store_true", help="omit per-step traces")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bench", help="generate and analyze an experiment-family model")
    b.add_argument("--experiment", type=int, choices=(1, 2, 3), required=True)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--locs-per-region", type=int, default=12)
    b.add_argument("--coeff-min", type=int, default=1)
    b.add_argument("--coeff-max", type=int, default=5)
    b.add_argument("--emit", help="write the generated model JSON here")
    b.add_argument("--json", action="store_true")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, PpcdError, W.WdtmcError, GeometryError, OSError, ValueError) as exc:
        causes = getattr(exc, "issues", None) or getattr(exc, "errors", None) or [exc]
        for c in causes:
            print(f"ppcd-stab: {type(c).__name__}: {c}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
