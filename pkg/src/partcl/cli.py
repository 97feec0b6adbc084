"""Command-line interface.

Subcommands: run (simulated experiments), validate (problem files),
certify (local-optimum check), dump-gai (decomposition dump),
export-problem (builders to JSON), serve (session service), bench
(kernel backend benchmark). A JSON config file can mirror every `run`
flag; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as pio
from .gai import compute_J, decompose
from .harness import ExperimentConfig, InvariantViolation, run_experiment
from .inference import certify_local_optimum
from .model import ModelError
from .problems import BUILDERS, get_problem

RUN_FLAGS = ("problem", "algo", "alpha", "users", "iters", "select", "seed",
             "out", "matched_gain", "no_regret", "no_invariants", "ucb_c")


def _add_run_parser(sub):
    p = sub.add_parser("run", help="run a simulated elicitation experiment")
    p.add_argument("--problem", default=None,
                   help="builder name (grid|training|hotel) or problem file")
    p.add_argument("--algo", choices=("pcl", "cl"), default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--users", type=int, default=None)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--select", choices=("random", "smallest", "ucb1"),
                   default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--matched-gain", action="store_true", default=None,
                   dest="matched_gain",
                   help="cl only: match feedback gains to a paired pcl run")
    p.add_argument("--no-regret", action="store_true", default=None,
                   dest="no_regret", help="skip regret columns")
    p.add_argument("--no-invariants", action="store_true", default=None,
                   dest="no_invariants", help="skip runtime guarantee checks")
    p.add_argument("--ucb-c", type=float, default=None, dest="ucb_c")
    p.add_argument("--config", default=None,
                   help="JSON file mirroring the flags above (flags win)")


def cmd_run(args) -> int:
    settings = {
        "problem": "grid", "algo": "pcl", "alpha": 0.3, "users": 20,
        "iters": 100, "select": "random", "seed": 0, "out": None,
        "matched_gain": False, "no_regret": False, "no_invariants": False,
        "ucb_c": 1.0,
    }
    if args.config:
        doc = json.loads(Path(args.config).read_text())
        unknown = set(doc) - set(RUN_FLAGS)
        if unknown:
            print(f"error: unknown config keys {sorted(unknown)}",
                  file=sys.stderr)
            return 2
        settings.update(doc)
    for key in RUN_FLAGS:
        val = getattr(args, key)
        if val is not None:
            settings[key] = val

    model = get_problem(settings["problem"])
    config = ExperimentConfig(
        problem=settings["problem"], algorithm=settings["algo"],
        alpha=float(settings["alpha"]), users=int(settings["users"]),
        iterations=int(settings["iters"]), selection=settings["select"],
        seed=int(settings["seed"]), ucb_c=float(settings["ucb_c"]),
        compute_regret=not settings["no_regret"],
        matched_gain=bool(settings["matched_gain"]),
        check_invariants=not settings["no_invariants"],
        out_dir=settings["out"])
    try:
        result = run_experiment(model, config)
    except InvariantViolation as exc:
        print(f"INVARIANT VIOLATION {exc.name}: "
              f"{json.dumps(exc.context, default=str)}", file=sys.stderr)
        return 1
    agg = result.aggregate()
    summary = {
        "problem": settings["problem"],
        "algorithm": settings["algo"],
        "alpha": settings["alpha"],
        "users": settings["users"],
        "iterations": settings["iters"],
        "final_regret_mean": agg["regret_mean"][-1],
        "final_regret_median": agg["regret_median"][-1],
        "converged": sum(r.converged_at is not None for r in result.runs),
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_validate(args) -> int:
    try:
        model = pio.load_problem(args.problem)
    except ModelError as exc:
        print(f"INVALID: {exc}", file=sys.stderr)
        return 1
    except (json.JSONDecodeError, OSError) as exc:
        print(f"INVALID: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({
        "valid": True,
        "variables": model.num_vars,
        "features": model.num_features,
        "parts": model.num_parts,
        "constraints": len(model.hard_constraints),
        "feature_bound": model.feature_bound,
        "part_feature_bound": model.part_feature_bound,
    }, indent=2, sort_keys=True))
    return 0


def cmd_certify(args) -> int:
    model = get_problem(args.problem)
    wdoc = json.loads(Path(args.weights).read_text())
    w = np.asarray(wdoc["w"] if isinstance(wdoc, dict) else wdoc, dtype=float)
    if w.size != model.num_features:
        print(f"error: expected {model.num_features} weights, got {w.size}",
              file=sys.stderr)
        return 2
    x = pio.load_configuration(model, args.config)
    ok, witness = certify_local_optimum(model, w, x)
    out = {"locally_optimal": bool(ok)}
    if witness is not None:
        part, partial = witness
        out["witness"] = {
            "part": model.parts[part].name,
            "assignment": {model.variables[v].name: int(val)
                           for v, val in zip(partial.variables, partial.values)},
        }
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0 if ok else 3


def cmd_dump_gai(args) -> int:
    model = get_problem(args.problem)
    if args.ordering:
        names = args.ordering.split(",")
        ordering = [model.part_by_name(n).index for n in names]
        dec = compute_J(model, ordering)
    else:
        dec = decompose(model)
    doc = json.dumps(dec.to_json(model), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(doc)
    else:
        print(doc)
    return 0


def cmd_export_problem(args) -> int:
    if args.problem not in BUILDERS:
        print(f"error: unknown builder {args.problem!r}; "
              f"choose from {sorted(BUILDERS)}", file=sys.stderr)
        return 2
    model = BUILDERS[args.problem]()
    pio.save_problem(model, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    static = args.static_dir
    if static is None:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        static = str(candidate) if candidate.is_dir() else None
    app = create_app(journal_dir=args.journal_dir, static_dir=static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_bench(args) -> int:
    from .bench import run_bench
    run_bench(rows=args.rows, repeats=args.repeats)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="partcl",
        description="part-wise coactive preference elicitation")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_run_parser(sub)

    p = sub.add_parser("validate", help="validate a JSON problem file")
    p.add_argument("--problem", required=True)

    p = sub.add_parser("certify", help="check a configuration for local "
                                       "optimality under given weights")
    p.add_argument("--problem", required=True)
    p.add_argument("--weights", required=True,
                   help="JSON file: {\"w\": [...]} or a plain list")
    p.add_argument("--config", required=True,
                   help="JSON configuration: {\"values\": [...]} or "
                        "{\"assignment\": {name: value}}")

    p = sub.add_parser("dump-gai", help="dump the part ordering and "
                                        "exclusive feature subsets")
    p.add_argument("--problem", required=True)
    p.add_argument("--ordering", default=None,
                   help="comma-separated part names to override the ordering")
    p.add_argument("--out", default=None)

    p = sub.add_parser("export-problem", help="write a builder's problem "
                                              "as a JSON file")
    p.add_argument("--problem", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("serve", help="start the live elicitation service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--journal-dir", default="./sessions")
    p.add_argument("--static-dir", default=None,
                   help="serve a built browser client at /ui "
                        "(defaults to frontend/dist when present)")

    p = sub.add_parser("bench", help="compare the numba and numpy kernel "
                                     "backends")
    p.add_argument("--rows", type=int, default=20000)
    p.add_argument("--repeats", type=int, default=5)

    args = parser.parse_args(argv)
    handlers = {
        "run": cmd_run,
        "validate": cmd_validate,
        "certify": cmd_certify,
        "dump-gai": cmd_dump_gai,
        "export-problem": cmd_export_problem,
        "serve": cmd_serve,
        "bench": cmd_bench,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
