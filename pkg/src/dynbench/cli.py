"""Command-line surface.

Exit codes: 0 success, 2 config error, 3 bound-check failure on a verify
path, 4 oracle contract violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from . import experiments, gradient, hier_engine, noise, path_engine, report, witnesses
from .errors import (
    BoundCheckFailure,
    ConfigError,
    ContractViolation,
    DescentViolation,
    DynbenchError,
    InfeasibleScript,
    StalledWeakLearner,
)
from .minimizers import make_state

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BOUND = 3
EXIT_ORACLE = 4


def _write(out_dir: str, name: str, content: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        fh.write(content)
    return path


def _emit(args, name_base: str, csv_text: str, json_doc: dict) -> None:
    if args.out_dir:
        if args.format in ("csv", "both"):
            print(_write(args.out_dir, f"{name_base}.csv", csv_text))
        if args.format in ("json", "both"):
            print(_write(args.out_dir, f"{name_base}.json", json.dumps(json_doc, indent=2) + "\n"))
    else:
        print(csv_text if args.format != "json" else json.dumps(json_doc, indent=2))


def _load_config(args) -> experiments.ExperimentConfig:
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    else:
        doc = {}
    # Flags override the config document where both are given.
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.rollouts is not None:
        doc["rollouts"] = args.rollouts
    if getattr(args, "z_round", None) is not None:
        doc["z_round"] = args.z_round
    design = doc.setdefault("design", {})
    if getattr(args, "eps", None) is not None:
        design["epsilon"] = args.eps
    if getattr(args, "rounds", None) is not None:
        design["rounds"] = args.rounds
    if getattr(args, "depth", None) is not None:
        design["depth"] = args.depth
    if getattr(args, "width", None) is not None:
        design["width"] = args.width
    return experiments.config_from_json(doc)


def _single_run_config(args, kind: str) -> experiments.ExperimentConfig:
    if args.config is None and args.seed is None:
        raise ConfigError("give --config or at least --seed for a generated instance")
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    else:
        doc = {}
    doc.setdefault("design", {})["kind"] = kind
    if "instance" not in doc and "generator" not in doc and kind != "witness":
        doc["generator"] = {
            "d": 12,
            "class_kind": "complete",
            "seed": args.seed if args.seed is not None else 0,
        }
    if "seed" not in doc:
        doc["seed"] = args.seed if args.seed is not None else 0
    doc.setdefault("rollouts", 1)
    if args.seed is not None:
        doc["seed"] = args.seed
    design = doc["design"]
    if getattr(args, "eps", None) is not None:
        doc.setdefault("minimizer", {"mode": "random"})["epsilon"] = args.eps
        design.setdefault("epsilon", args.eps)
    if getattr(args, "rounds", None) is not None:
        design["rounds"] = args.rounds
    if getattr(args, "depth", None) is not None:
        design["depth"] = args.depth
    if getattr(args, "width", None) is not None:
        design["width"] = args.width
    design.setdefault("rounds", 10)
    return experiments.config_from_json(doc)


def cmd_run_path(args) -> int:
    cfg = _single_run_config(args, "path")
    pcfg = path_engine.PathConfig(
        rounds=cfg.design["rounds"],
        mixture_weights=cfg.design.get("mixture_weights", "uniform"),
        majority_weights=cfg.design.get("majority_weights", "uniform"),
    )
    spec = replace(cfg.minimizer, seed=cfg.base_seed)
    trace = path_engine.run_path(cfg.instance, make_state(spec), pcfg)
    _emit(args, "path_trace", path_engine.trace_to_csv(trace), path_engine.trace_to_json(trace))
    return EXIT_OK


def cmd_run_hier(args) -> int:
    cfg = _single_run_config(args, "hier")
    hcfg = hier_engine.HierConfig(
        depth=cfg.design.get("depth", 2), width=cfg.design.get("width", 3)
    )
    spec = replace(cfg.minimizer, seed=cfg.base_seed)
    trace = hier_engine.run_hier(cfg.instance, make_state(spec), hcfg)
    _emit(args, "hier_trace", hier_engine.hier_to_csv(trace), hier_engine.hier_to_json(trace))
    return EXIT_OK


def cmd_run_noisy(args) -> int:
    cfg = _single_run_config(args, "noisy")
    spec = replace(cfg.minimizer, seed=cfg.base_seed)
    trace = noise.run_noisy_path(cfg.instance, make_state(spec), cfg.design["rounds"])
    _emit(args, "noisy_trace", noise.noisy_to_csv(trace), noise.noisy_to_json(trace))
    return EXIT_OK


def cmd_run_boost(args) -> int:
    cfg = _single_run_config(args, "boost")
    spec = replace(cfg.minimizer, seed=cfg.base_seed)
    state = gradient.run_boost(cfg.instance, make_state(spec), cfg.design["rounds"])
    doc = {"rounds": [row for row in gradient.boost_csv_rows(state)], "exact": state.exact}
    _emit(args, "boost_trace", gradient.boost_to_csv(state), doc)
    return EXIT_OK


def cmd_witness(args) -> int:
    eps = args.eps if args.eps is not None else (0.1 if args.kind == "path" else 0.5)
    if args.kind == "path":
        rounds = args.rounds if args.rounds is not None else round(2.0 / eps)
        if args.intervals:
            witness = witnesses.build_interval_witness("path", eps, rounds)
        else:
            witness = witnesses.build_path_witness(eps, rounds)
        trace = path_engine.run_path(
            witness.instance, make_state(witness.minimizer_spec), witness.config
        )
        weightings = witnesses.sample_majority_weightings(
            args.weight_samples, len(trace.rounds), seed=args.seed or 0
        )
        rep = witnesses.verify_witness(witness, trace, weightings)
    else:
        if args.intervals:
            witness = witnesses.build_interval_witness("hier", eps)
        else:
            witness = witnesses.build_hier_witness(eps)
        trace = hier_engine.run_hier(
            witness.instance, make_state(witness.minimizer_spec), witness.config
        )
        rep = witnesses.verify_witness(witness, trace)

    print(witnesses.format_layout(witness))
    print(
        f"consistent rounds: {sum(1 for c in rep.rounds if c.consistent)}/{len(rep.rounds)}  "
        f"surviving mass: {rep.surviving_mass!r}  claimed: {rep.claimed_mass!r}"
    )
    if args.out_dir:
        _write(args.out_dir, f"witness_{args.kind}.json", witnesses.witness_json_str(witness) + "\n")
    if not rep.ok:
        for line in rep.failures:
            print(f"FAIL: {line}", file=sys.stderr)
        raise BoundCheckFailure("witness verification failed")
    return EXIT_OK


def cmd_rollouts(args) -> int:
    cfg = _load_config(args)
    summary = experiments.run_rollouts(cfg)
    if args.out_dir:
        print(_write(args.out_dir, "rollouts.csv", experiments.summary_rollout_csv(summary)))
        print(_write(args.out_dir, "rounds.csv", experiments.summary_rounds_csv(summary)))
        if args.format in ("json", "both"):
            print(
                _write(
                    args.out_dir,
                    "rollouts.json",
                    json.dumps(experiments.summary_to_json(summary), indent=2) + "\n",
                )
            )
    else:
        print(experiments.summary_rollout_csv(summary))
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = _load_config(args)
    summary = experiments.run_rollouts(cfg)
    out = args.out_dir or "report"
    print(_write(out, "rollouts.csv", experiments.summary_rollout_csv(summary)))
    print(_write(out, "rounds.csv", experiments.summary_rounds_csv(summary)))
    print(
        _write(
            out,
            "rollouts.json",
            json.dumps(experiments.summary_to_json(summary), indent=2) + "\n",
        )
    )
    for path in report.render_report(summary, out):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynbench",
        description="Population-level dynamic benchmark simulator and verifier",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, rounds=True):
        p.add_argument("--config", help="experiment config JSON")
        p.add_argument("--out-dir", help="directory for output files")
        p.add_argument("--seed", type=int, help="base seed (overrides config)")
        p.add_argument("--format", choices=["csv", "json", "both"], default="csv")
        p.add_argument("--eps", type=float, help="minimizer accuracy slack")
        if rounds:
            p.add_argument("--rounds", type=int, help="number of rounds")

    p = sub.add_parser("run-path", help="one sequential benchmark run")
    common(p)
    p.set_defaults(func=cmd_run_path)

    p = sub.add_parser("run-hier", help="one hierarchical benchmark run")
    common(p)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--width", type=int, default=None)
    p.set_defaults(func=cmd_run_hier)

    p = sub.add_parser("run-noisy", help="one noisy-label benchmark run")
    common(p)
    p.set_defaults(func=cmd_run_noisy)

    p = sub.add_parser("run-boost", help="one exponential-loss update run")
    common(p)
    p.set_defaults(func=cmd_run_boost)

    p = sub.add_parser("witness", help="build, run, and verify a lower-bound witness")
    p.add_argument("kind", choices=["path", "hier"])
    p.add_argument("--intervals", action="store_true", help="use the interval class variant")
    p.add_argument("--eps", type=float, help="accuracy slack (default 0.1 path, 0.5 hier)")
    p.add_argument("--rounds", type=int, help="path witness rounds (default 2/eps)")
    p.add_argument("--weight-samples", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("rollouts", help="seeded rollout sweep with aggregates")
    common(p)
    p.add_argument("--rollouts", type=int)
    p.add_argument("--z-round", type=int, dest="z_round")
    p.set_defaults(func=cmd_rollouts)

    p = sub.add_parser("report", help="rollout sweep plus rendered figures")
    common(p)
    p.add_argument("--rollouts", type=int)
    p.add_argument("--z-round", type=int, dest="z_round")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "rollouts"):
        args.rollouts = None
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BoundCheckFailure as exc:
        print(f"bound check failed: {exc}", file=sys.stderr)
        return EXIT_BOUND
    except (ContractViolation, InfeasibleScript, DescentViolation, StalledWeakLearner) as exc:
        print(f"oracle contract violation: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except DynbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
