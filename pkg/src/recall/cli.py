"""Command line entry points: recall sim | serve | bench."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus import load_corpus
from .harness import (
    RecheckPlan,
    SyntheticSpec,
    cost_at_recall,
    export_result,
    generate_synthetic,
    random_order_config,
    run_simulation,
)
from .review_quality import ReviewerErrorModel
from .strategy import SessionConfig


def _load_json(path: str) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _split_sim_config(raw: dict):
    raw = dict(raw)
    error = raw.pop("error_model", None)
    recheck = raw.pop("recheck", None)
    max_cost = raw.pop("max_cost", None)
    config = SessionConfig.from_dict(raw)
    error_model = ReviewerErrorModel(**error) if error else None
    plan = None
    if recheck:
        reviewer = recheck.pop("reviewer", None)
        plan = RecheckPlan(
            reviewer=ReviewerErrorModel(**reviewer) if reviewer else None, **recheck
        )
    return config, error_model, plan, max_cost


def cmd_sim(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    config, error_model, plan, max_cost = _split_sim_config(
        _load_json(args.config) if args.config else {}
    )
    result = run_simulation(corpus, config, error_model, max_cost=max_cost, recheck=plan)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export_result(result, out / "result.csv", "csv")
    export_result(result, out / "result.json", "json")
    m = result.metrics()
    print(f"inspected {m['inspected']}/{result.corpus_size}  "
          f"found {m['found']}/{m['true_positives']}  "
          f"recall {m['final_recall']:.3f}  stop={result.stop_point}")
    for target in (0.95, 0.99, 1.0):
        cost = m[f"cost_at_recall_{target}"]
        shown = f"{cost:.3f}" if cost is not None else "not reached"
        print(f"cost at recall {target:.2f}: {shown}")
    print(f"results written to {out}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.store)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    spec = _load_json(args.spec)
    synth = spec.get("synthetic", {})
    seeds = spec.get("seeds", list(range(1, 11)))
    target = spec.get("target", 0.95)
    config_raw = dict(spec.get("config", {}))
    with_baseline = spec.get("baseline", True)
    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    print(f"seed  active_cost@{target}  random_cost@{target}")
    active_costs, random_costs = [], []
    for seed in seeds:
        corpus = generate_synthetic(SyntheticSpec(seed=seed, **synth))
        config_raw["seed"] = seed
        config, error_model, plan, max_cost = _split_sim_config(dict(config_raw))
        result = run_simulation(corpus, config, error_model, max_cost=max_cost, recheck=plan)
        cost = cost_at_recall(result, target)
        active_costs.append(cost)
        line = f"{seed:>4}  {cost if cost is not None else 'not reached'}"
        if with_baseline:
            baseline = run_simulation(corpus, random_order_config(seed))
            bcost = cost_at_recall(baseline, target)
            random_costs.append(bcost)
            line += f"  {bcost if bcost is not None else 'not reached'}"
        print(line)
        if out_dir:
            export_result(result, out_dir / f"active_seed{seed}.csv", "csv")
            export_result(result, out_dir / f"active_seed{seed}.json", "json")

    reached = [c for c in active_costs if c is not None]
    if reached:
        print(f"active: reached target in {len(reached)}/{len(seeds)} seeds, "
              f"mean cost {sum(reached) / len(reached):.3f}")
    if random_costs:
        breached = [c for c in random_costs if c is not None]
        if breached:
            print(f"random: mean cost {sum(breached) / len(breached):.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recall")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("sim", help="run one simulated review on a labeled corpus")
    p_sim.add_argument("--corpus", required=True, help="corpus CSV file")
    p_sim.add_argument("--config", help="session config JSON file")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.set_defaults(func=cmd_sim)

    p_serve = sub.add_parser("serve", help="run the live review HTTP service")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--store", default=None, help="session store directory")
    p_serve.set_defaults(func=cmd_serve)

    p_bench = sub.add_parser("bench", help="run a seeded synthetic battery")
    p_bench.add_argument("--spec", required=True, help="battery spec JSON file")
    p_bench.add_argument("--out", help="directory for per-seed exports")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
