"""Command-line interface.

Subcommands: gen, label, train, predict, solve, bench.  Exit code 0 on
success; failures print a diagnostic to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .bench import (BenchConfig, report_to_csv, run_benchmark,
                    run_label_pipeline, train_from_dir, write_model)
from .errors import BundlekitError
from .formulations import CandidateSet
from .gcn import TrainConfig, build_graph, parse_params, predict_probs
from .instance import GenConfig, gen_instance, parse_instance, serialize_instance
from .milp import solve_milp
from .strategies import fcp, local_search, pcp, solve_with_candidates
from .formulations import build_bsp, bsp_summary

PROBS_HEADER = "bundlekit probs v1"


def _write(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _read_instance(path: str):
    return parse_instance(Path(path).read_text(encoding="utf-8"))


def _cmd_gen(args) -> int:
    cfg = GenConfig(seed=args.seed, alpha_mode=args.alpha_mode)
    inst = gen_instance(cfg, args.n, args.m)
    _write(args.out, serialize_instance(inst))
    print(f"wrote {args.out} (n={args.n}, m={args.m}, seed={args.seed})")
    return 0


def _cmd_label(args) -> int:
    paths = run_label_pipeline(args.count, args.n, args.m, args.seed, args.out)
    print(f"labeled {len(paths)} instances under {args.out}")
    return 0


def _cmd_train(args) -> int:
    cfg = TrainConfig(seed=args.seed, epochs=args.epochs,
                      learning_rate=args.learning_rate,
                      batch_size=args.batch_size, patience=args.patience,
                      val_fraction=args.val_fraction)
    params = train_from_dir(args.data, cfg)
    write_model(params, args.out)
    hist = params.meta.get("val_history", [])
    if hist:
        print(f"trained {len(hist) - 1} epochs; validation BCE "
              f"{hist[0]:.4f} -> {params.meta['best_val_loss']:.4f}")
    print(f"wrote {args.out}")
    return 0


def _cmd_predict(args) -> int:
    params = parse_params(Path(args.model).read_text(encoding="utf-8"))
    inst = _read_instance(args.instance)
    probs = predict_probs(params, build_graph(inst)).probs
    lines = [PROBS_HEADER, f"m {inst.m}", f"n {inst.n}"]
    for row in probs:
        lines.append(" ".join(format(v, ".17g") for v in row))
    _write(args.out, "\n".join(lines) + "\n")
    print(f"wrote {args.out}")
    return 0


def _solution_document(method: str, inst, sol, wall: float) -> str:
    doc = {
        "method": method,
        "objective": sol.objective,
        "wall_time_s": wall,
        "n_candidates": len(sol.bundles),
        "prices": [{"bundle": list(b.members()), "price": float(p)}
                   for b, p in zip(sol.bundles, sol.prices)],
        "assignment": {str(k): list(sol.assigned_bundle(k).members())
                       for k in range(1, inst.m + 1)},
        "surpluses": [float(s) for s in sol.surpluses],
    }
    return json.dumps(doc, indent=2) + "\n"


def _cmd_solve(args) -> int:
    inst = _read_instance(args.instance)
    model = None
    if args.method in ("fcp", "pcp", "fcp-ls"):
        if not args.model:
            raise BundlekitError(f"method {args.method} requires --model")
        model = parse_params(Path(args.model).read_text(encoding="utf-8"))

    t0 = time.perf_counter()
    if args.method == "mb":
        sol = solve_with_candidates(inst, CandidateSet.full_set(inst.n))
    elif args.method == "bsp":
        summary = bsp_summary(inst, solve_milp(build_bsp(inst)))
        wall = time.perf_counter() - t0
        doc = {"method": "bsp", "objective": summary["objective"],
               "wall_time_s": wall,
               "size_prices": [float(p) for p in summary["size_prices"]],
               "chosen_sizes": summary["chosen_sizes"]}
        _write(args.out, json.dumps(doc, indent=2) + "\n")
        print(f"bsp objective {summary['objective']:.6f}; wrote {args.out}")
        return 0
    else:
        probs = predict_probs(model, build_graph(inst))
        if args.method == "fcp":
            sol = solve_with_candidates(inst, fcp(probs))
        elif args.method == "pcp":
            sol = solve_with_candidates(inst, pcp(probs), subadd_mode="pcp_chain")
        else:
            sol = local_search(inst, probs, fcp(probs), max_iter=args.max_iter)
    wall = time.perf_counter() - t0
    _write(args.out, _solution_document(args.method, inst, sol, wall))
    print(f"{args.method} objective {sol.objective:.6f} in {wall:.2f}s; wrote {args.out}")
    return 0


def _cmd_bench(args) -> int:
    cfg = BenchConfig.from_json(args.config)
    report = run_benchmark(cfg)
    csv_text = report_to_csv(report)
    out = args.out or "bench.csv"
    _write(out, csv_text)
    means = {r.method: r.rr_vs_baseline for r in report.aggregates
             if r.instance_id == "mean"}
    summary = "  ".join(f"{m}: RR={v:.4f}" for m, v in means.items())
    print(f"wrote {out}  [{summary}]")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bundlekit",
        description="Bundle pricing: exact baselines, learned pruning, local search.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic instance")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--alpha-mode", choices=("equal", "random"), default="equal")
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen)

    l = sub.add_parser("label", help="generate and exactly label small instances")
    l.add_argument("--count", type=int, required=True)
    l.add_argument("--n", type=int, required=True)
    l.add_argument("--m", type=int, required=True)
    l.add_argument("--seed", type=int, default=0)
    l.add_argument("--out", required=True)
    l.set_defaults(func=_cmd_label)

    t = sub.add_parser("train", help="train the edge predictor on a labeled dataset")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--epochs", type=int, default=500)
    t.add_argument("--learning-rate", type=float, default=0.01)
    t.add_argument("--batch-size", type=int, default=512)
    t.add_argument("--patience", type=int, default=50)
    t.add_argument("--val-fraction", type=float, default=0.2)
    t.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="predict membership probabilities")
    p.add_argument("--model", required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    s = sub.add_parser("solve", help="solve one instance with one method")
    s.add_argument("--method", choices=("mb", "bsp", "fcp", "pcp", "fcp-ls"),
                   required=True)
    s.add_argument("--instance", required=True)
    s.add_argument("--model")
    s.add_argument("--max-iter", type=int, default=100)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_solve)

    b = sub.add_parser("bench", help="run a method-comparison benchmark")
    b.add_argument("--config", required=True)
    b.add_argument("--out")
    b.set_defaults(func=_cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BundlekitError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
