"""End-to-end pipeline: dataset labeling, training, method comparison, CSV.

``run_label_pipeline`` generates small instances, solves them exactly, and
persists (instance, label) file pairs.  ``run_benchmark`` runs a set of
pricing methods over seeded instances and emits a fixed-column CSV with
revenue/time ratios against a declared baseline plus mean and standard-error
aggregate rows.

Wall-clock timing wraps prediction, pruning and the solve call only (model
loading is excluded).  Because wall time is inherently noisy, the config can
select ``time_source = "work"``, which reports a deterministic work count
(simplex iterations + search nodes) instead and makes whole reports
byte-reproducible.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .formulations import CandidateSet, build_bsp, build_mb, pricing_from_milp
from .gcn import (GcnParams, LabeledExample, ProbMatrix, TrainConfig,
                  build_graph, make_labels, parse_params, predict_probs,
                  serialize_params, train)
from .instance import (GenConfig, Instance, gen_instance, parse_instance,
                       serialize_instance)
from .milp import solve_milp
from .strategies import fcp, local_search, pcp, solve_with_candidates

__all__ = [
    "LABEL_GUARD_N", "LABEL_GUARD_M", "METHODS",
    "BenchConfig", "BenchRow", "BenchReport",
    "run_label_pipeline", "load_dataset", "save_labels", "parse_labels",
    "run_benchmark", "report_to_csv", "run_method",
]

LABEL_GUARD_N = 6
LABEL_GUARD_M = 4
METHODS = ("mb", "bsp", "fcp", "pcp", "fcp-ls")
LABELS_HEADER = "bundlekit labels v1"

CSV_COLUMNS = ("instance_id", "method", "revenue", "time_s", "n_candidates",
               "rr_vs_baseline", "tr_vs_baseline")


# ---------------------------------------------------------------------------
# Labeled dataset files.
# ---------------------------------------------------------------------------

def save_labels(target: np.ndarray) -> str:
    m, n = target.shape
    lines = [LABELS_HEADER, f"m {m}", f"n {n}"]
    for row in target:
        lines.append(" ".join(str(int(round(v))) for v in row))
    return "\n".join(lines) + "\n"


def parse_labels(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != LABELS_HEADER:
        raise ConfigError(f"missing header {LABELS_HEADER!r}")
    m = int(lines[1].split()[1])
    n = int(lines[2].split()[1])
    rows = [[float(v) for v in ln.split()] for ln in lines[3:3 + m]]
    t = np.array(rows)
    if t.shape != (m, n) or not np.all((t == 0) | (t == 1)):
        raise ConfigError("label matrix must be 0/1 with the declared shape")
    return t


def run_label_pipeline(count: int, n: int, m: int, seed: int,
                       out_dir: str | Path) -> list[Path]:
    """Generate, exactly solve, and persist ``count`` labeled instances.

    Exact labeling is only allowed at sizes where the full mixed-bundling
    model is reliably solvable on this stack (n <= 6, m <= 4).
    """
    if n > LABEL_GUARD_N or m > LABEL_GUARD_M:
        raise ValueError(
            f"exact labeling is guarded to n <= {LABEL_GUARD_N}, m <= {LABEL_GUARD_M}")
    if count < 1:
        raise ValueError("count must be >= 1")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    cands = CandidateSet.full_set(n)
    for i in range(count):
        inst = gen_instance(GenConfig(seed=seed + i), n, m)
        milp_sol = solve_milp(build_mb(inst, cands))
        sol = pricing_from_milp(inst, cands, milp_sol)
        ex = make_labels(inst, sol)
        stem = out / f"inst_{i:04d}"
        (stem.with_suffix(".instance.txt")).write_text(serialize_instance(inst),
                                                       encoding="utf-8")
        (stem.with_suffix(".labels.txt")).write_text(save_labels(ex.target),
                                                     encoding="utf-8")
        paths.append(stem)
    return paths


def load_dataset(data_dir: str | Path) -> list[LabeledExample]:
    data = Path(data_dir)
    examples = []
    for inst_path in sorted(data.glob("*.instance.txt")):
        label_path = inst_path.with_name(
            inst_path.name.replace(".instance.txt", ".labels.txt"))
        if not label_path.exists():
            raise FileNotFoundError(f"missing labels for {inst_path.name}: {label_path}")
        inst = parse_instance(inst_path.read_text(encoding="utf-8"))
        target = parse_labels(label_path.read_text(encoding="utf-8"))
        examples.append(LabeledExample(graph=build_graph(inst), target=target))
    if not examples:
        raise FileNotFoundError(f"no *.instance.txt files under {data}")
    return examples


# ---------------------------------------------------------------------------
# Benchmark.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchConfig:
    seed: int = 0
    count: int = 30
    n: int = 6
    m: int = 4
    methods: tuple[str, ...] = ("mb", "fcp", "pcp", "fcp-ls")
    baseline: str = "mb"
    model_path: str | None = None
    max_iter: int = 100
    time_source: str = "wall"  # "wall" | "work"

    def __post_init__(self):
        for meth in self.methods:
            if meth not in METHODS:
                raise ConfigError(f"unknown method {meth!r}; choose from {METHODS}")
        if self.baseline not in self.methods:
            raise ConfigError("baseline must be one of the requested methods")
        if self.time_source not in ("wall", "work"):
            raise ConfigError("time_source must be 'wall' or 'work'")
        if self.count < 1 or self.n < 1 or self.m < 1:
            raise ConfigError("count, n and m must be >= 1")
        needs_model = any(meth in ("fcp", "pcp", "fcp-ls") for meth in self.methods)
        if needs_model and not self.model_path:
            raise ConfigError("prediction-based methods require model_path")

    @classmethod
    def from_json(cls, path: str | Path) -> "BenchConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        raw["methods"] = tuple(raw.get("methods", cls.methods))
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(f"bad benchmark config: {exc}") from None


@dataclass
class BenchRow:
    instance_id: str
    method: str
    revenue: float
    time_s: float
    n_candidates: int
    rr_vs_baseline: float
    tr_vs_baseline: float


@dataclass
class BenchReport:
    config: BenchConfig
    rows: list[BenchRow]
    aggregates: list[BenchRow] = field(default_factory=list)


def _work_units(meta: dict) -> float:
    work = 1 + meta.get("lp_iterations", 0) + meta.get("nodes", 0)
    work += meta.get("search_lp_iterations", 0)
    return float(work)


def run_method(method: str, inst: Instance, model: GcnParams | None,
               max_iter: int = 100):
    """Run one pricing method; returns (revenue, wall_s, work, n_candidates).

    The timer covers prediction, pruning and the solve; not model loading.
    """
    t0 = time.perf_counter()
    if method == "mb":
        sol = solve_with_candidates(inst, CandidateSet.full_set(inst.n))
        n_cands = 1 << inst.n
    elif method == "bsp":
        milp_sol = solve_milp(build_bsp(inst))
        wall = time.perf_counter() - t0
        meta = {"lp_iterations": milp_sol.lp_iterations, "nodes": milp_sol.nodes}
        return float(milp_sol.objective), wall, _work_units(meta), inst.n + 1
    else:
        if model is None:
            raise ValueError(f"method {method!r} needs a trained model")
        probs = predict_probs(model, build_graph(inst))
        if method == "fcp":
            cands = fcp(probs)
            sol = solve_with_candidates(inst, cands)
            n_cands = len(cands)
        elif method == "pcp":
            cands = pcp(probs)
            sol = solve_with_candidates(inst, cands, subadd_mode="pcp_chain")
            n_cands = len(cands)
        elif method == "fcp-ls":
            init = fcp(probs)
            sol = local_search(inst, probs, init, max_iter=max_iter)
            n_cands = sol.meta["pool_size"]
        else:
            raise ValueError(f"unknown method {method!r}")
    wall = time.perf_counter() - t0
    return float(sol.objective), wall, _work_units(sol.meta), n_cands


def run_benchmark(cfg: BenchConfig, model: GcnParams | None = None) -> BenchReport:
    """Run every requested method on every seeded instance.

    ``model`` may be passed directly; otherwise it is loaded from
    ``cfg.model_path`` (outside the timed region).
    """
    if model is None and cfg.model_path:
        path = Path(cfg.model_path)
        if not path.exists():
            raise FileNotFoundError(f"model file not found: {path}")
        model = parse_params(path.read_text(encoding="utf-8"))

    raw: dict[tuple[int, str], tuple[float, float, float, int]] = {}
    for i in range(cfg.count):
        inst = gen_instance(GenConfig(seed=cfg.seed + i), cfg.n, cfg.m)
        for method in cfg.methods:
            raw[(i, method)] = run_method(method, inst, model,
                                          max_iter=cfg.max_iter)

    rows: list[BenchRow] = []
    for i in range(cfg.count):
        base_rev, base_wall, base_work, _ = raw[(i, cfg.baseline)]
        base_time = base_wall if cfg.time_source == "wall" else base_work
        for method in cfg.methods:
            rev, wall, work, n_cands = raw[(i, method)]
            t = wall if cfg.time_source == "wall" else work
            rows.append(BenchRow(
                instance_id=str(i), method=method, revenue=rev, time_s=t,
                n_candidates=n_cands,
                rr_vs_baseline=rev / base_rev,
                tr_vs_baseline=t / base_time,
            ))

    aggregates = []
    for method in cfg.methods:
        sub = [r for r in rows if r.method == method]
        cols = {
            "revenue": np.array([r.revenue for r in sub]),
            "time_s": np.array([r.time_s for r in sub]),
            "n_candidates": np.array([r.n_candidates for r in sub], dtype=float),
            "rr": np.array([r.rr_vs_baseline for r in sub]),
            "tr": np.array([r.tr_vs_baseline for r in sub]),
        }

        def sem(v):
            if v.size < 2:
                return 0.0
            return float(np.std(v, ddof=1) / math.sqrt(v.size))

        aggregates.append(BenchRow("mean", method,
                                   float(cols["revenue"].mean()),
                                   float(cols["time_s"].mean()),
                                   float(cols["n_candidates"].mean()),
                                   float(cols["rr"].mean()),
                                   float(cols["tr"].mean())))
        aggregates.append(BenchRow("sem", method,
                                   sem(cols["revenue"]), sem(cols["time_s"]),
                                   sem(cols["n_candidates"]),
                                   sem(cols["rr"]), sem(cols["tr"])))
    return BenchReport(config=cfg, rows=rows, aggregates=aggregates)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def report_to_csv(report: BenchReport) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in report.rows + report.aggregates:
        n_c = _fmt(r.n_candidates) if r.instance_id in ("mean", "sem") \
            else str(int(r.n_candidates))
        lines.append(",".join([
            r.instance_id, r.method, _fmt(r.revenue), _fmt(r.time_s), n_c,
            _fmt(r.rr_vs_baseline), _fmt(r.tr_vs_baseline)]))
    return "\n".join(lines) + "\n"


def train_from_dir(data_dir: str | Path, cfg: TrainConfig) -> GcnParams:
    """Convenience wrapper: load a labeled dataset and train on it."""
    return train(load_dataset(data_dir), cfg)


def write_model(params: GcnParams, path: str | Path) -> None:
    Path(path).write_text(serialize_params(params), encoding="utf-8")
