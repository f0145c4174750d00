"""Branch and bound over binary variables, plus the exact pricing oracle.

The solver explores nodes in best-bound order, branches on the most
fractional binary (ties to the lowest variable index) and never explores
subtrees concurrently, so identical inputs always produce identical
incumbents.  Node relaxations are solved with the two-phase simplex; models
whose row count dwarfs their variable count are solved through the LP dual,
which is substantially faster and returns the same optima.

``brute_force_pricing`` is the validation oracle: it maximizes the
fixed-assignment pricing LP over every assignment of segments to candidate
bundles.  Assignments are visited in decreasing order of the revenue bound
``sum_k alpha_k (R_kb - c_kb)`` so provably dominated assignments are never
priced, which keeps the oracle exact while avoiding most of the LP solves.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceLimitError, SolveError
from .instance import Instance, cost_table, reservation_table
from .lp import LpModel, preferred_lp_path, solve_lp, solve_lp_via_dual

__all__ = ["MilpModel", "MilpSolution", "solve_milp", "brute_force_pricing",
           "INT_TOL"]

INT_TOL = 1e-6  # binaries within this of {0,1} count as integral


@dataclass
class MilpModel:
    lp: LpModel
    binary_idx: list[int]
    big_m: dict[str, float] = field(default_factory=dict)

    def validate(self) -> None:
        self.lp.validate()
        for j in self.binary_idx:
            if not 0 <= j < self.lp.n_vars:
                raise ValueError(f"binary index {j} out of range")
            if self.lp.lb[j] < 0.0 or self.lp.ub[j] > 1.0:
                raise ValueError(
                    f"binary variable {self.lp.var_names[j]} must have bounds within [0, 1]")


@dataclass
class MilpSolution:
    status: str  # "optimal" | "infeasible" | "node_limit"
    x: np.ndarray | None
    objective: float | None
    best_bound: float
    nodes: int
    lp_iterations: int


def _pick_lp_solver(lp: LpModel, mode: str):
    if mode == "primal":
        return solve_lp
    if mode == "dual":
        return solve_lp_via_dual
    # "auto": small-but-tall models are fastest through their dual (the dual
    # tableau has one row per variable); everything else goes to solve_lp,
    # which itself picks the simplex or the HiGHS delegate by size.
    return solve_lp_via_dual if preferred_lp_path(lp) == "dual" else solve_lp


def solve_milp(model: MilpModel, abs_gap: float = 1e-6,
               node_limit: int = 200_000, lp_mode: str = "auto") -> MilpSolution:
    """Best-bound branch and bound on the declared binary variables."""
    model.validate()
    if abs_gap < 0:
        raise ValueError("abs_gap must be >= 0")
    lp0 = model.lp
    sign = 1.0 if lp0.sense == "max" else -1.0
    bidx = np.array(sorted(model.binary_idx), dtype=np.int64)
    lp_solve = _pick_lp_solver(lp0, lp_mode)

    lb0 = lp0.lb.copy()
    ub0 = lp0.ub.copy()

    def node_lp(fixings: dict[int, int]):
        lb = lb0.copy()
        ub = ub0.copy()
        for j, v in fixings.items():
            lb[j] = ub[j] = float(v)
        node = LpModel(lp0.sense, lp0.c, lp0.A, lp0.row_senses, lp0.b, lb, ub,
                       lp0.var_names, lp0.row_names, lp0.objective_constant)
        return lp_solve(node)

    counter = 0
    heap: list[tuple[float, int, dict[int, int]]] = [(-np.inf, counter, {})]
    inc_x = None
    inc_score = -np.inf
    top_bound = np.inf
    nodes = 0
    lp_iters = 0
    hit_limit = False

    while heap:
        neg_bound, _, fixings = heapq.heappop(heap)
        parent_bound = -neg_bound
        if parent_bound <= inc_score + abs_gap:
            top_bound = parent_bound
            break
        if nodes >= node_limit:
            hit_limit = True
            top_bound = parent_bound
            break
        sol = node_lp(fixings)
        nodes += 1
        lp_iters += sol.iterations
        if sol.status == "infeasible":
            continue
        if sol.status == "unbounded":
            raise SolveError("LP relaxation is unbounded; cannot bound the search")
        score = sign * sol.objective
        if score <= inc_score + abs_gap:
            continue
        frac = np.abs(sol.x[bidx] - np.round(sol.x[bidx])) if bidx.size else np.zeros(0)
        if frac.size == 0 or frac.max() <= INT_TOL:
            if score > inc_score:
                inc_score = score
                inc_x = sol.x
            continue
        j = int(bidx[int(np.argmax(frac))])  # most fractional; argmax ties -> lowest index
        for val in (0, 1):
            counter += 1
            child = dict(fixings)
            child[j] = val
            heapq.heappush(heap, (-score, counter, child))
    else:
        top_bound = inc_score  # frontier exhausted

    best_score = max(inc_score, top_bound) if inc_x is not None else top_bound
    if hit_limit:
        status = "node_limit"
    elif inc_x is None:
        status = "infeasible"
    else:
        status = "optimal"
    objective = sign * inc_score if inc_x is not None else None
    best_bound = sign * best_score if np.isfinite(best_score) else (
        sign * inc_score if inc_x is not None else np.nan)
    return MilpSolution(status, inc_x, objective, float(best_bound), nodes, lp_iters)


def brute_force_pricing(inst: Instance, candidates, max_assignments: int = 10**6):
    """Exact optimum of the restricted pricing problem by assignment enumeration.

    Evaluates the fixed-assignment LP for assignments of segments to candidate
    bundles, in decreasing order of the valid revenue bound
    ``sum_k alpha_k (R_k,b(k) - c_k,b(k))``; enumeration stops once the bound
    falls to the best LP value found, which certifies optimality.  Raises
    ResourceLimitError when ``|candidates| ** m`` exceeds ``max_assignments``.
    """
    from .formulations import (build_fixed_assignment_lp, gen_subadditivity,
                               pricing_from_fixed_assignment)

    bundles = candidates.bundles
    B = len(bundles)
    m = inst.m
    if B ** m > max_assignments:
        raise ResourceLimitError(
            f"{B}^{m} assignments exceed the enumeration guard {max_assignments}")
    subadd_rows = gen_subadditivity(candidates, "full")

    R = reservation_table(inst, bundles)
    C = cost_table(inst, bundles)
    pair_ub = inst.alpha[:, None] * (R - C)  # (m, B)
    order = np.argsort(-pair_ub, axis=1, kind="stable")  # ties keep lowest index
    sorted_ub = np.take_along_axis(pair_ub, order, axis=1)

    def assignment_of(ranks: tuple[int, ...]) -> list[int]:
        return [int(order[k, ranks[k]]) for k in range(m)]

    start = tuple([0] * m)
    heap = [(-float(sorted_ub[:, 0].sum()), start)]
    seen = {start}
    best_obj = -np.inf
    best_assign: list[int] | None = None
    lp_iters = 0
    evals = 0

    while heap:
        neg_ub, ranks = heapq.heappop(heap)
        if -neg_ub <= best_obj + 1e-12:
            break
        assign_idx = assignment_of(ranks)
        model = build_fixed_assignment_lp(
            inst, candidates, [bundles[i] for i in assign_idx],
            subadd_rows=subadd_rows)
        sol = solve_lp_via_dual(model)
        evals += 1
        lp_iters += sol.iterations
        if sol.status == "optimal" and sol.objective > best_obj:
            best_obj = sol.objective
            best_assign = assign_idx
        for k in range(m):
            if ranks[k] + 1 < B:
                nxt = ranks[:k] + (ranks[k] + 1,) + ranks[k + 1:]
                if nxt not in seen:
                    seen.add(nxt)
                    heapq.heappush(
                        heap,
                        (-float(sorted_ub[np.arange(m), nxt].sum()), nxt))

    if best_assign is None:
        best_assign = [0] * m  # all-empty is always feasible with zero profit

    final_model = build_fixed_assignment_lp(
        inst, candidates, [bundles[i] for i in best_assign],
        subadd_rows=subadd_rows)
    final = solve_lp(final_model)
    if final.status != "optimal":
        raise SolveError("oracle could not re-solve the winning assignment")
    sol = pricing_from_fixed_assignment(inst, candidates, best_assign, final)
    sol.meta.update({"oracle_lp_evals": evals,
                     "lp_iterations": lp_iters + final.iterations})
    return sol
