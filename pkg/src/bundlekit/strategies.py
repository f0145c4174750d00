"""Prediction-guided pruning and local search.

Given a predicted membership-probability matrix, two pruning rules shrink the
exponential bundle space before the exact solver runs:

* fixed-cutoff: each segment contributes the single bundle of products whose
  probability clears the cutoff (falling back to its top product), giving at
  most one candidate per segment;
* progressive-cutoff: each segment contributes every prefix of its
  probability-sorted above-cutoff products, giving a strictly nested chain
  per segment whose within-chain sub-additivity reduces to monotone price
  steps.

The local search starts from the fixed-cutoff assignment and greedily adds
the most likely unselected product or drops the least likely selected one,
segment by segment, accepting the first strict improvement measured by the
fixed-assignment pricing LP (a valid lower bound of the restricted MILP),
and finally re-prices the surviving bundle pool exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SolveError
from .formulations import (CandidateSet, PricingSolution,
                           build_fixed_assignment_lp,
                           pricing_from_fixed_assignment, pricing_from_milp)
from .gcn import ProbMatrix
from .instance import Bundle, Instance
from .lp import solve_lp
from .milp import solve_milp

__all__ = ["fcp", "pcp", "solve_with_candidates", "local_search", "rr_tr",
           "SearchState", "DEFAULT_CUTOFF", "IMPROVE_EPS"]

DEFAULT_CUTOFF = 0.5
IMPROVE_EPS = 1e-9


def _segment_bundle(row: np.ndarray, cutoff: float) -> Bundle:
    members = [j + 1 for j in range(row.size) if row[j] >= cutoff]
    if not members:
        members = [int(np.argmax(row)) + 1]  # ties -> lowest index
    return Bundle.from_members(members)


def fcp(probs: ProbMatrix, cutoff: float = DEFAULT_CUTOFF) -> CandidateSet:
    """Fixed-cutoff pruning: one candidate bundle per segment, plus opt-out.

    The returned pool has at most m+1 bundles and records each segment's own
    bundle so the local search can start from it.
    """
    p = probs.probs
    per_segment = [_segment_bundle(p[k], cutoff) for k in range(p.shape[0])]
    return CandidateSet.from_bundles(per_segment, per_segment=per_segment)


def pcp(probs: ProbMatrix, cutoff: float = DEFAULT_CUTOFF) -> CandidateSet:
    """Progressive-cutoff pruning: nested prefix bundles per segment.

    Products are sorted by descending probability (ties toward the lower
    index); every prefix of the above-cutoff products becomes a candidate.
    A segment with nothing above the cutoff falls back to its single top
    product, mirroring the fixed-cutoff fallback.  Pool size is at most
    m*(n+1).
    """
    p = probs.probs
    m, n = p.shape
    prefix_lists: list[list[Bundle]] = []
    for k in range(m):
        order = np.argsort(-p[k], kind="stable")
        kept = [int(j) for j in order if p[k, j] >= cutoff]
        if not kept:
            kept = [int(np.argmax(p[k]))]
        mask = 0
        prefixes = []
        for j in kept:
            mask |= 1 << j
            prefixes.append(Bundle(mask))
        prefix_lists.append(prefixes)

    all_bundles = [b for prefixes in prefix_lists for b in prefixes]
    per_segment = [prefixes[-1] for prefixes in prefix_lists]
    cands = CandidateSet.from_bundles(all_bundles, per_segment=per_segment)
    index = {b.mask: i for i, b in enumerate(cands.bundles)}
    chains = [[index[b.mask] for b in prefixes] for prefixes in prefix_lists]
    return CandidateSet(cands.bundles, per_segment=per_segment, chains=chains)


def solve_with_candidates(inst: Instance, cands: CandidateSet,
                          subadd_mode: str = "full",
                          abs_gap: float = 1e-6) -> PricingSolution:
    """Exact mixed-bundling solve restricted to the candidate pool."""
    if len(cands) == 0:
        raise ValueError("empty candidate set")
    from .formulations import build_mb
    milp_sol = solve_milp(build_mb(inst, cands, subadd_mode=subadd_mode),
                          abs_gap=abs_gap)
    if milp_sol.status != "optimal":
        raise SolveError(f"restricted pricing solve ended with {milp_sol.status}")
    sol = pricing_from_milp(inst, cands, milp_sol)
    sol.meta["n_candidates"] = len(cands)
    return sol


@dataclass
class SearchState:
    """Mutable local-search state: one owner per search run."""

    assignment: list[Bundle]             # current bundle per segment
    revenue: float                       # fixed-assignment LP value (-inf if infeasible)
    iterations: int = 0
    accepted: list[dict] = field(default_factory=list)
    terminated_by: str = "running"


def _lp_eval(inst: Instance, pool: list[Bundle], assignment: list[Bundle]):
    cands = CandidateSet.from_bundles(pool)
    model = build_fixed_assignment_lp(inst, cands, assignment)
    sol = solve_lp(model)
    if sol.status != "optimal":
        return None, -np.inf, 0
    return (cands, sol), float(sol.objective), sol.iterations


def local_search(inst: Instance, probs: ProbMatrix, init: CandidateSet,
                 max_iter: int = 100,
                 improve_eps: float = IMPROVE_EPS) -> PricingSolution:
    """Segment-wise greedy search over add/drop moves, LP-evaluated.

    ``init`` must carry per-segment origin bundles (the fixed-cutoff output);
    each segment starts at its own bundle.  Neighbor order within a segment:
    add the highest-probability unselected product first, then drop the
    lowest-probability selected one.  The first move improving the pool LP
    value by more than ``improve_eps`` is accepted and the sweep restarts.
    Ends after a full sweep with no improvement or ``max_iter`` sweeps; the
    final assignment's pool is then re-priced by the restricted exact solve.
    """
    if init.per_segment is None:
        raise ValueError("init must carry per-segment bundles (fixed-cutoff output)")
    p = probs.probs
    m, n = p.shape
    if len(init.per_segment) != m:
        raise ValueError("init does not match the probability matrix")

    pool: list[Bundle] = list(init.bundles)
    pool_masks = {b.mask for b in pool}
    state = SearchState(assignment=list(init.per_segment), revenue=-np.inf)
    work = 0

    ctx, rev0, iters = _lp_eval(inst, pool, state.assignment)
    work += iters
    state.revenue = rev0
    init_eval = ctx

    if max_iter == 0:
        state.terminated_by = "max_iter"
        if init_eval is not None:
            cands0, lp0 = init_eval
            sol = pricing_from_fixed_assignment(
                inst, cands0, [cands0.index_of(b) for b in state.assignment], lp0)
        else:
            # Infeasible start and no search budget: fall back to re-pricing.
            sol = solve_with_candidates(inst, CandidateSet.from_bundles(pool))
        sol.meta.update(_search_meta(state, pool, work))
        return sol

    while state.iterations < max_iter:
        state.iterations += 1
        improve = False
        for k in range(m):
            cur = state.assignment[k]
            moves = []
            unselected = [j for j in range(1, n + 1) if j not in cur]
            if unselected:
                j_add = max(unselected, key=lambda j: (p[k, j - 1], -j))
                moves.append(("add", j_add, cur.add(j_add)))
            selected = list(cur.members())
            if selected:
                j_drop = min(selected, key=lambda j: (p[k, j - 1], j))
                moves.append(("drop", j_drop, cur.drop(j_drop)))
            for action, j, nb in moves:
                trial_pool = pool if nb.mask in pool_masks else pool + [nb]
                trial_assign = list(state.assignment)
                trial_assign[k] = nb
                _, rev, iters = _lp_eval(inst, trial_pool, trial_assign)
                work += iters
                if rev > state.revenue + improve_eps:
                    if nb.mask not in pool_masks:
                        pool = trial_pool
                        pool_masks.add(nb.mask)
                    state.assignment = trial_assign
                    state.revenue = rev
                    state.accepted.append({
                        "iteration": state.iterations, "segment": k + 1,
                        "action": action, "product": j, "revenue": rev,
                    })
                    improve = True
                    break
            if improve:
                break
        if not improve:
            state.terminated_by = "cycle"
            break
    else:
        state.terminated_by = "max_iter"

    sol = solve_with_candidates(inst, CandidateSet.from_bundles(pool))
    sol.meta.update(_search_meta(state, pool, work))
    return sol


def _search_meta(state: SearchState, pool: list[Bundle], lp_work: int) -> dict:
    return {
        "search_iterations": state.iterations,
        "search_terminated_by": state.terminated_by,
        "search_revenue": state.revenue,
        "accepted_revenues": [a["revenue"] for a in state.accepted],
        "accepted_moves": list(state.accepted),
        "search_lp_iterations": lp_work,
        "pool_size": len(pool),
    }


def rr_tr(rev_a: float, time_a: float, rev_b: float, time_b: float):
    """Revenue ratio and time ratio of approach A against baseline B."""
    if rev_b <= 0:
        raise ValueError("baseline revenue must be positive")
    if time_b <= 0:
        raise ValueError("baseline time must be positive")
    return rev_a / rev_b, time_a / time_b
