"""Optimization models for bundle pricing.

Three builders translate an :class:`~bundlekit.instance.Instance` and a
candidate bundle set into solver-ready programs:

* :func:`build_mb` -- the mixed-bundling MILP: every candidate bundle gets
  its own price, binary assignment variables pick one bundle per segment,
  and linear rows enforce surplus-maximizing self-selection (incentive
  compatibility), individual rationality, and price sub-additivity.
* :func:`build_bsp` -- the bundle-size-pricing MILP: all bundles of equal
  cardinality share one price; each segment's valuation of "a size-s bundle"
  is its best attainable reservation at that size.
* :func:`build_fixed_assignment_lp` -- prices an externally fixed
  segment-to-bundle assignment; a pure LP whose optimum never exceeds the
  mixed-bundling optimum over the same candidates.

Sub-additivity rows come from :func:`gen_subadditivity`: either every 2-way
partition of a candidate into two disjoint nonempty candidates, or (for
prefix-chain candidate sets) monotone price chains within each segment with
the partition rows kept across the pooled candidates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instance import Bundle, EMPTY_BUNDLE, Instance, cost_table, reservation_table
from .lp import TOL_FEAS, LpBuilder, LpModel, LpSolution
from .milp import INT_TOL, MilpModel, MilpSolution

__all__ = [
    "CandidateSet",
    "PricingSolution",
    "SubaddRow",
    "gen_subadditivity",
    "build_mb",
    "build_bsp",
    "build_fixed_assignment_lp",
    "pricing_from_milp",
    "pricing_from_fixed_assignment",
    "bsp_summary",
]


@dataclass
class CandidateSet:
    """An ordered, duplicate-free bundle pool; the empty bundle sits at index 0.

    ``per_segment`` optionally records which bundle each segment's pruning
    produced (used to seed the local search).  ``chains`` optionally records
    per-segment strictly nested prefix chains as indices into ``bundles``
    (used by the chain sub-additivity mode).
    """

    bundles: list[Bundle]
    per_segment: list[Bundle] | None = None
    chains: list[list[int]] | None = None

    def __post_init__(self):
        if not self.bundles:
            raise ValueError("candidate set must not be empty")
        if not self.bundles[0].is_empty:
            raise ValueError("candidate set must start with the empty bundle")
        if len({b.mask for b in self.bundles}) != len(self.bundles):
            raise ValueError("candidate set contains duplicate bundles")
        if self.chains is not None:
            for chain in self.chains:
                for a, b in zip(chain, chain[1:]):
                    ba, bb = self.bundles[a], self.bundles[b]
                    if not (ba.issubset(bb) and ba.mask != bb.mask):
                        raise ValueError("chain entries must be strictly nested")

    @classmethod
    def from_bundles(cls, bundles, per_segment=None, chains=None) -> "CandidateSet":
        """Deduplicate (keeping first-seen order) and put the empty bundle first."""
        out = [EMPTY_BUNDLE]
        seen = {0}
        for b in bundles:
            if b.mask not in seen:
                seen.add(b.mask)
                out.append(b)
        return cls(out, per_segment=per_segment, chains=chains)

    @classmethod
    def full_set(cls, n: int) -> "CandidateSet":
        return cls([Bundle(mask) for mask in range(1 << n)])

    def index_of(self, b: Bundle) -> int:
        for i, cand in enumerate(self.bundles):
            if cand.mask == b.mask:
                return i
        raise ValueError(f"{b!r} is not a candidate")

    def __len__(self) -> int:
        return len(self.bundles)


@dataclass(frozen=True)
class SubaddRow:
    """Price row  p[lhs] <= sum of p[rhs];  indices into the candidate list."""

    lhs: int
    rhs: tuple[int, ...]
    kind: str  # "partition" | "chain"


def gen_subadditivity(cands: CandidateSet, mode: str = "full") -> list[SubaddRow]:
    """Sub-additivity rows for a candidate set.

    ``full``: one row per unordered pair of disjoint nonempty candidates whose
    union is itself a candidate.  ``pcp_chain``: monotone price rows along each
    segment's nested chain, plus the full 2-way partition rows over the pooled
    candidates (nested chain members are never disjoint, so partition rows
    only ever connect bundles across chains).
    """
    if mode not in ("full", "pcp_chain"):
        raise ValueError(f"unknown sub-additivity mode {mode!r}")
    bundles = cands.bundles
    by_mask = {b.mask: i for i, b in enumerate(bundles)}
    rows: list[SubaddRow] = []
    seen: set[tuple[int, tuple[int, ...]]] = set()

    if mode == "pcp_chain":
        if cands.chains is None:
            raise ValueError("pcp_chain mode requires per-segment chains")
        for chain in cands.chains:
            for lo, hi in zip(chain, chain[1:]):
                key = (lo, (hi,))
                if key not in seen:
                    seen.add(key)
                    rows.append(SubaddRow(lo, (hi,), "chain"))

    for i in range(1, len(bundles)):
        for j in range(i + 1, len(bundles)):
            bi, bj = bundles[i], bundles[j]
            if not bi.isdisjoint(bj):
                continue
            union = bi.mask | bj.mask
            target = by_mask.get(union)
            if target is None:
                continue
            key = (target, (i, j))
            if key not in seen:
                seen.add(key)
                rows.append(SubaddRow(target, (i, j), "partition"))
    return rows


# ---------------------------------------------------------------------------
# Mixed bundling.
# ---------------------------------------------------------------------------

def build_mb(inst: Instance, cands: CandidateSet,
             subadd_mode: str = "full") -> MilpModel:
    """Mixed-bundling MILP restricted to ``cands``.

    Variables: assignment binaries theta[k,b], bundle prices p[b], effective
    prices P[k,b], segment surpluses s[k], per-pair profits Z[k,b].  The
    conditional "pay the price of your bundle" rows are linearized with the
    big-M constant ``R_max = max reservation over (segment, candidate)``,
    the tightest valid choice.  The empty bundle's price is fixed to zero.
    """
    if len(cands) == 0:
        raise ValueError("empty candidate set")
    for b in cands.bundles:
        inst.check_bundle(b)
    m, B = inst.m, len(cands)
    R = reservation_table(inst, cands.bundles)
    C = cost_table(inst, cands.bundles)
    r_max = float(R.max())

    bld = LpBuilder("max")
    theta = np.empty((m, B), dtype=np.int64)
    for k in range(m):
        for b in range(B):
            theta[k, b] = bld.add_var(f"theta[{k+1},{b}]", lb=0.0, ub=1.0)
    p = np.array([bld.add_var(f"p[{b}]", lb=0.0, ub=0.0 if b == 0 else np.inf)
                  for b in range(B)], dtype=np.int64)
    P = np.empty((m, B), dtype=np.int64)
    for k in range(m):
        for b in range(B):
            P[k, b] = bld.add_var(f"P[{k+1},{b}]", lb=0.0)
    s = np.array([bld.add_var(f"s[{k+1}]", lb=0.0) for k in range(m)],
                 dtype=np.int64)
    Z = np.empty((m, B), dtype=np.int64)
    for k in range(m):
        for b in range(B):
            Z[k, b] = bld.add_var(f"Z[{k+1},{b}]", lb=-np.inf,
                                  obj=float(inst.alpha[k]))

    for k in range(m):
        bld.add_row(f"assign[{k+1}]",
                    [(int(theta[k, b]), 1.0) for b in range(B)], "=", 1.0)
    for k in range(m):
        for b in range(B):
            bld.add_row(f"ic[{k+1},{b}]",
                        [(int(s[k]), 1.0), (int(p[b]), 1.0)], ">=", float(R[k, b]))
    for k in range(m):
        for b in range(B):
            # p_b - R_max (1 - theta) <= P  <=>  p_b + R_max theta - P <= R_max
            bld.add_row(f"bigm[{k+1},{b}]",
                        [(int(p[b]), 1.0), (int(theta[k, b]), r_max),
                         (int(P[k, b]), -1.0)], "<=", r_max)
    for k in range(m):
        for b in range(B):
            bld.add_row(f"cap[{k+1},{b}]",
                        [(int(P[k, b]), 1.0), (int(p[b]), -1.0)], "<=", 0.0)
    for k in range(m):
        coeffs = [(int(s[k]), 1.0)]
        coeffs += [(int(theta[k, b]), -float(R[k, b])) for b in range(B)]
        coeffs += [(int(P[k, b]), 1.0) for b in range(B)]
        bld.add_row(f"surplus[{k+1}]", coeffs, "=", 0.0)
    for k in range(m):
        for b in range(B):
            bld.add_row(f"ir[{k+1},{b}]",
                        [(int(theta[k, b]), float(R[k, b])), (int(P[k, b]), -1.0)],
                        ">=", 0.0)
    for k in range(m):
        for j in range(m):
            coeffs = [(int(s[k]), 1.0)]
            coeffs += [(int(theta[j, b]), -float(R[k, b])) for b in range(B)]
            coeffs += [(int(P[j, b]), 1.0) for b in range(B)]
            bld.add_row(f"cross[{k+1},{j+1}]", coeffs, ">=", 0.0)
    for k in range(m):
        for b in range(B):
            bld.add_row(f"zdef[{k+1},{b}]",
                        [(int(Z[k, b]), 1.0), (int(P[k, b]), -1.0),
                         (int(theta[k, b]), float(C[k, b]))], "=", 0.0)
    for row in gen_subadditivity(cands, subadd_mode):
        coeffs = [(int(p[row.lhs]), 1.0)] + [(int(p[r]), -1.0) for r in row.rhs]
        bld.add_row(f"subadd[{row.lhs}<={'+'.join(map(str, row.rhs))}]",
                    coeffs, "<=", 0.0)

    return MilpModel(bld.build(), [int(t) for t in theta.ravel()],
                     big_m={"R_max": r_max})


def _mb_layout(m: int, B: int) -> dict[str, np.ndarray]:
    theta = np.arange(m * B).reshape(m, B)
    p = m * B + np.arange(B)
    P = m * B + B + np.arange(m * B).reshape(m, B)
    s = 2 * m * B + B + np.arange(m)
    Z = 2 * m * B + B + m + np.arange(m * B).reshape(m, B)
    return {"theta": theta, "p": p, "P": P, "s": s, "Z": Z}


# ---------------------------------------------------------------------------
# Pricing solutions.
# ---------------------------------------------------------------------------

@dataclass
class PricingSolution:
    """Prices and assignment extracted from a solved pricing model."""

    bundles: list[Bundle]
    prices: np.ndarray          # (B,)
    assignment: list[int]       # candidate index chosen by each segment
    theta: np.ndarray           # (m, B) 0/1
    eff_prices: np.ndarray      # (m, B)
    surpluses: np.ndarray       # (m,)
    profits: np.ndarray         # (m, B)
    objective: float
    meta: dict = field(default_factory=dict)

    def assigned_bundle(self, k: int) -> Bundle:
        """Bundle chosen by segment ``k`` (1-based)."""
        return self.bundles[self.assignment[k - 1]]

    def validate(self, inst: Instance, tol: float = 1e-6) -> None:
        m, B = inst.m, len(self.bundles)
        R = reservation_table(inst, self.bundles)
        if self.theta.shape != (m, B):
            raise ValueError("theta shape mismatch")
        if np.any(np.abs(self.theta.sum(axis=1) - 1.0) > tol):
            raise ValueError("each segment must choose exactly one bundle")
        if np.any(self.prices < -tol) or abs(self.prices[0]) > tol:
            raise ValueError("prices must be nonnegative with a free empty bundle")
        if np.any(self.surpluses < -tol):
            raise ValueError("surpluses must be nonnegative")
        for k in range(m):
            chosen = self.assignment[k]
            gain = R[k, chosen] - self.prices[chosen]
            if gain < -tol:
                raise ValueError(f"segment {k+1} buys a bundle it cannot afford")
            if abs(self.surpluses[k] - gain) > tol:
                raise ValueError(f"segment {k+1} surplus does not match its choice")
            best = float(np.max(R[k] - self.prices))
            if self.surpluses[k] < best - tol:
                raise ValueError(f"segment {k+1} would deviate to a better bundle")
            if self.bundles[chosen].is_empty and abs(self.surpluses[k]) > tol:
                raise ValueError(f"segment {k+1} opted out with nonzero surplus")


def pricing_from_milp(inst: Instance, cands: CandidateSet,
                      milp_sol: MilpSolution) -> PricingSolution:
    """Read a PricingSolution out of a solved mixed-bundling MILP."""
    if milp_sol.x is None:
        raise ValueError(f"no incumbent to extract (status {milp_sol.status})")
    m, B = inst.m, len(cands)
    lay = _mb_layout(m, B)
    x = milp_sol.x
    theta = x[lay["theta"]]
    if np.any(np.abs(theta - np.round(theta)) > 10 * INT_TOL):
        raise ValueError("assignment variables are not integral")
    theta = np.round(theta)
    assignment = [int(np.argmax(theta[k])) for k in range(m)]
    return PricingSolution(
        bundles=list(cands.bundles),
        prices=np.maximum(x[lay["p"]], 0.0),
        assignment=assignment,
        theta=theta,
        eff_prices=np.maximum(x[lay["P"]], 0.0),
        surpluses=np.maximum(x[lay["s"]], 0.0),
        profits=x[lay["Z"]],
        objective=float(milp_sol.objective),
        meta={"nodes": milp_sol.nodes, "lp_iterations": milp_sol.lp_iterations,
              "best_bound": milp_sol.best_bound, "status": milp_sol.status},
    )


def pricing_from_fixed_assignment(inst: Instance, cands: CandidateSet,
                                  assignment: list[int],
                                  lp_sol: LpSolution) -> PricingSolution:
    """Assemble a PricingSolution from a solved fixed-assignment LP."""
    if lp_sol.x is None:
        raise ValueError(f"no LP solution to extract (status {lp_sol.status})")
    m, B = inst.m, len(cands)
    C = cost_table(inst, cands.bundles)
    prices = np.maximum(lp_sol.x[:B], 0.0)
    surpluses = np.maximum(lp_sol.x[B:B + m], 0.0)
    theta = np.zeros((m, B))
    eff = np.zeros((m, B))
    profits = np.zeros((m, B))
    for k in range(m):
        b = assignment[k]
        theta[k, b] = 1.0
        eff[k, b] = prices[b]
        profits[k, b] = prices[b] - C[k, b]
    return PricingSolution(
        bundles=list(cands.bundles), prices=prices, assignment=list(assignment),
        theta=theta, eff_prices=eff, surpluses=surpluses, profits=profits,
        objective=float(lp_sol.objective),
        meta={"lp_iterations": lp_sol.iterations},
    )


# ---------------------------------------------------------------------------
# Fixed-assignment LP.
# ---------------------------------------------------------------------------

def build_fixed_assignment_lp(inst: Instance, cands: CandidateSet,
                              assignment: list[Bundle],
                              subadd_mode: str = "full",
                              subadd_rows: list[SubaddRow] | None = None) -> LpModel:
    """Price a fixed segment-to-bundle assignment (no integer variables).

    Maximizes expected profit subject to: every segment's surplus is at least
    what any candidate offers (lower bound), exactly what its assigned bundle
    offers (assignment binding), sub-additive prices, and a free empty bundle.
    Infeasible when no price vector makes the assignment self-selecting.
    ``subadd_rows`` lets callers that price many assignments over one pool
    reuse precomputed rows.
    """
    if len(assignment) != inst.m:
        raise ValueError(f"assignment must cover all {inst.m} segments")
    by_mask = {b.mask: i for i, b in enumerate(cands.bundles)}
    assign_idx = []
    for k, b in enumerate(assignment):
        idx = by_mask.get(b.mask)
        if idx is None:
            raise ValueError(f"segment {k+1}: assigned {b!r} is not a candidate")
        assign_idx.append(idx)

    m, B = inst.m, len(cands)
    R = reservation_table(inst, cands.bundles)
    C = cost_table(inst, cands.bundles)
    if subadd_rows is None:
        subadd_rows = gen_subadditivity(cands, subadd_mode)

    nv = B + m  # prices then surpluses
    c = np.zeros(nv)
    const = 0.0
    for k in range(m):
        c[assign_idx[k]] += float(inst.alpha[k])
        const -= float(inst.alpha[k] * C[k, assign_idx[k]])

    n_rows = m * B + m + len(subadd_rows)
    A = np.zeros((n_rows, nv))
    b_vec = np.empty(n_rows)
    # Lower-bound rows: s_k + p_i >= R_ki, laid out k-major.
    rows_lb = np.arange(m * B)
    A[rows_lb, np.tile(np.arange(B), m)] = 1.0
    A[rows_lb, B + np.repeat(np.arange(m), B)] = 1.0
    b_vec[: m * B] = R.ravel()
    # Binding rows: s_k + p_{b(k)} <= R_{k,b(k)}.
    for k in range(m):
        r = m * B + k
        A[r, assign_idx[k]] = 1.0
        A[r, B + k] = 1.0
        b_vec[r] = R[k, assign_idx[k]]
    for t, row in enumerate(subadd_rows):
        r = m * B + m + t
        A[r, row.lhs] += 1.0
        for rr in row.rhs:
            A[r, rr] -= 1.0
        b_vec[r] = 0.0

    ub = np.full(nv, np.inf)
    ub[0] = 0.0  # empty bundle is free
    senses = [">="] * (m * B) + ["<="] * m + ["<="] * len(subadd_rows)
    names = ([f"lb[{k+1},{i}]" for k in range(m) for i in range(B)]
             + [f"bind[{k+1}]" for k in range(m)]
             + [f"subadd{t}" for t in range(len(subadd_rows))])
    model = LpModel(
        sense="max", c=c, A=A, row_senses=senses, b=b_vec,
        lb=np.zeros(nv), ub=ub,
        var_names=[f"p[{i}]" for i in range(B)] + [f"s[{k+1}]" for k in range(m)],
        row_names=names, objective_constant=const,
    )
    model.validate()
    return model


# ---------------------------------------------------------------------------
# Bundle-size pricing.
# ---------------------------------------------------------------------------

def size_reservations(inst: Instance) -> tuple[np.ndarray, np.ndarray]:
    """Per-segment valuations and seller costs of the best bundle of each size.

    Returns (R, C) of shape (m, n+1).  Size-s value for segment k is the
    reservation of its s highest-utility products (utility ties broken toward
    the lowest product index); the cost is the matching unit costs plus the
    serving cost.  Size 0 is the empty bundle: worthless and costless.
    """
    n, m = inst.n, inst.m
    R = np.zeros((m, n + 1))
    C = np.zeros((m, n + 1))
    f = np.sqrt if inst.reservation_kind == "sqrt" else (lambda v: v)
    for k in range(m):
        order = np.argsort(-inst.u[k], kind="stable")
        u_sorted = inst.u[k, order]
        c_sorted = inst.c_unit[order]
        R[k, 1:] = f(np.cumsum(u_sorted))
        C[k, 1:] = np.cumsum(c_sorted) + inst.c_serve[k]
    return R, C


def build_bsp(inst: Instance) -> MilpModel:
    """Bundle-size-pricing MILP: one price per bundle cardinality.

    Size prices must be monotone nondecreasing and sub-additive across sizes;
    assignment, effective-price, surplus and envy rows mirror the
    mixed-bundling ones with sizes in place of bundles.
    """
    n, m = inst.n, inst.m
    S = n + 1
    R, C = size_reservations(inst)
    r_max = float(R.max())

    bld = LpBuilder("max")
    theta = np.empty((m, S), dtype=np.int64)
    for k in range(m):
        for t in range(S):
            theta[k, t] = bld.add_var(f"theta[{k+1},{t}]", lb=0.0, ub=1.0)
    p = np.array([bld.add_var(f"p[{t}]", lb=0.0, ub=0.0 if t == 0 else np.inf)
                  for t in range(S)], dtype=np.int64)
    P = np.empty((m, S), dtype=np.int64)
    for k in range(m):
        for t in range(S):
            P[k, t] = bld.add_var(f"P[{k+1},{t}]", lb=0.0)
    s = np.array([bld.add_var(f"s[{k+1}]", lb=0.0) for k in range(m)],
                 dtype=np.int64)
    Z = np.empty((m, S), dtype=np.int64)
    for k in range(m):
        for t in range(S):
            Z[k, t] = bld.add_var(f"Z[{k+1},{t}]", lb=0.0,
                                  obj=float(inst.alpha[k]))

    for k in range(m):
        for t in range(S):
            bld.add_row(f"ic[{k+1},{t}]",
                        [(int(s[k]), 1.0), (int(p[t]), 1.0)], ">=", float(R[k, t]))
    for k in range(m):
        bld.add_row(f"assign[{k+1}]",
                    [(int(theta[k, t]), 1.0) for t in range(S)], "=", 1.0)
    for k in range(m):
        for t in range(S):
            bld.add_row(f"cap[{k+1},{t}]",
                        [(int(P[k, t]), 1.0), (int(p[t]), -1.0)], "<=", 0.0)
    for k in range(m):
        for t in range(S):
            bld.add_row(f"bigm[{k+1},{t}]",
                        [(int(p[t]), 1.0), (int(theta[k, t]), r_max),
                         (int(P[k, t]), -1.0)], "<=", r_max)
    for k in range(m):
        for t in range(S):
            bld.add_row(f"zdef[{k+1},{t}]",
                        [(int(Z[k, t]), 1.0), (int(P[k, t]), -1.0),
                         (int(theta[k, t]), float(C[k, t]))], "=", 0.0)
    for k in range(m):
        coeffs = [(int(s[k]), 1.0)]
        coeffs += [(int(theta[k, t]), -float(R[k, t])) for t in range(S)]
        coeffs += [(int(P[k, t]), 1.0) for t in range(S)]
        bld.add_row(f"surplus[{k+1}]", coeffs, "=", 0.0)
    for k in range(m):
        for j in range(m):
            if j == k:
                continue
            coeffs = [(int(s[k]), 1.0)]
            coeffs += [(int(theta[j, t]), -float(R[k, t])) for t in range(S)]
            coeffs += [(int(P[j, t]), 1.0) for t in range(S)]
            bld.add_row(f"cross[{k+1},{j+1}]", coeffs, ">=", 0.0)
    for k in range(m):
        for t in range(S):
            bld.add_row(f"ir[{k+1},{t}]",
                        [(int(theta[k, t]), float(R[k, t])), (int(P[k, t]), -1.0)],
                        ">=", 0.0)
    for s1 in range(1, S):
        for s2 in range(s1, S):
            if s1 + s2 <= n:
                # coefficients accumulate, so s1 == s2 yields p[2s] <= 2 p[s]
                bld.add_row(f"subadd[{s1}+{s2}]",
                            [(int(p[s1 + s2]), 1.0), (int(p[s1]), -1.0),
                             (int(p[s2]), -1.0)], "<=", 0.0)
    for t in range(n):
        bld.add_row(f"mono[{t}]", [(int(p[t + 1]), 1.0), (int(p[t]), -1.0)],
                    ">=", 0.0)

    return MilpModel(bld.build(), [int(v) for v in theta.ravel()],
                     big_m={"R_max": r_max})


def bsp_summary(inst: Instance, milp_sol: MilpSolution) -> dict:
    """Size prices and chosen sizes from a solved bundle-size-pricing model."""
    if milp_sol.x is None:
        raise ValueError(f"no incumbent to extract (status {milp_sol.status})")
    n, m = inst.n, inst.m
    S = n + 1
    theta = np.round(milp_sol.x[: m * S].reshape(m, S))
    prices = milp_sol.x[m * S: m * S + S]
    return {
        "objective": float(milp_sol.objective),
        "size_prices": np.maximum(prices, 0.0),
        "chosen_sizes": [int(np.argmax(theta[k])) for k in range(m)],
        "nodes": milp_sol.nodes,
        "lp_iterations": milp_sol.lp_iterations,
    }
