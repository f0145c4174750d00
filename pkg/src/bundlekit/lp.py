"""Dense two-phase simplex solver.

Solves small/medium linear programs arising from the pricing formulations.
Design choices, fixed and documented:

* dense tableau; steepest-coefficient (Dantzig) pricing while the objective
  makes progress, with an automatic switch to Bland's lowest-index rule after
  a degenerate stall, which guarantees anti-cycling.  The leaving row always
  breaks ratio ties toward the lowest basic index.  Both rules are
  deterministic, so identical models produce identical solutions;
* feasibility tolerance ``TOL_FEAS = 1e-7`` and optimality (reduced-cost)
  tolerance ``TOL_OPT = 1e-9``; every downstream comparison inherits them;
* general variable bounds are reduced to nonnegative variables internally
  (shift / mirror / split), finite upper bounds become explicit rows;
* constraint duals are recovered from the final basis with the marginal-value
  convention ``dual_i = d(objective as stated)/d(rhs_i)``.

``solve_lp_via_dual`` solves a model through its LP dual, which is much
faster when the model has far more rows than variables; the primal solution
is read back from the dual's constraint multipliers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceLimitError, SolveError

__all__ = [
    "TOL_FEAS",
    "TOL_OPT",
    "LpModel",
    "LpSolution",
    "LpBuilder",
    "solve_lp",
    "solve_lp_via_dual",
    "dual_model",
    "dump_model",
    "preferred_lp_path",
]

TOL_FEAS = 1e-7
TOL_OPT = 1e-9
# Minimum magnitude accepted for a pivot element; smaller entries are treated
# as zero in the ratio test to avoid dividing by roundoff noise.
TOL_PIVOT = 1e-9

LE, GE, EQ = "<=", ">=", "="
_SENSES = (LE, GE, EQ)


@dataclass
class LpModel:
    """A linear program in the form sense{max,min} c'x + const, rows A x {<=,>=,=} b."""

    sense: str
    c: np.ndarray
    A: np.ndarray
    row_senses: list[str]
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    var_names: list[str]
    row_names: list[str]
    objective_constant: float = 0.0

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def n_rows(self) -> int:
        return self.b.shape[0]

    def validate(self) -> None:
        n, r = self.n_vars, self.n_rows
        if self.sense not in ("max", "min"):
            raise ValueError(f"unknown sense {self.sense!r}")
        if self.A.shape != (r, n):
            raise ValueError(f"A must have shape ({r}, {n}), got {self.A.shape}")
        if not np.all(np.isfinite(self.c)):
            raise ValueError("objective has non-finite coefficients")
        if not np.all(np.isfinite(self.A)):
            raise ValueError("constraint matrix has non-finite coefficients")
        if not np.all(np.isfinite(self.b)):
            raise ValueError("right-hand side has non-finite entries")
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)):
            raise ValueError("bounds contain NaN")
        if np.any(self.lb > self.ub):
            j = int(np.argmax(self.lb > self.ub))
            raise ValueError(f"variable {self.var_names[j]}: lower bound exceeds upper bound")
        for s in self.row_senses:
            if s not in _SENSES:
                raise ValueError(f"unknown row sense {s!r}")


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective: float | None
    iterations: int
    duals: np.ndarray | None = None


class LpBuilder:
    """Incremental construction of an LpModel with named variables and rows."""

    def __init__(self, sense: str = "max"):
        self.sense = sense
        self._obj: list[float] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._var_names: list[str] = []
        self._rows: list[list[tuple[int, float]]] = []
        self._row_senses: list[str] = []
        self._rhs: list[float] = []
        self._row_names: list[str] = []
        self.objective_constant = 0.0
        self._index: dict[str, int] = {}

    def add_var(self, name: str, lb: float = 0.0, ub: float = math.inf,
                obj: float = 0.0) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable {name!r}")
        j = len(self._var_names)
        self._index[name] = j
        self._var_names.append(name)
        self._lb.append(lb)
        self._ub.append(ub)
        self._obj.append(obj)
        return j

    def var(self, name: str) -> int:
        return self._index[name]

    def add_obj(self, j: int, coeff: float) -> None:
        self._obj[j] += coeff

    def add_row(self, name: str, coeffs: list[tuple[int, float]], sense: str,
                rhs: float) -> int:
        if sense not in _SENSES:
            raise ValueError(f"unknown row sense {sense!r}")
        self._rows.append(coeffs)
        self._row_senses.append(sense)
        self._rhs.append(rhs)
        self._row_names.append(name)
        return len(self._rows) - 1

    def build(self) -> LpModel:
        n = len(self._var_names)
        A = np.zeros((len(self._rows), n))
        for i, coeffs in enumerate(self._rows):
            for j, v in coeffs:
                A[i, j] += v
        model = LpModel(
            sense=self.sense,
            c=np.array(self._obj, dtype=float),
            A=A,
            row_senses=list(self._row_senses),
            b=np.array(self._rhs, dtype=float),
            lb=np.array(self._lb, dtype=float),
            ub=np.array(self._ub, dtype=float),
            var_names=list(self._var_names),
            row_names=list(self._row_names),
            objective_constant=self.objective_constant,
        )
        model.validate()
        return model


# ---------------------------------------------------------------------------
# Variable normalization: rewrite general bounds as nonnegative variables.
# ---------------------------------------------------------------------------

@dataclass
class _VarMap:
    """How original variable j maps into the transformed column space."""

    kind: str          # "shift" | "mirror" | "split" | "fixed"
    col: int = -1      # first transformed column (split uses col, col+1)
    offset: float = 0.0


@dataclass
class _Transformed:
    c: np.ndarray
    A: np.ndarray
    senses: list[str]
    b: np.ndarray
    vmaps: list[_VarMap]
    n_orig_rows: int
    free_cols: list[int] = field(default_factory=list)


def _normalize_vars(model: LpModel, keep_free: bool) -> _Transformed:
    """Reduce to columns with lb=0 (plus optional free columns).

    Finite upper bounds become appended ``<=`` rows; variables fixed by equal
    bounds are substituted out.  When ``keep_free`` is true, doubly unbounded
    variables are kept as marked free columns (used by the dualizer);
    otherwise they are split into positive and negative parts.
    """
    c = model.c if model.sense == "max" else -model.c
    A = model.A
    b = model.b.astype(float).copy()
    cols: list[np.ndarray] = []
    ccoef: list[float] = []
    vmaps: list[_VarMap] = []
    ub_rows: list[tuple[int, float]] = []  # (transformed col, bound)
    free_cols: list[int] = []

    for j in range(model.n_vars):
        lo, hi = model.lb[j], model.ub[j]
        col = A[:, j]
        if lo == hi:
            vmaps.append(_VarMap("fixed", offset=float(lo)))
            if lo != 0.0:
                b = b - col * lo
            continue
        if math.isfinite(lo):
            tcol = len(cols)
            if lo != 0.0:
                b = b - col * lo
            cols.append(col.copy())
            ccoef.append(float(c[j]))
            vmaps.append(_VarMap("shift", col=tcol, offset=float(lo)))
            if math.isfinite(hi):
                ub_rows.append((tcol, float(hi - lo)))
        elif math.isfinite(hi):
            tcol = len(cols)
            b = b - col * hi
            cols.append(-col)
            ccoef.append(float(-c[j]))
            vmaps.append(_VarMap("mirror", col=tcol, offset=float(hi)))
        else:
            tcol = len(cols)
            if keep_free:
                cols.append(col.copy())
                ccoef.append(float(c[j]))
                vmaps.append(_VarMap("free", col=tcol))
                free_cols.append(tcol)
            else:
                cols.append(col.copy())
                ccoef.append(float(c[j]))
                cols.append(-col)
                ccoef.append(float(-c[j]))
                vmaps.append(_VarMap("split", col=tcol))

    n_orig_rows = model.n_rows
    At = np.column_stack(cols) if cols else np.zeros((n_orig_rows, 0))
    senses = list(model.row_senses)
    if ub_rows:
        extra = np.zeros((len(ub_rows), At.shape[1]))
        extra_b = np.zeros(len(ub_rows))
        for i, (tcol, bound) in enumerate(ub_rows):
            extra[i, tcol] = 1.0
            extra_b[i] = bound
        At = np.vstack([At, extra])
        b = np.concatenate([b, extra_b])
        senses += [LE] * len(ub_rows)
    return _Transformed(np.array(ccoef), At, senses, b, vmaps, n_orig_rows,
                        free_cols)


def _recover_x(vmaps: list[_VarMap], xt: np.ndarray) -> np.ndarray:
    x = np.empty(len(vmaps))
    for j, vm in enumerate(vmaps):
        if vm.kind == "fixed":
            x[j] = vm.offset
        elif vm.kind == "shift":
            x[j] = vm.offset + xt[vm.col]
        elif vm.kind == "mirror":
            x[j] = vm.offset - xt[vm.col]
        elif vm.kind == "free":
            x[j] = xt[vm.col]
        else:  # split
            x[j] = xt[vm.col] - xt[vm.col + 1]
    return x


# ---------------------------------------------------------------------------
# Tableau simplex.
# ---------------------------------------------------------------------------

def _pivot(T: np.ndarray, row: int, col: int, buf: np.ndarray) -> None:
    """Rank-1 Gauss-Jordan update, allocation-free via the preallocated buffer."""
    T[row] /= T[row, col]
    np.outer(T[:, col], T[row], out=buf)
    buf[row] = 0.0
    np.subtract(T, buf, out=T)
    T[:, col] = 0.0
    T[row, col] = 1.0


def _set_objective(T: np.ndarray, basis: np.ndarray, c_full: np.ndarray) -> None:
    """Write the reduced-cost row  c_B B^-1 [A | b] - [c | 0]  into T[-1]."""
    T[-1, :] = 0.0
    cb = c_full[basis]
    nz = np.flatnonzero(cb)
    for r in nz:
        T[-1, :] += cb[r] * T[r, :]
    T[-1, :-1] -= c_full


class _Simplex:
    """One solver invocation; owns its tableau."""

    def __init__(self, tr: _Transformed, iteration_limit: int):
        self.tr = tr
        self.c_struct = tr.c
        self.limit = iteration_limit
        self.iterations = 0

        A, b, senses = tr.A, tr.b.copy(), list(tr.senses)
        # Free columns are handled by splitting here (the dual path resolves
        # them before reaching the simplex core).
        if tr.free_cols:
            raise SolveError("internal: free columns must be split before the tableau")
        self.row_flip = np.ones(len(b))
        Ac = A.copy()
        for i in range(len(b)):
            if b[i] < 0:
                Ac[i] *= -1.0
                b[i] *= -1.0
                self.row_flip[i] = -1.0
                if senses[i] == LE:
                    senses[i] = GE
                elif senses[i] == GE:
                    senses[i] = LE

        n_rows, n_str = Ac.shape
        n_slack = sum(1 for s in senses if s == LE)
        n_surp = sum(1 for s in senses if s == GE)
        n_art = sum(1 for s in senses if s in (GE, EQ))
        total = n_str + n_slack + n_surp + n_art
        T = np.zeros((n_rows + 1, total + 1))
        T[:-1, :n_str] = Ac
        T[:-1, -1] = b
        basis = np.empty(n_rows, dtype=np.int64)
        self.id_col = np.empty(n_rows, dtype=np.int64)  # initial identity col per row
        si = n_str
        ti = n_str + n_slack
        ai = n_str + n_slack + n_surp
        art_cols = []
        for i, s in enumerate(senses):
            if s == LE:
                T[i, si] = 1.0
                basis[i] = si
                self.id_col[i] = si
                si += 1
            elif s == GE:
                T[i, ti] = -1.0
                T[i, ai] = 1.0
                basis[i] = ai
                self.id_col[i] = ai
                art_cols.append(ai)
                ti += 1
                ai += 1
            else:
                T[i, ai] = 1.0
                basis[i] = ai
                self.id_col[i] = ai
                art_cols.append(ai)
                ai += 1
        self.T = T
        self.basis = basis
        self.n_str = n_str
        self.total = total
        self.art_cols = np.array(art_cols, dtype=np.int64)
        self.allowed = np.ones(total, dtype=bool)

    # After this many consecutive pivots without objective progress the
    # entering rule falls back to Bland's lowest-index rule, which provably
    # breaks any cycle; steepest (Dantzig) pricing is used otherwise.
    STALL_LIMIT = 30

    def _run(self) -> str:
        T, basis = self.T, self.basis
        allowed = self.allowed
        buf = np.empty_like(T)
        stalled = 0
        last_obj = -np.inf
        while True:
            z = T[-1, :-1]
            if stalled < self.STALL_LIMIT:
                masked = np.where(allowed, z, np.inf)
                j = int(np.argmin(masked))  # Dantzig; argmin ties -> lowest index
                if masked[j] >= -TOL_OPT:
                    return "optimal"
            else:
                improving = np.flatnonzero(allowed & (z < -TOL_OPT))
                if improving.size == 0:
                    return "optimal"
                j = int(improving[0])  # Bland: lowest index enters
            col = T[:-1, j]
            pos = col > TOL_PIVOT
            if not pos.any():
                return "unbounded"
            ratios = np.full(col.shape[0], np.inf)
            ratios[pos] = T[:-1, -1][pos] / col[pos]
            rmin = ratios.min()
            ties = np.flatnonzero(ratios <= rmin + 1e-12)
            r = int(ties[np.argmin(basis[ties])])  # Bland: lowest basic index leaves
            _pivot(T, r, j, buf)
            basis[r] = j
            obj = T[-1, -1]
            if obj > last_obj + 1e-12:
                stalled = 0
                last_obj = obj
            else:
                stalled += 1
            self.iterations += 1
            if self.iterations > self.limit:
                raise ResourceLimitError(
                    f"simplex iteration limit {self.limit} exceeded")

    def solve(self) -> str:
        T, basis = self.T, self.basis
        if self.art_cols.size:
            c1 = np.zeros(self.total)
            c1[self.art_cols] = -1.0
            _set_objective(T, basis, c1)
            status = self._run()
            if status != "optimal":  # phase 1 is bounded; defensive only
                raise SolveError("phase 1 terminated abnormally")
            if T[-1, -1] < -TOL_FEAS:
                return "infeasible"
            # Ban artificials, then pivot any still-basic ones out where possible.
            self.allowed[self.art_cols] = False
            art_set = set(self.art_cols.tolist())
            buf = np.empty_like(T)
            for r in range(len(basis)):
                if basis[r] in art_set:
                    row = T[r, :-1]
                    cand = np.flatnonzero(self.allowed & (np.abs(row) > TOL_PIVOT))
                    if cand.size:
                        _pivot(T, r, int(cand[0]), buf)
                        basis[r] = int(cand[0])
                    # else: redundant row; artificial stays basic at level ~0.
        c2 = np.zeros(self.total)
        c2[:self.n_str] = self.c_struct
        _set_objective(T, basis, c2)
        return self._run()

    def primal(self) -> np.ndarray:
        xt = np.zeros(self.total)
        xt[self.basis] = self.T[:-1, -1]
        return np.maximum(xt[:self.n_str], 0.0)

    def row_duals(self) -> np.ndarray:
        """Multipliers of the internal (max, canonicalized) rows."""
        y = self.T[-1, self.id_col]
        return y * self.row_flip


def _check_feasible(model: LpModel, x: np.ndarray) -> None:
    scale = max(1.0, float(np.max(np.abs(model.b))) if model.n_rows else 1.0)
    tol = TOL_FEAS * scale
    if model.n_rows:
        r = model.A @ x
        for i, s in enumerate(model.row_senses):
            if s == LE and r[i] > model.b[i] + tol:
                raise SolveError(f"row {model.row_names[i]} violated by {r[i]-model.b[i]:.2e}")
            if s == GE and r[i] < model.b[i] - tol:
                raise SolveError(f"row {model.row_names[i]} violated by {model.b[i]-r[i]:.2e}")
            if s == EQ and abs(r[i] - model.b[i]) > tol:
                raise SolveError(f"row {model.row_names[i]} violated by {abs(r[i]-model.b[i]):.2e}")
    lo_bad = x < model.lb - tol
    hi_bad = x > model.ub + tol
    if lo_bad.any() or hi_bad.any():
        raise SolveError("variable bound violated beyond tolerance")


# Above this estimated tableau size the embedded simplex becomes the
# bottleneck (seconds per solve) and "auto" delegates to HiGHS via scipy,
# which solves the same model to the same tolerances in milliseconds.
_AUTO_TABLEAU_LIMIT = 400_000


def _auto_backend(model: LpModel) -> str:
    n_ub = int(np.sum(np.isfinite(model.ub) & (model.ub > model.lb)))
    rows = model.n_rows + n_ub
    cols = 2 * model.n_vars + 2 * rows
    return "simplex" if (rows + 1) * (cols + 1) <= _AUTO_TABLEAU_LIMIT else "highs"


def _solve_highs(model: LpModel, iteration_limit: int) -> LpSolution:
    from scipy.optimize import linprog

    minimize = model.sense == "min"
    c = model.c if minimize else -model.c
    ub_rows, ub_rhs, ub_map = [], [], []  # ub_map: (orig row, sign)
    eq_rows, eq_rhs, eq_map = [], [], []
    for i, s in enumerate(model.row_senses):
        if s == LE:
            ub_rows.append(model.A[i]); ub_rhs.append(model.b[i]); ub_map.append((i, 1.0))
        elif s == GE:
            ub_rows.append(-model.A[i]); ub_rhs.append(-model.b[i]); ub_map.append((i, -1.0))
        else:
            eq_rows.append(model.A[i]); eq_rhs.append(model.b[i]); eq_map.append(i)
    res = linprog(
        c,
        A_ub=np.array(ub_rows) if ub_rows else None,
        b_ub=np.array(ub_rhs) if ub_rows else None,
        A_eq=np.array(eq_rows) if eq_rows else None,
        b_eq=np.array(eq_rhs) if eq_rows else None,
        bounds=list(zip(model.lb, model.ub)),
        method="highs",
        options={"maxiter": iteration_limit,
                 "primal_feasibility_tolerance": 1e-8},
    )
    iters = int(getattr(res, "nit", 0) or 0)
    if res.status == 1:
        raise ResourceLimitError(f"LP iteration limit {iteration_limit} exceeded")
    if res.status == 2:
        return LpSolution("infeasible", None, None, iters)
    if res.status == 3:
        return LpSolution("unbounded", None, None, iters)
    if res.status != 0:
        raise SolveError(f"LP backend failed: {res.message}")
    x = np.asarray(res.x, dtype=float)
    _check_feasible(model, x)
    obj = float(model.c @ x) + model.objective_constant
    # Marginals are stated for the minimized form; translate to d(obj)/d(b_i).
    duals = np.zeros(model.n_rows)
    dual_sign = 1.0 if minimize else -1.0
    for pos, (i, sign) in enumerate(ub_map):
        duals[i] = dual_sign * sign * res.ineqlin.marginals[pos]
    for pos, i in enumerate(eq_map):
        duals[i] = dual_sign * res.eqlin.marginals[pos]
    return LpSolution("optimal", x, obj, iters, duals=duals)


def solve_lp(model: LpModel, iteration_limit: int | None = None,
             backend: str = "auto") -> LpSolution:
    """Linear program solve.

    ``backend`` selects the embedded two-phase simplex ("simplex"), the
    scipy/HiGHS delegate ("highs"), or a deterministic size-based choice
    between them ("auto", the default).  Raises ValueError for malformed
    models and ResourceLimitError when the iteration limit (default
    ``50 * (vars + rows)``) is exceeded.
    """
    model.validate()
    if iteration_limit is None:
        iteration_limit = 50 * (model.n_vars + model.n_rows)
    if backend == "auto":
        backend = _auto_backend(model)
    if backend == "highs":
        return _solve_highs(model, iteration_limit)
    if backend != "simplex":
        raise ValueError(f"unknown backend {backend!r}")

    tr = _normalize_vars(model, keep_free=False)
    if tr.A.shape[1] == 0:
        # Every variable fixed: the model is a pure feasibility check.
        x = _recover_x(tr.vmaps, np.zeros(0))
        ok = True
        r = model.A @ x if model.n_rows else np.zeros(0)
        for i, s in enumerate(model.row_senses):
            if s == LE and r[i] > model.b[i] + TOL_FEAS:
                ok = False
            if s == GE and r[i] < model.b[i] - TOL_FEAS:
                ok = False
            if s == EQ and abs(r[i] - model.b[i]) > TOL_FEAS:
                ok = False
        if not ok:
            return LpSolution("infeasible", None, None, 0)
        obj = float(model.c @ x) + model.objective_constant
        return LpSolution("optimal", x, obj, 0, duals=np.zeros(model.n_rows))

    sim = _Simplex(tr, iteration_limit)
    status = sim.solve()
    if status == "infeasible":
        return LpSolution("infeasible", None, None, sim.iterations)
    if status == "unbounded":
        return LpSolution("unbounded", None, None, sim.iterations)

    x = _recover_x(tr.vmaps, sim.primal())
    _check_feasible(model, x)
    obj = float(model.c @ x) + model.objective_constant

    # Marginal-value duals for the model as stated: d(obj)/d(b_i).
    y_int = sim.row_duals()[: tr.n_orig_rows]
    duals = y_int if model.sense == "max" else -y_int
    return LpSolution("optimal", x, obj, sim.iterations, duals=duals)


# ---------------------------------------------------------------------------
# Dualization.
# ---------------------------------------------------------------------------

def dual_model(model: LpModel) -> LpModel:
    """LP dual of ``model``, stated in the opposite sense.

    The returned program has one variable per (canonicalized) primal row and
    one row per primal variable; its optimal value equals the primal's,
    constant included.  The dual's own constraint multipliers recover the
    primal solution (see :func:`solve_lp_via_dual`).
    """
    model.validate()
    tr = _normalize_vars(model, keep_free=True)
    # Canonicalize inequality rows to <= so every inequality multiplier is >= 0.
    A, b, senses = tr.A.copy(), tr.b.copy(), list(tr.senses)
    for i in range(len(b)):
        if senses[i] == GE:
            A[i] *= -1.0
            b[i] *= -1.0
            senses[i] = LE

    maximize = model.sense == "max"
    c = tr.c  # objective of the maximized form (negated when sense is "min")
    n_rows, n_cols = A.shape

    # Dual of the maximized form:  min b'y  s.t.  A'y >= c (or = for free
    # columns), y >= 0 on inequality rows.  When the original model minimizes,
    # the stated dual flips the objective so values line up with the original.
    lb = np.where(np.array([s == LE for s in senses]), 0.0, -np.inf)
    row_senses = [GE] * n_cols
    for j in tr.free_cols:
        row_senses[j] = EQ
    dual = LpModel(
        sense="min" if maximize else "max",
        c=b if maximize else -b,
        A=A.T.copy(),
        row_senses=row_senses,
        b=c.copy(),
        lb=lb,
        ub=np.full(n_rows, math.inf),
        var_names=[f"y{i}" for i in range(n_rows)],
        row_names=[f"x{j}" for j in range(n_cols)],
        objective_constant=model.objective_constant,
    )
    dual.validate()
    return dual


def solve_lp_via_dual(model: LpModel,
                      iteration_limit: int | None = None) -> LpSolution:
    """Solve ``model`` by running the simplex on its dual.

    Profitable when rows greatly outnumber variables.  Status mapping: an
    unbounded dual certifies an infeasible primal; an infeasible dual means
    the primal is unbounded or infeasible and is reported as "unbounded".
    """
    model.validate()
    tr = _normalize_vars(model, keep_free=True)
    dm = dual_model(model)
    if iteration_limit is None:
        iteration_limit = 50 * (dm.n_vars + dm.n_rows)
    dsol = solve_lp(dm, iteration_limit=iteration_limit)
    if dsol.status == "unbounded":
        return LpSolution("infeasible", None, None, dsol.iterations)
    if dsol.status == "infeasible":
        return LpSolution("unbounded", None, None, dsol.iterations)

    # Multiplier of dual row j = value of transformed primal column j.  The
    # multipliers flip sign when the dual was stated as a maximization.
    xt = np.asarray(dsol.duals)
    if not model.sense == "max":
        xt = -xt
    x = _recover_x(tr.vmaps, xt)
    _check_feasible(model, x)
    obj = float(model.c @ x) + model.objective_constant
    return LpSolution("optimal", x, obj, dsol.iterations)


def preferred_lp_path(model: LpModel) -> str:
    """Deterministic solve-path hint: "simplex", "highs", or "dual".

    "dual" means the model is small but so much taller than wide that solving
    its LP dual with the embedded simplex is the fastest exact route.
    """
    if _auto_backend(model) == "highs":
        return "highs"
    if model.n_rows > 3 * model.n_vars:
        return "dual"
    return "simplex"


def dump_model(model: LpModel) -> str:
    """Readable text dump, one constraint per line (debug aid)."""
    out = [f"{model.sense} " + " + ".join(
        f"{model.c[j]:g}*{model.var_names[j]}" for j in range(model.n_vars)
        if model.c[j] != 0.0) + (f" + {model.objective_constant:g}"
                                 if model.objective_constant else "")]
    for i in range(model.n_rows):
        terms = " + ".join(f"{model.A[i, j]:g}*{model.var_names[j]}"
                           for j in np.flatnonzero(model.A[i]))
        out.append(f"{model.row_names[i]}: {terms} {model.row_senses[i]} {model.b[i]:g}")
    for j in range(model.n_vars):
        lo, hi = model.lb[j], model.ub[j]
        if lo != 0.0 or math.isfinite(hi):
            out.append(f"bound: {lo:g} <= {model.var_names[j]} <= {hi:g}")
    return "\n".join(out) + "\n"
