"""Self-contained LP and mixed-integer solver (no external solver dependency).

The LP core is a dense two-phase primal simplex on the bounded-variable
tableau: variables may rest at either bound, so binary branching and the
encoder's variable bounds never add rows.  Pricing is Dantzig (steepest
reduced cost, lowest index on ties) with a permanent switch to Bland's rule
after a stall, which gives the usual practical speed while retaining the
anti-cycling termination guarantee.  The integer layer is a deterministic
depth-first branch-and-bound on the binary variables.

Every answer the solver returns is independently re-checked against the
original constraints before it leaves this module; a failed re-check raises
``NumericalBreakdownError`` instead of returning a wrong answer.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

FEAS_TOL = 1e-6      # constraint satisfaction on returned answers
INT_TOL = 1e-6       # distance to {0,1} accepted as integral
PIVOT_TOL = 1e-9     # smallest usable pivot magnitude
OBJ_TOL = 1e-7       # objective comparisons (pruning, incumbent updates)
_DUAL_TOL = 1e-9     # reduced-cost optimality threshold
_STALL_LIMIT = 200   # non-improving iterations before Bland mode
_REFRESH_EVERY = 250 # pivots between tableau refactorizations

LEQ, EQ, GEQ = "<=", "=", ">="


class MilpError(Exception):
    """Malformed model or unusable input."""


class NumericalBreakdownError(MilpError):
    """The solver could not certify its own answer; nothing is returned."""


@dataclass
class _Var:
    name: str
    lb: float
    ub: float
    binary: bool


class MilpModel:
    """Linear model: bounded reals, binary markers, rows, one objective."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.vars: list[_Var] = []
        self.rows: list[dict[int, float]] = []
        self.rels: list[str] = []
        self.rhs: list[float] = []
        self.obj: dict[int, float] = {}
        self.sense = "min"

    def add_var(self, name: str, lb: float = 0.0, ub: float = np.inf,
                binary: bool = False) -> int:
        if binary:
            lb, ub = 0.0, 1.0
        if not np.isfinite(lb):
            raise MilpError(f"variable {name}: lower bound must be finite")
        if ub < lb:
            raise MilpError(f"variable {name}: empty bound interval [{lb}, {ub}]")
        self.vars.append(_Var(name, float(lb), float(ub), binary))
        return len(self.vars) - 1

    def add_constraint(self, coeffs, rel: str, rhs: float) -> int:
        if rel not in (LEQ, EQ, GEQ):
            raise MilpError(f"unknown relation {rel!r}")
        row = dict(coeffs)
        for j in row:
            if not 0 <= j < len(self.vars):
                raise MilpError(f"constraint references unknown variable index {j}")
        self.rows.append({int(j): float(a) for j, a in row.items()})
        self.rels.append(rel)
        self.rhs.append(float(rhs))
        return len(self.rows) - 1

    def set_objective(self, coeffs, sense: str = "min"):
        if sense not in ("min", "max"):
            raise MilpError(f"unknown sense {sense!r}")
        row = dict(coeffs)
        for j in row:
            if not 0 <= j < len(self.vars):
                raise MilpError(f"objective references unknown variable index {j}")
        self.obj = {int(j): float(a) for j, a in row.items()}
        self.sense = sense

    @property
    def num_vars(self) -> int:
        return len(self.vars)

    @property
    def num_constraints(self) -> int:
        return len(self.rows)

    @property
    def binary_indices(self) -> list[int]:
        return [j for j, v in enumerate(self.vars) if v.binary]

    def dense(self):
        n, m = len(self.vars), len(self.rows)
        A = np.zeros((m, n))
        for i, row in enumerate(self.rows):
            for j, a in row.items():
                A[i, j] = a
        c = np.zeros(n)
        for j, a in self.obj.items():
            c[j] = a
        lb = np.array([v.lb for v in self.vars])
        ub = np.array([v.ub for v in self.vars])
        return c, A, list(self.rels), np.array(self.rhs, dtype=float), lb, ub


@dataclass
class MilpSolution:
    status: str                     # optimal | feasible | feasible_budget_hit |
                                    # infeasible | unbounded | budget_unknown
    x: np.ndarray | None = None
    objective: float | None = None
    nodes: int = 0
    elapsed: float = 0.0
    duals: np.ndarray | None = None
    model: MilpModel | None = field(default=None, repr=False)

    @property
    def assignment(self) -> dict:
        if self.x is None or self.model is None:
            return {}
        return {v.name: float(self.x[j]) for j, v in enumerate(self.model.vars)}


# --------------------------------------------------------------------------
# bounded-variable two-phase primal simplex
# --------------------------------------------------------------------------

_AT_LB, _AT_UB, _BASIC = 0, 1, 2


class _Simplex:
    """One standardized LP instance:  min c.x,  A x rel b,  lb <= x <= ub."""

    def __init__(self, c, A, rels, b, lb, ub):
        m, n = A.shape
        if np.any(~np.isfinite(lb)):
            raise MilpError("lower bounds must be finite")
        # shift structurals to y = x - lb >= 0
        span = ub - lb
        b_eff = b - A @ lb
        rels = list(rels)
        A = A.copy()
        # make rhs nonnegative
        self.row_sign = np.ones(m)
        for i in range(m):
            if b_eff[i] < 0:
                b_eff[i] = -b_eff[i]
                A[i] = -A[i]
                self.row_sign[i] = -1.0
                if rels[i] == LEQ:
                    rels[i] = GEQ
                elif rels[i] == GEQ:
                    rels[i] = LEQ
        # extended columns: structurals, then one slack/surplus per
        # inequality row, then artificials for rows lacking a slack basis
        slack_cols, art_rows = [], []
        for i, rel in enumerate(rels):
            if rel == LEQ:
                slack_cols.append((i, 1.0))
            elif rel == GEQ:
                slack_cols.append((i, -1.0))
                art_rows.append(i)
            else:
                art_rows.append(i)
        n_slack, n_art = len(slack_cols), len(art_rows)
        N = n + n_slack + n_art
        A_ext = np.zeros((m, N))
        A_ext[:, :n] = A
        self.slack_of_row = {}
        for k, (i, sgn) in enumerate(slack_cols):
            A_ext[i, n + k] = sgn
            if sgn > 0:
                self.slack_of_row[i] = n + k
        self.art_start = n + n_slack
        for k, i in enumerate(art_rows):
            A_ext[i, self.art_start + k] = 1.0
        U = np.full(N, np.inf)
        U[:n] = span
        self.n, self.m0, self.N = n, m, N
        self.A_ext = A_ext
        self.b_eff = b_eff
        self.rels = rels
        self.U = U
        self.lb_orig = lb
        self.kept_rows = np.arange(m)
        # basis: slack for <= rows, artificial otherwise
        basis = np.empty(m, dtype=int)
        for i in range(m):
            basis[i] = self.slack_of_row.get(i, -1)
        k = 0
        for i in art_rows:
            basis[i] = self.art_start + k
            k += 1
        self.basis = basis
        self.status = np.full(N, _AT_LB, dtype=np.int8)
        self.status[basis] = _BASIC
        self.Tab = A_ext.copy()
        self.v = b_eff.copy()
        self.pivots = 0

    # -- linear-algebra refresh -------------------------------------------

    def _refresh(self):
        B = self.A_ext[:, self.basis]
        try:
            Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdownError("singular basis during refresh") from exc
        self.Tab = Binv @ self.A_ext
        rhs = self.b_eff.copy()
        ub_mask = self.status == _AT_UB
        if np.any(ub_mask):
            rhs = rhs - self.A_ext[:, ub_mask] @ self.U[ub_mask]
        self.v = Binv @ rhs
        self._since_refresh = 0

    def _current_x(self) -> np.ndarray:
        x = np.where(self.status == _AT_UB, self.U, 0.0)
        x[self.basis] = self.v
        return x

    # -- the pivot loop ----------------------------------------------------

    def _optimize(self, c, phase: int):
        m = self.Tab.shape[0]
        self._since_refresh = 0
        r = c - c[self.basis] @ self.Tab
        obj = float(c @ self._current_x())
        bland = False
        stall = 0
        best = obj
        max_iter = 2000 + 60 * (m + self.N)
        for _ in range(max_iter):
            enterable = self.U > PIVOT_TOL
            cand_lo = (self.status == _AT_LB) & (r < -_DUAL_TOL) & enterable
            cand_hi = (self.status == _AT_UB) & (r > _DUAL_TOL)
            cand = np.nonzero(cand_lo | cand_hi)[0]
            if cand.size == 0:
                if self._since_refresh:
                    self._refresh()
                    r = c - c[self.basis] @ self.Tab
                    obj = float(c @ self._current_x())
                    continue
                return "optimal", obj
            if bland:
                j = int(cand[0])
            else:
                j = int(cand[np.argmax(np.abs(r[cand]))])
            direction = 1.0 if self.status[j] == _AT_LB else -1.0
            alpha = self.Tab[:, j]
            d = direction * alpha
            # ratio test: basic vars falling to 0 or rising to their span
            t_best = self.U[j]
            leave_row, leave_to = -1, _AT_LB
            falling = d > PIVOT_TOL
            rising = (d < -PIVOT_TOL) & np.isfinite(self.U[self.basis])
            v_pos = np.maximum(self.v, 0.0)
            t_fall = np.where(falling, v_pos / np.where(falling, d, 1.0), np.inf)
            span_b = self.U[self.basis]
            head = np.maximum(span_b - self.v, 0.0)
            t_rise = np.where(rising, head / np.where(rising, -d, 1.0), np.inf)
            t_rows = np.minimum(t_fall, t_rise)
            i_min = int(np.argmin(t_rows)) if m else -1
            t_row_best = t_rows[i_min] if m else np.inf
            if t_row_best < t_best - 1e-15:
                # deterministic tie handling: among rows within 1e-9 of the
                # minimum pick the largest pivot magnitude, lowest row index
                near = np.nonzero(t_rows <= t_row_best + 1e-9)[0]
                i_min = int(near[np.argmax(np.abs(d[near]))])
                t_best = float(t_rows[i_min])
                leave_row = i_min
                leave_to = _AT_LB if t_fall[i_min] <= t_rise[i_min] else _AT_UB
            if not np.isfinite(t_best):
                if phase == 1:
                    raise NumericalBreakdownError("phase-1 objective unbounded")
                return "unbounded", obj
            gain = r[j] * direction * t_best
            obj += gain
            if leave_row < 0:
                # bound flip, basis unchanged
                self.status[j] = _AT_UB if self.status[j] == _AT_LB else _AT_LB
                self.v = self.v - d * t_best
            else:
                lv = self.basis[leave_row]
                self.v = self.v - d * t_best
                self.v[leave_row] = t_best if direction > 0 else self.U[j] - t_best
                self.status[lv] = leave_to
                self.status[j] = _BASIC
                self.basis[leave_row] = j
                piv = self.Tab[leave_row, j]
                if abs(piv) < PIVOT_TOL:
                    raise NumericalBreakdownError("pivot element below tolerance")
                prow = self.Tab[leave_row] / piv
                col = self.Tab[:, j].copy()
                self.Tab -= np.outer(col, prow)
                self.Tab[leave_row] = prow
                r = r - r[j] * prow
                self.pivots += 1
                self._since_refresh += 1
                if self._since_refresh >= _REFRESH_EVERY:
                    self._refresh()
                    r = c - c[self.basis] @ self.Tab
                    obj = float(c @ self._current_x())
            if obj < best - 1e-12:
                best = obj
                stall = 0
            else:
                stall += 1
                if stall > _STALL_LIMIT:
                    bland = True
        raise NumericalBreakdownError("simplex iteration limit exceeded")

    def _drive_out_artificials(self):
        drop = []
        for i in range(self.Tab.shape[0]):
            if self.basis[i] < self.art_start:
                continue
            row = self.Tab[i, :self.art_start]
            nonbasic = self.status[:self.art_start] != _BASIC
            free = np.nonzero((np.abs(row) > PIVOT_TOL) & nonbasic
                              & (self.U[:self.art_start] > PIVOT_TOL))[0]
            if free.size == 0:
                # the row is a linear combination of the others: drop it
                drop.append(i)
                continue
            # degenerate basis exchange (the artificial sits at value 0):
            # the entering variable keeps its current value
            j = int(free[np.argmax(np.abs(row[free]))])
            enter_value = self.U[j] if self.status[j] == _AT_UB else 0.0
            lv = self.basis[i]
            piv = self.Tab[i, j]
            prow = self.Tab[i] / piv
            col = self.Tab[:, j].copy()
            self.Tab -= np.outer(col, prow)
            self.Tab[i] = prow
            self.status[lv] = _AT_LB
            self.status[j] = _BASIC
            self.basis[i] = j
            self.v[i] = enter_value
        if drop:
            keep = np.array([i for i in range(self.Tab.shape[0]) if i not in drop])
            for i in drop:
                self.status[self.basis[i]] = _AT_LB
            self.Tab = self.Tab[keep]
            self.v = self.v[keep]
            self.basis = self.basis[keep]
            self.kept_rows = self.kept_rows[keep]
            self.A_ext = self.A_ext[keep]
            self.b_eff = self.b_eff[keep]

    def solve(self, c_struct):
        # phase 1: minimize artificial mass
        c1 = np.zeros(self.N)
        c1[self.art_start:] = 1.0
        status, obj1 = self._optimize(c1, phase=1)
        if status != "optimal":  # pragma: no cover - phase 1 cannot be unbounded
            raise NumericalBreakdownError("phase 1 ended " + status)
        if obj1 > 1e-7:
            return "infeasible", None, None, None
        self._drive_out_artificials()
        self.U[self.art_start:] = 0.0  # artificials may never re-enter
        c2 = np.zeros(self.N)
        c2[:self.n] = c_struct
        status, _ = self._optimize(c2, phase=2)
        if status == "unbounded":
            return "unbounded", None, None, None
        self._refresh()
        x_ext = self._current_x()
        y_struct = x_ext[:self.n]
        x = self.lb_orig + y_struct
        # duals of the kept standardized rows
        try:
            y = np.linalg.solve(self.A_ext[:, self.basis].T, c2[self.basis])
        except np.linalg.LinAlgError:
            y = None
        return "optimal", x, float(c_struct @ y_struct + 0.0), y


def _check_solution(c, A, rels, b, lb, ub, x, tol=FEAS_TOL):
    if np.any(x < lb - tol) or np.any(x > ub + tol):
        return False
    if A.shape[0]:
        Ax = A @ x
        for i, rel in enumerate(rels):
            if rel == LEQ and Ax[i] > b[i] + tol:
                return False
            if rel == GEQ and Ax[i] < b[i] - tol:
                return False
            if rel == EQ and abs(Ax[i] - b[i]) > tol:
                return False
    return True


def _solve_lp_arrays(c, A, rels, b, lb, ub, sense):
    """Canonical LP solve on prepared arrays.  Returns an MilpSolution."""
    t0 = time.monotonic()
    c_min = -c if sense == "max" else c
    sx = _Simplex(c_min, A, rels, b, lb, ub)
    status, x, obj_min, y_min = sx.solve(c_min)
    elapsed = time.monotonic() - t0
    if status != "optimal":
        return MilpSolution(status=status, nodes=1, elapsed=elapsed)
    # hard re-check: never return an uncertified answer
    if not _check_solution(c, A, rels, b, lb, ub, x):
        raise NumericalBreakdownError("solution failed the independent re-check")
    duals = None
    if y_min is not None:
        duals = np.zeros(A.shape[0])
        sgn = -1.0 if sense == "max" else 1.0
        duals[sx.kept_rows] = sgn * sx.row_sign[sx.kept_rows] * y_min
    # objective reported from the model's own coefficients, not the tableau
    obj = float(c @ x)
    return MilpSolution(status="optimal", x=x, objective=obj, nodes=1,
                        elapsed=elapsed, duals=duals)


def solve_lp(model: MilpModel, dump_path: str | None = None) -> MilpSolution:
    """Solve the continuous relaxation of ``model`` (binaries in [0, 1])."""
    c, A, rels, b, lb, ub = model.dense()
    if dump_path:
        write_lp_format(model, dump_path)
    sol = _solve_lp_arrays(c, A, rels, b, lb, ub, model.sense)
    sol.model = model
    return sol


# --------------------------------------------------------------------------
# branch and bound
# --------------------------------------------------------------------------

def solve_milp(model: MilpModel, node_budget: int | None = None,
               time_budget: float | None = None,
               mode: str = "prove_optimal",
               dump_path: str | None = None) -> MilpSolution:
    """Depth-first branch-and-bound over the binary variables.

    ``prove_optimal`` explores until the incumbent is proved optimal (or the
    budget runs out: ``feasible_budget_hit`` with an incumbent,
    ``budget_unknown`` without).  ``first_feasible`` returns the first
    integral solution found (status ``feasible``).  Branching follows the
    most fractional binary (lowest index on ties) and descends into the
    nearest-integer child first; everything is deterministic.
    """
    if mode not in ("prove_optimal", "first_feasible"):
        raise MilpError(f"unknown mode {mode!r}")
    c, A, rels, b, lb0, ub0 = model.dense()
    if dump_path:
        write_lp_format(model, dump_path)
    sense = model.sense
    bins = np.array(model.binary_indices, dtype=int)
    t0 = time.monotonic()
    sign = 1.0 if sense == "max" else -1.0  # internal: maximize sign*obj

    best_x, best_obj = None, -np.inf
    nodes = 0
    exhausted = False
    unbounded = False
    stack = [(lb0, ub0)]
    while stack:
        if node_budget is not None and nodes >= node_budget:
            exhausted = True
            break
        if time_budget is not None and time.monotonic() - t0 > time_budget:
            exhausted = True
            break
        lb, ub = stack.pop()
        sol = _solve_lp_arrays(c, A, rels, b, lb, ub, sense)
        nodes += 1
        if sol.status == "infeasible":
            continue
        if sol.status == "unbounded":
            unbounded = True
            break
        bound = sign * sol.objective
        if best_x is not None and bound <= best_obj + OBJ_TOL:
            continue
        xb = sol.x[bins] if bins.size else np.empty(0)
        frac = np.abs(xb - np.round(xb))
        if not bins.size or np.max(frac) <= INT_TOL:
            # integral: the node LP optimum is the best of the subtree
            if best_x is None or bound > best_obj + OBJ_TOL:
                best_x, best_obj = sol.x.copy(), bound
                if mode == "first_feasible":
                    break
            continue
        k = int(np.argmax(frac))            # ties -> lowest index via argmax
        j = int(bins[k])
        preferred = 1.0 if xb[k] >= 0.5 else 0.0
        for val in (1.0 - preferred, preferred):  # preferred child popped first
            lb2, ub2 = lb.copy(), ub.copy()
            lb2[j] = ub2[j] = val
            stack.append((lb2, ub2))

    elapsed = time.monotonic() - t0
    if unbounded:
        return MilpSolution(status="unbounded", nodes=nodes, elapsed=elapsed, model=model)
    if best_x is None:
        status = "budget_unknown" if exhausted else "infeasible"
        return MilpSolution(status=status, nodes=nodes, elapsed=elapsed, model=model)
    # hard re-check of the incumbent, integrality included
    if not _check_solution(c, A, rels, b, lb0, ub0, best_x):
        raise NumericalBreakdownError("incumbent failed the independent re-check")
    if bins.size and np.max(np.abs(best_x[bins] - np.round(best_x[bins]))) > INT_TOL:
        raise NumericalBreakdownError("incumbent failed the integrality re-check")
    if exhausted:
        status = "feasible_budget_hit"
    elif mode == "first_feasible" and stack:
        status = "feasible"
    else:
        status = "optimal"
    return MilpSolution(status=status, x=best_x, objective=float(c @ best_x),
                        nodes=nodes, elapsed=elapsed, model=model)


# --------------------------------------------------------------------------
# LP-format dump (debug aid for cross-checking with external solvers)
# --------------------------------------------------------------------------

def _lp_name(name: str, j: int) -> str:
    safe = "".join(ch if ch.isalnum() or ch == "_" else "_" for ch in name)
    if not safe or safe[0].isdigit():
        safe = f"v{j}_{safe}"
    return safe


def _lp_terms(coeffs: dict[int, float], names: list[str]) -> str:
    if not coeffs:
        return "0 " + names[0]
    parts = []
    for j in sorted(coeffs):
        a = coeffs[j]
        if a == 0:
            continue
        sign = "-" if a < 0 else ("+" if parts else "")
        parts.append(f"{sign} {abs(a):.17g} {names[j]}".strip())
    return " ".join(parts) if parts else "0 " + names[0]


def write_lp_format(model: MilpModel, path: str):
    names = [_lp_name(v.name, j) for j, v in enumerate(model.vars)]
    lines = [f"\\ {model.name}", "Maximize" if model.sense == "max" else "Minimize",
             " obj: " + _lp_terms(model.obj, names), "Subject To"]
    for i, (row, rel, rhs) in enumerate(zip(model.rows, model.rels, model.rhs)):
        lines.append(f" c{i}: {_lp_terms(row, names)} {rel} {rhs:.17g}")
    lines.append("Bounds")
    for j, v in enumerate(model.vars):
        if v.binary:
            continue
        hi = "" if np.isinf(v.ub) else f" <= {v.ub:.17g}"
        lines.append(f" {v.lb:.17g} <= {names[j]}{hi}")
    bin_names = [names[j] for j in model.binary_indices]
    if bin_names:
        lines.append("Binaries")
        lines.append(" " + " ".join(bin_names))
    lines.append("End")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
