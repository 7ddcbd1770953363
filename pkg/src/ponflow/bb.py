"""Self-contained exact solver for desk-scale MILP instances.

A dense-tableau bounded-variable simplex handles LP relaxations and a
best-first branch-and-bound over binary variables closes integrality. The
implementation favors auditability over speed: it is the reference backend
used when no industrial solver is installed, with a documented envelope of
2000 variables / 5000 constraints. Larger instances belong to
:func:`ponflow.solvers.solve_external`.

Determinism: identical models and limits produce identical node sequences
and results (numpy arithmetic only, no randomness, ties broken on variable
indices).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from heapq import heappop, heappush

import numpy as np

from .milp import (
    GE,
    INFEASIBLE,
    LE,
    LIMIT,
    OPTIMAL,
    UNBOUNDED,
    Assignment,
    MilpModel,
)

MAX_VARIABLES = 2000
MAX_CONSTRAINTS = 5000

_EPS = 1e-9
_TINY_PIVOT = 1e-11
_STALL_THRESHOLD = 64


class EnvelopeError(ValueError):
    """Instance exceeds the documented small-scale envelope."""


@dataclass
class LpStandardForm:
    """LP data extracted from a :class:`MilpModel` with integrality relaxed.

    Rows keep their senses; the simplex converts to equalities internally.
    Every variable needs a finite lower bound.
    """

    objective: np.ndarray
    matrix: np.ndarray
    senses: list[str]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    names: list[str]
    binary_idx: list[int] = field(default_factory=list)
    maximize: bool = False

    @classmethod
    def from_model(cls, m: MilpModel) -> "LpStandardForm":
        n = m.num_variables
        names = [v.name for v in m.variables]
        lower = np.array([v.lower for v in m.variables], dtype=float)
        upper = np.array([v.upper for v in m.variables], dtype=float)
        if np.any(np.isneginf(lower)):
            bad = names[int(np.argmax(np.isneginf(lower)))]
            raise EnvelopeError(
                f"variable {bad!r} has no finite lower bound; the internal "
                "solver requires finite lower bounds"
            )
        c = np.zeros(n)
        for v, coef in m.objective.items():
            c[m.var_index[v]] = coef
        rows = np.zeros((m.num_constraints, n))
        rhs = np.zeros(m.num_constraints)
        senses: list[str] = []
        for i, con in enumerate(m.constraints):
            for v, coef in con.terms.items():
                rows[i, m.var_index[v]] = coef
            rhs[i] = con.rhs
            senses.append(con.sense)
        binary_idx = [i for i, v in enumerate(m.variables) if v.kind == "binary"]
        return cls(c, rows, senses, rhs, lower, upper, names, binary_idx,
                   maximize=m.direction == "maximize")


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | numeric
    values: np.ndarray | None
    objective: float


@dataclass
class BbLimits:
    """Branch-and-bound stopping limits; all fields must be positive."""

    max_nodes: int = 200_000
    time_s: float = math.inf
    abs_gap: float = 1e-6

    def __post_init__(self) -> None:
        if self.max_nodes <= 0 or self.time_s <= 0 or self.abs_gap <= 0:
            raise ValueError("BbLimits fields must all be positive")


class _Tableau:
    """Two-phase bounded-variable simplex on a dense tableau.

    Columns are laid out [structural | slack | artificial]. Nonbasic
    variables rest at a bound and the ratio test supports bound flips.
    Dantzig pricing switches to Bland's rule after a degenerate stall, which
    guarantees termination.
    """

    def __init__(self, f: LpStandardForm, lower: np.ndarray, upper: np.ndarray):
        mrows, n = f.matrix.shape
        self.m = mrows
        self.n = n
        A = np.array(f.matrix, dtype=float, copy=True)
        b = np.array(f.rhs, dtype=float, copy=True)
        slack_up = np.empty(mrows)
        for i, s in enumerate(f.senses):
            if s == GE:
                A[i] *= -1.0
                b[i] *= -1.0
                slack_up[i] = math.inf
            elif s == LE:
                slack_up[i] = math.inf
            else:
                slack_up[i] = 0.0
        # Start from the slack basis wherever the residual already fits the
        # slack's bounds; artificial columns (carrying the residual's sign)
        # exist only for the remaining rows, keeping the tableau narrow and
        # phase 1 short.
        resid = b - A @ lower  # structural nonbasic at lower, slacks at zero
        sign = np.where(resid >= 0.0, 1.0, -1.0)
        slack_ok = (resid >= 0.0) & (resid <= slack_up + 1e-12)
        art_rows = np.flatnonzero(~slack_ok)
        nart = art_rows.size
        self.art0 = n + mrows
        self.ncols = n + mrows + nart
        self.lb = np.concatenate([lower, np.zeros(mrows + nart)])
        self.ub = np.concatenate([upper, slack_up, np.full(nart, math.inf)])
        self.cost2 = np.concatenate([f.objective, np.zeros(mrows + nart)])
        if f.maximize:
            self.cost2 = -self.cost2
        art_cols = np.zeros((mrows, nart))
        art_cols[art_rows, np.arange(nart)] = sign[art_rows]
        self.A = np.hstack([A, np.eye(mrows), art_cols])
        self.b = b
        scale = np.where(slack_ok, 1.0, sign)
        self.T = self.A * scale[:, None]
        self.xB = np.where(slack_ok, resid, np.abs(resid))
        self.basis = np.where(
            slack_ok, np.arange(n, n + mrows),
            self.art0 + np.cumsum(~slack_ok) - 1,
        )
        self.in_basis = np.zeros(self.ncols, dtype=bool)
        self.in_basis[self.basis] = True
        self.at_upper = np.zeros(self.ncols, dtype=bool)
        cost1 = np.zeros(self.ncols)
        cost1[self.art0:] = 1.0
        self.r1 = cost1 - self.T[art_rows].sum(axis=0)
        self.r2 = self.cost2.copy()
        # Devex reference weights for pricing.
        self.w = np.ones(self.ncols)

    def _pivot(self, p: int, q: int) -> None:
        self.T[p] = self.T[p] / self.T[p, q]
        col = self.T[:, q].copy()
        col[p] = 0.0
        self.T -= np.outer(col, self.T[p])
        self.T[:, q] = 0.0
        self.T[p, q] = 1.0
        if self.r1[q] != 0.0:
            self.r1 = self.r1 - self.r1[q] * self.T[p]
            self.r1[q] = 0.0
        if self.r2[q] != 0.0:
            self.r2 = self.r2 - self.r2[q] * self.T[p]
            self.r2[q] = 0.0

    def _run_phase(self, phase1: bool, iter_budget: int) -> str:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self._run_phase_inner(phase1, iter_budget)

    def _run_phase_inner(self, phase1: bool, iter_budget: int) -> str:
        stall = 0
        bland = False
        movable = self.ub - self.lb > 0.0
        for _ in range(iter_budget):
            r = self.r1 if phase1 else self.r2
            allowed = ~self.in_basis & movable
            eligible_mask = allowed & (
                (~self.at_upper & (r < -_EPS)) | (self.at_upper & (r > _EPS))
            )
            eligible = np.flatnonzero(eligible_mask)
            if eligible.size == 0:
                return "optimal"
            banned: set[int] = set()
            while True:
                cand = [j for j in eligible if j not in banned]
                if not cand:
                    return "numeric"
                if bland:
                    q = int(cand[0])
                else:
                    # Devex pricing: largest squared reduced cost per weight.
                    arr = np.asarray(cand)
                    q = int(arr[np.argmax(r[arr] * r[arr] / self.w[arr])])
                d = -1.0 if self.at_upper[q] else 1.0
                y = self.T[:, q]
                delta = d * y
                t_own = self.ub[q] - self.lb[q]
                rmin = math.inf
                p = -1
                if self.m:
                    t_low = np.where(
                        delta > _EPS,
                        (self.xB - self.lb[self.basis]) / delta,
                        math.inf,
                    )
                    t_high = np.where(
                        delta < -_EPS,
                        (self.ub[self.basis] - self.xB) / (-delta),
                        math.inf,
                    )
                    t_rows = np.minimum(t_low, t_high)
                    rmin = float(t_rows.min())
                    if math.isfinite(rmin):
                        ties = np.flatnonzero(t_rows <= rmin + _EPS)
                        if bland:
                            p = int(ties[np.argmin(self.basis[ties])])
                        else:
                            p = int(ties[np.argmax(np.abs(delta[ties]))])
                if math.isinf(t_own) and math.isinf(rmin):
                    return "numeric" if phase1 else "unbounded"
                if t_own <= rmin:
                    # Bound flip: entering traverses its own range, no pivot.
                    self.xB = self.xB - d * t_own * y
                    self.at_upper[q] = not self.at_upper[q]
                    p = -2
                    break
                if abs(y[p]) < _TINY_PIVOT:
                    banned.add(q)
                    continue
                break
            if p == -2:
                continue
            t = max(rmin, 0.0)
            if t <= 1e-10:
                stall += 1
                if stall >= _STALL_THRESHOLD:
                    bland = True
            else:
                stall = 0
            entering_val = (self.ub[q] if self.at_upper[q] else self.lb[q]) + d * t
            self.xB = self.xB - d * t * y
            leaving = int(self.basis[p])
            self.at_upper[leaving] = delta[p] < 0.0
            self.in_basis[leaving] = False
            alpha_q = self.T[p, q]
            w_q = self.w[q]
            self._pivot(p, q)
            # Devex weight update against the (scaled) pivot row.
            if w_q > 1e7:
                self.w[:] = 1.0
            else:
                row = self.T[p]
                np.maximum(self.w, row * row * w_q, out=self.w)
                self.w[leaving] = max(w_q / (alpha_q * alpha_q), 1.0)
            self.basis[p] = q
            self.in_basis[q] = True
            self.at_upper[q] = False
            self.xB[p] = entering_val
        return "numeric"

    def _refine(self) -> bool:
        """Recompute basic values from the original columns for accuracy."""
        if self.m == 0:
            return True
        nb = np.flatnonzero(~self.in_basis)
        vals = np.where(self.at_upper[nb], self.ub[nb], self.lb[nb])
        if not np.all(np.isfinite(vals)):
            return False
        rhs = self.b - self.A[:, nb] @ vals
        try:
            self.xB = np.linalg.solve(self.A[:, self.basis], rhs)
        except np.linalg.LinAlgError:
            return False
        return True

    def solve(self) -> LpSolution:
        budget = 200 * (self.m + self.n) + 5000
        status = self._run_phase(phase1=True, iter_budget=budget)
        if status != "optimal":
            return LpSolution("numeric", None, math.nan)
        if not self._refine():
            return LpSolution("numeric", None, math.nan)
        art_rows = self.basis >= self.art0
        infeas = float(np.abs(self.xB[art_rows]).sum()) if art_rows.any() else 0.0
        if infeas > 1e-7:
            return LpSolution("infeasible", None, math.nan)
        self.ub[self.art0:] = 0.0  # pin artificials out of phase 2
        status = self._run_phase(phase1=False, iter_budget=budget)
        if status == "numeric":
            return LpSolution("numeric", None, math.nan)
        if status == "unbounded":
            return LpSolution("unbounded", None, math.nan)
        if not self._refine():
            return LpSolution("numeric", None, math.nan)
        x = np.where(self.at_upper[: self.n], self.ub[: self.n],
                     self.lb[: self.n]).astype(float)
        for row, var in enumerate(self.basis):
            if var < self.n:
                x[var] = self.xB[row]
        obj = float(self.cost2[: self.n] @ x)
        return LpSolution("optimal", x, obj)


def solve_lp(f: LpStandardForm,
             lower: np.ndarray | None = None,
             upper: np.ndarray | None = None) -> LpSolution:
    """Solve the LP relaxation of ``f``; bound arrays override stored bounds.

    Returns an optimal basic solution or an explicit infeasible/unbounded/
    numeric status; a numeric breakdown is never reported as optimal. The
    objective follows the model's original direction.
    """
    lo = f.lower if lower is None else lower
    hi = f.upper if upper is None else upper
    sol = _Tableau(f, lo, hi).solve()
    if sol.status == "optimal" and f.maximize:
        return LpSolution(sol.status, sol.values, -sol.objective)
    return sol


@dataclass(order=True)
class _Node:
    bound: float
    neg_depth: int
    seq: int
    lower: np.ndarray = field(compare=False)
    upper: np.ndarray = field(compare=False)


def solve_milp(m: MilpModel, limits: BbLimits | None = None) -> Assignment:
    """Best-first branch-and-bound on the binary variables of ``m``.

    Branches on the most fractional binary (ties to the smallest variable
    index) and explores nodes in best-bound order (bound ties favor deeper
    nodes, then insertion order). Stops optimal within ``limits.abs_gap``,
    or returns ``limit`` status carrying the incumbent when a limit hits.
    Instances outside the documented envelope are refused.
    """
    limits = limits or BbLimits()
    if m.num_variables > MAX_VARIABLES or m.num_constraints > MAX_CONSTRAINTS:
        raise EnvelopeError(
            f"instance has {m.num_variables} variables / {m.num_constraints} "
            f"constraints, beyond the internal envelope of {MAX_VARIABLES}/"
            f"{MAX_CONSTRAINTS}; use an external solver backend"
        )
    f = LpStandardForm.from_model(m)
    sense = -1.0 if f.maximize else 1.0  # work in minimize space
    start = time.monotonic()
    seq = 0
    heap: list[_Node] = [_Node(-math.inf, 0, 0, f.lower.copy(), f.upper.copy())]
    incumbent: np.ndarray | None = None
    incumbent_obj = math.inf
    nodes = 0
    hit_limit = False
    int_tol = 1e-6
    while heap:
        if nodes >= limits.max_nodes or time.monotonic() - start > limits.time_s:
            hit_limit = True
            break
        node = heappop(heap)
        if node.bound >= incumbent_obj - limits.abs_gap:
            continue
        nodes += 1
        sol = solve_lp(f, node.lower, node.upper)
        if sol.status == "infeasible":
            continue
        if sol.status == "numeric":
            hit_limit = True
            break
        if sol.status == "unbounded":
            if nodes == 1:
                return Assignment({}, math.nan, UNBOUNDED)
            continue
        bound = sense * sol.objective
        if bound >= incumbent_obj - limits.abs_gap:
            continue
        x = sol.values
        assert x is not None
        frac = [
            (min(x[i] - math.floor(x[i]), math.ceil(x[i]) - x[i]), i)
            for i in f.binary_idx
            if node.lower[i] != node.upper[i]
            and min(abs(x[i]), abs(x[i] - 1.0)) > int_tol
        ]
        if not frac:
            incumbent = x.copy()
            for i in f.binary_idx:
                incumbent[i] = round(incumbent[i])
            incumbent_obj = bound
            continue
        frac.sort(key=lambda fi: (-fi[0], fi[1]))
        branch = frac[0][1]
        depth = -node.neg_depth + 1
        for fixed in (0.0, 1.0):
            lo = node.lower.copy()
            hi = node.upper.copy()
            lo[branch] = fixed
            hi[branch] = fixed
            seq += 1
            heappush(heap, _Node(bound, -depth, seq, lo, hi))
    if incumbent is None:
        return Assignment({}, math.nan, LIMIT if hit_limit else INFEASIBLE)
    values = {name: float(incumbent[i]) for i, name in enumerate(f.names)}
    objective = float(sense * incumbent_obj)
    open_gap = hit_limit and any(
        n.bound < incumbent_obj - limits.abs_gap for n in heap
    )
    return Assignment(values, objective, LIMIT if open_gap else OPTIMAL)
