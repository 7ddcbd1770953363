"""Solver backends: in-process HiGHS, external processes, internal fallback.

Three ways to solve a :class:`~ponflow.milp.MilpModel`:

* :func:`solve_scipy` drives the HiGHS MILP engine bundled with scipy —
  the workhorse backend, no external binaries needed.
* :func:`solve_external` shells out to a command-line solver through an
  adapter that renders the model as an LP file and normalizes the solver's
  native solution listing into the documented adapter line format
  (``status <token>`` / ``objective <v>`` / ``<name> <value>``). Adapters for
  CBC (``cbc``) and GLPK (``glpsol``) are bundled; any other command template
  is expected to emit the adapter format itself.
* :func:`ponflow.bb.solve_milp` is the self-contained desk-scale solver.

:func:`solve` dispatches by backend name so experiment code stays
solver-neutral.
"""

from __future__ import annotations

import math
import os
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.optimize as sopt
import scipy.sparse as sp

from . import bb
from .milp import (
    EQ,
    FEASIBLE,
    GE,
    INFEASIBLE,
    LE,
    LIMIT,
    OPTIMAL,
    UNBOUNDED,
    Assignment,
    MilpModel,
    parse_solution,
    write_lp,
)

# Environment variables overriding adapter binary locations.
ENV_CBC = "PONFLOW_CBC"
ENV_GLPSOL = "PONFLOW_GLPSOL"


class SolverError(RuntimeError):
    """External solver invocation failed."""


@dataclass
class SolveLimits:
    time_s: float = math.inf
    gap: float = 1e-9

    def __post_init__(self) -> None:
        if self.time_s <= 0 or self.gap < 0:
            raise ValueError("time_s must be positive and gap non-negative")


# -- scipy / HiGHS -----------------------------------------------------------

_SCIPY_STATUS = {0: OPTIMAL, 1: LIMIT, 2: INFEASIBLE, 3: UNBOUNDED, 4: LIMIT}


def solve_scipy(m: MilpModel, limits: SolveLimits | None = None) -> Assignment:
    """Solve with the HiGHS MILP engine that ships inside scipy."""
    limits = limits or SolveLimits()
    n = m.num_variables
    c = np.zeros(n)
    for v, coef in m.objective.items():
        c[m.var_index[v]] = coef
    sign = 1.0
    if m.direction == "maximize":
        c = -c
        sign = -1.0
    lower = np.array([v.lower for v in m.variables])
    upper = np.array([v.upper for v in m.variables])
    integrality = np.array(
        [1 if v.kind == "binary" else 0 for v in m.variables], dtype=np.uint8
    )
    constraints = []
    if m.num_constraints:
        rows, cols, data = [], [], []
        lb = np.empty(m.num_constraints)
        ub = np.empty(m.num_constraints)
        for i, con in enumerate(m.constraints):
            for v, coef in con.terms.items():
                rows.append(i)
                cols.append(m.var_index[v])
                data.append(coef)
            if con.sense == LE:
                lb[i], ub[i] = -np.inf, con.rhs
            elif con.sense == GE:
                lb[i], ub[i] = con.rhs, np.inf
            else:
                lb[i] = ub[i] = con.rhs
        A = sp.csr_matrix((data, (rows, cols)), shape=(m.num_constraints, n))
        constraints = [sopt.LinearConstraint(A, lb, ub)]
    options: dict[str, float | bool] = {"mip_rel_gap": limits.gap}
    if math.isfinite(limits.time_s):
        options["time_limit"] = limits.time_s
    res = sopt.milp(
        c,
        constraints=constraints,
        integrality=integrality,
        bounds=sopt.Bounds(lower, upper),
        options=options,
    )
    status = _SCIPY_STATUS.get(res.status, LIMIT)
    if res.x is None:
        if status == OPTIMAL:
            status = LIMIT
        return Assignment({}, math.nan, status)
    values = {v.name: float(res.x[i]) for i, v in enumerate(m.variables)}
    for v in m.variables:
        if v.kind == "binary":
            values[v.name] = float(round(values[v.name]))
    objective = float(sign * res.fun)
    if status == UNBOUNDED:
        status = LIMIT  # carries a point but no certified optimum
    return Assignment(values, objective, status)


# -- external process adapters ------------------------------------------------

def _cbc_command(lp: str, sol: str, limits: SolveLimits) -> list[str]:
    path = os.environ.get(ENV_CBC) or shutil.which("cbc") or "cbc"
    cmd = [path, lp]
    if math.isfinite(limits.time_s):
        cmd += ["-seconds", str(limits.time_s)]
    if limits.gap > 0:
        cmd += ["-ratioGap", str(limits.gap)]
    cmd += ["solve", "printingOptions", "all", "solution", sol]
    return cmd


def _cbc_normalize(sol_path: Path, stdout: str) -> str:
    """Translate a CBC solution file into adapter-format text."""
    text = sol_path.read_text() if sol_path.exists() else ""
    if not text.strip():
        raise SolverError(f"cbc produced no solution file; output was:\n{stdout}")
    first, *rows = text.splitlines()
    head = first.strip().lower()
    if head.startswith("optimal"):
        status = OPTIMAL
    elif "infeasible" in head:
        status = INFEASIBLE
    elif "unbounded" in head:
        status = UNBOUNDED
    elif head.startswith("stopped"):
        status = LIMIT
    else:
        raise SolverError(f"unrecognized cbc status line: {first!r}")
    out = [f"status {status}"]
    if "objective value" in head:
        out.append(f"objective {first.strip().split()[-1]}")
    if status in (OPTIMAL, LIMIT):
        for row in rows:
            fields = row.split()
            if len(fields) >= 3 and fields[0].lstrip("*").isdigit():
                out.append(f"{fields[1]} {fields[2]}")
    return "\n".join(out) + "\n"


def _glpsol_command(lp: str, sol: str, limits: SolveLimits) -> list[str]:
    path = os.environ.get(ENV_GLPSOL) or shutil.which("glpsol") or "glpsol"
    cmd = [path, "--lp", lp, "-o", sol]
    if math.isfinite(limits.time_s):
        cmd += ["--tmlim", str(max(1, int(math.ceil(limits.time_s))))]
    return cmd


def _glpsol_normalize(sol_path: Path, stdout: str) -> str:
    """Translate a glpsol ``-o`` report into adapter-format text."""
    text = sol_path.read_text() if sol_path.exists() else ""
    if not text.strip():
        raise SolverError(f"glpsol produced no report; output was:\n{stdout}")
    status = None
    objective = None
    for line in text.splitlines():
        s = line.strip()
        if s.startswith("Status:"):
            token = s.split(":", 1)[1].strip().upper()
            if "OPTIMAL" in token:
                status = OPTIMAL
            elif "EMPTY" in token or "INFEASIBLE" in token or "NO PRIMAL" in token:
                status = INFEASIBLE
            elif "UNBOUNDED" in token or "UNDEFINED" in token:
                status = UNBOUNDED
            else:
                status = LIMIT
        elif s.startswith("Objective:"):
            # "Objective:  obj = 9 (MAXimum)"
            try:
                objective = float(s.split("=", 1)[1].split()[0])
            except (IndexError, ValueError):
                objective = None
    if status is None:
        raise SolverError("glpsol report carries no Status line")
    out = [f"status {status}"]
    if objective is not None:
        out.append(f"objective {objective!r}")
    if status == OPTIMAL:
        in_columns = False
        for line in text.splitlines():
            if line.strip().startswith("No.") and "Column name" in line:
                in_columns = True
                continue
            if in_columns:
                s = line.strip()
                if s.startswith("---"):
                    continue
                if not s:
                    in_columns = False
                    continue
                fields = s.split()
                if not fields[0].isdigit():
                    continue
                name = fields[1]
                value = None
                for tok in fields[2:]:
                    if tok in ("B", "NL", "NU", "NF", "NS", "*"):
                        continue
                    try:
                        value = float(tok)
                    except ValueError:
                        continue
                    break
                if value is not None:
                    out.append(f"{name} {value!r}")
    return "\n".join(out) + "\n"


_ADAPTERS = {
    "cbc": (_cbc_command, _cbc_normalize),
    "glpsol": (_glpsol_command, _glpsol_normalize),
}


def available_external_solvers() -> list[str]:
    """Bundled adapters whose binaries resolve on this host."""
    found = []
    for name, env in (("cbc", ENV_CBC), ("glpsol", ENV_GLPSOL)):
        path = os.environ.get(env) or shutil.which(name)
        if path and Path(path).exists():
            found.append(name)
    return found


def solve_external(m: MilpModel, solver: str,
                   limits: SolveLimits | None = None) -> Assignment:
    """Write an LP file, run an external solver process, parse its answer.

    ``solver`` is either a bundled adapter name (``cbc``, ``glpsol``) or a
    command template containing ``{lp}`` and ``{sol}`` placeholders whose
    process writes adapter-format text to ``{sol}`` itself.
    """
    limits = limits or SolveLimits()
    with tempfile.TemporaryDirectory(prefix="ponflow_") as tmp:
        lp_path = Path(tmp) / "model.lp"
        sol_path = Path(tmp) / "model.sol"
        lp_path.write_text(write_lp(m))
        if solver in _ADAPTERS:
            build_cmd, normalize = _ADAPTERS[solver]
            cmd = build_cmd(str(lp_path), str(sol_path), limits)
        else:
            normalize = None
            cmd = [part.format(lp=lp_path, sol=sol_path)
                   for part in solver.split()]
        timeout = limits.time_s * 2 + 30 if math.isfinite(limits.time_s) else None
        try:
            proc = subprocess.run(
                cmd, capture_output=True, text=True, timeout=timeout
            )
        except FileNotFoundError as exc:
            raise SolverError(f"solver executable not found: {cmd[0]}") from exc
        except subprocess.TimeoutExpired:
            return Assignment({}, math.nan, LIMIT)
        if normalize is not None:
            adapter_text = normalize(sol_path, proc.stdout + proc.stderr)
        else:
            if proc.returncode != 0:
                raise SolverError(
                    f"solver command failed ({proc.returncode}): {proc.stderr.strip()}"
                )
            if not sol_path.exists():
                raise SolverError("solver command wrote no solution file")
            adapter_text = sol_path.read_text()
        return parse_solution(adapter_text, m)


# -- dispatch ------------------------------------------------------------------

def solve(m: MilpModel, backend: str = "auto",
          limits: SolveLimits | None = None) -> Assignment:
    """Solve with a named backend.

    ``auto`` and ``scipy`` use in-process HiGHS; ``internal`` uses the
    self-contained branch-and-bound; anything else is handed to
    :func:`solve_external`.
    """
    limits = limits or SolveLimits()
    if backend in ("auto", "scipy", "highs"):
        return solve_scipy(m, limits)
    if backend == "internal":
        bb_limits = bb.BbLimits(
            time_s=limits.time_s if math.isfinite(limits.time_s) else math.inf,
            abs_gap=max(limits.gap, 1e-9),
        )
        return bb.solve_milp(m, bb_limits)
    return solve_external(m, backend, limits)
