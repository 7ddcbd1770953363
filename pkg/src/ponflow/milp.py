"""Solver-neutral MILP intermediate representation.

A :class:`MilpModel` holds variables, linear constraints and a linear
objective without committing to any solver. Models serialize to the fixed-form
LP text dialect understood by mainstream open-source solvers, and solver
output normalized to the adapter line format (``status``/``objective``/
``name value``) parses back into an :class:`Assignment`.

Every constraint carries an annotation naming the constraint family it
belongs to, so decoded solutions and feasibility reports can point at the
violated family rather than an opaque row index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

CONTINUOUS = "continuous"
BINARY = "binary"

LE = "<="
EQ = "="
GE = ">="

_SENSES = (LE, EQ, GE)

# Assignment statuses.
OPTIMAL = "optimal"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
LIMIT = "limit"

_STATUSES = (OPTIMAL, FEASIBLE, INFEASIBLE, UNBOUNDED, LIMIT)


class ModelError(ValueError):
    """Raised for malformed model construction (duplicate/undeclared names)."""


@dataclass(frozen=True)
class Variable:
    """A decision variable.

    Binary variables must keep their bounds inside [0, 1]; continuous
    variables may use any finite lower bound and ``math.inf`` upper bound.
    """

    name: str
    kind: str = CONTINUOUS
    lower: float = 0.0
    upper: float = math.inf

    def __post_init__(self) -> None:
        if not self.name or not _valid_name(self.name):
            raise ModelError(f"invalid variable name {self.name!r}")
        if self.kind not in (CONTINUOUS, BINARY):
            raise ModelError(f"unknown variable kind {self.kind!r}")
        if self.lower > self.upper:
            raise ModelError(f"{self.name}: lower {self.lower} > upper {self.upper}")
        if self.kind == BINARY and not (0.0 <= self.lower and self.upper <= 1.0):
            raise ModelError(f"{self.name}: binary bounds must lie in [0, 1]")


def _valid_name(name: str) -> bool:
    if not (name[0].isalpha() or name[0] == "_"):
        return False
    return all(c.isalnum() or c == "_" for c in name)


@dataclass
class LinearConstraint:
    """``sum(terms[v] * v) sense rhs`` over declared variable names."""

    name: str
    terms: dict[str, float]
    sense: str
    rhs: float

    def __post_init__(self) -> None:
        if self.sense not in _SENSES:
            raise ModelError(f"{self.name}: unknown sense {self.sense!r}")
        if not math.isfinite(self.rhs):
            raise ModelError(f"{self.name}: rhs must be finite")
        # Canonical form never stores zero coefficients.
        self.terms = {v: float(c) for v, c in self.terms.items() if c != 0.0}


@dataclass
class Assignment:
    """A solution candidate as returned by a solver backend."""

    values: dict[str, float]
    objective_value: float
    status: str
    missing_vars: int = 0

    def __post_init__(self) -> None:
        if self.status not in _STATUSES:
            raise ModelError(f"unknown assignment status {self.status!r}")


@dataclass
class ConstraintViolation:
    name: str
    annotation: str
    activity: float
    sense: str
    rhs: float
    slack: float


@dataclass
class FeasibilityReport:
    """Outcome of :func:`check_assignment`."""

    ok: bool
    violations: list[ConstraintViolation]
    bound_violations: list[str]
    integrality_violations: list[str]
    recomputed_objective: float
    objective_mismatch: float


class MilpModel:
    """Mutable MILP builder; treat as immutable once handed to a solver."""

    def __init__(self, direction: str = "minimize", name: str = "model") -> None:
        if direction not in ("minimize", "maximize"):
            raise ModelError(f"unknown direction {direction!r}")
        self.direction = direction
        self.name = name
        self.variables: list[Variable] = []
        self.var_index: dict[str, int] = {}
        self.constraints: list[LinearConstraint] = []
        self.annotations: dict[str, str] = {}
        self.objective: dict[str, float] = {}

    # -- construction -----------------------------------------------------

    def add_variable(self, spec: Variable) -> str:
        """Register a variable and return its handle (the name)."""
        if spec.name in self.var_index:
            raise ModelError(f"duplicate variable {spec.name!r}")
        self.var_index[spec.name] = len(self.variables)
        self.variables.append(spec)
        return spec.name

    def add_continuous(self, name: str, lower: float = 0.0, upper: float = math.inf) -> str:
        return self.add_variable(Variable(name, CONTINUOUS, lower, upper))

    def add_binary(self, name: str) -> str:
        return self.add_variable(Variable(name, BINARY, 0.0, 1.0))

    def add_constraint(self, c: LinearConstraint, annotation: str = "") -> str:
        """Store a constraint; every referenced variable must be declared."""
        if c.name in self.annotations:
            raise ModelError(f"duplicate constraint {c.name!r}")
        for v in c.terms:
            if v not in self.var_index:
                raise ModelError(f"constraint {c.name!r} references undeclared {v!r}")
        note = annotation
        if not c.terms:
            note = (note + "; " if note else "") + "vacuous"
        self.constraints.append(c)
        self.annotations[c.name] = note
        return c.name

    def set_objective(self, coeffs: dict[str, float], direction: str | None = None) -> None:
        for v in coeffs:
            if v not in self.var_index:
                raise ModelError(f"objective references undeclared {v!r}")
        if direction is not None:
            if direction not in ("minimize", "maximize"):
                raise ModelError(f"unknown direction {direction!r}")
            self.direction = direction
        self.objective = {v: float(c) for v, c in coeffs.items() if c != 0.0}

    # -- queries ----------------------------------------------------------

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def binaries(self) -> list[Variable]:
        return [v for v in self.variables if v.kind == BINARY]

    def objective_at(self, values: dict[str, float]) -> float:
        return sum(c * values.get(v, 0.0) for v, c in self.objective.items())


# -- LP text serialization -------------------------------------------------

def _num(x: float) -> str:
    """17-significant-digit rendering, stable across runs."""
    if x == math.floor(x) and abs(x) < 1e15:
        return str(int(x))
    return f"{x:.17g}"


def _expr_lines(terms: list[tuple[str, float]], head: str, width: int = 200) -> list[str]:
    """Render ``head: c1 v1 + c2 v2 ...`` wrapped deterministically."""
    parts: list[str] = []
    for i, (v, c) in enumerate(terms):
        sign = "-" if c < 0 else ("+" if i > 0 else "")
        mag = _num(abs(c))
        parts.append(f"{sign} {mag} {v}".strip() if sign else f"{mag} {v}")
    if not parts:
        parts = ["0"]
    lines = [f" {head}: {parts[0]}"]
    for p in parts[1:]:
        if len(lines[-1]) + len(p) + 1 > width:
            lines.append("   " + p)
        else:
            lines[-1] += " " + p
    return lines


def write_lp(m: MilpModel) -> str:
    """Serialize to fixed-form LP text, byte-deterministic per model.

    Sections: ``Minimize``/``Maximize``, ``Subject To``, ``Bounds``,
    ``Binaries``, ``End``. Variables appear in declaration order inside each
    expression; vacuous constraints are emitted as comments so third-party
    readers never see an empty row.
    """
    if m.num_variables == 0:
        raise ModelError("cannot serialize an empty model")
    order = m.var_index
    out: list[str] = []
    out.append("Maximize" if m.direction == "maximize" else "Minimize")
    obj_terms = sorted(m.objective.items(), key=lambda kv: order[kv[0]])
    if obj_terms:
        out.extend(_expr_lines(obj_terms, "obj"))
    else:
        out.append(f" obj: 0 {m.variables[0].name}")
    out.append("Subject To")
    for c in m.constraints:
        if not c.terms:
            out.append(f"\\ vacuous: {c.name} {c.sense} {_num(c.rhs)}")
            continue
        terms = sorted(c.terms.items(), key=lambda kv: order[kv[0]])
        lines = _expr_lines(terms, c.name)
        lines[-1] += f" {c.sense} {_num(c.rhs)}"
        out.extend(lines)
    out.append("Bounds")
    for v in m.variables:
        if v.kind == BINARY:
            if v.lower > 0.0 or v.upper < 1.0:
                out.append(f" {_num(v.lower)} <= {v.name} <= {_num(v.upper)}")
            continue
        lo, hi = v.lower, v.upper
        if lo == 0.0 and hi == math.inf:
            continue
        if lo == -math.inf and hi == math.inf:
            out.append(f" {v.name} free")
        elif hi == math.inf:
            out.append(f" {v.name} >= {_num(lo)}")
        elif lo == -math.inf:
            out.append(f" {v.name} <= {_num(hi)}")
        elif lo == hi:
            out.append(f" {v.name} = {_num(lo)}")
        else:
            out.append(f" {_num(lo)} <= {v.name} <= {_num(hi)}")
    bins = m.binaries()
    if bins:
        out.append("Binaries")
        line = ""
        for v in bins:
            if len(line) + len(v.name) + 1 > 200:
                out.append(" " + line.strip())
                line = ""
            line += v.name + " "
        if line:
            out.append(" " + line.strip())
    out.append("End")
    return "\n".join(out) + "\n"


def _lp_tokens(chunk: str) -> list[str]:
    """Tokenize an LP expression, separating signs, senses and colons."""
    for sym in ("<=", ">=", "+", "-", ":"):
        chunk = chunk.replace(sym, f" {sym} ")
    # Repair split senses: "< =" never occurs because <= was padded first.
    return chunk.split()


def read_lp(text: str) -> MilpModel:
    """Parse fixed-form LP text back into a model.

    Accepts the dialect :func:`write_lp` emits (named constraints, wrapped
    lines, Bounds and Binaries sections). Used by the CLI to solve standalone
    LP files with the internal backend; round-trip fidelity against this
    writer is checked by the test-suite's independent reader.
    """
    section = None
    direction = "minimize"
    obj_tokens: list[str] = []
    con_tokens: list[str] = []
    bound_lines: list[str] = []
    binary_names: list[str] = []
    for raw in text.splitlines():
        line = raw.split("\\")[0].strip()
        if not line:
            continue
        low = line.lower()
        if low in ("minimize", "minimise", "min"):
            section, direction = "obj", "minimize"
            continue
        if low in ("maximize", "maximise", "max"):
            section, direction = "obj", "maximize"
            continue
        if low in ("subject to", "st", "s.t.", "such that"):
            section = "cons"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low in ("binaries", "binary", "bin"):
            section = "bin"
            continue
        if low in ("general", "generals", "gen", "semi-continuous", "sos"):
            raise ModelError(f"unsupported LP section {line!r}")
        if low == "end":
            break
        if section == "obj":
            obj_tokens.extend(_lp_tokens(line))
        elif section == "cons":
            con_tokens.extend(_lp_tokens(line))
        elif section == "bounds":
            bound_lines.append(line)
        elif section == "bin":
            binary_names.extend(line.split())

    def is_number(tok: str) -> bool:
        try:
            float(tok)
        except ValueError:
            return False
        return True

    def parse_terms(tokens: list[str]) -> dict[str, float]:
        # Grammar per term: [sign] [number] name.
        terms: dict[str, float] = {}
        sign = 1.0
        coef: float | None = None
        for tok in tokens:
            if tok == "+":
                sign, coef = 1.0, None
            elif tok == "-":
                sign, coef = -sign if coef is None and sign < 0 else -1.0, None
            elif is_number(tok):
                coef = float(tok) if coef is None else coef * float(tok)
            else:
                terms[tok] = terms.get(tok, 0.0) + sign * (1.0 if coef is None else coef)
                sign, coef = 1.0, None
        return terms

    # Objective label ("obj :") is optional; zero coefficients drop later.
    if len(obj_tokens) >= 2 and obj_tokens[1] == ":":
        obj_tokens = obj_tokens[2:]
    obj_terms = parse_terms(obj_tokens)

    # Constraints: each ends at "<sense> <number>"; an optional "<name> :"
    # prefix starts the next one.
    cons: list[tuple[str, dict[str, float], str, float]] = []
    i = 0
    current: list[str] = []
    name: str | None = None
    while i < len(con_tokens):
        tok = con_tokens[i]
        if tok == ":" and current:
            if len(current) > 1:
                raise ModelError(f"misplaced constraint label near {current!r}")
            name = current.pop()
            i += 1
            continue
        if tok in (LE, GE, "="):
            sense = tok if tok in (LE, GE) else EQ
            rhs_sign = 1.0
            i += 1
            if con_tokens[i] in ("+", "-"):
                rhs_sign = -1.0 if con_tokens[i] == "-" else 1.0
                i += 1
            rhs = rhs_sign * float(con_tokens[i])
            cons.append((name or f"c{len(cons)}", parse_terms(current), sense, rhs))
            current = []
            name = None
        else:
            current.append(tok)
        i += 1
    if current:
        raise ModelError(f"dangling constraint tokens: {current!r}")

    names: dict[str, None] = {}
    for v in obj_terms:
        names.setdefault(v)
    for _, terms, _, _ in cons:
        for v in terms:
            names.setdefault(v)
    lowers: dict[str, float] = {}
    uppers: dict[str, float] = {}
    for line in bound_lines:
        toks = _lp_tokens(line)
        toks = [t for t in toks]
        if len(toks) == 2 and toks[1].lower() == "free":
            lowers[toks[0]] = -math.inf
            names.setdefault(toks[0])
        elif len(toks) == 5 and toks[1] == LE and toks[3] == LE:
            lowers[toks[2]] = float(toks[0])
            uppers[toks[2]] = float(toks[4])
            names.setdefault(toks[2])
        elif len(toks) == 3 and toks[1] == LE:
            uppers[toks[0]] = float(toks[2])
            names.setdefault(toks[0])
        elif len(toks) == 3 and toks[1] == GE:
            lowers[toks[0]] = float(toks[2])
            names.setdefault(toks[0])
        elif len(toks) == 3 and toks[1] == "=":
            lowers[toks[0]] = uppers[toks[0]] = float(toks[2])
            names.setdefault(toks[0])
        elif len(toks) == 4 and toks[1] in (LE, GE) and toks[2] == "-":
            val = -float(toks[3])
            if toks[1] == LE:
                uppers[toks[0]] = val
            else:
                lowers[toks[0]] = val
            names.setdefault(toks[0])
        else:
            raise ModelError(f"unsupported bounds line: {line!r}")
    for b in binary_names:
        names.setdefault(b)
    binset = set(binary_names)
    m = MilpModel(direction)
    for v in names:
        if v in binset:
            m.add_variable(Variable(v, BINARY, lowers.get(v, 0.0),
                                    min(uppers.get(v, 1.0), 1.0)))
        else:
            m.add_variable(Variable(v, CONTINUOUS, lowers.get(v, 0.0),
                                    uppers.get(v, math.inf)))
    for cname, terms, sense, rhs in cons:
        m.add_constraint(LinearConstraint(cname, terms, sense, rhs), "parsed")
    m.set_objective(obj_terms)
    return m


# -- adapter solution format ------------------------------------------------

def parse_solution(text: str, m: MilpModel) -> Assignment:
    """Parse adapter-format solver output.

    Format: one ``status <token>`` line, an optional ``objective <value>``
    line, then ``<name> <value>`` lines. Variables absent from the listing
    default to zero; their count is reported on the assignment.
    """
    status: str | None = None
    objective: float | None = None
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ValueError(f"malformed solution line {lineno}: {raw!r}")
        key, val = fields
        if key == "status":
            if val not in _STATUSES:
                raise ValueError(f"unknown status token {val!r}")
            status = val
        elif key == "objective":
            objective = float(val)
        else:
            if key not in m.var_index:
                raise ValueError(f"solution names unknown variable {key!r}")
            values[key] = float(val)
    if status is None:
        raise ValueError("solution text has no status line")
    if status in (OPTIMAL, FEASIBLE):
        missing = m.num_variables - len(values)
        for v in m.variables:
            values.setdefault(v.name, 0.0)
        if objective is None:
            objective = m.objective_at(values)
        return Assignment(values, objective, status, missing_vars=missing)
    return Assignment({}, objective if objective is not None else math.nan, status)


def format_solution(a: Assignment) -> str:
    """Inverse of :func:`parse_solution` for adapter round-trips."""
    lines = [f"status {a.status}"]
    if not math.isnan(a.objective_value):
        lines.append(f"objective {_num(a.objective_value)}")
    for name in a.values:
        lines.append(f"{name} {_num(a.values[name])}")
    return "\n".join(lines) + "\n"


# -- feasibility check -------------------------------------------------------

def check_assignment(m: MilpModel, a: Assignment, tol: float = 1e-6) -> FeasibilityReport:
    """Verify an assignment against every constraint, bound and binary.

    Works purely by direct arithmetic; the objective is recomputed from the
    values and compared against the reported one.
    """
    if a.status not in (OPTIMAL, FEASIBLE):
        raise ValueError(f"cannot check assignment with status {a.status!r}")
    violations: list[ConstraintViolation] = []
    for c in m.constraints:
        activity = sum(coef * a.values.get(v, 0.0) for v, coef in c.terms.items())
        if c.sense == LE:
            slack = c.rhs - activity
        elif c.sense == GE:
            slack = activity - c.rhs
        else:
            slack = -abs(activity - c.rhs)
        if slack < -tol:
            violations.append(
                ConstraintViolation(
                    c.name, m.annotations.get(c.name, ""), activity, c.sense, c.rhs, slack
                )
            )
    bound_violations: list[str] = []
    integrality_violations: list[str] = []
    for v in m.variables:
        x = a.values.get(v.name, 0.0)
        if x < v.lower - tol or x > v.upper + tol:
            bound_violations.append(f"{v.name}={_num(x)} outside [{v.lower}, {v.upper}]")
        if v.kind == BINARY and min(abs(x), abs(x - 1.0)) > tol:
            integrality_violations.append(f"{v.name}={_num(x)}")
    recomputed = m.objective_at(a.values)
    mismatch = abs(recomputed - a.objective_value)
    ok = (
        not violations
        and not bound_violations
        and not integrality_violations
        and mismatch <= tol * (1.0 + abs(recomputed))
    )
    return FeasibilityReport(
        ok, violations, bound_violations, integrality_violations, recomputed, mismatch
    )
