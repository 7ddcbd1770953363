"""AWGR port-wiring and wavelength-assignment optimization.

Models a PON cell where racks and an OLT port communicate through two
arrayed-waveguide-grating routers. The builder produces a solver-neutral
MILP that picks port attachments (``beta``), one wavelength per
communicating pair (``mu``) and per-wavelength routed paths (``chi``) so
the number of simultaneous pair connections is maximized. Decoded wirings
are re-verified by direct arithmetic and can be exported as a PON topology.

Node naming: communicating vertices are ``olt`` and ``g1..g{G-1}``; AWGR
ports are ``i{k}_{p}`` / ``o{k}_{p}`` for input/output port ``p`` of AWGR
``k``. Wavelengths are 1-based.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .milp import EQ, LE, Assignment, LinearConstraint, MilpModel

Edge = tuple[str, str]
PathEdge = tuple[str, str, int]

_PORT_RE = re.compile(r"^([io])(\d+)_(\d+)$")


def is_input_port(node: str) -> bool:
    m = _PORT_RE.match(node)
    return bool(m and m.group(1) == "i")


def is_output_port(node: str) -> bool:
    m = _PORT_RE.match(node)
    return bool(m and m.group(1) == "o")


def port_awgr(node: str) -> int:
    m = _PORT_RE.match(node)
    if not m:
        raise ValueError(f"{node!r} is not an AWGR port")
    return int(m.group(2))

# Constraint-family tags used in annotations and verification reports.
TAG_FLOW = "flow_conservation"
TAG_SINGLE_WL = "single_wavelength_per_pair"
TAG_DEST_UNIQUE = "dest_wavelength_unique"
TAG_SRC_UNIQUE = "source_wavelength_unique"
TAG_NO_RELAY = "no_endpoint_relay"
TAG_FORWARD = "awgr_forward_only"
TAG_PORT_PAIR = "awgr_port_pair_once"
TAG_ADJACENCY = "link_requires_adjacency"
TAG_RACK_IN = "rack_single_input"
TAG_RACK_OUT = "rack_single_output"
TAG_OLT_IN = "olt_input_per_awgr"
TAG_OLT_OUT = "olt_output_per_awgr"
TAG_IN_UNIQUE = "input_unique_attachment"
TAG_OUT_UNIQUE = "output_unique_attachment"
TAG_INTERNAL = "awgr_internal_full"
TAG_TRUNK = "trunk_budget"
TAG_SYMMETRY = "adjacency_symmetry"


class WiringError(ValueError):
    """Decoded assignment does not describe a usable wiring."""


@dataclass(frozen=True)
class AwgrInstance:
    """Cell dimensions: ``G`` communicating vertices (racks + one OLT port),
    two AWGRs of size ``M = G - 1``, and ``G - 1`` wavelengths."""

    G: int
    K: int = 2

    def __post_init__(self) -> None:
        if self.G < 3:
            raise ValueError("need at least two racks and an OLT port (G >= 3)")
        if self.K != 2:
            raise ValueError("the cell design uses exactly two AWGRs")

    @property
    def M(self) -> int:
        return self.G - 1

    @property
    def wavelengths(self) -> range:
        return range(1, self.G)

    @property
    def racks(self) -> list[str]:
        return [f"g{r}" for r in range(1, self.G)]

    @property
    def comm_vertices(self) -> list[str]:
        return ["olt"] + self.racks

    def in_ports(self, k: int) -> list[str]:
        return [f"i{k}_{p}" for p in range(1, self.M + 1)]

    def out_ports(self, k: int) -> list[str]:
        return [f"o{k}_{p}" for p in range(1, self.M + 1)]

    def pairs(self) -> list[tuple[str, str]]:
        return [(s, d) for s in self.comm_vertices for d in self.comm_vertices if s != d]

    def adjacency_pairs(self) -> list[Edge]:
        """Unordered potential attachments, canonical order."""
        out: list[Edge] = []
        all_in = [p for k in (1, 2) for p in self.in_ports(k)]
        all_out = [p for k in (1, 2) for p in self.out_ports(k)]
        for v in self.comm_vertices:
            out.extend((v, p) for p in all_in)
            out.extend((v, p) for p in all_out)
        for k in (1, 2):
            for i in self.in_ports(k):
                out.extend((i, o) for o in self.out_ports(k))
        for k, q in ((1, 2), (2, 1)):
            for o in self.out_ports(k):
                out.extend((o, i) for i in self.in_ports(q))
        return out

    def flow_edges(self) -> list[Edge]:
        """Directed edges carrying traffic variables.

        Kept directions: vertex -> input port, input -> output (same AWGR),
        output -> input (same AWGR, pinned to zero by the forward-only
        family), output -> input trunks across AWGRs, output port -> vertex.
        Reverse directions can only form value-neutral circulations, so no
        variables are created for them.
        """
        edges: list[Edge] = []
        all_in = [p for k in (1, 2) for p in self.in_ports(k)]
        all_out = [p for k in (1, 2) for p in self.out_ports(k)]
        for v in self.comm_vertices:
            edges.extend((v, p) for p in all_in)
        for k in (1, 2):
            for i in self.in_ports(k):
                edges.extend((i, o) for o in self.out_ports(k))
            for o in self.out_ports(k):
                edges.extend((o, i) for i in self.in_ports(k))
        for k, q in ((1, 2), (2, 1)):
            for o in self.out_ports(k):
                edges.extend((o, i) for i in self.in_ports(q))
        for v in self.comm_vertices:
            edges.extend((p, v) for p in all_out)
        return edges


@dataclass
class AwgrWiring:
    """Decoded wiring: chosen attachments, per-pair wavelengths and paths."""

    beta: frozenset[Edge]
    mu: dict[tuple[str, str], int]
    paths: dict[tuple[str, str], list[PathEdge]]

    def hop_count(self, pair: tuple[str, str]) -> int:
        """AWGR traversals of a pair's path (internal input->output edges)."""
        return sum(1 for m, n, _ in self.paths[pair]
                   if is_input_port(m) and is_output_port(n))


def _mu_name(j: int, s: str, d: str) -> str:
    return f"mu_{j}_{s}_{d}"


def _beta_name(m: str, n: str) -> str:
    return f"beta_{m}_{n}"


def _chi_name(j: int, m: str, n: str, s: str, d: str) -> str:
    return f"chi_{j}_{m}_{n}_{s}_{d}"


def build_awgr_model(inst: AwgrInstance) -> MilpModel:
    """Build the connection/wavelength-assignment MILP for one cell.

    The objective maximizes the number of connected ordered pairs. Every
    constraint carries a family tag in its annotation; coverage is complete.
    """
    m = MilpModel("maximize", name=f"awgr_g{inst.G}")
    pairs = inst.pairs()
    comm = inst.comm_vertices
    wl = list(inst.wavelengths)
    adj = inst.adjacency_pairs()
    edges = inst.flow_edges()
    out_edges: dict[str, list[Edge]] = {}
    in_edges: dict[str, list[Edge]] = {}
    for u, v in edges:
        out_edges.setdefault(u, []).append((u, v))
        in_edges.setdefault(v, []).append((u, v))

    for j in wl:
        for s, d in pairs:
            m.add_binary(_mu_name(j, s, d))
    for u, v in adj:
        m.add_binary(_beta_name(u, v))
        m.add_binary(_beta_name(v, u))
    for j in wl:
        for u, v in edges:
            for s, d in pairs:
                m.add_binary(_chi_name(j, u, v, s, d))

    m.set_objective({_mu_name(j, s, d): 1.0 for j in wl for s, d in pairs})

    nodes = comm + [p for k in (1, 2) for p in inst.in_ports(k) + inst.out_ports(k)]
    for s, d in pairs:
        for node in nodes:
            for j in wl:
                terms: dict[str, float] = {}
                for u, v in out_edges.get(node, ()):
                    terms[_chi_name(j, u, v, s, d)] = 1.0
                for u, v in in_edges.get(node, ()):
                    terms[_chi_name(j, u, v, s, d)] = terms.get(
                        _chi_name(j, u, v, s, d), 0.0) - 1.0
                if node == s:
                    terms[_mu_name(j, s, d)] = -1.0
                elif node == d:
                    terms[_mu_name(j, s, d)] = 1.0
                m.add_constraint(
                    LinearConstraint(f"fc_{j}_{node}_{s}_{d}", terms, EQ, 0.0),
                    TAG_FLOW,
                )

    for s, d in pairs:
        m.add_constraint(
            LinearConstraint(
                f"wl1_{s}_{d}", {_mu_name(j, s, d): 1.0 for j in wl}, LE, 1.0
            ),
            TAG_SINGLE_WL,
        )
    for d in comm:
        for j in wl:
            m.add_constraint(
                LinearConstraint(
                    f"wld_{d}_{j}",
                    {_mu_name(j, s, d): 1.0 for s in comm if s != d},
                    LE, 1.0,
                ),
                TAG_DEST_UNIQUE,
            )
    for s in comm:
        for j in wl:
            m.add_constraint(
                LinearConstraint(
                    f"wls_{s}_{j}",
                    {_mu_name(j, s, d): 1.0 for d in comm if d != s},
                    LE, 1.0,
                ),
                TAG_SRC_UNIQUE,
            )

    for i in comm:
        terms = {}
        for u, v in out_edges.get(i, ()):
            for j in wl:
                for s, d in pairs:
                    terms[_chi_name(j, u, v, s, d)] = 1.0
        for d in comm:
            if d != i:
                for j in wl:
                    terms[_mu_name(j, i, d)] = -1.0
        m.add_constraint(LinearConstraint(f"norelay_{i}", terms, LE, 0.0), TAG_NO_RELAY)

    for k in (1, 2):
        for o in inst.out_ports(k):
            for s, d in pairs:
                for j in wl:
                    terms = {
                        _chi_name(j, o, i, s, d): 1.0 for i in inst.in_ports(k)
                    }
                    m.add_constraint(
                        LinearConstraint(f"fwd_{j}_{o}_{s}_{d}", terms, LE, 0.0),
                        TAG_FORWARD,
                    )

    for k in (1, 2):
        for i in inst.in_ports(k):
            for o in inst.out_ports(k):
                terms = {
                    _chi_name(j, i, o, s, d): 1.0
                    for j in wl
                    for s, d in pairs
                }
                m.add_constraint(
                    LinearConstraint(f"pp_{i}_{o}", terms, LE, 1.0), TAG_PORT_PAIR
                )

    for u, v in edges:
        for j in wl:
            terms = {_chi_name(j, u, v, s, d): 1.0 for s, d in pairs}
            terms[_beta_name(u, v)] = -1.0
            m.add_constraint(
                LinearConstraint(f"adj_{j}_{u}_{v}", terms, LE, 0.0), TAG_ADJACENCY
            )

    all_in = [p for k in (1, 2) for p in inst.in_ports(k)]
    all_out = [p for k in (1, 2) for p in inst.out_ports(k)]
    for r in inst.racks:
        m.add_constraint(
            LinearConstraint(
                f"rin_{r}", {_beta_name(r, p): 1.0 for p in all_in}, LE, 1.0
            ),
            TAG_RACK_IN,
        )
        m.add_constraint(
            LinearConstraint(
                f"rout_{r}", {_beta_name(r, p): 1.0 for p in all_out}, LE, 1.0
            ),
            TAG_RACK_OUT,
        )
    for k in (1, 2):
        m.add_constraint(
            LinearConstraint(
                f"oin_{k}", {_beta_name("olt", p): 1.0 for p in inst.in_ports(k)},
                LE, 1.0,
            ),
            TAG_OLT_IN,
        )
        m.add_constraint(
            LinearConstraint(
                f"oout_{k}", {_beta_name("olt", p): 1.0 for p in inst.out_ports(k)},
                LE, 1.0,
            ),
            TAG_OLT_OUT,
        )

    for k, q in ((1, 2), (2, 1)):
        for i in inst.in_ports(k):
            terms = {_beta_name(v, i): 1.0 for v in comm}
            terms.update({_beta_name(o, i): 1.0 for o in inst.out_ports(q)})
            m.add_constraint(
                LinearConstraint(f"inuniq_{i}", terms, LE, 1.0), TAG_IN_UNIQUE
            )
        for o in inst.out_ports(k):
            terms = {_beta_name(v, o): 1.0 for v in comm}
            terms.update({_beta_name(i, o): 1.0 for i in inst.in_ports(q)})
            m.add_constraint(
                LinearConstraint(f"outuniq_{o}", terms, LE, 1.0), TAG_OUT_UNIQUE
            )

    for k in (1, 2):
        for i in inst.in_ports(k):
            for o in inst.out_ports(k):
                m.add_constraint(
                    LinearConstraint(f"int_{i}_{o}", {_beta_name(i, o): 1.0}, EQ, 1.0),
                    TAG_INTERNAL,
                )

    trunk_cap = inst.M // 2 - 1
    for k, q in ((1, 2), (2, 1)):
        terms = {
            _beta_name(o, i): 1.0
            for o in inst.out_ports(k)
            for i in inst.in_ports(q)
        }
        m.add_constraint(
            LinearConstraint(f"trunk_{k}_{q}", terms, LE, float(trunk_cap)), TAG_TRUNK
        )

    for u, v in adj:
        m.add_constraint(
            LinearConstraint(
                f"sym_{u}_{v}",
                {_beta_name(u, v): 1.0, _beta_name(v, u): -1.0},
                EQ, 0.0,
            ),
            TAG_SYMMETRY,
        )
    return m


def decode_wiring(a: Assignment, inst: AwgrInstance, tol: float = 1e-6) -> AwgrWiring:
    """Extract the wiring from a solved assignment.

    Binaries are rounded at ``tol``; non-integral values or unfollowable
    paths raise :class:`WiringError`. Paths are rebuilt by walking the
    pair's traffic edges from source to destination (breadth-first search
    resolves degenerate solutions that carry value-neutral circulations).
    """
    if a.status not in ("optimal", "feasible"):
        raise WiringError(f"assignment status {a.status!r} is not decodable")

    def bit(name: str) -> int:
        x = a.values.get(name, 0.0)
        if min(abs(x), abs(x - 1.0)) > tol:
            raise WiringError(f"variable {name} = {x} is not integral at tol {tol}")
        return int(round(x))

    beta = frozenset(
        (u, v)
        for u, v in inst.adjacency_pairs()
        if bit(_beta_name(u, v))
    )
    mu: dict[tuple[str, str], int] = {}
    for s, d in inst.pairs():
        chosen = [j for j in inst.wavelengths if bit(_mu_name(j, s, d))]
        if len(chosen) > 1:
            raise WiringError(f"pair ({s},{d}) selects several wavelengths {chosen}")
        if chosen:
            mu[(s, d)] = chosen[0]
    paths: dict[tuple[str, str], list[PathEdge]] = {}
    edges = inst.flow_edges()
    for (s, d), j in mu.items():
        used = [(u, v) for u, v in edges if bit(_chi_name(j, u, v, s, d))]
        adj_map: dict[str, list[str]] = {}
        for u, v in used:
            adj_map.setdefault(u, []).append(v)
        # Breadth-first walk over the pair's own edges.
        prev: dict[str, str] = {}
        queue = [s]
        seen = {s}
        while queue:
            u = queue.pop(0)
            if u == d:
                break
            for v in sorted(adj_map.get(u, ())):
                if v not in seen:
                    seen.add(v)
                    prev[v] = u
                    queue.append(v)
        if d not in seen:
            raise WiringError(
                f"pair ({s},{d}) has wavelength {j} but no {s}->{d} path "
                f"through its traffic edges {used}"
            )
        node = d
        rev: list[PathEdge] = []
        while node != s:
            rev.append((prev[node], node, j))
            node = prev[node]
        paths[(s, d)] = rev[::-1]
    return AwgrWiring(beta, mu, paths)


@dataclass
class WiringCheck:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class WiringReport:
    checks: list[WiringCheck] = field(default_factory=list)
    connection_count: int = 0

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self) -> list[WiringCheck]:
        return [c for c in self.checks if not c.ok]


def verify_wiring(w: AwgrWiring, inst: AwgrInstance) -> WiringReport:
    """Re-verify a wiring by direct inspection, independent of any solver."""
    report = WiringReport()
    add = report.checks.append

    multi = [pair for pair in w.paths if pair not in w.mu]
    add(WiringCheck("pair_single_wavelength", not multi,
                    f"paths without wavelength: {multi}" if multi else ""))

    by_dest: dict[tuple[str, int], list[str]] = {}
    by_src: dict[tuple[str, int], list[str]] = {}
    for (s, d), j in w.mu.items():
        by_dest.setdefault((d, j), []).append(s)
        by_src.setdefault((s, j), []).append(d)
    dest_clashes = {k: v for k, v in by_dest.items() if len(v) > 1}
    add(WiringCheck("dest_wavelength_unique", not dest_clashes, str(dest_clashes)))
    src_clashes = {k: v for k, v in by_src.items() if len(v) > 1}
    add(WiringCheck("source_wavelength_unique", not src_clashes, str(src_clashes)))

    discontinuous = []
    broken = []
    for (s, d), path in w.paths.items():
        j = w.mu[(s, d)]
        if any(e[2] != j for e in path):
            discontinuous.append((s, d))
        if not path or path[0][0] != s or path[-1][1] != d:
            broken.append((s, d))
        for (u1, v1, _), (u2, _, _) in zip(path, path[1:]):
            if v1 != u2:
                broken.append((s, d))
                break
    add(WiringCheck("wavelength_continuity", not discontinuous, str(discontinuous)))
    add(WiringCheck("path_connectivity", not broken, str(broken)))

    comm = set(inst.comm_vertices)
    transits = []
    for (s, d), path in w.paths.items():
        interior = {e[0] for e in path[1:]} | {e[1] for e in path[:-1]}
        bad = (interior - {s, d}) & comm
        if bad:
            transits.append(((s, d), sorted(bad)))
    add(WiringCheck("no_comm_vertex_transit", not transits, str(transits)))

    port_pair_use: dict[Edge, list[tuple[str, str, int]]] = {}
    input_wl_out: dict[tuple[str, int], set[str]] = {}
    for (s, d), path in w.paths.items():
        for u, v, j in path:
            if is_input_port(u) and is_output_port(v):
                port_pair_use.setdefault((u, v), []).append((s, d, j))
                input_wl_out.setdefault((u, j), set()).add(v)
    pair_over = {k: v for k, v in port_pair_use.items() if len(v) > 1}
    wl_over = {k: v for k, v in input_wl_out.items() if len(v) > 1}
    add(WiringCheck("awgr_port_pair_once", not pair_over, str(pair_over)))
    add(WiringCheck("awgr_input_wavelength_unique", not wl_over, str(wl_over)))

    missing_beta = []
    for (s, d), path in w.paths.items():
        for u, v, _ in path:
            if (u, v) not in w.beta and (v, u) not in w.beta:
                missing_beta.append((s, d, u, v))
    add(WiringCheck("paths_on_chosen_adjacencies", not missing_beta, str(missing_beta)))

    report.connection_count = len(w.mu)
    return report


# -- fixtures and export -----------------------------------------------------

def reference_wiring_g5() -> AwgrWiring:
    """The shipped regression wiring for the four-rack cell (G=5).

    Attachments, trunks and the pair-to-wavelength matrix are fixed; paths
    are derived (one AWGR traversal when source input and destination output
    share an AWGR, otherwise two traversals over the matching trunk).
    """
    rack_in = {"g1": (1, 2), "g2": (2, 4), "g3": (2, 1), "g4": (1, 1)}
    rack_out = {"g1": (2, 4), "g2": (1, 4), "g3": (1, 2), "g4": (2, 1)}
    olt_in = {1: 3, 2: 3}
    olt_out = {1: 1, 2: 3}
    trunks = {(1, 2): ("o1_3", "i2_2"), (2, 1): ("o2_2", "i1_4")}
    mu_matrix = {
        ("olt", "g1"): 3, ("olt", "g2"): 2, ("olt", "g3"): 1, ("olt", "g4"): 4,
        ("g1", "olt"): 2, ("g1", "g2"): 3, ("g1", "g3"): 4, ("g1", "g4"): 1,
        ("g2", "olt"): 1, ("g2", "g1"): 4, ("g2", "g3"): 2, ("g2", "g4"): 3,
        ("g3", "olt"): 3, ("g3", "g1"): 1, ("g3", "g2"): 4, ("g3", "g4"): 2,
        ("g4", "olt"): 4, ("g4", "g1"): 2, ("g4", "g2"): 1, ("g4", "g3"): 3,
    }
    return _wiring_from_plan(rack_in, rack_out, olt_in, olt_out, trunks, mu_matrix)


def _wiring_from_plan(
    rack_in: dict[str, tuple[int, int]],
    rack_out: dict[str, tuple[int, int]],
    olt_in: dict[int, int],
    olt_out: dict[int, int],
    trunks: dict[tuple[int, int], Edge],
    mu_matrix: dict[tuple[str, str], int],
) -> AwgrWiring:
    def in_port(v: str, k: int) -> str | None:
        if v == "olt":
            p = olt_in.get(k)
            return f"i{k}_{p}" if p else None
        ak, p = rack_in[v]
        return f"i{ak}_{p}" if ak == k else None

    def out_port(v: str, k: int) -> str | None:
        if v == "olt":
            p = olt_out.get(k)
            return f"o{k}_{p}" if p else None
        ak, p = rack_out[v]
        return f"o{ak}_{p}" if ak == k else None

    beta: set[Edge] = set()
    for v in list(rack_in) + ["olt"]:
        for k in (1, 2):
            ip, op = in_port(v, k), out_port(v, k)
            if ip:
                beta.add((v, ip))
            if op:
                beta.add((v, op))
    for trunk_edge in trunks.values():
        beta.add(trunk_edge)
    size = len(rack_in)  # M = G - 1
    for k in (1, 2):
        for pi in range(1, size + 1):
            for po in range(1, size + 1):
                beta.add((f"i{k}_{pi}", f"o{k}_{po}"))

    paths: dict[tuple[str, str], list[PathEdge]] = {}
    for (s, d), j in mu_matrix.items():
        shared = None
        for k in (1, 2):
            if in_port(s, k) and out_port(d, k):
                shared = k
                break
        if shared is not None:
            ip, op = in_port(s, shared), out_port(d, shared)
            paths[(s, d)] = [(s, ip, j), (ip, op, j), (op, d, j)]
        else:
            k = next(k for k in (1, 2) if in_port(s, k))
            q = next(q for q in (1, 2) if out_port(d, q))
            t_out, t_in = trunks[(k, q)]
            ip, op = in_port(s, k), out_port(d, q)
            paths[(s, d)] = [
                (s, ip, j), (ip, t_out, j), (t_out, t_in, j),
                (t_in, op, j), (op, d, j),
            ]
    return AwgrWiring(frozenset(beta), dict(mu_matrix), paths)


def wiring_to_topology(w: AwgrWiring, servers_per_rack: int = 4):
    """Export a verified wiring as a PON topology with per-wavelength links.

    Raises :class:`WiringError` when the wiring fails verification.
    """
    from . import topology as topo

    racks = sorted({v for pair in w.mu for v in pair if v != "olt"})
    inst = AwgrInstance(G=len(racks) + 1)
    report = verify_wiring(w, inst)
    if not report.passed:
        raise WiringError(
            f"wiring fails verification: {[c.name for c in report.failures()]}"
        )
    return topo.pon3_from_wiring(w, servers_per_rack=servers_per_rack)
