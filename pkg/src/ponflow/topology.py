"""Data-centre topology generators with device power catalogs.

Six architectures are modeled as directed multigraphs whose edges are keyed
by (u, v, wavelength): four electronic fabrics (fat-tree, spine-leaf, BCube,
DCell), a WDM cell built around two arrayed-waveguide routers (``pon3``) and
a server-centric passive cell (``pon5``). Electronic and server-centric
links are bidirectional on a single grey channel; the AWGR cell uses
directional per-wavelength links generated from a verified port wiring.

Vertices carry device records from the hardware catalog; AWGR port vertices
are passive and carry none. All link capacities are 10 Gbps per wavelength.

Generators accept the reference 16-server configurations plus one reduced
desk-scale variant per kind where noted; arbitrary scaling is out of scope.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

LINK_GBPS = 10.0

KIND_SERVER = "server"
KIND_SWITCH = "switch"
KIND_OLT = "olt_port"
KIND_BACKPLANE = "backplane"
KIND_AWGR_IN = "awgr_in_port"
KIND_AWGR_OUT = "awgr_out_port"

# Vertex kinds that behave as switching equipment in the scheduler.
SWITCH_KINDS = (KIND_SWITCH, KIND_OLT, KIND_BACKPLANE)
PORT_KINDS = (KIND_AWGR_IN, KIND_AWGR_OUT)


class TopologyError(ValueError):
    """Unsupported generator kind or parameters."""


@dataclass(frozen=True)
class DeviceSpec:
    """Catalog record for one piece of networking equipment.

    ``on_off`` devices draw their maximum power whenever active in a slot;
    ``nic_offload`` devices add a per-Gbps term for forwarded traffic on top
    of the fixed NIC draw.
    """

    name: str
    max_power_watts: float
    power_law: str = "on_off"
    epsilon_w_per_gbps: float = 0.0

    def __post_init__(self) -> None:
        if self.power_law not in ("on_off", "nic_offload"):
            raise TopologyError(f"unknown power law {self.power_law!r}")
        if self.max_power_watts < 0 or self.epsilon_w_per_gbps < 0:
            raise TopologyError("power figures must be non-negative")
        if self.power_law == "on_off" and self.epsilon_w_per_gbps != 0.0:
            raise TopologyError("on_off devices have no per-Gbps term")


SG500XG = DeviceSpec("SG500XG-8F8T", 94.33)
NEXUS_3524 = DeviceSpec("Nexus 3524X", 193.0)
PE10G_NIC = DeviceSpec("PE10G2T-SR", 14.0, "nic_offload", 14.29)
SFP_TRANSCEIVER = DeviceSpec("SFP+ 10G transceiver", 1.0)
OLT_CARD = DeviceSpec("OLT with one card", 217.0)
POLYMER_BACKPLANE = DeviceSpec("4x4 polymer backplane", 12.0)

# Alternative catalog entries (kept selectable, not defaults).
TUNEABLE_TRANSCEIVER = DeviceSpec("SFP-10GDWZR-TC tuneable", 2.0)
FPGA_NIC = DeviceSpec("FPGA NIC", 12.3)

DEVICE_CATALOG = {
    d.name: d
    for d in (
        SG500XG, NEXUS_3524, PE10G_NIC, SFP_TRANSCEIVER, OLT_CARD,
        POLYMER_BACKPLANE, TUNEABLE_TRANSCEIVER, FPGA_NIC,
    )
}

# Per-device maximum switching capacity in Gbps (ingress budget). Values are
# generous enough never to bind below the attached link capacity.
SWITCHING_GBPS = {
    "SG500XG-8F8T": 160.0,
    "Nexus 3524X": 480.0,
    "OLT with one card": 40.0,
    "4x4 polymer backplane": 1000.0,
}


@dataclass(frozen=True)
class Vertex:
    id: int
    kind: str
    device: DeviceSpec | None = None


@dataclass
class Topology:
    """Immutable-by-convention directed multigraph of one data centre.

    ``neighbors`` maps each vertex to its ordered out-neighbors;
    ``link_capacity`` holds Gbps per (u, v, wavelength). Bidirectional
    architectures store both directions explicitly and set ``directed`` to
    False for serialization.
    """

    kind: str
    vertices: dict[int, Vertex]
    neighbors: dict[int, tuple[int, ...]]
    link_capacity: dict[tuple[int, int, int], float]
    wavelengths: tuple[int, ...]
    task_eligible: frozenset[int]
    slot_seconds: float
    directed: bool = False

    def servers(self) -> list[int]:
        return sorted(v.id for v in self.vertices.values() if v.kind == KIND_SERVER)

    def switch_devices(self) -> list[int]:
        return sorted(
            v.id for v in self.vertices.values() if v.kind in SWITCH_KINDS
        )

    def ports(self) -> list[int]:
        return sorted(v.id for v in self.vertices.values() if v.kind in PORT_KINDS)

    def edges(self) -> list[tuple[int, int, int]]:
        return sorted(self.link_capacity)

    def out_edges(self, u: int) -> list[tuple[int, int, int]]:
        return sorted(e for e in self.link_capacity if e[0] == u)

    def in_edges(self, u: int) -> list[tuple[int, int, int]]:
        return sorted(e for e in self.link_capacity if e[1] == u)

    def directed_pairs(self) -> set[tuple[int, int]]:
        return {(u, v) for u, v, _ in self.link_capacity}


def _bidirectional(links: list[tuple[int, int]],
                   capacity: float = LINK_GBPS) -> dict[tuple[int, int, int], float]:
    out: dict[tuple[int, int, int], float] = {}
    for u, v in links:
        out[(u, v, 0)] = capacity
        out[(v, u, 0)] = capacity
    return out


def _finalize(kind: str, vertices: list[Vertex],
              caps: dict[tuple[int, int, int], float],
              wavelengths: tuple[int, ...],
              task_eligible: frozenset[int],
              slot_seconds: float,
              directed: bool) -> Topology:
    nbrs: dict[int, set[int]] = {v.id: set() for v in vertices}
    for u, v, _ in caps:
        nbrs[u].add(v)
    return Topology(
        kind=kind,
        vertices={v.id: v for v in vertices},
        neighbors={u: tuple(sorted(vs)) for u, vs in nbrs.items()},
        link_capacity=caps,
        wavelengths=wavelengths,
        task_eligible=task_eligible,
        slot_seconds=slot_seconds,
        directed=directed,
    )


def build_fat_tree(k: int = 4) -> Topology:
    """Four-pod fat-tree: 16 servers, 20 switches, 48 bidirectional links."""
    if k != 4:
        raise TopologyError("fat-tree generator supports k=4 only")
    half = k // 2
    servers = [Vertex(i, KIND_SERVER, SFP_TRANSCEIVER) for i in range(16)]
    edge0 = 16
    aggr0 = edge0 + k * half
    core0 = aggr0 + k * half
    switches = [Vertex(i, KIND_SWITCH, SG500XG) for i in range(edge0, core0 + half * half)]
    links: list[tuple[int, int]] = []
    for pod in range(k):
        for e in range(half):
            edge = edge0 + pod * half + e
            for s in range(half):
                links.append((pod * half * half + e * half + s, edge))
            for a in range(half):
                links.append((edge, aggr0 + pod * half + a))
        for a in range(half):
            aggr = aggr0 + pod * half + a
            for c in range(half):
                links.append((aggr, core0 + a * half + c))
    return _finalize(
        "fat_tree", servers + switches, _bidirectional(links), (0,),
        frozenset(range(16)), 1.0, directed=False,
    )


def build_spine_leaf(spines: int = 2, leaves: int = 4,
                     servers_per_leaf: int = 4) -> Topology:
    """Spine-leaf fabric; the reference size is 2 spines x 4 leaves x 4."""
    if (spines, leaves, servers_per_leaf) not in ((2, 4, 4), (1, 2, 2)):
        raise TopologyError(
            "spine-leaf generator supports (2,4,4) and the reduced (1,2,2)"
        )
    n_srv = leaves * servers_per_leaf
    servers = [Vertex(i, KIND_SERVER, SFP_TRANSCEIVER) for i in range(n_srv)]
    leaf0 = n_srv
    spine0 = n_srv + leaves
    switches = [Vertex(i, KIND_SWITCH, NEXUS_3524)
                for i in range(leaf0, spine0 + spines)]
    links = []
    for lf in range(leaves):
        for s in range(servers_per_leaf):
            links.append((lf * servers_per_leaf + s, leaf0 + lf))
        for sp in range(spines):
            links.append((leaf0 + lf, spine0 + sp))
    return _finalize(
        "spine_leaf", servers + switches, _bidirectional(links), (0,),
        frozenset(range(n_srv)), 1.0, directed=False,
    )


def build_bcube(n: int = 4, k: int = 1) -> Topology:
    """BCube(1,4): 16 NIC servers, 8 switches, 32 bidirectional links."""
    if (n, k) != (4, 1):
        raise TopologyError("bcube generator supports n=4, k=1 only")
    servers = [Vertex(i, KIND_SERVER, PE10G_NIC) for i in range(16)]
    sw0 = [Vertex(16 + g, KIND_SWITCH, SG500XG) for g in range(4)]
    sw1 = [Vertex(20 + j, KIND_SWITCH, SG500XG) for j in range(4)]
    links = []
    for g in range(4):
        for s in range(4):
            links.append((4 * g + s, 16 + g))
    for j in range(4):
        for g in range(4):
            links.append((4 * g + j, 20 + j))
    return _finalize(
        "bcube", servers + sw0 + sw1, _bidirectional(links), (0,),
        frozenset(range(16)), 1.0, directed=False,
    )


def build_dcell(n: int = 4, k: int = 1) -> Topology:
    """DCell(1) over 5 cells of 4: 20 servers (16 task-eligible), 5 switches.

    The four servers of the last cell are routable relays only, keeping the
    workload on 16 servers.
    """
    if (n, k) != (4, 1):
        raise TopologyError("dcell generator supports n=4, k=1 only")
    servers = [Vertex(i, KIND_SERVER, PE10G_NIC) for i in range(20)]
    switches = [Vertex(20 + c, KIND_SWITCH, SG500XG) for c in range(5)]
    links = []
    for c in range(5):
        for s in range(4):
            links.append((4 * c + s, 20 + c))
    for i in range(5):
        for j in range(i + 1, 5):
            links.append((4 * i + (j - 1), 4 * j + i))
    return _finalize(
        "dcell", servers + switches, _bidirectional(links), (0,),
        frozenset(range(16)), 1.0, directed=False,
    )


def build_pon5(racks: int = 4, servers_per_rack: int = 4) -> Topology:
    """Server-centric passive cell.

    Each rack's servers sit on a polymer backplane hub; the lowest server id
    of each rack is the gateway holding the rack's 10 Gbps WDM share toward
    the OLT; rack-to-rack NIC links chain consecutive racks through each
    rack's second-lowest server, giving the 16-server cell its 23 links
    (16 backplane + 4 OLT + 3 chain).
    """
    if (racks, servers_per_rack) not in ((4, 4), (2, 2)):
        raise TopologyError(
            "pon5 generator supports (4 racks x 4) and the reduced (2 x 2)"
        )
    n_srv = racks * servers_per_rack
    servers = [Vertex(i, KIND_SERVER, PE10G_NIC) for i in range(n_srv)]
    bp0 = n_srv
    olt = n_srv + racks
    bps = [Vertex(bp0 + r, KIND_BACKPLANE, POLYMER_BACKPLANE) for r in range(racks)]
    links = []
    for r in range(racks):
        for s in range(servers_per_rack):
            links.append((r * servers_per_rack + s, bp0 + r))
        links.append((r * servers_per_rack, olt))
    for r in range(racks - 1):
        links.append((r * servers_per_rack + 1, (r + 1) * servers_per_rack + 1))
    return _finalize(
        "pon5", servers + bps + [Vertex(olt, KIND_OLT, OLT_CARD)],
        _bidirectional(links), (0,), frozenset(range(n_srv)), 1.0,
        directed=False,
    )


def pon3_from_wiring(wiring, servers_per_rack: int = 4) -> Topology:
    """AWGR-centric cell generated from a verified port wiring.

    Per rack: every server owns a directional transmit edge (one per
    wavelength, single-wavelength use is the scheduler's constraint) into
    the rack's AWGR input port and a receive edge from the rack's output
    port on every wavelength; intra-rack traffic crosses the rack's
    backplane hub on the grey channel. AWGR-internal links follow the
    wiring's wavelength routing completed to a full Latin square per router
    (a passive AWGR routes every input/output pair at exactly one
    wavelength); trunk links between the routers carry every wavelength.
    """
    from .awgr import is_input_port, is_output_port, port_awgr

    racks = sorted({v for pair in wiring.mu for v in pair if v != "olt"})
    n_racks = len(racks)
    n_wl = n_racks  # one per communicating vertex minus one
    wavelengths = tuple(range(n_wl))
    n_srv = n_racks * servers_per_rack
    vertices = [Vertex(i, KIND_SERVER, SFP_TRANSCEIVER) for i in range(n_srv)]
    bp0 = n_srv
    olt = n_srv + n_racks
    vertices += [Vertex(bp0 + r, KIND_BACKPLANE, POLYMER_BACKPLANE)
                 for r in range(n_racks)]
    vertices.append(Vertex(olt, KIND_OLT, OLT_CARD))

    port_names = sorted(
        {n for u, v in wiring.beta for n in (u, v)
         if is_input_port(n) or is_output_port(n)}
    )
    port_id = {}
    next_id = olt + 1
    for name in port_names:
        kind = KIND_AWGR_IN if is_input_port(name) else KIND_AWGR_OUT
        port_id[name] = next_id
        vertices.append(Vertex(next_id, kind, None))
        next_id += 1

    def rack_attachment(rack: str, want_input: bool) -> str:
        for u, v in wiring.beta:
            for a, b in ((u, v), (v, u)):
                if a == rack and (is_input_port(b) if want_input else is_output_port(b)):
                    return b
        raise TopologyError(f"wiring lacks an attachment for {rack}")

    caps: dict[tuple[int, int, int], float] = {}
    for r, rack in enumerate(racks):
        iport = port_id[rack_attachment(rack, True)]
        oport = port_id[rack_attachment(rack, False)]
        for s in range(servers_per_rack):
            sid = r * servers_per_rack + s
            for w in wavelengths:
                caps[(sid, iport, w)] = LINK_GBPS
                caps[(oport, sid, w)] = LINK_GBPS
            caps[(sid, bp0 + r, 0)] = LINK_GBPS
            caps[(bp0 + r, sid, 0)] = LINK_GBPS
    for u, v in wiring.beta:
        for a, b in ((u, v), (v, u)):
            if a == "olt" and (is_input_port(b) or is_output_port(b)):
                if is_input_port(b):
                    for w in wavelengths:
                        caps[(olt, port_id[b], w)] = LINK_GBPS
                else:
                    for w in wavelengths:
                        caps[(port_id[b], olt, w)] = LINK_GBPS
    # Trunks between the two routers carry any wavelength.
    for u, v in wiring.beta:
        if is_output_port(u) and is_input_port(v) and port_awgr(u) != port_awgr(v):
            for w in wavelengths:
                caps[(port_id[u], port_id[v], w)] = LINK_GBPS

    for k, square in _internal_routing(wiring, n_wl).items():
        for (iname, oname), wl in square.items():
            caps[(port_id[iname], port_id[oname], wl - 1)] = LINK_GBPS

    return _finalize(
        "pon3", vertices, caps, wavelengths, frozenset(range(n_srv)),
        0.25, directed=True,
    )


def _internal_routing(wiring, n_wl: int) -> dict[int, dict[tuple[str, str], int]]:
    """Wavelength routing per router, completed to a full Latin square."""
    from .awgr import is_input_port, is_output_port, port_awgr

    used: dict[int, dict[tuple[str, str], int]] = {}
    inputs: dict[int, set[str]] = {}
    outputs: dict[int, set[str]] = {}
    for u, v in wiring.beta:
        if is_input_port(u) and is_output_port(v) and port_awgr(u) == port_awgr(v):
            k = port_awgr(u)
            used.setdefault(k, {})
            inputs.setdefault(k, set()).add(u)
            outputs.setdefault(k, set()).add(v)
    for path in wiring.paths.values():
        for u, v, wl in path:
            if is_input_port(u) and is_output_port(v):
                k = port_awgr(u)
                cell = used.setdefault(k, {}).get((u, v))
                if cell is not None and cell != wl:
                    raise TopologyError(
                        f"wiring routes ({u},{v}) at two wavelengths {cell}/{wl}"
                    )
                used[k][(u, v)] = wl
    routing: dict[int, dict[tuple[str, str], int]] = {}
    for k in sorted(used):
        rows = sorted(inputs.get(k, {u for u, _ in used[k]}))
        cols = sorted(outputs.get(k, {v for _, v in used[k]}))
        square = dict(used[k])
        free = [(i, o) for i in rows for o in cols if (i, o) not in square]
        if not _complete_square(square, free, rows, cols, n_wl):
            raise TopologyError(
                f"router {k}: wiring's wavelength routing is not completable "
                "to a full Latin square"
            )
        routing[k] = square
    return routing


def _complete_square(square: dict[tuple[str, str], int],
                     free: list[tuple[str, str]],
                     rows: list[str], cols: list[str], n_wl: int) -> bool:
    if not free:
        return True
    i, o = free[0]
    row_used = {wl for (r, _), wl in square.items() if r == i}
    col_used = {wl for (_, c), wl in square.items() if c == o}
    for wl in range(1, n_wl + 1):
        if wl in row_used or wl in col_used:
            continue
        square[(i, o)] = wl
        if _complete_square(square, free[1:], rows, cols, n_wl):
            return True
        del square[(i, o)]
    return False


def build_pon3(servers_per_rack: int = 4, wiring=None) -> Topology:
    """AWGR-centric cell; defaults to the shipped reference wiring."""
    if wiring is None:
        from .awgr import reference_wiring_g5
        wiring = reference_wiring_g5()
    if servers_per_rack not in (2, 4):
        raise TopologyError("pon3 generator supports 4 (reference) or 2 (reduced)")
    return pon3_from_wiring(wiring, servers_per_rack=servers_per_rack)


_BUILDERS = {
    "fat_tree": build_fat_tree,
    "spine_leaf": build_spine_leaf,
    "bcube": build_bcube,
    "dcell": build_dcell,
    "pon3": build_pon3,
    "pon5": build_pon5,
}

KINDS = tuple(sorted(_BUILDERS))


def build_topology(kind: str, **params) -> Topology:
    """Construct a topology by kind name; unknown kinds/params raise."""
    if kind not in _BUILDERS:
        raise TopologyError(f"unknown topology kind {kind!r}; expected one of {KINDS}")
    return _BUILDERS[kind](**params)


def device_power(t: Topology, v: int) -> DeviceSpec | None:
    """Catalog record of a vertex's device (None for passive AWGR ports)."""
    if v not in t.vertices:
        raise TopologyError(f"unknown vertex id {v}")
    return t.vertices[v].device


def switching_capacity(t: Topology, v: int) -> float:
    """Ingress budget in Gbps for a switching vertex."""
    dev = device_power(t, v)
    if dev is None:
        raise TopologyError(f"vertex {v} has no device")
    return SWITCHING_GBPS.get(dev.name, LINK_GBPS * len(t.neighbors.get(v, ())))


# -- validation ---------------------------------------------------------------

@dataclass
class TopologyCheck:
    name: str
    ok: bool
    expected: object = None
    actual: object = None

    def __str__(self) -> str:
        state = "ok" if self.ok else f"FAIL expected={self.expected} actual={self.actual}"
        return f"{self.name}: {state}"


@dataclass
class TopologyReport:
    checks: list[TopologyCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self) -> list[TopologyCheck]:
        return [c for c in self.checks if not c.ok]


def _expected_counts(t: Topology) -> tuple[int, int, int, int]:
    """(servers, switch devices, links, wavelengths) for the kind and size."""
    n_srv = len(t.servers())
    if t.kind == "fat_tree":
        return 16, 20, 48, 1
    if t.kind == "bcube":
        return 16, 8, 32, 1
    if t.kind == "dcell":
        return 20, 5, 30, 1
    if t.kind == "spine_leaf":
        server_set = set(t.servers())
        leaves = {v for u, v, _ in t.link_capacity if u in server_set}
        spines = set(t.switch_devices()) - leaves
        return n_srv, len(leaves) + len(spines), n_srv + len(leaves) * len(spines), 1
    if t.kind == "pon5":
        racks = sum(1 for v in t.vertices.values() if v.kind == KIND_BACKPLANE)
        return n_srv, racks + 1, n_srv + racks + (racks - 1), 1
    if t.kind == "pon3":
        racks = sum(1 for v in t.vertices.values() if v.kind == KIND_BACKPLANE)
        awgrs = len(t.ports()) // (2 * max(len(t.wavelengths), 1))
        return n_srv, racks + 1 + awgrs, 4 * n_srv, racks
    raise TopologyError(f"unknown kind {t.kind!r}")


def validate_topology(t: Topology) -> TopologyReport:
    """Structural validation; failures land in the report, never raise."""
    report = TopologyReport()
    add = report.checks.append
    exp_srv, exp_sw, exp_links, exp_wl = _expected_counts(t)

    n_srv = len(t.servers())
    add(TopologyCheck("server_count", n_srv == exp_srv, exp_srv, n_srv))

    n_sw = len(t.switch_devices())
    if t.kind == "pon3":
        awgrs = len(t.ports()) // (2 * max(len(t.wavelengths), 1))
        n_sw += awgrs
    add(TopologyCheck("switch_device_count", n_sw == exp_sw, exp_sw, n_sw))

    if t.kind == "pon3":
        server_set = set(t.servers())
        n_links = len({(u, v) for u, v, _ in t.link_capacity
                       if u in server_set or v in server_set})
    else:
        n_links = len(t.directed_pairs()) // 2
    add(TopologyCheck("link_count", n_links == exp_links, exp_links, n_links))

    n_wl = len(t.wavelengths)
    add(TopologyCheck("wavelength_count", n_wl == exp_wl, exp_wl, n_wl))

    nonpos = [e for e, c in t.link_capacity.items() if c <= 0]
    add(TopologyCheck("capacity_positive", not nonpos, "none", nonpos[:5]))

    elig = len(t.task_eligible)
    exp_elig = 16 if n_srv >= 16 else n_srv
    add(TopologyCheck("task_eligible_count", elig == exp_elig, exp_elig, elig))

    if t.kind != "pon3":
        asym = [
            (u, v) for u, v in t.directed_pairs()
            if (v, u) not in t.directed_pairs()
        ]
        add(TopologyCheck("neighbor_symmetry", not asym, "symmetric", asym[:5]))
    else:
        add(_check_awgr_routing(t))
    return report


def _check_awgr_routing(t: Topology) -> TopologyCheck:
    """Each internal port pair carries exactly one wavelength; an input uses
    distinct wavelengths toward distinct outputs."""
    in_ports = {v.id for v in t.vertices.values() if v.kind == KIND_AWGR_IN}
    out_ports = {v.id for v in t.vertices.values() if v.kind == KIND_AWGR_OUT}
    internal: dict[tuple[int, int], list[int]] = {}
    for u, v, w in t.link_capacity:
        if u in in_ports and v in out_ports:
            internal.setdefault((u, v), []).append(w)
    problems = []
    for pair, wls in internal.items():
        if len(wls) != 1:
            problems.append((pair, sorted(wls)))
    by_input: dict[tuple[int, int], set[int]] = {}
    for (u, v), wls in internal.items():
        for w in wls:
            by_input.setdefault((u, w), set()).add(v)
    for key, outs in by_input.items():
        if len(outs) > 1:
            problems.append((key, sorted(outs)))
    return TopologyCheck("awgr_routing", not problems, "latin", problems[:5])


# -- serialization -------------------------------------------------------------

def topology_to_json(t: Topology) -> str:
    links = []
    if t.directed:
        for (u, v, w), cap in sorted(t.link_capacity.items()):
            links.append({"u": u, "v": v, "wavelength": w,
                          "capacity_gbps": cap, "directed": True})
    else:
        seen = set()
        for (u, v, w), cap in sorted(t.link_capacity.items()):
            if (v, u, w) in seen:
                continue
            seen.add((u, v, w))
            links.append({"u": u, "v": v, "wavelength": w,
                          "capacity_gbps": cap, "directed": False})
    doc = {
        "kind": t.kind,
        "vertices": [
            {"id": v.id, "kind": v.kind,
             "device": v.device.name if v.device else None}
            for _, v in sorted(t.vertices.items())
        ],
        "links": links,
        "task_eligible": sorted(t.task_eligible),
        "slot_seconds": t.slot_seconds,
    }
    return json.dumps(doc, indent=1)


def topology_from_json(text: str) -> Topology:
    doc = json.loads(text)
    vertices = [
        Vertex(v["id"], v["kind"],
               DEVICE_CATALOG[v["device"]] if v["device"] else None)
        for v in doc["vertices"]
    ]
    caps: dict[tuple[int, int, int], float] = {}
    directed = False
    for link in doc["links"]:
        u, v, w = link["u"], link["v"], link["wavelength"]
        caps[(u, v, w)] = link["capacity_gbps"]
        if link["directed"]:
            directed = True
        else:
            caps[(v, u, w)] = link["capacity_gbps"]
    wavelengths = tuple(sorted({w for _, _, w in caps}))
    return _finalize(
        doc["kind"], vertices, caps, wavelengths,
        frozenset(doc["task_eligible"]), doc["slot_seconds"], directed,
    )
