"""Time-slotted co-flow scheduling and routing MILP plus a greedy baseline.

The model apportions every (map, reduce) flow across discrete slots of
length ``D`` seconds and routes each slot's share through the topology's
per-wavelength links. Two objectives are supported: total energy or shuffle
completion time, each with a weighted earliest-slot term that keeps small
flows from being parked behind large ones. Completion time interpolates
inside the final active slot of each link (slot offset plus load over
capacity), and energy follows the devices' power laws: full draw while
active for on/off hardware, plus a per-Gbps term for offloading NICs.

Activity indicators are tied to traffic both ways, so an idle device can
never be reported active and an active one never free. Capacity families
compare per-slot gigabits against rate-times-slot-length budgets, which
keeps units consistent for sub-second slots.

WDM specifics (AWGR cell): flow conservation is enforced per wavelength at
every relay vertex (no wavelength conversion in passive hardware) and
aggregated over wavelengths only at the flow endpoints, servers never
forward other servers' traffic (enforced structurally by not creating those
flow variables), and a server transmits toward its router input port on at
most one wavelength per slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .milp import EQ, GE, LE, Assignment, LinearConstraint, MilpModel
from .topology import (
    KIND_AWGR_IN,
    Topology,
    switching_capacity,
)
from .traffic import DemandMatrix

MIN_ENERGY = "min_energy"
MIN_COMPLETION = "min_completion"

TAG_FLOW = "flow_conservation"
TAG_EGRESS = "server_egress_rate"
TAG_INGRESS = "switch_ingress_rate"
TAG_CAPACITY = "link_capacity"
TAG_LOAD = "link_load_sum"
TAG_DEMAND = "demand_met"
TAG_SRV_TRAFFIC = "server_traffic_sum"
TAG_SRV_ON_UB = "server_on_needs_traffic"
TAG_SRV_ON_LB = "server_traffic_needs_on"
TAG_SW_TRAFFIC = "switch_traffic_sum"
TAG_SW_ON_UB = "switch_on_needs_traffic"
TAG_SW_ON_LB = "switch_traffic_needs_on"
TAG_LINK_ON_UB = "link_on_needs_load"
TAG_LINK_ON_LB = "link_load_needs_on"
TAG_FINISH = "link_finish_time"
TAG_FINISH_GATE_ON = "finish_gated_by_activity"
TAG_FINISH_GATE_CAP = "finish_capped_by_time"
TAG_FINISH_GATE_LB = "finish_forced_when_active"
TAG_MAKESPAN_LB = "completion_after_all_links"
TAG_MAKESPAN_UB = "completion_at_marker"
TAG_MARKER = "single_completion_marker"
TAG_SRV_POWER = "server_power"
TAG_SW_POWER = "switch_power"
TAG_ENERGY = "energy_total"
TAG_NO_RELAY = "no_server_relay"
TAG_ONE_WL = "single_tx_wavelength"


class SchedError(ValueError):
    pass


class DecodeError(SchedError):
    """Assignment violates a schedule invariant; names the failing family."""


class SlotsExhaustedError(SchedError):
    """Greedy could not place all demand within the slot horizon."""


@dataclass
class SchedParams:
    """Scheduling knobs; ``slot_seconds=None`` takes the topology default.

    ``big_m`` overrides the per-family minimal linking constants with one
    flat value (the classic large-constant formulation).
    """

    objective: str = MIN_ENERGY
    slots: int = 6
    slot_seconds: float | None = None
    rho_gbps: float = 8.0
    sigma_gbps: float | None = None
    q_weight: float = 100.0
    big_m: float | None = None

    def __post_init__(self) -> None:
        if self.objective not in (MIN_ENERGY, MIN_COMPLETION):
            raise SchedError(f"unknown objective {self.objective!r}")
        if self.slots < 1:
            raise SchedError("need at least one slot")
        if self.rho_gbps <= 0 or self.q_weight < 0:
            raise SchedError("rho must be positive and Q non-negative")
        if self.slot_seconds is not None and self.slot_seconds <= 0:
            raise SchedError("slot length must be positive")

    def slot_len(self, t: Topology) -> float:
        return self.slot_seconds if self.slot_seconds is not None else t.slot_seconds


@dataclass
class Schedule:
    """Decoded routing/scheduling: nonzero traffic and activity only."""

    psi: dict[tuple[int, int, int, int], float] = field(default_factory=dict)
    chi: dict[tuple[int, int, int, int, int, int], float] = field(default_factory=dict)
    delta: dict[tuple[int, int, int], float] = field(default_factory=dict)
    active_links: set[tuple[int, int, int, int]] = field(default_factory=set)
    active_servers: set[tuple[int, int, int]] = field(default_factory=set)
    active_switches: set[tuple[int, int, int]] = field(default_factory=set)

    def slots_used(self) -> int:
        return max((t for *_, t in self.psi), default=0)


# -- variable names -----------------------------------------------------------

def _flow(s, d, u, v, w, t):
    return f"flow_{s}_{d}_{u}_{v}_{w}_{t}"


def _load(u, v, w, t):
    return f"load_{u}_{v}_{w}_{t}"


def _sent(s, d, t):
    return f"sent_{s}_{d}_{t}"


def _srvon(i, w, t):
    return f"srvon_{i}_{w}_{t}"


def _swon(i, w, t):
    return f"swon_{i}_{w}_{t}"


def _lnkon(u, v, w, t):
    return f"lnkon_{u}_{v}_{w}_{t}"


def _last(u, v, w, t):
    return f"last_{u}_{v}_{w}_{t}"


def _srvtr(i, w, t):
    return f"srvtr_{i}_{w}_{t}"


def _swtr(i, w, t):
    return f"swtr_{i}_{w}_{t}"


def _srvpw(i, w, t):
    return f"srvpw_{i}_{w}_{t}"


def _swpw(i, w, t):
    return f"swpw_{i}_{w}_{t}"


def _fin(u, v, w, t):
    return f"fin_{u}_{v}_{w}_{t}"


def _fina(u, v, w, t):
    return f"fina_{u}_{v}_{w}_{t}"


def _pair_edges(t: Topology, s: int, servers: set[int]) -> list[tuple[int, int, int]]:
    """Edges a pair rooted at source ``s`` may use.

    In the AWGR cell servers never forward foreign traffic, so flow
    variables on edges leaving any server other than the source are not
    created; their absence enforces the no-relay family structurally.
    """
    if t.kind != "pon3":
        return t.edges()
    return [e for e in t.edges() if e[0] not in servers or e[0] == s]


def build_schedule_model(t: Topology, dm: DemandMatrix, p: SchedParams) -> MilpModel:
    """Assemble the scheduling MILP for one topology and demand matrix.

    Pairs with zero demand generate no flow/sent variables. Every
    constraint is annotated with its family tag.
    """
    servers = set(t.servers())
    switches = t.switch_devices()
    bad = [x for pair in dm.entries for x in pair if x not in t.task_eligible]
    if bad:
        raise SchedError(f"demand endpoints {sorted(set(bad))} not task-eligible")
    D = p.slot_len(t)
    slots = range(1, p.slots + 1)
    edges = t.edges()
    pairs = sorted(pair for pair, v in dm.entries.items() if v > 0)
    pair_edges = {(s, d): _pair_edges(t, s, servers) for s, d in pairs}
    pair_edge_sets = {pair: set(es) for pair, es in pair_edges.items()}
    cmax = max(t.link_capacity.values())
    l_link = p.big_m if p.big_m is not None else D * cmax
    l_time = p.big_m if p.big_m is not None else D * p.slots + D

    def l_activity(i: int, w: int) -> float:
        if p.big_m is not None:
            return p.big_m
        cap = sum(c for (u, v, wl), c in t.link_capacity.items()
                  if wl == w and (u == i or v == i))
        return D * cap if cap > 0 else 1.0

    m = MilpModel("minimize", name=f"sched_{t.kind}_{p.objective}")

    m.add_continuous("makespan")
    m.add_continuous("energy")
    for s, d in pairs:
        for ts in slots:
            m.add_continuous(_sent(s, d, ts))
    for s, d in pairs:
        for u, v, w in pair_edges[(s, d)]:
            for ts in slots:
                m.add_continuous(_flow(s, d, u, v, w, ts))
    for u, v, w in edges:
        cap = D * t.link_capacity[(u, v, w)]
        for ts in slots:
            m.add_continuous(_load(u, v, w, ts), 0.0, cap)
            m.add_binary(_lnkon(u, v, w, ts))
            m.add_binary(_last(u, v, w, ts))
            m.add_continuous(_fin(u, v, w, ts))
            m.add_continuous(_fina(u, v, w, ts))
    for i in sorted(servers):
        for w in t.wavelengths:
            for ts in slots:
                m.add_continuous(_srvtr(i, w, ts))
                m.add_binary(_srvon(i, w, ts))
                m.add_continuous(_srvpw(i, w, ts))
    for i in switches:
        for w in t.wavelengths:
            for ts in slots:
                m.add_continuous(_swtr(i, w, ts))
                m.add_binary(_swon(i, w, ts))
                m.add_continuous(_swpw(i, w, ts))

    # Traffic structure -----------------------------------------------------
    out_by: dict[int, list[tuple[int, int, int]]] = {}
    in_by: dict[int, list[tuple[int, int, int]]] = {}
    for u, v, w in edges:
        out_by.setdefault(u, []).append((u, v, w))
        in_by.setdefault(v, []).append((u, v, w))

    for s, d in pairs:
        usable = pair_edge_sets[(s, d)]
        for node in sorted(t.vertices):
            node_out = [e for e in out_by.get(node, ()) if e in usable]
            node_in = [e for e in in_by.get(node, ()) if e in usable]
            if node in (s, d):
                for ts in slots:
                    terms: dict[str, float] = {}
                    for u, v, w in node_out:
                        terms[_flow(s, d, u, v, w, ts)] = 1.0
                    for u, v, w in node_in:
                        terms[_flow(s, d, u, v, w, ts)] = (
                            terms.get(_flow(s, d, u, v, w, ts), 0.0) - 1.0
                        )
                    terms[_sent(s, d, ts)] = -1.0 if node == s else 1.0
                    m.add_constraint(
                        LinearConstraint(f"fc_{s}_{d}_{node}_{ts}", terms, EQ, 0.0),
                        TAG_FLOW,
                    )
            else:
                if not node_out and not node_in:
                    continue
                for w in t.wavelengths:
                    w_out = [e for e in node_out if e[2] == w]
                    w_in = [e for e in node_in if e[2] == w]
                    if not w_out and not w_in:
                        continue
                    for ts in slots:
                        terms = {}
                        for u, v, wl in w_out:
                            terms[_flow(s, d, u, v, wl, ts)] = 1.0
                        for u, v, wl in w_in:
                            terms[_flow(s, d, u, v, wl, ts)] = (
                                terms.get(_flow(s, d, u, v, wl, ts), 0.0) - 1.0
                            )
                        m.add_constraint(
                            LinearConstraint(
                                f"fc_{s}_{d}_{node}_{w}_{ts}", terms, EQ, 0.0
                            ),
                            TAG_FLOW,
                        )

    for i in sorted(servers):
        for ts in slots:
            terms = {_load(u, v, w, ts): 1.0 for u, v, w in out_by.get(i, ())}
            m.add_constraint(
                LinearConstraint(f"egress_{i}_{ts}", terms, LE, D * p.rho_gbps),
                TAG_EGRESS,
            )
    for i in switches:
        sigma = p.sigma_gbps if p.sigma_gbps is not None else switching_capacity(t, i)
        for ts in slots:
            terms = {_load(u, v, w, ts): 1.0 for u, v, w in in_by.get(i, ())}
            m.add_constraint(
                LinearConstraint(f"ingress_{i}_{ts}", terms, LE, D * sigma),
                TAG_INGRESS,
            )

    for u, v, w in edges:
        cap = D * t.link_capacity[(u, v, w)]
        for ts in slots:
            m.add_constraint(
                LinearConstraint(
                    f"cap_{u}_{v}_{w}_{ts}", {_load(u, v, w, ts): 1.0}, LE, cap
                ),
                TAG_CAPACITY,
            )
            terms = {_load(u, v, w, ts): 1.0}
            for s, d in pairs:
                if (u, v, w) in pair_edge_sets[(s, d)]:
                    terms[_flow(s, d, u, v, w, ts)] = -1.0
            m.add_constraint(
                LinearConstraint(f"loadsum_{u}_{v}_{w}_{ts}", terms, EQ, 0.0),
                TAG_LOAD,
            )

    for s, d in pairs:
        m.add_constraint(
            LinearConstraint(
                f"demand_{s}_{d}",
                {_sent(s, d, ts): 1.0 for ts in slots},
                EQ, dm.entries[(s, d)],
            ),
            TAG_DEMAND,
        )

    # Device activity ---------------------------------------------------------
    for i in sorted(servers):
        for w in t.wavelengths:
            l_act = l_activity(i, w)
            for ts in slots:
                terms = {_srvtr(i, w, ts): 1.0}
                for u, v, wl in out_by.get(i, ()):
                    if wl == w:
                        terms[_load(u, v, wl, ts)] = -1.0
                for u, v, wl in in_by.get(i, ()):
                    if wl == w:
                        terms[_load(u, v, wl, ts)] = (
                            terms.get(_load(u, v, wl, ts), 0.0) - 1.0
                        )
                m.add_constraint(
                    LinearConstraint(f"srvtr_{i}_{w}_{ts}", terms, EQ, 0.0),
                    TAG_SRV_TRAFFIC,
                )
                m.add_constraint(
                    LinearConstraint(
                        f"srvonub_{i}_{w}_{ts}",
                        {_srvon(i, w, ts): 1.0, _srvtr(i, w, ts): -l_act},
                        LE, 0.0,
                    ),
                    TAG_SRV_ON_UB,
                )
                m.add_constraint(
                    LinearConstraint(
                        f"srvonlb_{i}_{w}_{ts}",
                        {_srvtr(i, w, ts): 1.0, _srvon(i, w, ts): -l_act},
                        LE, 0.0,
                    ),
                    TAG_SRV_ON_LB,
                )
    for i in switches:
        for w in t.wavelengths:
            l_act = l_activity(i, w)
            for ts in slots:
                terms = {_swtr(i, w, ts): 1.0}
                for u, v, wl in out_by.get(i, ()):
                    if wl == w:
                        terms[_load(u, v, wl, ts)] = -1.0
                for u, v, wl in in_by.get(i, ()):
                    if wl == w:
                        terms[_load(u, v, wl, ts)] = (
                            terms.get(_load(u, v, wl, ts), 0.0) - 1.0
                        )
                m.add_constraint(
                    LinearConstraint(f"swtr_{i}_{w}_{ts}", terms, EQ, 0.0),
                    TAG_SW_TRAFFIC,
                )
                m.add_constraint(
                    LinearConstraint(
                        f"swonub_{i}_{w}_{ts}",
                        {_swon(i, w, ts): 1.0, _swtr(i, w, ts): -l_act},
                        LE, 0.0,
                    ),
                    TAG_SW_ON_UB,
                )
                m.add_constraint(
                    LinearConstraint(
                        f"swonlb_{i}_{w}_{ts}",
                        {_swtr(i, w, ts): 1.0, _swon(i, w, ts): -l_act},
                        LE, 0.0,
                    ),
                    TAG_SW_ON_LB,
                )

    for u, v, w in edges:
        for ts in slots:
            m.add_constraint(
                LinearConstraint(
                    f"lnkonub_{u}_{v}_{w}_{ts}",
                    {_lnkon(u, v, w, ts): 1.0, _load(u, v, w, ts): -l_link},
                    LE, 0.0,
                ),
                TAG_LINK_ON_UB,
            )
            m.add_constraint(
                LinearConstraint(
                    f"lnkonlb_{u}_{v}_{w}_{ts}",
                    {_load(u, v, w, ts): 1.0, _lnkon(u, v, w, ts): -l_link},
                    LE, 0.0,
                ),
                TAG_LINK_ON_LB,
            )

    # Completion time ----------------------------------------------------------
    for u, v, w in edges:
        cap = t.link_capacity[(u, v, w)]
        for ts in slots:
            m.add_constraint(
                LinearConstraint(
                    f"fin_{u}_{v}_{w}_{ts}",
                    {_fin(u, v, w, ts): 1.0, _load(u, v, w, ts): -1.0 / cap},
                    EQ, D * (ts - 1),
                ),
                TAG_FINISH,
            )
            m.add_constraint(
                LinearConstraint(
                    f"finga_{u}_{v}_{w}_{ts}",
                    {_fina(u, v, w, ts): 1.0, _lnkon(u, v, w, ts): -l_time},
                    LE, 0.0,
                ),
                TAG_FINISH_GATE_ON,
            )
            m.add_constraint(
                LinearConstraint(
                    f"fingc_{u}_{v}_{w}_{ts}",
                    {_fina(u, v, w, ts): 1.0, _fin(u, v, w, ts): -1.0},
                    LE, 0.0,
                ),
                TAG_FINISH_GATE_CAP,
            )
            m.add_constraint(
                LinearConstraint(
                    f"fingl_{u}_{v}_{w}_{ts}",
                    {
                        _fina(u, v, w, ts): 1.0,
                        _fin(u, v, w, ts): -1.0,
                        _lnkon(u, v, w, ts): -l_time,
                    },
                    GE, -l_time,
                ),
                TAG_FINISH_GATE_LB,
            )
            m.add_constraint(
                LinearConstraint(
                    f"mk_{u}_{v}_{w}_{ts}",
                    {"makespan": 1.0, _fina(u, v, w, ts): -1.0},
                    GE, 0.0,
                ),
                TAG_MAKESPAN_LB,
            )
            m.add_constraint(
                LinearConstraint(
                    f"mkub_{u}_{v}_{w}_{ts}",
                    {
                        "makespan": 1.0,
                        _fina(u, v, w, ts): -1.0,
                        _last(u, v, w, ts): l_time,
                    },
                    LE, l_time,
                ),
                TAG_MAKESPAN_UB,
            )
    m.add_constraint(
        LinearConstraint(
            "marker",
            {_last(u, v, w, ts): 1.0 for u, v, w in edges for ts in slots},
            EQ, 1.0,
        ),
        TAG_MARKER,
    )

    # Power and energy -----------------------------------------------------------
    for i in sorted(servers):
        dev = t.vertices[i].device
        for w in t.wavelengths:
            for ts in slots:
                terms = {
                    _srvpw(i, w, ts): 1.0,
                    _srvon(i, w, ts): -dev.max_power_watts,
                }
                if dev.power_law == "nic_offload":
                    terms[_srvtr(i, w, ts)] = -dev.epsilon_w_per_gbps / D
                m.add_constraint(
                    LinearConstraint(f"srvpw_{i}_{w}_{ts}", terms, EQ, 0.0),
                    TAG_SRV_POWER,
                )
    for i in switches:
        dev = t.vertices[i].device
        for w in t.wavelengths:
            for ts in slots:
                m.add_constraint(
                    LinearConstraint(
                        f"swpw_{i}_{w}_{ts}",
                        {_swpw(i, w, ts): 1.0, _swon(i, w, ts): -dev.max_power_watts},
                        EQ, 0.0,
                    ),
                    TAG_SW_POWER,
                )
    energy_terms: dict[str, float] = {"energy": 1.0}
    for i in sorted(servers):
        for w in t.wavelengths:
            for ts in slots:
                energy_terms[_srvpw(i, w, ts)] = -D
    for i in switches:
        for w in t.wavelengths:
            for ts in slots:
                energy_terms[_swpw(i, w, ts)] = -D
    m.add_constraint(LinearConstraint("energy_def", energy_terms, EQ, 0.0), TAG_ENERGY)

    # AWGR-cell extras -------------------------------------------------------------
    if t.kind == "pon3":
        for w in t.wavelengths:
            for ts in slots:
                m.add_constraint(
                    LinearConstraint(f"norelay_{w}_{ts}", {}, LE, 0.0),
                    TAG_NO_RELAY
                    + "; enforced structurally: no flow variables exist on "
                    "edges leaving a non-source server",
                )
        in_ports = {
            v.id for v in t.vertices.values() if v.kind == KIND_AWGR_IN
        }
        for i in sorted(servers):
            targets = sorted({v for u, v, w in out_by.get(i, ()) if v in in_ports})
            for v in targets:
                for ts in slots:
                    terms = {
                        _lnkon(i, v, w, ts): 1.0
                        for w in t.wavelengths
                        if (i, v, w) in t.link_capacity
                    }
                    m.add_constraint(
                        LinearConstraint(f"onewl_{i}_{v}_{ts}", terms, LE, 1.0),
                        TAG_ONE_WL,
                    )

    # Objective ---------------------------------------------------------------------
    fairness = {
        _sent(s, d, ts): p.q_weight * ts for s, d in pairs for ts in slots
    }
    if p.objective == MIN_ENERGY:
        objective = {"energy": 1.0}
    else:
        objective = {"makespan": 1.0}
    for k, vv in fairness.items():
        objective[k] = objective.get(k, 0.0) + vv
    m.set_objective(objective)
    return m


def decode_schedule(a: Assignment, t: Topology, dm: DemandMatrix,
                    p: SchedParams, tol: float = 1e-6) -> Schedule:
    """Extract a :class:`Schedule` from a solved assignment.

    Binaries are rounded at ``tol``; the load-sum and demand-met invariants
    are re-checked and violations raise :class:`DecodeError` naming the
    family.
    """
    if a.status not in ("optimal", "feasible"):
        raise DecodeError(f"assignment status {a.status!r} is not decodable")
    sched = Schedule()
    pairs = sorted(pair for pair, v in dm.entries.items() if v > 0)
    servers = set(t.servers())
    slots = range(1, p.slots + 1)

    def val(name: str) -> float:
        return a.values.get(name, 0.0)

    for u, v, w in t.edges():
        for ts in slots:
            x = val(_load(u, v, w, ts))
            if x > tol:
                sched.psi[(u, v, w, ts)] = x
            g = val(_lnkon(u, v, w, ts))
            if min(abs(g), abs(g - 1)) > tol:
                raise DecodeError(f"{TAG_LINK_ON_LB}: lnkon_{u}_{v}_{w}_{ts}={g}")
            if round(g):
                sched.active_links.add((u, v, w, ts))
    for s, d in pairs:
        for u, v, w in _pair_edges(t, s, servers):
            for ts in slots:
                x = val(_flow(s, d, u, v, w, ts))
                if x > tol:
                    sched.chi[(s, d, u, v, w, ts)] = x
        total = 0.0
        for ts in slots:
            x = val(_sent(s, d, ts))
            if x > tol:
                sched.delta[(s, d, ts)] = x
            total += x
        if abs(total - dm.entries[(s, d)]) > tol * (1 + dm.entries[(s, d)]):
            raise DecodeError(
                f"{TAG_DEMAND}: pair ({s},{d}) ships {total}, demand "
                f"{dm.entries[(s, d)]}"
            )
    for key, x in sched.psi.items():
        u, v, w, ts = key
        total = sum(
            sched.chi.get((s, d, u, v, w, ts), 0.0) for s, d in pairs
        )
        if abs(total - x) > tol * (1 + abs(x)):
            raise DecodeError(
                f"{TAG_LOAD}: link ({u},{v},{w}) slot {ts} load {x} != "
                f"flow sum {total}"
            )
    for i in sorted(servers):
        for w in t.wavelengths:
            for ts in slots:
                if round(val(_srvon(i, w, ts))):
                    sched.active_servers.add((i, w, ts))
    for i in t.switch_devices():
        for w in t.wavelengths:
            for ts in slots:
                if round(val(_swon(i, w, ts))):
                    sched.active_switches.add((i, w, ts))
    return sched


# -- greedy baseline ---------------------------------------------------------------

def greedy_schedule(t: Topology, dm: DemandMatrix, p: SchedParams) -> Schedule:
    """Deterministic shortest-path baseline.

    Flows sorted by descending size (ties on endpoint ids) take turns each
    slot; a flow sends as much of its residual as the shortest
    positive-headroom path allows, where headroom honors link capacity, the
    per-server egress budget, per-switch ingress budgets and, in the AWGR
    cell, the no-relay rule and the one-wavelength-per-slot transmit rule.
    Demand left after the last slot raises :class:`SlotsExhaustedError`.
    """
    D = p.slot_len(t)
    servers = set(t.servers())
    switch_set = set(t.switch_devices())
    in_ports = {v.id for v in t.vertices.values() if v.kind == KIND_AWGR_IN}
    residual = {pair: v for pair, v in dm.entries.items() if v > 0}
    order = sorted(residual, key=lambda pair: (-dm.entries[pair], pair))
    sched = Schedule()
    tol = 1e-12
    sigma = {
        i: (p.sigma_gbps if p.sigma_gbps is not None else switching_capacity(t, i))
        for i in switch_set
    }
    for ts in range(1, p.slots + 1):
        edge_room = {e: D * c for e, c in t.link_capacity.items()}
        egress = {i: D * p.rho_gbps for i in servers}
        ingress = {i: D * sigma[i] for i in switch_set}
        tx_wl: dict[int, int] = {}
        for pair in order:
            if residual.get(pair, 0.0) <= tol:
                continue
            s, d = pair
            path = _greedy_path(
                t, s, d, edge_room, egress, ingress, tx_wl, in_ports,
                servers, tol,
            )
            if path is None:
                continue
            room = residual[pair]
            for u, v, w in path:
                room = min(room, edge_room[(u, v, w)])
                if u in servers:
                    room = min(room, egress[u])
                if v in switch_set:
                    room = min(room, ingress[v])
            if room <= tol:
                continue
            for u, v, w in path:
                edge_room[(u, v, w)] -= room
                if u in servers:
                    egress[u] -= room
                if v in switch_set:
                    ingress[v] -= room
                if t.kind == "pon3" and u == s and v in in_ports:
                    tx_wl[s] = w
                sched.psi[(u, v, w, ts)] = sched.psi.get((u, v, w, ts), 0.0) + room
                sched.chi[(s, d, u, v, w, ts)] = (
                    sched.chi.get((s, d, u, v, w, ts), 0.0) + room
                )
            sched.delta[(s, d, ts)] = sched.delta.get((s, d, ts), 0.0) + room
            residual[pair] -= room
    left = {pair: r for pair, r in residual.items() if r > 1e-9}
    if left:
        raise SlotsExhaustedError(
            f"{len(left)} flows kept {sum(left.values()):.3f} Gbits past "
            f"slot {p.slots}: {sorted(left)[:5]}"
        )
    _fill_activity(t, sched)
    return sched


def _greedy_path(t, s, d, edge_room, egress, ingress, tx_wl, in_ports,
                 servers, tol):
    """Shortest admissible path by hop count, smallest (v, w) tie-break."""
    no_relay = t.kind == "pon3"

    def admissible(u, v, w):
        if edge_room[(u, v, w)] <= tol:
            return False
        if u in servers:
            if no_relay and u != s:
                return False
            if egress[u] <= tol:
                return False
            if no_relay and v in in_ports and tx_wl.get(s, w) != w:
                return False
        if v in ingress and ingress[v] <= tol:
            return False
        return True

    prev: dict[int, tuple[int, int, int]] = {}
    seen = {s}
    frontier = [s]
    while frontier:
        nxt: list[int] = []
        for u in sorted(frontier):
            for uu, v, w in t.out_edges(u):
                if v in seen or not admissible(uu, v, w):
                    continue
                seen.add(v)
                prev[v] = (uu, v, w)
                nxt.append(v)
        if d in seen:
            break
        frontier = nxt
    if d not in seen:
        return None
    path = []
    node = d
    while node != s:
        e = prev[node]
        path.append(e)
        node = e[0]
    return path[::-1]


def _fill_activity(t: Topology, sched: Schedule) -> None:
    """Derive device/link activity from nonzero traffic."""
    servers = set(t.servers())
    switch_set = set(t.switch_devices())
    for (u, v, w, ts), x in sched.psi.items():
        if x <= 0:
            continue
        sched.active_links.add((u, v, w, ts))
        for node in (u, v):
            if node in servers:
                sched.active_servers.add((node, w, ts))
            elif node in switch_set:
                sched.active_switches.add((node, w, ts))
