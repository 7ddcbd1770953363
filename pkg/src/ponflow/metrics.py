"""Independent schedule verification and energy/completion metrics.

Everything here works by direct arithmetic over a :class:`Schedule` — no
solver state is trusted. The verifier re-checks conservation, rate and
capacity budgets, demand totals and the WDM cell rules; the energy and
completion computations implement the device power laws and the
interpolated per-link finish times from scratch. Published metrics always
come from this module, which catches model-construction bugs that a
solver's own objective value would hide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .sched import SchedParams, Schedule
from .topology import KIND_AWGR_IN, LINK_GBPS, Topology, switching_capacity
from .traffic import DemandMatrix

TOL = 1e-6


@dataclass
class Violation:
    tag: str
    location: str
    magnitude: float

    def __str__(self) -> str:
        return f"{self.tag} @ {self.location}: {self.magnitude:.3e}"


@dataclass
class MetricsReport:
    energy_joules: float
    completion_s: float
    per_device_energy: dict[int, float]
    feasible: bool
    violations: list[Violation] = field(default_factory=list)
    bounds: dict[str, float] = field(default_factory=dict)

    @property
    def energy_kwh(self) -> float:
        return self.energy_joules / 3.6e6

    def to_dict(self) -> dict:
        return {
            "energy_joules": self.energy_joules,
            "energy_kwh": self.energy_kwh,
            "completion_s": self.completion_s,
            "per_device_energy": {str(k): v for k, v in
                                  sorted(self.per_device_energy.items())},
            "feasible": self.feasible,
            "violations": [
                {"tag": v.tag, "location": v.location, "magnitude": v.magnitude}
                for v in self.violations
            ],
            "bounds": dict(self.bounds),
        }


def _device_traffic(t: Topology, s: Schedule) -> dict[tuple[int, int, int], float]:
    """Ingress-plus-egress gigabits per (vertex, wavelength, slot)."""
    acc: dict[tuple[int, int, int], float] = {}
    for (u, v, w, ts), x in s.psi.items():
        if x <= 0:
            continue
        acc[(u, w, ts)] = acc.get((u, w, ts), 0.0) + x
        acc[(v, w, ts)] = acc.get((v, w, ts), 0.0) + x
    return acc


def energy(t: Topology, s: Schedule, p: SchedParams) -> tuple[float, dict[int, float]]:
    """Total energy in Joules and its per-device split, derived from traffic.

    A device is active in a (wavelength, slot) cell whenever any traffic
    touches it there; on/off devices then draw their maximum power for the
    slot, and offloading NICs add their per-Gbps term at the slot's average
    rate.
    """
    D = p.slot_len(t)
    traffic = _device_traffic(t, s)
    per_device: dict[int, float] = {}
    for (node, w, ts), beta in traffic.items():
        if beta <= TOL:
            continue
        dev = t.vertices[node].device
        if dev is None:
            continue  # passive AWGR ports
        watts = dev.max_power_watts
        if dev.power_law == "nic_offload":
            watts += dev.epsilon_w_per_gbps * beta / D
        per_device[node] = per_device.get(node, 0.0) + D * watts
    return math.fsum(per_device.values()), per_device


def completion_time(s: Schedule, p: SchedParams,
                    t: Topology | None = None) -> float:
    """Latest per-link finish time: slot offset plus load over capacity."""
    if not s.psi:
        return 0.0
    D = p.slot_seconds if p.slot_seconds is not None else (
        t.slot_seconds if t is not None else 1.0
    )
    best = 0.0
    for (u, v, w, ts), x in s.psi.items():
        if x <= TOL:
            continue
        cap = t.link_capacity[(u, v, w)] if t is not None else LINK_GBPS
        best = max(best, D * (ts - 1) + x / cap)
    return best


def lower_bounds(t: Topology, dm: DemandMatrix, p: SchedParams) -> dict[str, float]:
    """Analytic sanity bounds no schedule can beat.

    Completion: a source must push its egress at rate rho at best, and a
    destination can absorb at most one full link per wavelength. Energy:
    every active source powers its transmitter for at least the number of
    slots its egress needs at full rate.
    """
    if not dm.entries or dm.total_gbits <= 0:
        return {"M_lb": 0.0, "E_lb": 0.0}
    D = p.slot_len(t)
    cmax = max(t.link_capacity.values())
    n_wl = len(t.wavelengths)
    m_lb = 0.0
    for srv in dm.sources():
        m_lb = max(m_lb, dm.egress(srv) / p.rho_gbps)
    for srv in dm.destinations():
        m_lb = max(m_lb, dm.ingress(srv) / (n_wl * cmax))
    e_lb = 0.0
    for srv in dm.sources():
        out = dm.egress(srv)
        if out <= 0:
            continue
        dev = t.vertices[srv].device
        slots_needed = math.ceil(out / (D * p.rho_gbps) - 1e-12)
        e_lb += D * dev.max_power_watts * slots_needed
    return {"M_lb": m_lb, "E_lb": e_lb}


def verify_schedule(t: Topology, dm: DemandMatrix, s: Schedule,
                    p: SchedParams, tol: float = TOL) -> MetricsReport:
    """Re-check every scheduling rule by direct arithmetic over ``s``.

    Fills the violations list (empty means feasible) and computes energy,
    completion time and the analytic bounds.
    """
    violations: list[Violation] = []
    D = p.slot_len(t)
    servers = set(t.servers())
    pairs = sorted(pair for pair, v in dm.entries.items() if v > 0)
    slots = range(1, p.slots + 1)

    for key, x in s.psi.items():
        if x < -tol:
            violations.append(Violation("nonnegative_load", str(key), -x))
    for key, x in s.chi.items():
        if x < -tol:
            violations.append(Violation("nonnegative_flow", str(key), -x))

    # Flow conservation, endpoint totals over wavelengths, relays per
    # wavelength.
    flows_by_pair: dict[tuple[int, int], list[tuple]] = {}
    for (fs, fd, u, v, w, ts), x in s.chi.items():
        flows_by_pair.setdefault((fs, fd), []).append((u, v, w, ts, x))
    for pair in pairs:
        fs, fd = pair
        rows = flows_by_pair.get(pair, [])
        for ts in slots:
            delta = s.delta.get((fs, fd, ts), 0.0)
            net: dict[tuple[int, int], float] = {}
            for u, v, w, tss, x in rows:
                if tss != ts:
                    continue
                net[(u, w)] = net.get((u, w), 0.0) + x
                net[(v, w)] = net.get((v, w), 0.0) - x
            node_net: dict[int, float] = {}
            for (node, w), x in net.items():
                node_net[node] = node_net.get(node, 0.0) + x
                if node not in (fs, fd) and abs(x) > tol:
                    violations.append(
                        Violation(
                            "flow_conservation",
                            f"pair ({fs},{fd}) vertex {node} wavelength {w} "
                            f"slot {ts}",
                            abs(x),
                        )
                    )
            if abs(node_net.get(fs, 0.0) - delta) > tol * (1 + delta):
                violations.append(
                    Violation(
                        "flow_conservation",
                        f"pair ({fs},{fd}) source {fs} slot {ts}",
                        abs(node_net.get(fs, 0.0) - delta),
                    )
                )
            if abs(node_net.get(fd, 0.0) + delta) > tol * (1 + delta):
                violations.append(
                    Violation(
                        "flow_conservation",
                        f"pair ({fs},{fd}) dest {fd} slot {ts}",
                        abs(node_net.get(fd, 0.0) + delta),
                    )
                )

    # Per-slot budgets.
    for ts in slots:
        for i in sorted(servers):
            out = math.fsum(
                x for (u, v, w, tss), x in s.psi.items() if u == i and tss == ts
            )
            if out > D * p.rho_gbps + tol:
                violations.append(
                    Violation("server_egress_rate", f"server {i} slot {ts}",
                              out - D * p.rho_gbps)
                )
        for i in t.switch_devices():
            sigma = (p.sigma_gbps if p.sigma_gbps is not None
                     else switching_capacity(t, i))
            inn = math.fsum(
                x for (u, v, w, tss), x in s.psi.items() if v == i and tss == ts
            )
            if inn > D * sigma + tol:
                violations.append(
                    Violation("switch_ingress_rate", f"switch {i} slot {ts}",
                              inn - D * sigma)
                )

    for (u, v, w, ts), x in s.psi.items():
        cap = t.link_capacity.get((u, v, w))
        if cap is None:
            violations.append(
                Violation("link_capacity", f"unknown link ({u},{v},{w})", x)
            )
            continue
        if x > D * cap + tol:
            violations.append(
                Violation("link_capacity", f"link ({u},{v},{w}) slot {ts}",
                          x - D * cap)
            )

    # Load equals the sum of flows crossing each link.
    flow_sum: dict[tuple[int, int, int, int], float] = {}
    for (fs, fd, u, v, w, ts), x in s.chi.items():
        flow_sum[(u, v, w, ts)] = flow_sum.get((u, v, w, ts), 0.0) + x
    for key in sorted(set(flow_sum) | set(s.psi)):
        a = s.psi.get(key, 0.0)
        b = flow_sum.get(key, 0.0)
        if abs(a - b) > tol * (1 + abs(a)):
            violations.append(Violation("link_load_sum", str(key), abs(a - b)))

    for pair in pairs:
        total = math.fsum(
            x for (fs, fd, ts), x in s.delta.items() if (fs, fd) == pair
        )
        want = dm.entries[pair]
        if abs(total - want) > tol * (1 + want):
            violations.append(
                Violation("demand_met", f"pair {pair}", abs(total - want))
            )

    if t.kind == "pon3":
        in_ports = {v.id for v in t.vertices.values() if v.kind == KIND_AWGR_IN}
        for (fs, fd, u, v, w, ts), x in s.chi.items():
            if x > tol and u in servers and u != fs:
                violations.append(
                    Violation("no_server_relay",
                              f"pair ({fs},{fd}) relayed by server {u} slot {ts}",
                              x)
                )
        tx: dict[tuple[int, int], set[int]] = {}
        for (u, v, w, ts), x in s.psi.items():
            if x > tol and u in servers and v in in_ports:
                tx.setdefault((u, ts), set()).add(w)
        for (u, ts), wls in tx.items():
            if len(wls) > 1:
                violations.append(
                    Violation("single_tx_wavelength",
                              f"server {u} slot {ts} wavelengths {sorted(wls)}",
                              len(wls) - 1)
                )

    e_total, per_device = energy(t, s, p)
    m_total = completion_time(s, p, t)
    return MetricsReport(
        energy_joules=e_total,
        completion_s=m_total,
        per_device_energy=per_device,
        feasible=not violations,
        violations=violations,
        bounds=lower_bounds(t, dm, p),
    )
