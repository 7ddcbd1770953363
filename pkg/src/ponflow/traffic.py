"""Shuffle traffic generation: task placement and demand matrices.

A placement dedicates disjoint sets of map and reduce servers (10 and 6 by
default, matching the reference workload ratio); the demand matrix holds one
flow per (map, reduce) pair. Flow sizes are either uniform or skewed: skew
draws each map server's output size uniformly and rescales so the total
volume is preserved exactly, with the output split evenly across reducers.

All randomness comes from numpy's PCG64 generator seeded explicitly, so
identical inputs reproduce identical matrices bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .topology import Topology


class TrafficError(ValueError):
    pass


@dataclass(frozen=True)
class Placement:
    map_servers: tuple[int, ...]
    reduce_servers: tuple[int, ...]
    seed: int

    def __post_init__(self) -> None:
        if set(self.map_servers) & set(self.reduce_servers):
            raise TrafficError("map and reduce servers must be disjoint")

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(s, d) for s in self.map_servers for d in self.reduce_servers]


@dataclass(frozen=True)
class DemandMatrix:
    entries: dict[tuple[int, int], float]
    total_gbits: float
    skewed: bool
    seed: int

    def __post_init__(self) -> None:
        if any(v < 0 for v in self.entries.values()):
            raise TrafficError("flow sizes must be non-negative")
        s = math.fsum(self.entries.values())
        if self.total_gbits > 0 and abs(s - self.total_gbits) > 1e-9 * self.total_gbits:
            raise TrafficError(
                f"entries sum to {s}, expected {self.total_gbits} within 1e-9 relative"
            )

    def egress(self, s: int) -> float:
        return math.fsum(v for (u, _), v in self.entries.items() if u == s)

    def ingress(self, d: int) -> float:
        return math.fsum(v for (_, u), v in self.entries.items() if u == d)

    def sources(self) -> list[int]:
        return sorted({s for s, _ in self.entries})

    def destinations(self) -> list[int]:
        return sorted({d for _, d in self.entries})


def place_tasks(t: Topology, seed: int,
                n_map: int = 10, n_reduce: int = 6) -> Placement:
    """Draw disjoint map/reduce server sets uniformly from eligible servers.

    Deterministic per (topology kind, eligible set, seed). The default
    10 + 6 split needs 16 eligible servers; the reduced profile passes
    smaller counts explicitly.
    """
    eligible = sorted(t.task_eligible)
    need = n_map + n_reduce
    if len(eligible) < need:
        raise TrafficError(
            f"{t.kind}: {len(eligible)} task-eligible servers, need {need}"
        )
    rng = np.random.default_rng(seed)
    chosen = rng.choice(np.array(eligible), size=need, replace=False)
    return Placement(
        tuple(int(x) for x in chosen[:n_map]),
        tuple(int(x) for x in chosen[n_map:]),
        seed,
    )


def gen_demand_uniform(p: Placement, total_gbits: float) -> DemandMatrix:
    """Equal-size flows: each (map, reduce) pair carries total/npairs."""
    if total_gbits < 0:
        raise TrafficError("total volume must be non-negative")
    pairs = p.pairs
    share = total_gbits / len(pairs)
    return DemandMatrix({pair: share for pair in pairs}, total_gbits, False, p.seed)


def gen_demand_skewed(p: Placement, total_gbits: float, seed: int) -> DemandMatrix:
    """Skewed flows: per-map output sizes drawn uniformly, then rescaled.

    Each map server's raw output is uniform on (0, total] and split equally
    across the reducers; one common factor rescales everything so the grand
    total is preserved exactly.
    """
    if total_gbits <= 0:
        raise TrafficError("total volume must be positive for skewed demand")
    rng = np.random.default_rng(seed)
    raw = total_gbits * (1.0 - rng.random(len(p.map_servers)))
    scale = total_gbits / float(raw.sum())
    n_red = len(p.reduce_servers)
    entries: dict[tuple[int, int], float] = {}
    for i, s in enumerate(p.map_servers):
        share = float(raw[i]) * scale / n_red
        for d in p.reduce_servers:
            entries[(s, d)] = share
    return DemandMatrix(entries, total_gbits, True, seed)


# -- interchange ----------------------------------------------------------------

def demand_to_csv(dm: DemandMatrix) -> str:
    lines = ["src,dst,gbits"]
    for (s, d), v in sorted(dm.entries.items()):
        if v > 0:
            lines.append(f"{s},{d},{v:.17g}")
    return "\n".join(lines) + "\n"


def demand_sidecar(dm: DemandMatrix) -> str:
    return json.dumps(
        {"total_gbits": dm.total_gbits, "skewed": dm.skewed, "seed": dm.seed},
        indent=1,
    )


def demand_from_csv(csv_text: str, sidecar_text: str) -> DemandMatrix:
    meta = json.loads(sidecar_text)
    entries: dict[tuple[int, int], float] = {}
    lines = csv_text.strip().splitlines()
    if lines[0] != "src,dst,gbits":
        raise TrafficError(f"unexpected demand CSV header {lines[0]!r}")
    for line in lines[1:]:
        s, d, v = line.split(",")
        entries[(int(s), int(d))] = float(v)
    return DemandMatrix(entries, meta["total_gbits"], meta["skewed"], meta["seed"])
