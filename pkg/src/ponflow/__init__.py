"""Solver-neutral MILP toolkit for co-flow scheduling and PON-based DCN studies.

Subpackages cover the full experiment pipeline: data-centre topology
generation with device power catalogs, MapReduce shuffle traffic generation,
a solver-neutral MILP intermediate representation with LP-file output and
pluggable solver backends, an AWGR port-wiring optimizer, a time-slotted
co-flow scheduling optimizer with a greedy baseline, independent schedule
verification with energy/completion metrics, and a batch experiment CLI.
"""

__version__ = "0.1.0"
