"""Full metric pipeline for one configuration, with a cycle-count cache."""

from __future__ import annotations

import math
import threading
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

from carbonpath import metrics as M
from carbonpath.floorplan import Floorplan, footprint_area, slicing_floorplan
from carbonpath.interconnect import (D2DSchedule, LatencyBreakdown, TopologyGraph, build_topology, d2d_latency,
                                     memory_bandwidth_share, memory_link_bits, system_latency)
from carbonpath.library import Catalog, TechTables
from carbonpath.mapping import (Assignment, MappingStrategy, TileSet, TrafficProfile, WorkloadSpec, assign_tiles,
                                compute_cycles, derive_traffic, tile_workload)
from carbonpath.sa.config import SystemConfig


class SimCache:
    """Cycle counts keyed by what the cycle model can depend on.

    The key has slots for the die's memory-bandwidth class and the tiling
    buffer.  The fold model is stall-free, so the bandwidth class collapses
    to ``None`` unless ``bandwidth_sensitive`` is set for a stall-aware model.
    Reads are lock-free; inserts are serialized.
    """

    def __init__(self, enabled: bool = True, bandwidth_sensitive: bool = False):
        self.enabled = enabled
        self.bandwidth_sensitive = bandwidth_sensitive
        self.hits = 0
        self.misses = 0
        self._table: dict[tuple, int] = {}
        self._lock = threading.Lock()

    def key(self, chip, bandwidth_gbps: float, buffer_kb: int, dataflow: str, tiles) -> tuple:
        shapes = tuple(sorted(Counter((t.m, t.k, t.n) for t in tiles).items()))
        bw_class = None
        if self.bandwidth_sensitive and bandwidth_gbps > 0:
            bw_class = math.floor(math.log2(bandwidth_gbps))
        return chip.array_rows, chip.array_cols, bw_class, buffer_kb, dataflow, shapes

    def cycles(self, chip, bandwidth_gbps: float, buffer_kb: int, dataflow: str, tiles) -> int:
        if not self.enabled:
            self.misses += 1
            return compute_cycles(chip, tiles, dataflow)
        key = self.key(chip, bandwidth_gbps, buffer_kb, dataflow, tiles)
        value = self._table.get(key)
        if value is not None:
            self.hits += 1
            return value
        self.misses += 1
        value = compute_cycles(chip, tiles, dataflow)
        with self._lock:
            self._table.setdefault(key, value)
        return value

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0

    def __len__(self) -> int:
        return len(self._table)


@dataclass(frozen=True)
class Evaluation:
    """Metrics plus the intermediate artifacts that produced them."""

    metrics: M.MetricsBundle
    floorplan: Floorplan | None
    topology: TopologyGraph
    tiles: TileSet
    assignment: Assignment
    traffic: TrafficProfile
    cycles: tuple[int, ...]
    bandwidth: tuple[float, ...]
    schedule: D2DSchedule
    latency: LatencyBreakdown
    energy_compute_j: float
    energy_d2d_j: float


@lru_cache(maxsize=4096)
def _tiling(wl: WorkloadSpec, split_k: bool, buffer_kb: int) -> TileSet:
    return tile_workload(wl, MappingStrategy(split_k=split_k), buffer_kb)


class Evaluator:
    def __init__(self, tables: TechTables, catalog: Catalog, workload: WorkloadSpec, use_cache: bool = True):
        self.tables = tables
        self.catalog = catalog
        self.workload = workload
        self.cache = SimCache(enabled=use_cache)
        self.evaluations = 0

    def evaluate(self, config: SystemConfig) -> M.MetricsBundle:
        return self.evaluate_full(config).metrics

    def evaluate_full(self, config: SystemConfig) -> Evaluation:
        t = self.tables
        self.evaluations += 1
        chips = [self.catalog.get(c) for c in config.chiplets]
        areas = [c.area_mm2 for c in chips]
        stacks = config.stacks
        pkg = config.package
        fp = slicing_floorplan([areas[s[0]] for s in stacks]) if len(stacks) > 1 else None
        footprint = footprint_area(pkg.integration, areas, stacks, fp)
        topo = build_topology(areas, stacks, pkg, t.protocols, t.interconnects, fp)
        bandwidth = memory_bandwidth_share(areas, stacks, t.memories[pkg.memory].bandwidth, topo,
                                           t.memory_channels)

        wl = self.workload
        strategy = config.mapping
        buffer_kb = min(c.sram_kb for c in chips)
        tiles = _tiling(wl, strategy.split_k, buffer_kb)
        assignment = assign_tiles(tiles, [c.compute_power for c in chips], strategy)
        cycles = tuple(self.cache.cycles(c, bw, buffer_kb, strategy.dataflow, a) if a else 0
                       for c, bw, a in zip(chips, bandwidth, assignment.tiles))
        compute_s = [cy / (c.freq_ghz * 1e9) for cy, c in zip(cycles, chips)]
        traffic = derive_traffic(assignment, wl, strategy, topo.destination, t.accumulator_bytes)
        schedule = d2d_latency(topo, traffic)
        latency = system_latency(compute_s, traffic, bandwidth, schedule.latency_s)

        link_bits = dict(schedule.link_bits)
        for edge, bits in memory_link_bits(stacks, traffic).items():
            link_bits[edge] = link_bits.get(edge, 0) + bits
        e_compute = M.compute_energy(traffic, chips, t.memories[pkg.memory])
        e_d2d = M.d2d_energy(link_bits, topo, t.protocols)
        energy = e_compute + e_d2d
        lat = latency.total_s
        bundle = M.MetricsBundle(
            energy_j=energy,
            area_mm2=footprint,
            latency_s=lat,
            cost_usd=M.system_cost(chips, pkg, stacks, footprint, t),
            emb_kgco2=M.embodied_carbon(chips, pkg, stacks, footprint, t),
            ope_kgco2=M.operational_carbon(energy, lat, t.operational),
        )
        return Evaluation(bundle, fp, topo, tiles, assignment, traffic, cycles, tuple(bandwidth), schedule,
                          latency, e_compute, e_d2d)
