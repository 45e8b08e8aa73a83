"""Energy, dollar cost, embodied/operational carbon and Perf-SI."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

from carbonpath.errors import MetricsError
from carbonpath.interconnect import PackageConfig, TopologyGraph
from carbonpath.library import ChipletSpec, MemorySpec, NodeData, OperationalData, TechTables
from carbonpath.mapping import TrafficProfile

PJ = 1e-12
SECONDS_PER_YEAR = 365 * 24 * 3600
J_PER_KWH = 3.6e6

METRIC_NAMES = ("energy_j", "area_mm2", "latency_s", "cost_usd", "emb_kgco2", "ope_kgco2")


@dataclass(frozen=True)
class MetricsBundle:
    energy_j: float
    area_mm2: float
    latency_s: float
    cost_usd: float
    emb_kgco2: float
    ope_kgco2: float

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, n) for n in METRIC_NAMES)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def total_cfp(self) -> float:
        return self.emb_kgco2 + self.ope_kgco2


# --- energy -----------------------------------------------------------------

def mac_energy(chip: ChipletSpec) -> float:
    """Joules per MAC: characterized power over peak MAC rate."""
    return chip.power_w / (chip.array_rows * chip.array_cols * chip.freq_ghz * 1e9)


def compute_energy(traffic: TrafficProfile, chiplets: Sequence[ChipletSpec], memory: MemorySpec) -> float:
    total = 0.0
    for i, chip in enumerate(chiplets):
        total += (memory.read_energy_per_bit * traffic.dram_read_bits[i]
                  + chip.sram_energy_per_bit * traffic.sram_access_bits[i]) * PJ
        total += traffic.mac_ops[i] * mac_energy(chip)
    total += sum(memory.write_energy_per_bit * w for w in traffic.dram_write_bits) * PJ
    return total


def d2d_energy(link_bits: Mapping[tuple[int, int], float], topology: TopologyGraph, protocols: Mapping) -> float:
    return sum(protocols[topology.edge(a, b).protocol].energy_per_bit * bits
               for (a, b), bits in link_bits.items()) * PJ


# --- yield and cost ------------------------------------------------------------

def chiplet_yield(area_mm2: float, defect_density: float, alpha: float = 3.0) -> float:
    """Negative-binomial die yield."""
    return (1.0 + area_mm2 * defect_density / alpha) ** (-alpha)


def dies_per_wafer(area_mm2: float, diameter_mm: float = 300.0) -> int:
    dpw = math.floor(math.pi * (diameter_mm / 2) ** 2 / area_mm2 - math.pi * diameter_mm / math.sqrt(2 * area_mm2))
    if dpw < 1:
        raise MetricsError(f"a {area_mm2:g} mm^2 die does not fit on a {diameter_mm:g} mm wafer")
    return dpw


def die_cost(area_mm2: float, node: NodeData, tables: TechTables) -> float:
    y = chiplet_yield(area_mm2, node.defect_density, tables.yield_alpha)
    return node.wafer_cost / dies_per_wafer(area_mm2, tables.wafer_diameter_mm) / y


def chiplet_cost(spec: ChipletSpec, tables: TechTables) -> float:
    return die_cost(spec.area_mm2, tables.nodes[spec.tech_node], tables)


def bonding_yield(package: PackageConfig, stacks: Sequence[Sequence[int]], tables: TechTables) -> float:
    """Product of per-step bonding yields: one lateral attach per site, one bond per stacked die."""
    y = 1.0
    if package.uses_25d and len(stacks) > 1:
        y *= tables.interconnects[package.interconnect_25d].bonding_yield ** len(stacks)
    if package.uses_3d:
        bonds = sum(len(site) - 1 for site in stacks)
        y *= tables.interconnects[package.interconnect_3d].bonding_yield ** bonds
    return y


def _stacked_base_area(chiplets: Sequence[ChipletSpec], stacks: Sequence[Sequence[int]]) -> float:
    return sum(chiplets[s[0]].area_mm2 for s in stacks if len(s) > 1)


def has_interposer(package: PackageConfig, tables: TechTables) -> bool:
    return package.uses_25d and tables.interconnects[package.interconnect_25d].interposer


def cost_terms(chiplets: Sequence[ChipletSpec], package: PackageConfig, stacks: Sequence[Sequence[int]],
               footprint_mm2: float, tables: TechTables) -> dict[str, float]:
    chips = sum(chiplet_cost(c, tables) for c in chiplets)
    interposer = die_cost(footprint_mm2, tables.interposer, tables) if has_interposer(package, tables) else 0.0
    if package.integration == "2D":
        pkg = tables.substrate_cost_2d * footprint_mm2
    else:
        pkg = 0.0
        if package.uses_25d:
            pkg += tables.interconnects[package.interconnect_25d].substrate_cost_per_area * footprint_mm2
        if package.integration == "3D":
            pkg += tables.interconnects[package.interconnect_3d].substrate_cost_per_area * footprint_mm2
        elif package.uses_3d:
            pkg += tables.interconnects[package.interconnect_3d].substrate_cost_per_area * \
                _stacked_base_area(chiplets, stacks)
    return {"chiplets": chips, "interposer": interposer, "package": pkg,
            "bonding_yield": bonding_yield(package, stacks, tables),
            "memory": tables.memories[package.memory].cost}


def system_cost(chiplets, package, stacks, footprint_mm2, tables) -> float:
    t = cost_terms(chiplets, package, stacks, footprint_mm2, tables)
    return (t["chiplets"] + t["interposer"] + t["package"]) / t["bonding_yield"] + t["memory"]


# --- carbon ---------------------------------------------------------------------

def die_carbon(area_mm2: float, node: NodeData, tables: TechTables) -> tuple[float, float]:
    """(manufacturing, amortized design) carbon of one die."""
    y = chiplet_yield(area_mm2, node.defect_density, tables.yield_alpha)
    return (node.carbon_per_area * area_mm2 / y,
            node.design_carbon_per_area * area_mm2 / tables.operational.production_volume)


def carbon_terms(chiplets: Sequence[ChipletSpec], package: PackageConfig, stacks: Sequence[Sequence[int]],
                 footprint_mm2: float, tables: TechTables) -> dict[str, float]:
    mfg = design = 0.0
    for c in chiplets:
        m, d = die_carbon(c.area_mm2, tables.nodes[c.tech_node], tables)
        mfg += m
        design += d
    packaging = 0.0
    if package.uses_25d:
        packaging += tables.interconnects[package.interconnect_25d].packaging_carbon_per_area * footprint_mm2
    if package.integration == "3D":
        packaging += tables.interconnects[package.interconnect_3d].packaging_carbon_per_area * footprint_mm2
    elif package.uses_3d:
        packaging += tables.interconnects[package.interconnect_3d].packaging_carbon_per_area * \
            _stacked_base_area(chiplets, stacks)
    interposer = 0.0
    if has_interposer(package, tables):
        interposer = sum(die_carbon(footprint_mm2, tables.interposer, tables))
    y_bond = bonding_yield(package, stacks, tables)
    return {"manufacturing": mfg, "design": design,
            "integration": packaging / y_bond + interposer}


def embodied_carbon(chiplets, package, stacks, footprint_mm2, tables) -> float:
    return sum(carbon_terms(chiplets, package, stacks, footprint_mm2, tables).values())


def operational_carbon(energy_j: float, latency_s: float, op: OperationalData) -> float:
    """Lifetime operational carbon in kgCO2e.

    Continuous mode runs the workload back to back for the use fraction of
    the lifetime; fixed mode runs it a configured number of times.
    """
    if energy_j == 0:
        return 0.0
    if op.mode == "fixed":
        invocations = op.invocations_per_lifetime
    else:
        if latency_s <= 0:
            raise MetricsError("latency must be positive to count invocations")
        invocations = op.lifetime_years * SECONDS_PER_YEAR * op.use_fraction / latency_s
    carbon = energy_j * invocations * op.carbon_intensity / J_PER_KWH
    if op.accounting == "fleet":
        carbon *= op.production_volume
    return carbon


def perf_si(latency_s: float, total_cfp: float) -> float:
    """Throughput per unit carbon; higher is better."""
    if latency_s <= 0 or total_cfp <= 0:
        raise MetricsError("Perf-SI needs positive latency and carbon footprint")
    return (1.0 / latency_s) / total_cfp
