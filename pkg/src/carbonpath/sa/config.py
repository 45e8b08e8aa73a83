"""The annealing state: a complete candidate system, and its validity rules."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from carbonpath.interconnect import PackageConfig, bump_count
from carbonpath.library import Catalog, TechTables
from carbonpath.mapping import MappingStrategy


@dataclass(frozen=True)
class SystemConfig:
    """Chiplets, their placement sites, packaging and workload mapping.

    ``stacks`` lists placement sites as tuples of chiplet indices, base die
    first.  A site with one die sits laterally in the package; a longer site
    is a 3D stack.
    """

    chiplets: tuple[str, ...]
    package: PackageConfig
    stacks: tuple[tuple[int, ...], ...]
    mapping: MappingStrategy

    @property
    def n(self) -> int:
        return len(self.chiplets)

    @property
    def integration(self) -> str:
        return self.package.integration

    @property
    def memory(self) -> str:
        return self.package.memory

    def with_mapping(self, **changes) -> "SystemConfig":
        return replace(self, mapping=replace(self.mapping, **changes))

    def with_package(self, **changes) -> "SystemConfig":
        return replace(self, package=replace(self.package, **changes))

    def label(self) -> str:
        return f"{self.package.label()} {self.memory} [{', '.join(self.chiplets)}] {self.mapping.key}"

    def to_dict(self) -> dict:
        p = self.package
        return {
            "chiplets": list(self.chiplets),
            "stacks": [list(s) for s in self.stacks],
            "package": {"integration": p.integration, "memory": p.memory,
                        "interconnect_25d": p.interconnect_25d, "protocol_25d": p.protocol_25d,
                        "interconnect_3d": p.interconnect_3d, "protocol_3d": p.protocol_3d},
            "mapping": {"order": self.mapping.order, "dataflow": self.mapping.dataflow,
                        "split_k": self.mapping.split_k},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SystemConfig":
        return cls(chiplets=tuple(d["chiplets"]), package=PackageConfig(**d["package"]),
                   stacks=tuple(tuple(s) for s in d["stacks"]), mapping=MappingStrategy(**d["mapping"]))


def integration_for(stacks: Sequence[Sequence[int]]) -> str:
    """Integration style implied by the site structure."""
    if sum(len(s) for s in stacks) == 1:
        return "2D"
    if len(stacks) == 1:
        return "3D"
    if all(len(s) == 1 for s in stacks):
        return "2.5D"
    return "2.5D+3D"


def validate(config: SystemConfig, catalog: Catalog, tables: TechTables) -> list[str]:
    """Return every rule the configuration breaks; empty means valid."""
    out: list[str] = []
    n = config.n
    if not 1 <= n <= tables.max_chiplets:
        out.append(f"chiplet count {n} outside [1, {tables.max_chiplets}]")
    missing = [c for c in config.chiplets if c not in catalog]
    out += [f"chiplet {c} not in catalog" for c in missing]

    flat = sorted(i for s in config.stacks for i in s)
    if flat != list(range(n)) or any(len(s) == 0 for s in config.stacks):
        out.append("stacks must place every chiplet exactly once")
        return out + config.package.violations()

    integ = config.integration
    if integ == "2D" and n != 1:
        out.append("2D integration requires exactly one chiplet")
    if integ == "3D" and (n < 2 or len(config.stacks) != 1):
        out.append("a 3D stack requires at least two chiplets in a single stack")
    if integ == "2.5D" and (n < 2 or any(len(s) > 1 for s in config.stacks)):
        out.append("2.5D integration requires at least two side-by-side chiplets and no stacks")
    if integ == "2.5D+3D" and (n < 3 or len(config.stacks) < 2 or all(len(s) == 1 for s in config.stacks)):
        out.append("2.5D+3D integration requires at least three chiplets with a stack and a lateral neighbor")
    out += config.package.violations()
    p = config.package
    if p.memory not in tables.memories:
        out.append(f"memory {p.memory} not in tables")
    for ic, proto in ((p.interconnect_25d, p.protocol_25d), (p.interconnect_3d, p.protocol_3d)):
        if ic is None:
            continue
        if ic not in tables.interconnects:
            out.append(f"interconnect {ic} not in tables")
        elif proto not in tables.compatible_protocols(ic):
            out.append(f"protocol {proto} unavailable for {ic} in tables")
    if len(config.stacks) > tables.memory_channels:
        out.append(f"insufficient channels: {len(config.stacks)} sites, {tables.memory_channels} channels")
    if missing or out:
        return out

    areas = [catalog.get(c).area_mm2 for c in config.chiplets]
    for site in config.stacks:
        for lo, hi in zip(site, site[1:]):
            if areas[hi] > areas[lo]:
                out.append(f"stacking a larger die ({config.chiplets[hi]}) onto a smaller one ({config.chiplets[lo]})")
    if p.uses_25d and len(config.stacks) > 1:
        pitch = tables.interconnects[p.interconnect_25d].bump_pitch
        for site in config.stacks:
            if bump_count(areas[site[0]], "2.5D", pitch) == 0:
                out.append(f"no I/O: {config.chiplets[site[0]]} has no edge bumps at {pitch} um")
    if p.uses_3d:
        pitch = tables.interconnects[p.interconnect_3d].bump_pitch
        for site in config.stacks:
            for c in site if len(site) > 1 else ():
                if bump_count(areas[c], "3D", pitch) == 0:
                    out.append(f"no I/O: {config.chiplets[c]} has no area bumps at {pitch} um")
    return out


def is_valid(config: SystemConfig, catalog: Catalog, tables: TechTables) -> bool:
    return not validate(config, catalog, tables)
