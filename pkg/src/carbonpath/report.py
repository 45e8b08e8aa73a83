"""Fixed-family sweeps and their CSV output."""

from __future__ import annotations

import csv
import dataclasses
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

from carbonpath.errors import CarbonPathError
from carbonpath.interconnect import PackageConfig
from carbonpath.library import Catalog, TechTables
from carbonpath.mapping import MappingStrategy, all_strategies
from carbonpath.metrics import METRIC_NAMES, perf_si
from carbonpath.sa.config import SystemConfig, validate
from carbonpath.sa.evaluate import Evaluator
from carbonpath.sa.moves import enumerate_package_options

AXES = ("chiplet_count", "package_protocol", "mapping", "all_pairs_scatter")

IDENTICAL_SYSTEM = ("128-7-1024",) * 4
DIFFERENT_SYSTEM = ("64-7-256", "96-7-512", "128-7-1024", "192-7-2048")

CSV_FIELDS = ("label", "integration", "interconnect_25d", "protocol_25d", "interconnect_3d", "protocol_3d",
              "memory", "mapping", "n_chiplets", "chiplets") + METRIC_NAMES + (
              "perf_si", "d2d_latency_s", "d2d_monotone")


def family(name: str) -> tuple[str, ...]:
    if name == "identical":
        return IDENTICAL_SYSTEM
    if name == "different":
        return DIFFERENT_SYSTEM
    raise CarbonPathError(f"unknown system family {name!r}; use 'identical' or 'different'")


def canonical_stacks(integration: str, areas: Sequence[float]) -> tuple[tuple[int, ...], ...]:
    """Site layout used by sweeps.

    3D stacks every die largest first; 2.5D places every die laterally;
    2.5D+3D stacks the second- and third-largest dies (second-largest as
    base) and leaves the rest lateral.
    """
    n = len(areas)
    by_size = sorted(range(n), key=lambda i: (-areas[i], i))
    if integration == "2D":
        return ((0,),)
    if integration == "3D":
        return (tuple(by_size),)
    if integration == "2.5D":
        return tuple((i,) for i in range(n))
    if n < 3:
        raise CarbonPathError("2.5D+3D needs at least three chiplets")
    base, top = by_size[1], by_size[2]
    sites = [(base, top)] + [(i,) for i in range(n) if i not in (base, top)]
    return tuple(sorted(sites, key=min))


def build_config(chiplets: Sequence[str], package: PackageConfig, mapping: MappingStrategy,
                 catalog: Catalog) -> SystemConfig:
    areas = [catalog.get(c).area_mm2 for c in chiplets]
    return SystemConfig(tuple(chiplets), package, canonical_stacks(package.integration, areas), mapping)


def package_from_option(option, memory: str) -> PackageConfig:
    integration, p25, p3 = option
    return PackageConfig(integration, memory, *(p25 or (None, None)), *(p3 or (None, None)))


@dataclass
class SweepSpec:
    axis: str
    chiplets: tuple[str, ...] = DIFFERENT_SYSTEM
    package: PackageConfig = PackageConfig("2.5D", "DDR5", "EMIB", "UCIe-A")
    mapping: MappingStrategy = MappingStrategy(0, "OS", True)
    count_range: tuple[int, int] = (2, 8)


def sweep_configs(spec: SweepSpec, catalog: Catalog, tables: TechTables) -> list[SystemConfig]:
    if spec.axis in ("package_protocol", "all_pairs_scatter"):
        return [build_config(spec.chiplets, package_from_option(o, spec.package.memory), spec.mapping, catalog)
                for o in enumerate_package_options(tables)]
    if spec.axis == "mapping":
        return [build_config(spec.chiplets, spec.package, m, catalog) for m in all_strategies()]
    if spec.axis == "chiplet_count":
        lo, hi = spec.count_range
        if lo < 1 or hi < lo:
            raise CarbonPathError(f"bad chiplet count range {lo}..{hi}")
        configs = []
        for n in range(lo, hi + 1):
            package = spec.package
            if n == 1:
                package = PackageConfig("2D", package.memory)
            configs.append(build_config((spec.chiplets[0],) * n, package, spec.mapping, catalog))
        return configs
    raise CarbonPathError(f"unknown sweep axis {spec.axis!r}; choose from {', '.join(AXES)}")


def run_sweep(spec: SweepSpec, evaluator: Evaluator) -> list[dict]:
    """Evaluate the family along the axis; rows come back in axis order."""
    catalog, tables = evaluator.catalog, evaluator.tables
    configs = sweep_configs(spec, catalog, tables)
    check_tables = dataclasses.replace(tables, max_chiplets=max(tables.max_chiplets, max(c.n for c in configs)))
    rows = []
    previous_d2d = None
    for cfg in configs:
        problems = validate(cfg, catalog, check_tables)
        if problems:
            raise CarbonPathError(f"sweep point {cfg.label()} is invalid: {'; '.join(problems)}")
        ev = evaluator.evaluate_full(cfg)
        m = ev.metrics
        p = cfg.package
        row = {"label": p.label(), "integration": p.integration,
               "interconnect_25d": p.interconnect_25d or "", "protocol_25d": p.protocol_25d or "",
               "interconnect_3d": p.interconnect_3d or "", "protocol_3d": p.protocol_3d or "",
               "memory": p.memory, "mapping": cfg.mapping.key, "n_chiplets": cfg.n,
               "chiplets": " ".join(cfg.chiplets), **m.to_dict(),
               "perf_si": perf_si(m.latency_s, m.total_cfp), "d2d_latency_s": ev.latency.d2d_s,
               "d2d_monotone": ""}
        if spec.axis == "chiplet_count":
            row["d2d_monotone"] = "" if previous_d2d is None else str(ev.latency.d2d_s >= previous_d2d).lower()
            previous_d2d = ev.latency.d2d_s
        rows.append(row)
    return rows


def rows_to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    """Parse sweep CSV back into typed rows."""
    out = []
    for raw in csv.DictReader(io.StringIO(text)):
        row: dict = dict(raw)
        row["n_chiplets"] = int(row["n_chiplets"])
        for name in METRIC_NAMES + ("perf_si", "d2d_latency_s"):
            row[name] = float(row[name])
        out.append(row)
    return out


def normalized(rows: Sequence[dict], column: str, reference: int = 0) -> list[float]:
    ref = rows[reference][column]
    return [r[column] / ref if ref else 0.0 for r in rows]
