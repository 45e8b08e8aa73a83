"""Random valid configurations and hierarchical annealing moves."""

from __future__ import annotations

import random

from carbonpath.interconnect import PackageConfig
from carbonpath.library import Catalog, TechTables
from carbonpath.mapping import DATAFLOWS, all_strategies
from carbonpath.sa.config import SystemConfig, integration_for, validate

MAX_RETRIES = 8
APPLICATION_MOVES = ("dataflow", "split_k", "order")
LOWER_LEVELS = ("architecture", "chiplet", "package")
MOVE_TYPES = APPLICATION_MOVES + ("count", "memory", "chiplet", "interconnect", "protocol")


def package_pairs(tables: TechTables, style: str) -> list[tuple[str, str]]:
    return [(ic, p) for ic in tables.interconnects_for(style) for p in tables.compatible_protocols(ic)]


def enumerate_package_options(tables: TechTables) -> list[tuple[str, tuple[str, str] | None, tuple[str, str] | None]]:
    """Every legal (integration, 2.5D pair, 3D pair) packaging choice for multi-die systems."""
    p25, p3 = package_pairs(tables, "2.5D"), package_pairs(tables, "3D")
    return ([("2.5D", a, None) for a in p25] + [("3D", None, b) for b in p3]
            + [("2.5D+3D", a, b) for a in p25 for b in p3])


def _sorted_site(site, areas) -> tuple[int, ...]:
    return tuple(sorted(site, key=lambda c: (-areas[c], c)))


def make_package(integration: str, memory: str, rng: random.Random, tables: TechTables,
                 keep: PackageConfig | None = None) -> PackageConfig:
    """Package for ``integration``, reusing ``keep``'s choices where they still apply."""
    ic25 = p25 = ic3 = p3 = None
    if integration in ("2.5D", "2.5D+3D"):
        if keep is not None and keep.interconnect_25d is not None:
            ic25, p25 = keep.interconnect_25d, keep.protocol_25d
        else:
            ic25, p25 = rng.choice(package_pairs(tables, "2.5D"))
    if integration in ("3D", "2.5D+3D"):
        if keep is not None and keep.interconnect_3d is not None:
            ic3, p3 = keep.interconnect_3d, keep.protocol_3d
        else:
            ic3, p3 = rng.choice(package_pairs(tables, "3D"))
    return PackageConfig(integration, memory, ic25, p25, ic3, p3)


def _random_partition(n: int, rng: random.Random) -> list[list[int]]:
    """At least two sites, at least one holding two or more dies."""
    while True:
        k = rng.randint(2, n - 1)
        order = list(range(n))
        rng.shuffle(order)
        cuts = sorted(rng.sample(range(1, n), k - 1))
        sites = [order[a:b] for a, b in zip([0] + cuts, cuts + [n])]
        if any(len(s) > 1 for s in sites):
            return sorted(sites, key=min)


def random_valid_config(rng: random.Random, catalog: Catalog, tables: TechTables,
                        max_chiplets: int | None = None) -> SystemConfig:
    """Draw count, integration, packaging, chiplets, stacks, mapping and memory in turn."""
    limit = max_chiplets or tables.max_chiplets
    entries = catalog.entries
    strategies = all_strategies()
    memories = sorted(tables.memories)
    while True:
        n = rng.randint(1, limit)
        if n == 1:
            integration = "2D"
        else:
            integration = rng.choice(("2.5D", "3D") if n == 2 else ("2.5D", "3D", "2.5D+3D"))
        package = make_package(integration, rng.choice(memories), rng, tables)
        chips = [rng.choice(entries) for _ in range(n)]
        areas = [c.area_mm2 for c in chips]
        if integration in ("2D", "3D"):
            sites = [list(range(n))]
        elif integration == "2.5D":
            sites = [[i] for i in range(n)]
        else:
            sites = _random_partition(n, rng)
        config = SystemConfig(tuple(c.id for c in chips), package,
                              tuple(_sorted_site(s, areas) for s in sites), rng.choice(strategies))
        if not validate(config, catalog, tables):
            return config


# --- individual moves -------------------------------------------------------------
# Each returns a new config, or None when the move does not apply.

def _move_dataflow(cfg, rng, catalog, tables):
    return cfg.with_mapping(dataflow=rng.choice([d for d in DATAFLOWS if d != cfg.mapping.dataflow]))


def _move_split_k(cfg, rng, catalog, tables):
    return cfg.with_mapping(split_k=not cfg.mapping.split_k)


def _move_order(cfg, rng, catalog, tables):
    return cfg.with_mapping(order=1 - cfg.mapping.order)


def _restructure(cfg, chiplets, sites, rng, tables, catalog) -> SystemConfig:
    areas = [catalog.get(c).area_mm2 for c in chiplets]
    stacks = tuple(_sorted_site(s, areas) for s in sites if s)
    integration = integration_for(stacks)
    package = make_package(integration, cfg.memory, rng, tables, keep=cfg.package)
    return SystemConfig(tuple(chiplets), package, stacks, cfg.mapping)


def _move_count(cfg, rng, catalog, tables):
    n = cfg.n
    grow = n < tables.max_chiplets and (n == 1 or rng.random() < 0.5)
    if grow:
        chiplets = list(cfg.chiplets) + [rng.choice(catalog.entries).id]
        sites = [list(s) for s in cfg.stacks]
        if n == 1 or rng.random() < 0.5:
            sites.append([n])  # new lateral site
        else:
            rng.choice(sites).append(n)  # onto an existing site
        return _restructure(cfg, chiplets, sites, rng, tables, catalog)
    if n == 1:
        return None
    drop = rng.randrange(n)
    chiplets = [c for i, c in enumerate(cfg.chiplets) if i != drop]
    sites = [[i - (i > drop) for i in s if i != drop] for s in cfg.stacks]
    return _restructure(cfg, chiplets, sites, rng, tables, catalog)


def _move_memory(cfg, rng, catalog, tables):
    options = sorted(m for m in tables.memories if m != cfg.memory)
    return cfg.with_package(memory=rng.choice(options)) if options else None


def _move_chiplet(cfg, rng, catalog, tables):
    slot = rng.randrange(cfg.n)
    new = rng.choice(catalog.entries).id
    if new == cfg.chiplets[slot]:
        return None
    chiplets = list(cfg.chiplets)
    chiplets[slot] = new
    return _restructure(cfg, chiplets, [list(s) for s in cfg.stacks], rng, tables, catalog)


def _styles(cfg):
    return [s for s, used in (("2.5D", cfg.package.uses_25d), ("3D", cfg.package.uses_3d)) if used]


def _move_interconnect(cfg, rng, catalog, tables):
    styles = _styles(cfg)
    if not styles:
        return None
    style = rng.choice(styles)
    attr = "_25d" if style == "2.5D" else "_3d"
    current = getattr(cfg.package, "interconnect" + attr)
    options = [ic for ic in tables.interconnects_for(style) if ic != current]
    if not options:
        return None
    ic = rng.choice(options)
    proto = getattr(cfg.package, "protocol" + attr)
    if proto not in tables.compatible_protocols(ic):
        proto = rng.choice(tables.compatible_protocols(ic))
    return cfg.with_package(**{"interconnect" + attr: ic, "protocol" + attr: proto})


def _move_protocol(cfg, rng, catalog, tables):
    choices = []
    for style in _styles(cfg):
        attr = "_25d" if style == "2.5D" else "_3d"
        ic, proto = getattr(cfg.package, "interconnect" + attr), getattr(cfg.package, "protocol" + attr)
        alternatives = [p for p in tables.compatible_protocols(ic) if p != proto]
        if alternatives:
            choices.append((attr, alternatives))
    if not choices:
        return None
    attr, alternatives = rng.choice(choices)
    return cfg.with_package(**{"protocol" + attr: rng.choice(alternatives)})


MOVES = {
    "dataflow": _move_dataflow, "split_k": _move_split_k, "order": _move_order,
    "count": _move_count, "memory": _move_memory, "chiplet": _move_chiplet,
    "interconnect": _move_interconnect, "protocol": _move_protocol,
}


def choose_move_type(rng: random.Random) -> str:
    if rng.random() < 1 / 3:
        return rng.choice(APPLICATION_MOVES)
    level = rng.choice(LOWER_LEVELS)
    if level == "architecture":
        return rng.choice(("count", "memory"))
    if level == "chiplet":
        return "chiplet"
    return rng.choice(("interconnect", "protocol"))


def propose_move(config: SystemConfig, rng: random.Random, catalog: Catalog,
                 tables: TechTables) -> tuple[SystemConfig, str]:
    """Perturb one design parameter and return a valid neighbor plus the move name.

    A move that does not apply or yields an invalid system is retried up to
    ``MAX_RETRIES`` times before a different move type is drawn.
    """
    while True:
        move = choose_move_type(rng)
        for _ in range(MAX_RETRIES):
            candidate = MOVES[move](config, rng, catalog, tables)
            if candidate is not None and candidate != config and not validate(candidate, catalog, tables):
                return candidate, move

