"""Chiplet catalog and technology tables.

Tables ship as JSON under ``carbonpath/data`` and can be replaced by a user
directory (``--tables`` or ``CARBONPATH_TABLES``).  Every numeric entry is
validated on load; unknown keys are rejected so typos surface early.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Any, Iterable, Mapping

import jsonschema

from carbonpath.errors import DesignSpaceError, TableError

NODES = (7, 10, 14, 22, 28)
ARRAY_SIZES = (64, 96, 128, 192)
SRAM_OPTIONS = {
    64: (256, 512, 768, 1024),
    96: (512, 1024, 1536, 2048),
    128: (1024, 2048, 3072, 4096),
    192: (2048, 4096, 6144, 8192),
}
MEMORY_TYPES = ("DDR4", "DDR5", "HBM2", "HBM3")
PROTOCOLS_25D = ("UCIe-S", "UCIe-A", "AIB", "BoW")
PROTOCOLS_3D = ("UCIe-3D",)
INTERCONNECTS_25D = ("RDL", "EMIB", "Passive", "Active")
INTERCONNECTS_3D = ("TSV", "uBump", "HybridBond")

# Legal (interconnect, protocol) rows of the packaging compatibility table.
COMPATIBILITY = MappingProxyType({
    "RDL": ("UCIe-S",),
    "EMIB": ("UCIe-A", "AIB", "BoW"),
    "Passive": ("UCIe-A", "AIB", "BoW"),
    "Active": ("UCIe-A", "AIB", "BoW"),
    "TSV": ("UCIe-3D",),
    "uBump": ("UCIe-3D",),
    "HybridBond": ("UCIe-3D",),
})

TABLE_FILES = ("technology.json", "protocols.json", "packages.json", "memory.json", "chiplets_base.json")

DEFAULT_WAFER_DIAMETER_MM = 300.0
DEFAULT_YIELD_ALPHA = 3.0
DEFAULT_INTERPOSER_NODE = 65


# --------------------------------------------------------------------------
# Domain types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NodeData:
    carbon_per_area: float
    design_carbon_per_area: float
    defect_density: float
    wafer_cost: float
    area_scale: float = 1.0
    power_scale: float = 1.0
    freq_scale: float = 1.0

    @property
    def energy_scale(self) -> float:
        return self.power_scale / self.freq_scale


@dataclass(frozen=True)
class ProtocolSpec:
    name: str
    data_rate_per_bump: float  # Gb/s
    efficiency: float
    energy_per_bit: float  # pJ/bit


@dataclass(frozen=True)
class InterconnectSpec:
    name: str
    integration: str  # "2.5D" or "3D"
    bump_pitch: float  # um
    bonding_yield: float
    packaging_carbon_per_area: float
    substrate_cost_per_area: float
    interposer: bool
    protocols: tuple[str, ...]


@dataclass(frozen=True)
class MemorySpec:
    name: str
    bandwidth: float  # GB/s
    cost: float
    read_energy_per_bit: float
    write_energy_per_bit: float


@dataclass(frozen=True)
class OperationalData:
    carbon_intensity: float  # kgCO2e/kWh
    lifetime_years: float
    use_fraction: float
    production_volume: float
    accounting: str = "per_device"
    mode: str = "continuous"
    invocations_per_lifetime: float | None = None


@dataclass(frozen=True)
class BaseEntry:
    """One characterized chiplet at the reference node."""

    array: int
    sram_kb: int
    area_mm2: float
    power_w: float
    freq_ghz: float
    sram_energy_per_bit: float


@dataclass(frozen=True)
class TechTables:
    nodes: Mapping[int, NodeData]
    protocols: Mapping[str, ProtocolSpec]
    interconnects: Mapping[str, InterconnectSpec]
    memories: Mapping[str, MemorySpec]
    operational: OperationalData
    base_specs: tuple[BaseEntry, ...]
    interposer: NodeData
    reference_node: int = 7
    wafer_diameter_mm: float = DEFAULT_WAFER_DIAMETER_MM
    yield_alpha: float = DEFAULT_YIELD_ALPHA
    interposer_node: int = DEFAULT_INTERPOSER_NODE
    max_chiplets: int = 6
    memory_channels: int = 16
    accumulator_bytes: int = 4
    bytes_per_element: int = 1
    substrate_cost_2d: float = 0.005

    def compatible_protocols(self, interconnect: str) -> tuple[str, ...]:
        """Protocols usable with ``interconnect`` given what the tables define."""
        spec = self.interconnects[interconnect]
        return tuple(p for p in spec.protocols if p in self.protocols)

    def interconnects_for(self, integration: str) -> tuple[str, ...]:
        return tuple(name for name, spec in self.interconnects.items()
                     if spec.integration == integration and self.compatible_protocols(name))


@dataclass(frozen=True, order=True)
class ChipletSpec:
    array_rows: int
    array_cols: int
    tech_node: int
    sram_kb: int
    area_mm2: float = field(compare=False)
    power_w: float = field(compare=False)
    freq_ghz: float = field(compare=False)
    sram_energy_per_bit: float = field(compare=False, default=0.1)

    @property
    def id(self) -> str:
        return f"{self.array_rows}-{self.tech_node}-{self.sram_kb}"

    @property
    def compute_power(self) -> float:
        """Relative throughput used to apportion tiles: PEs times clock."""
        return self.array_rows * self.array_cols * self.freq_ghz


# --------------------------------------------------------------------------
# Loading
# --------------------------------------------------------------------------

_POS = {"type": "number", "exclusiveMinimum": 0}
_FRACTION = {"type": "number", "exclusiveMinimum": 0, "maximum": 1}
_COMMENT = {"_comment": {"type": "string"}}


def _obj(props: dict, required: Iterable[str]) -> dict:
    return {"type": "object", "properties": {**_COMMENT, **props},
            "required": list(required), "additionalProperties": False}


_NODE_PROPS = {k: _POS for k in ("carbon_per_area", "design_carbon_per_area", "defect_density",
                                 "wafer_cost", "area_scale", "power_scale", "freq_scale")}

SCHEMAS: dict[str, dict] = {
    "technology.json": _obj({
        "reference_node": {"type": "integer"},
        "wafer_diameter_mm": _POS,
        "yield_alpha": _POS,
        "nodes": {"type": "object",
                  "patternProperties": {"^[0-9]+$": _obj(_NODE_PROPS, ["carbon_per_area", "design_carbon_per_area",
                                                                      "defect_density", "wafer_cost"])},
                  "additionalProperties": False},
        "interposer": _obj({"node": {"type": "integer", "exclusiveMinimum": 0},
                            "carbon_per_area": _POS, "defect_density": _POS, "wafer_cost": _POS},
                           ["carbon_per_area", "defect_density", "wafer_cost"]),
        "operational": _obj({"carbon_intensity": _POS, "lifetime_years": _POS, "use_fraction": _FRACTION,
                             "production_volume": _POS,
                             "accounting": {"enum": ["per_device", "fleet"]},
                             "mode": {"enum": ["continuous", "fixed"]},
                             "invocations_per_lifetime": _POS},
                            ["carbon_intensity", "lifetime_years", "use_fraction", "production_volume"]),
        "system": _obj({"max_chiplets": {"type": "integer", "minimum": 1},
                        "memory_channels": {"type": "integer", "minimum": 1},
                        "accumulator_bytes": {"type": "integer", "minimum": 1},
                        "bytes_per_element": {"type": "integer", "minimum": 1},
                        "substrate_cost_per_area_2d": _POS}, []),
    }, ["nodes", "interposer", "operational"]),
    "protocols.json": _obj({
        "protocols": {"type": "object", "additionalProperties": _obj(
            {"data_rate_per_bump": _POS, "efficiency": _FRACTION, "energy_per_bit": _POS},
            ["data_rate_per_bump", "efficiency", "energy_per_bit"])},
    }, ["protocols"]),
    "packages.json": _obj({
        "interconnects": {"type": "object", "additionalProperties": _obj(
            {"integration": {"enum": ["2.5D", "3D"]}, "bump_pitch": _POS, "bonding_yield": _FRACTION,
             "packaging_carbon_per_area": _POS, "substrate_cost_per_area": _POS,
             "interposer": {"type": "boolean"},
             "protocols": {"type": "array", "items": {"type": "string"}, "uniqueItems": True}},
            ["integration", "bump_pitch", "bonding_yield", "packaging_carbon_per_area",
             "substrate_cost_per_area"])},
    }, ["interconnects"]),
    "memory.json": _obj({
        "memories": {"type": "object", "additionalProperties": _obj(
            {"bandwidth": _POS, "cost": _POS, "read_energy_per_bit": _POS, "write_energy_per_bit": _POS},
            ["bandwidth", "cost", "read_energy_per_bit", "write_energy_per_bit"])},
    }, ["memories"]),
    "chiplets_base.json": _obj({
        "reference_node": {"type": "integer"},
        "entries": {"type": "array", "items": _obj(
            {"array": {"type": "integer"}, "sram_kb": {"type": "integer"}, "area_mm2": _POS,
             "power_w": _POS, "freq_ghz": _POS, "sram_energy_per_bit": _POS},
            ["array", "sram_kb", "area_mm2", "power_w", "freq_ghz", "sram_energy_per_bit"])},
    }, ["entries"]),
}


def default_tables_dir() -> Path:
    return Path(str(resources.files("carbonpath") / "data"))


def resolve_tables_dir(path: str | os.PathLike | None = None) -> Path:
    """Explicit path, then ``CARBONPATH_TABLES``, then the packaged defaults."""
    if path:
        return Path(path)
    env = os.environ.get("CARBONPATH_TABLES")
    if env:
        return Path(env)
    return default_tables_dir()


def _read_json(path: Path) -> Any:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TableError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise TableError(f"{path.name}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _check_schema(name: str, doc: Any) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMAS[name])
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise TableError(f"{name}: {where}: {err.message}")


def load_tables(path: str | os.PathLike | None = None) -> TechTables:
    """Load and validate technology tables.

    ``path`` is either a directory holding the five table files or a single
    JSON bundle whose top-level keys are the file stems (``technology``,
    ``protocols``, ...).  ``None`` falls back to :func:`resolve_tables_dir`.
    """
    root = resolve_tables_dir(path)
    docs: dict[str, Any] = {}
    if root.is_file():
        bundle = _read_json(root)
        if not isinstance(bundle, dict):
            raise TableError(f"{root.name}: bundle must be a JSON object")
        unknown = set(bundle) - {n[:-5] for n in TABLE_FILES} - {"_comment"}
        if unknown:
            raise TableError(f"{root.name}: unknown keys {sorted(unknown)}")
        for name in TABLE_FILES:
            if name[:-5] not in bundle:
                raise TableError(f"{root.name}: missing section '{name[:-5]}'")
            docs[name] = bundle[name[:-5]]
    elif root.is_dir():
        for name in TABLE_FILES:
            docs[name] = _read_json(root / name)
    else:
        raise TableError(f"{root}: no such tables file or directory")
    for name, doc in docs.items():
        _check_schema(name, doc)
    return _build_tables(docs)


def _build_tables(docs: dict[str, Any]) -> TechTables:
    tech = docs["technology.json"]
    nodes = {int(k): NodeData(**{f: v for f, v in d.items() if f != "_comment"})
             for k, d in tech["nodes"].items()}
    missing = [n for n in NODES if n not in nodes]
    if missing:
        raise TableError(f"technology.json: nodes: missing entries for {missing} nm")
    extra = [n for n in nodes if n not in NODES]
    if extra:
        raise TableError(f"technology.json: nodes: {extra} nm not in design space {list(NODES)}")
    ref = tech.get("reference_node", 7)
    r = nodes[ref]
    if (r.area_scale, r.power_scale, r.freq_scale) != (1.0, 1.0, 1.0):
        raise TableError(f"technology.json: nodes/{ref}: reference node scale factors must all be 1")

    ip = dict(tech["interposer"])
    ip.pop("_comment", None)
    interposer_node = ip.pop("node", DEFAULT_INTERPOSER_NODE)
    interposer = NodeData(design_carbon_per_area=0.0, **ip)

    op = {k: v for k, v in tech["operational"].items() if k != "_comment"}
    operational = OperationalData(**op)
    if operational.mode == "fixed" and operational.invocations_per_lifetime is None:
        raise TableError("technology.json: operational: mode 'fixed' requires invocations_per_lifetime")
    system = tech.get("system", {})

    protocols = {name: ProtocolSpec(name, d["data_rate_per_bump"], d["efficiency"], d["energy_per_bit"])
                 for name, d in docs["protocols.json"]["protocols"].items()}
    for name in protocols:
        if name not in PROTOCOLS_25D + PROTOCOLS_3D:
            raise TableError(f"protocols.json: protocols/{name}: unknown protocol")

    interconnects = {}
    for name, d in docs["packages.json"]["interconnects"].items():
        if name not in COMPATIBILITY:
            raise TableError(f"packages.json: interconnects/{name}: unknown interconnect")
        expected = "3D" if name in INTERCONNECTS_3D else "2.5D"
        if d["integration"] != expected:
            raise TableError(f"packages.json: interconnects/{name}: integration must be {expected}")
        listed = tuple(d.get("protocols", [p for p in COMPATIBILITY[name] if p in protocols]))
        for p in listed:
            if p not in COMPATIBILITY[name]:
                raise TableError(f"packages.json: interconnects/{name}: ({name}, {p}) is not a compatible pair")
            if p not in protocols:
                raise TableError(f"packages.json: interconnects/{name}: protocol {p} not defined in protocols.json")
        interconnects[name] = InterconnectSpec(
            name=name, integration=d["integration"], bump_pitch=d["bump_pitch"],
            bonding_yield=d["bonding_yield"], packaging_carbon_per_area=d["packaging_carbon_per_area"],
            substrate_cost_per_area=d["substrate_cost_per_area"], interposer=d.get("interposer", False),
            protocols=listed)

    memories = {name: MemorySpec(name, d["bandwidth"], d["cost"], d["read_energy_per_bit"],
                                 d["write_energy_per_bit"])
                for name, d in docs["memory.json"]["memories"].items()}
    for name in memories:
        if name not in MEMORY_TYPES:
            raise TableError(f"memory.json: memories/{name}: unknown memory type")
    if not memories:
        raise TableError("memory.json: memories: at least one memory type required")

    base_doc = docs["chiplets_base.json"]
    if base_doc.get("reference_node", ref) != ref:
        raise TableError("chiplets_base.json: reference_node differs from technology.json")
    base = tuple(BaseEntry(**{k: v for k, v in e.items() if k != "_comment"}) for e in base_doc["entries"])
    for e in base:
        if e.array not in SRAM_OPTIONS or e.sram_kb not in SRAM_OPTIONS[e.array]:
            raise TableError(f"chiplets_base.json: entry ({e.array}, {e.sram_kb} KB) not in design space")

    return TechTables(
        nodes=MappingProxyType(nodes), protocols=MappingProxyType(protocols),
        interconnects=MappingProxyType(interconnects), memories=MappingProxyType(memories),
        operational=operational, base_specs=base, interposer=interposer, reference_node=ref,
        wafer_diameter_mm=tech.get("wafer_diameter_mm", DEFAULT_WAFER_DIAMETER_MM),
        yield_alpha=tech.get("yield_alpha", DEFAULT_YIELD_ALPHA), interposer_node=interposer_node,
        max_chiplets=system.get("max_chiplets", 6), memory_channels=system.get("memory_channels", 16),
        accumulator_bytes=system.get("accumulator_bytes", 4),
        bytes_per_element=system.get("bytes_per_element", 1),
        substrate_cost_2d=system.get("substrate_cost_per_area_2d", 0.005),
    )


# --------------------------------------------------------------------------
# Catalog
# --------------------------------------------------------------------------

class Catalog:
    """Immutable map from (array size, node, SRAM KB) to a scaled ChipletSpec."""

    def __init__(self, specs: Iterable[ChipletSpec]):
        self._by_key = {(s.array_rows, s.tech_node, s.sram_kb): s for s in specs}
        self._by_id = {s.id: s for s in self._by_key.values()}
        self._entries = tuple(sorted(self._by_key.values()))

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __contains__(self, chiplet_id: str) -> bool:
        return chiplet_id in self._by_id

    @property
    def entries(self) -> tuple[ChipletSpec, ...]:
        return self._entries

    def get(self, chiplet_id: str) -> ChipletSpec:
        try:
            return self._by_id[chiplet_id]
        except KeyError:
            raise DesignSpaceError(f"chiplet {chiplet_id!r} not in catalog") from None

    def lookup(self, array_size: int, node: int, sram_kb: int) -> ChipletSpec:
        return lookup(self, array_size, node, sram_kb)


def scale_entry(base: BaseEntry, node: int, data: NodeData) -> ChipletSpec:
    return ChipletSpec(
        array_rows=base.array, array_cols=base.array, tech_node=node, sram_kb=base.sram_kb,
        area_mm2=base.area_mm2 * data.area_scale,
        power_w=base.power_w * data.power_scale,
        freq_ghz=base.freq_ghz * data.freq_scale,
        sram_energy_per_bit=base.sram_energy_per_bit * data.energy_scale,
    )


def build_catalog(tables: TechTables, base_specs: Iterable[BaseEntry] | None = None) -> Catalog:
    """Scale the reference-node characterizations to every configured node."""
    base = tuple(tables.base_specs if base_specs is None else base_specs)
    have = {(b.array, b.sram_kb) for b in base}
    missing = [(a, s) for a in ARRAY_SIZES for s in SRAM_OPTIONS[a] if (a, s) not in have]
    if missing:
        raise TableError(f"incomplete base set; missing (array, sram_kb): {missing}")
    if len(have) != len(base):
        raise TableError("duplicate (array, sram_kb) entries in base set")
    return Catalog(scale_entry(b, node, tables.nodes[node]) for b in base for node in NODES)


def lookup(catalog: Catalog, array_size: int, node: int, sram_kb: int) -> ChipletSpec:
    if array_size not in SRAM_OPTIONS or node not in NODES or sram_kb not in SRAM_OPTIONS[array_size]:
        raise DesignSpaceError(f"({array_size}, {node} nm, {sram_kb} KB) not in design space")
    try:
        return catalog._by_key[(array_size, node, sram_kb)]
    except KeyError:
        raise DesignSpaceError(f"({array_size}, {node} nm, {sram_kb} KB) missing from catalog") from None


def parse_chiplet_id(chiplet_id: str) -> tuple[int, int, int]:
    """Split the ``A-T-S`` notation, e.g. ``"128-7-1024"``."""
    try:
        a, t, s = (int(x) for x in chiplet_id.split("-"))
    except ValueError:
        raise DesignSpaceError(f"bad chiplet id {chiplet_id!r}; expected A-T-S like 128-7-1024") from None
    return a, t, s


def default_catalog() -> tuple[TechTables, Catalog]:
    tables = load_tables()
    return tables, build_catalog(tables)
