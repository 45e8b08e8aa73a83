"""GEMM tiling, proportional tile assignment, systolic cycle model and traffic."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from carbonpath.errors import MappingError

DATAFLOWS = ("OS", "WS", "IS")
ASCENDING, DESCENDING = 1, 0


@dataclass(frozen=True)
class WorkloadSpec:
    M: int
    K: int
    N: int
    bytes_per_element: int = 1
    name: str = ""

    def __post_init__(self):
        for dim in ("M", "K", "N", "bytes_per_element"):
            value = getattr(self, dim)
            if not isinstance(value, int) or value < 1:
                raise MappingError(f"workload {dim} must be a positive integer, got {value!r}")

    @property
    def macs(self) -> int:
        return self.M * self.K * self.N


@dataclass(frozen=True, order=True)
class MappingStrategy:
    order: int = DESCENDING  # 1 = ascending compute power, 0 = descending
    dataflow: str = "OS"
    split_k: bool = False

    def __post_init__(self):
        if self.order not in (ASCENDING, DESCENDING):
            raise MappingError(f"assigning order must be 0 or 1, got {self.order!r}")
        if self.dataflow not in DATAFLOWS:
            raise MappingError(f"dataflow must be one of {DATAFLOWS}, got {self.dataflow!r}")

    @property
    def key(self) -> str:
        """Compact label such as ``0-OS-1`` (order, dataflow, split-K)."""
        return f"{self.order}-{self.dataflow}-{int(self.split_k)}"

    @classmethod
    def from_key(cls, key: str) -> "MappingStrategy":
        try:
            order, dataflow, split = key.split("-")
            return cls(int(order), dataflow, bool(int(split)))
        except ValueError:
            raise MappingError(f"bad mapping key {key!r}; expected e.g. 0-OS-1") from None


def all_strategies() -> list[MappingStrategy]:
    return [MappingStrategy(o, d, s) for o in (ASCENDING, DESCENDING) for d in DATAFLOWS for s in (False, True)]


class Tile(NamedTuple):
    i: int
    j: int
    l: int
    m: int
    k: int
    n: int

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.m, self.k, self.n


@dataclass(frozen=True)
class TileSet:
    tiles: tuple[Tile, ...]
    base: tuple[int, int, int]
    counts: tuple[int, int, int]

    @property
    def T(self) -> int:
        return len(self.tiles)


def _split(total: int, base: int) -> list[int]:
    full, rest = divmod(total, base)
    return [base] * full + ([rest] if rest else [])


def base_tile_sizes(wl: WorkloadSpec, split_k: bool, buffer_kb: float) -> tuple[int, int, int]:
    """Largest square-ish tile whose three operands each fit a third of the buffer."""
    if buffer_kb <= 0:
        raise MappingError("buffer size must be positive")
    cap = int(buffer_kb * 1024 // 3 // wl.bytes_per_element)
    side = math.isqrt(cap)
    b_k = min(wl.K, side) if split_k else wl.K
    s = min(cap // b_k, side) if b_k else 0
    if b_k < 1 or s < 1:
        raise MappingError(f"buffer too small: {buffer_kb} KB cannot hold one tile with k={b_k}")
    return min(wl.M, s), b_k, min(wl.N, s)


def tile_workload(wl: WorkloadSpec, strategy: MappingStrategy, buffer_kb: float) -> TileSet:
    """Partition the GEMM into tiles, enumerated row-major over (i, j, l)."""
    b_m, b_k, b_n = base_tile_sizes(wl, strategy.split_k, buffer_kb)
    ms, ks, ns = _split(wl.M, b_m), _split(wl.K, b_k), _split(wl.N, b_n)
    tiles = tuple(Tile(i, j, l, m, k, n)
                  for (i, m), (j, k), (l, n) in itertools.product(enumerate(ms), enumerate(ks), enumerate(ns)))
    return TileSet(tiles, (b_m, b_k, b_n), (len(ms), len(ks), len(ns)))


@dataclass(frozen=True)
class Assignment:
    """Tiles per core, indexed like the input core list."""

    tiles: tuple[tuple[Tile, ...], ...]
    powers: tuple[float, ...]
    sorted_order: tuple[int, ...]

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(t) for t in self.tiles)

    @property
    def T(self) -> int:
        return sum(self.counts)


def proportional_counts(powers: Sequence[float], total: int) -> list[int]:
    """Largest-remainder apportionment; ties go to the earlier position.

    Shares and remainders are compared at 1e-9 resolution so that ties in
    exact arithmetic stay ties despite float rounding.
    """
    psum = float(sum(powers))
    ideal = [p / psum * total for p in powers]
    counts = [math.floor(x + 1e-9) for x in ideal]
    remaining = total - sum(counts)
    by_fraction = sorted(range(len(powers)), key=lambda q: (-round(ideal[q] - counts[q], 9), q))
    for q in by_fraction[:remaining]:
        counts[q] += 1
    return counts


def assign_tiles(tiles: TileSet, powers: Sequence[float], strategy: MappingStrategy) -> Assignment:
    if not powers:
        raise MappingError("at least one core is required")
    if any(p <= 0 for p in powers):
        raise MappingError("core compute powers must be positive")
    idx = sorted(range(len(powers)), key=lambda q: powers[q], reverse=strategy.order == DESCENDING)
    counts = proportional_counts([powers[q] for q in idx], tiles.T)
    per_core: list[tuple[Tile, ...]] = [()] * len(powers)
    start = 0
    for q, c in zip(idx, counts):
        per_core[q] = tiles.tiles[start:start + c]
        start += c
    return Assignment(tuple(per_core), tuple(powers), tuple(idx))


def fold_cycles(rows: int, cols: int, m: int, k: int, n: int, dataflow: str) -> int:
    """Cycles for one tile on a rows x cols array, stall-free."""
    if dataflow == "OS":
        return -(-m // rows) * -(-n // cols) * (k + rows + cols - 2)
    if dataflow == "WS":
        return -(-k // rows) * -(-n // cols) * (rows + m + cols - 1)
    if dataflow == "IS":
        return -(-m // rows) * -(-k // cols) * (rows + n + cols - 1)
    raise MappingError(f"unknown dataflow {dataflow!r}")


def compute_cycles(chiplet, assigned: Sequence[Tile], dataflow: str) -> int:
    rows, cols = chiplet.array_rows, chiplet.array_cols
    shapes = Counter((t.m, t.k, t.n) for t in assigned)
    return sum(c * fold_cycles(rows, cols, m, k, n, dataflow) for (m, k, n), c in shapes.items())


def compute_latency(chiplet, cycles: int) -> float:
    return cycles / (chiplet.freq_ghz * 1e9)


@dataclass
class TrafficProfile:
    dram_read_bits: list[int]
    dram_write_bits: list[int]
    sram_access_bits: list[int]
    mac_ops: list[int]
    d2d_bits: dict[tuple[int, int], int] = field(default_factory=dict)  # (source, destination) -> bits

    @property
    def total_d2d_bits(self) -> int:
        return sum(self.d2d_bits.values())


def derive_traffic(assignment: Assignment, wl: WorkloadSpec, strategy: MappingStrategy, destination: int,
                   accumulator_bytes: int = 4) -> TrafficProfile:
    n_cores = len(assignment.tiles)
    if not 0 <= destination < n_cores:
        raise MappingError(f"destination {destination} not in assignment of {n_cores} chiplets")
    bpe = wl.bytes_per_element
    out_bytes = accumulator_bytes if strategy.split_k else bpe
    reads, writes, sram, macs = [], [], [], []
    d2d: dict[tuple[int, int], int] = {}
    for p, tiles in enumerate(assignment.tiles):
        operand = sum(t.m * t.k + t.k * t.n for t in tiles) * 8 * bpe
        result = sum(t.m * t.n for t in tiles)
        reads.append(operand)
        macs.append(sum(t.m * t.k * t.n for t in tiles))
        sram.append(2 * operand + result * 8 * out_bytes)
        if not strategy.split_k:
            writes.append(result * 8 * bpe)
        else:
            writes.append(wl.M * wl.N * 8 * bpe if p == destination else 0)
            if p != destination and result:
                d2d[(p, destination)] = result * 8 * accumulator_bytes
    return TrafficProfile(reads, writes, sram, macs, d2d)
