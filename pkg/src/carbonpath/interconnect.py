"""Die-to-die bandwidth, topology, D2D latency, DRAM sharing and system latency."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from carbonpath.errors import InterconnectError
from carbonpath.floorplan import Floorplan, slicing_floorplan
from carbonpath.library import COMPATIBILITY, ProtocolSpec
from carbonpath.mapping import TrafficProfile

INTEGRATIONS = ("2D", "2.5D", "3D", "2.5D+3D")


@dataclass(frozen=True)
class PackageConfig:
    integration: str
    memory: str
    interconnect_25d: str | None = None
    protocol_25d: str | None = None
    interconnect_3d: str | None = None
    protocol_3d: str | None = None

    @property
    def uses_25d(self) -> bool:
        return self.integration in ("2.5D", "2.5D+3D")

    @property
    def uses_3d(self) -> bool:
        return self.integration in ("3D", "2.5D+3D")

    def violations(self) -> list[str]:
        out = []
        if self.integration not in INTEGRATIONS:
            return [f"unknown integration {self.integration!r}"]
        for style, used, ic, proto in (("2.5D", self.uses_25d, self.interconnect_25d, self.protocol_25d),
                                       ("3D", self.uses_3d, self.interconnect_3d, self.protocol_3d)):
            if not used:
                if ic is not None or proto is not None:
                    out.append(f"{style} interconnect/protocol set on a {self.integration} system")
                continue
            if ic is None or proto is None:
                out.append(f"{self.integration} system needs a {style} interconnect and protocol")
                continue
            if proto not in COMPATIBILITY.get(ic, ()):
                out.append(f"({ic}, {proto}) is not a compatible interconnect/protocol pair")
            expected = ("TSV", "uBump", "HybridBond") if style == "3D" else ("RDL", "EMIB", "Passive", "Active")
            if ic not in expected:
                out.append(f"{ic} is not a {style} interconnect")
        return out

    def label(self) -> str:
        parts = [self.integration]
        if self.uses_25d:
            parts.append(f"{self.interconnect_25d}/{self.protocol_25d}")
        if self.uses_3d:
            parts.append(f"{self.interconnect_3d}/{self.protocol_3d}")
        return " ".join(parts)


def bump_count(area_mm2: float, integration: str, pitch_um: float) -> int:
    """Area-array bumps for 3D, edge bumps around a square die otherwise."""
    if pitch_um <= 0:
        raise InterconnectError("bump pitch must be positive")
    area_um2 = area_mm2 * 1e6
    if integration == "3D":
        return math.floor(area_um2 / pitch_um ** 2 + 1e-9)
    return math.floor(4 * math.sqrt(area_um2) / pitch_um + 1e-9)


def d2d_bandwidth(area_mm2: float, protocol: ProtocolSpec, integration: str, pitch_um: float) -> float:
    """Peak die-to-die bandwidth in GB/s."""
    bumps = bump_count(area_mm2, integration, pitch_um)
    if bumps == 0:
        raise InterconnectError(f"no I/O: a {area_mm2:g} mm^2 die has zero bumps at {pitch_um:g} um pitch")
    return protocol.data_rate_per_bump * bumps * protocol.efficiency / 8.0


@dataclass(frozen=True)
class Edge:
    a: int
    b: int
    bandwidth: float  # GB/s
    kind: str  # "lateral" or "vertical"
    protocol: str


@dataclass(frozen=True)
class TopologyGraph:
    n: int
    edges: tuple[Edge, ...]
    destination: int

    def edge(self, a: int, b: int) -> Edge:
        key = (min(a, b), max(a, b))
        for e in self.edges:
            if (e.a, e.b) == key:
                return e
        raise KeyError(key)

    def neighbors(self, node: int) -> list[int]:
        return sorted([e.b for e in self.edges if e.a == node] + [e.a for e in self.edges if e.b == node])

    def distances_to_destination(self) -> list[float]:
        dist = [math.inf] * self.n
        dist[self.destination] = 0
        queue = deque([self.destination])
        while queue:
            u = queue.popleft()
            for v in self.neighbors(u):
                if dist[v] == math.inf:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def route(self, source: int) -> list[int]:
        """Shortest hop path to the destination, preferring lower node ids."""
        dist = self.distances_to_destination()
        if dist[source] == math.inf:
            raise InterconnectError(f"chiplet {source} cannot reach destination {self.destination}")
        path = [source]
        while path[-1] != self.destination:
            here = path[-1]
            path.append(min(v for v in self.neighbors(here) if dist[v] == dist[here] - 1))
        return path


def choose_destination(areas: Sequence[float], stacks: Sequence[Sequence[int]]) -> int:
    """Largest die; ties go to the lower stack position, then the lower index."""
    depth = {c: d for site in stacks for d, c in enumerate(site)}
    return min(range(len(areas)), key=lambda i: (-areas[i], depth.get(i, 0), i))


def build_topology(areas: Sequence[float], stacks: Sequence[Sequence[int]], package: PackageConfig,
                   protocols: dict, interconnects: dict, floorplan: Floorplan | None = None) -> TopologyGraph:
    """Connect site base dies laterally by floorplan contact and stacked dies vertically."""
    n = len(areas)
    edges: list[Edge] = []
    if len(stacks) > 1:
        if floorplan is None:
            floorplan = slicing_floorplan([areas[s[0]] for s in stacks])
        proto = protocols[package.protocol_25d]
        pitch = interconnects[package.interconnect_25d].bump_pitch
        for sa, sb in floorplan.adjacency:
            a, b = stacks[sa][0], stacks[sb][0]
            bw = min(d2d_bandwidth(areas[a], proto, "2.5D", pitch), d2d_bandwidth(areas[b], proto, "2.5D", pitch))
            edges.append(Edge(min(a, b), max(a, b), bw, "lateral", proto.name))
    for site in stacks:
        if len(site) < 2:
            continue
        proto = protocols[package.protocol_3d]
        pitch = interconnects[package.interconnect_3d].bump_pitch
        for lo, hi in zip(site, site[1:]):
            bw = min(d2d_bandwidth(areas[lo], proto, "3D", pitch), d2d_bandwidth(areas[hi], proto, "3D", pitch))
            edges.append(Edge(min(lo, hi), max(lo, hi), bw, "vertical", proto.name))
    topo = TopologyGraph(n, tuple(sorted(edges, key=lambda e: (e.a, e.b))), choose_destination(areas, stacks))
    if any(d == math.inf for d in topo.distances_to_destination()):
        raise InterconnectError("topology is disconnected")
    return topo


@dataclass
class D2DSchedule:
    latency_s: float
    flow_windows: dict[int, tuple[float, float]] = field(default_factory=dict)
    link_bits: dict[tuple[int, int], int] = field(default_factory=dict)


def transfer_seconds(bits: float, bandwidth_gbps: float) -> float:
    return bits / (bandwidth_gbps * 8e9)


def d2d_latency(topology: TopologyGraph, traffic: TrafficProfile) -> D2DSchedule:
    """Route each flow to the destination and serialize flows that share links.

    Flows are scheduled in ascending source id; each one holds every link of
    its path for bits / (bottleneck bandwidth) seconds, starting once all of
    those links are released by earlier flows.
    """
    free_at: dict[tuple[int, int], float] = {}
    sched = D2DSchedule(0.0)
    for (src, dst), bits in sorted(traffic.d2d_bits.items()):
        if dst != topology.destination:
            raise InterconnectError(f"flow {src}->{dst} does not target destination {topology.destination}")
        if bits <= 0 or src == dst:
            continue
        path = topology.route(src)
        hops = [(min(u, v), max(u, v)) for u, v in zip(path, path[1:])]
        bottleneck = min(topology.edge(*h).bandwidth for h in hops)
        start = max(free_at.get(h, 0.0) for h in hops)
        end = start + transfer_seconds(bits, bottleneck)
        for h in hops:
            free_at[h] = end
            sched.link_bits[h] = sched.link_bits.get(h, 0) + bits
        sched.flow_windows[src] = (start, end)
        sched.latency_s = max(sched.latency_s, end)
    return sched


def channel_split(areas: Sequence[float], channels: int) -> list[int]:
    """Whole memory channels per die in proportion to area, at least one each."""
    n = len(areas)
    if n > channels:
        raise InterconnectError(f"insufficient channels: {n} dies share {channels} memory channels")
    total = float(sum(areas))
    ideal = [a / total * channels for a in areas]
    counts = [math.floor(x + 1e-9) for x in ideal]
    for q in sorted(range(n), key=lambda q: (-(ideal[q] - counts[q]), q))[:channels - sum(counts)]:
        counts[q] += 1
    for q in range(n):
        if counts[q] == 0:
            donor = max(range(n), key=lambda r: (counts[r], -r))
            counts[donor] -= 1
            counts[q] = 1
    return counts


def memory_bandwidth_share(areas: Sequence[float], stacks: Sequence[Sequence[int]], memory_bw: float,
                           topology: TopologyGraph | None = None, channels: int = 16) -> list[float]:
    """Effective DRAM bandwidth (GB/s) seen by each die.

    Site base dies split the memory channels by area; a stacked die only sees
    memory through the dies below it, so its bandwidth is capped by every
    vertical link on the way down.
    """
    if memory_bw <= 0:
        raise InterconnectError("memory bandwidth must be positive")
    bw = [0.0] * len(areas)
    if len(stacks) == 1:
        shares = [memory_bw]
    else:
        counts = channel_split([areas[s[0]] for s in stacks], channels)
        shares = [c * memory_bw / channels for c in counts]
    for site, share in zip(stacks, shares):
        bw[site[0]] = share
        chain = share
        for lo, hi in zip(site, site[1:]):
            chain = min(chain, topology.edge(lo, hi).bandwidth)
            bw[hi] = chain
    return bw


def memory_link_bits(stacks: Sequence[Sequence[int]], traffic: TrafficProfile) -> dict[tuple[int, int], int]:
    """Bits that stacked dies move to and from DRAM through the vertical links below them."""
    out: dict[tuple[int, int], int] = {}
    for site in stacks:
        for depth in range(1, len(site)):
            die = site[depth]
            bits = traffic.dram_read_bits[die] + traffic.dram_write_bits[die]
            if not bits:
                continue
            for lo, hi in zip(site[:depth], site[1:depth + 1]):
                key = (min(lo, hi), max(lo, hi))
                out[key] = out.get(key, 0) + bits
    return out


@dataclass(frozen=True)
class LatencyBreakdown:
    compute_s: tuple[float, ...]
    read_s: tuple[float, ...]
    write_s: tuple[float, ...]
    d2d_s: float

    @property
    def compute_read_s(self) -> float:
        return max(c + r for c, r in zip(self.compute_s, self.read_s))

    @property
    def write_max_s(self) -> float:
        return max(self.write_s)

    @property
    def total_s(self) -> float:
        return self.compute_read_s + self.d2d_s + self.write_max_s


def system_latency(compute_s: Sequence[float], traffic: TrafficProfile, bandwidth: Sequence[float],
                   d2d_s: float) -> LatencyBreakdown:
    reads = tuple(transfer_seconds(b, bw) for b, bw in zip(traffic.dram_read_bits, bandwidth))
    writes = tuple(transfer_seconds(b, bw) for b, bw in zip(traffic.dram_write_bits, bandwidth))
    return LatencyBreakdown(tuple(compute_s), reads, writes, d2d_s)
