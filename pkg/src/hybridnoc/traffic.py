"""Synthetic traffic generators, trace files and trace-to-matrix conversion.

Trace lines read ``<injection_cycle> <src_router> <dst_router> <size_flits>``;
``#`` starts a comment.  The frequently-communicating-pair (FCP) and
many-to-few-to-many (MFM) generators are parameterised reconstructions: the
pair sets, memory placements and rates below are declared defaults.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, IngestionError, TraceParseError
from .selector import TrafficMatrix
from .topology import MeshSpec

KINDS = ("FCP", "MFM", "uniform", "nearest-neighbor", "transpose")
PLACEMENTS = {"FCP": ("side", "center"), "MFM": ("side", "center", "corner")}
SHIPPED_PATTERNS = ("FCP-side", "FCP-center", "MFM-side", "MFM-center", "MFM-corner")


@dataclass(frozen=True, slots=True)
class Packet:
    id: int
    cycle: int
    src: int
    dst: int
    size: int = 1


@dataclass(frozen=True)
class PatternSpec:
    """A synthetic pattern.

    ``rate`` is a per-source injection rate in flits per cycle.  For uniform,
    nearest-neighbour and transpose traffic every sender uses it.  FCP flows
    run at ``rate`` along each direction of ``count`` pairs, while a light uniform
    background brings their share of the volume to ``fraction``.  MFM uses it as
    the request probability of each non-memory node; each request draws a
    ``reply_size``-flit reply from one of ``count`` memory nodes.
    """

    kind: str = "uniform"
    placement: str | None = None
    count: int = 4
    rate: float = 0.1
    duration: int = 2000
    seed: int = 1
    fraction: float = 0.9
    packet_size: int = 1
    request_size: int = 1
    reply_size: int = 4
    service_delay: int = 10

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown pattern kind {self.kind!r}")
        allowed = PLACEMENTS.get(self.kind, (None,))
        if self.placement not in allowed:
            raise ConfigurationError(f"placement {self.placement!r} invalid for {self.kind}")
        if not 0 <= self.rate <= 1:
            raise ConfigurationError(f"injection rate {self.rate} not in [0, 1]")
        if self.duration < 0 or self.count < 1 or self.service_delay < 0:
            raise ConfigurationError("duration, count and service delay must be non-negative")
        if min(self.packet_size, self.request_size, self.reply_size) < 1:
            raise ConfigurationError("packet sizes must be at least one flit")
        if not 0 <= self.fraction <= 1:
            raise ConfigurationError("FCP fraction must lie in [0, 1]")

    @property
    def name(self) -> str:
        return f"{self.kind}-{self.placement}" if self.placement else self.kind

    @classmethod
    def named(cls, name: str, **overrides) -> "PatternSpec":
        """Build from a name such as ``FCP-center`` or ``transpose``."""
        kind, _, placement = name.partition("-")
        if kind not in PLACEMENTS:
            kind, placement = name, ""
        defaults = {"rate": 0.01} if kind == "MFM" else {}
        return cls(kind=kind, placement=placement or None, **{**defaults, **overrides})


@dataclass
class Trace:
    packets: list
    routers: int | None = None
    counters: np.ndarray | None = None  # generator-side flits per (src, dst)

    @property
    def flits(self) -> int:
        return sum(p.size for p in self.packets)

    def to_text(self, header: str | None = None) -> str:
        lines = [f"# {h}" for h in (header or "").splitlines()]
        lines += [f"{p.cycle} {p.src} {p.dst} {p.size}" for p in self.packets]
        return "\n".join(lines) + "\n" if lines else ""

    def write(self, path: str | Path, header: str | None = None):
        Path(path).write_text(self.to_text(header))


def parse_trace(text: str, routers: int | None = None, allow_loopback: bool = False) -> Trace:
    """Parse trace text; every non-comment line yields a packet or a located error."""
    packets = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 4:
            raise TraceParseError(f"expected 4 fields, got {len(fields)}: {raw!r}", lineno)
        try:
            cycle, src, dst, size = (int(f) for f in fields)
        except ValueError:
            raise TraceParseError(f"non-integer field in {raw!r}", lineno) from None
        if cycle < 0 or src < 0 or dst < 0:
            raise TraceParseError("cycle and router ids must be non-negative", lineno)
        if size < 1:
            raise TraceParseError(f"packet size {size} < 1", lineno)
        if src == dst and not allow_loopback:
            raise TraceParseError(f"loopback packet {src}->{dst}", lineno)
        if routers is not None and max(src, dst) >= routers:
            raise IngestionError(f"line {lineno}: router {max(src, dst)} not in mesh of {routers}")
        packets.append(Packet(len(packets), cycle, src, dst, size))
    packets.sort(key=lambda p: (p.cycle, p.id))
    packets = [Packet(i, p.cycle, p.src, p.dst, p.size) for i, p in enumerate(packets)]
    return Trace(packets, routers)


def read_trace(path: str | Path, routers: int | None = None) -> Trace:
    return parse_trace(Path(path).read_text(), routers)


def trace_to_matrix(trace: Trace, routers: int | None = None) -> TrafficMatrix:
    n = routers or trace.routers
    if n is None:
        raise ConfigurationError("router count unknown for trace conversion")
    v = np.zeros((n, n), dtype=np.int64)
    for p in trace.packets:
        if max(p.src, p.dst) >= n:
            raise IngestionError(f"packet {p.id} references router outside mesh of {n}")
        if p.src != p.dst:
            v[p.src, p.dst] += p.size
    return TrafficMatrix(v)


def fcp_pairs(mesh: MeshSpec, placement: str, count: int) -> list[tuple[int, int]]:
    """Long-range endpoint pairs; each pair communicates in both directions."""
    w, h = mesh.width, mesh.height
    if placement == "side":
        if count > h:
            raise ConfigurationError(f"FCP-side supports at most {h} pairs on this mesh")
        # left edge to right edge along the same row: XY flows never share a link
        rows = np.linspace(0, h - 1, count).round().astype(int) if count > 1 else [h // 2]
        return [(mesh.router_id(0, int(y)), mesh.router_id(w - 1, int(y))) for y in rows]
    # centre quad paired with the diagonally opposite corners
    cx, cy = (w - 1) // 2, (h - 1) // 2
    quad = [(cx, cy, w - 1, h - 1), (cx + 1, cy, 0, h - 1),
            (cx, cy + 1, w - 1, 0), (cx + 1, cy + 1, 0, 0)]
    if count > len(quad) or w < 4 or h < 4:
        raise ConfigurationError("FCP-center needs a mesh of at least 4x4 and at most 4 pairs")
    return [(mesh.router_id(a, b), mesh.router_id(c, d)) for a, b, c, d in quad[:count]]


def memory_nodes(mesh: MeshSpec, placement: str, count: int) -> list[int]:
    w, h = mesh.width, mesh.height
    if count >= mesh.routers:
        raise ConfigurationError("memory node count must leave at least one requester")
    if placement == "corner":
        corners = [0, w - 1, mesh.router_id(0, h - 1), mesh.router_id(w - 1, h - 1)]
        if count > 4:
            raise ConfigurationError("MFM-corner supports at most 4 memory nodes")
        return sorted(corners[:count])
    if placement == "side":
        if count > h:
            raise ConfigurationError(f"MFM-side supports at most {h} memory nodes")
        start = (h - count) // 2
        return [mesh.router_id(0, y) for y in range(start, start + count)]
    # nearest to the geometric centre, ties by router id
    centre = ((w - 1) / 2, (h - 1) / 2)
    order = sorted(range(mesh.routers),
                   key=lambda r: (abs(mesh.coords(r)[0] - centre[0])
                                  + abs(mesh.coords(r)[1] - centre[1]), r))
    return sorted(order[:count])


def _uniform_dest(rng, src: np.ndarray, n: int) -> np.ndarray:
    d = rng.integers(0, n - 1, size=len(src))
    return d + (d >= src)


def _bernoulli_events(rng, duration: int, sources: np.ndarray, prob: float):
    """(cycle, source) pairs of a per-cycle Bernoulli process, in cycle-major order."""
    if prob <= 0 or duration == 0 or not len(sources):
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    hits = rng.random((duration, len(sources))) < prob
    cyc, idx = np.nonzero(hits)
    return cyc.astype(np.int64), sources[idx]


def generate(spec: PatternSpec, mesh: MeshSpec = MeshSpec()) -> Trace:
    """Seeded synthetic trace with generator-side per-pair flit counters."""
    n = mesh.routers
    rng = np.random.default_rng(spec.seed)
    rows: list[tuple[int, int, int, int]] = []  # cycle, src, dst, size
    nodes = np.arange(n)

    if spec.kind == "uniform":
        cyc, src = _bernoulli_events(rng, spec.duration, nodes, spec.rate / spec.packet_size)
        dst = _uniform_dest(rng, src, n)
        rows += [(c, s, d, spec.packet_size) for c, s, d in zip(cyc, src, dst)]
    elif spec.kind == "nearest-neighbor":
        cyc, src = _bernoulli_events(rng, spec.duration, nodes, spec.rate / spec.packet_size)
        picks = rng.random(len(src))
        for c, s, u in zip(cyc, src, picks):
            nbs = mesh.neighbors(int(s))
            rows.append((c, s, nbs[int(u * len(nbs))], spec.packet_size))
    elif spec.kind == "transpose":
        if mesh.width != mesh.height:
            raise ConfigurationError("transpose needs a square mesh")
        senders = np.array([r for r in nodes if mesh.coords(r)[0] != mesh.coords(r)[1]])
        cyc, src = _bernoulli_events(rng, spec.duration, senders, spec.rate / spec.packet_size)
        for c, s in zip(cyc, src):
            x, y = mesh.coords(int(s))
            rows.append((c, s, mesh.router_id(y, x), spec.packet_size))
    elif spec.kind == "FCP":
        pairs = fcp_pairs(mesh, spec.placement, spec.count)
        flows = [(a, b) for a, b in pairs] + [(b, a) for a, b in pairs]
        per_flow = spec.rate / spec.packet_size
        for a, b in flows:
            cyc, _ = _bernoulli_events(rng, spec.duration, np.array([a]), per_flow)
            rows += [(c, a, b, spec.packet_size) for c in cyc]
        # background sized so the pairs carry ``fraction`` of the expected volume
        if spec.fraction:
            background = per_flow * len(flows) * (1 - spec.fraction) / spec.fraction / n
        else:
            background = spec.rate
        cyc, src = _bernoulli_events(rng, spec.duration, nodes, min(background, 1.0))
        dst = _uniform_dest(rng, src, n)
        rows += [(c, s, d, spec.packet_size) for c, s, d in zip(cyc, src, dst)]
    else:  # MFM
        mem = memory_nodes(mesh, spec.placement, spec.count)
        requesters = np.array([r for r in nodes if r not in mem])
        cyc, src = _bernoulli_events(rng, spec.duration, requesters, spec.rate)
        targets = np.array(mem)[rng.integers(0, len(mem), size=len(src))]
        for c, s, m in zip(cyc, src, targets):
            rows.append((c, s, m, spec.request_size))
            rows.append((c + spec.service_delay, m, s, spec.reply_size))

    rows.sort()
    counters = np.zeros((n, n), dtype=np.int64)
    packets = []
    for i, (c, s, d, size) in enumerate(rows):
        packets.append(Packet(i, int(c), int(s), int(d), int(size)))
        counters[s, d] += size
    return Trace(packets, n, counters)


def few_phase_destinations(trace: Trace, mesh: MeshSpec, spec: PatternSpec) -> dict[int, int]:
    """Histogram of request destinations for an MFM trace (requests only)."""
    mem = set(memory_nodes(mesh, spec.placement, spec.count))
    hist: dict[int, int] = {}
    for p in trace.packets:
        if p.src not in mem:
            hist[p.dst] = hist.get(p.dst, 0) + 1
    return hist


__all__ = [
    "KINDS", "Packet", "PatternSpec", "SHIPPED_PATTERNS", "Trace", "fcp_pairs",
    "few_phase_destinations", "generate", "memory_nodes", "parse_trace", "read_trace",
    "trace_to_matrix",
]
