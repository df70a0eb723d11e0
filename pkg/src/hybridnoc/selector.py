"""Greedy selection of logical links and hybrid-graph routing tables.

Latency is estimated analytically as the volume-weighted shortest-path cost
over the hybrid graph: mesh hops cost ``hop_cycles`` and a logical link costs
``ingress + photonic + egress`` cycles.  By default a route may use at most
one logical link, which keeps the regular / photonic-outbound /
photonic-inbound virtual channel classes strictly ordered along every path.
"""

from __future__ import annotations

import csv
import heapq
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import ConfigurationError, TraceParseError, UndefinedLatencyError
from .topology import Direction, LogicalLinkCandidate, MeshSpec, SnakeLayout, candidates

MESH, PHOTONIC = "mesh", "photonic"


@dataclass
class TrafficMatrix:
    volume: np.ndarray  # int64 [src, dst], flits

    def __post_init__(self):
        self.volume = np.asarray(self.volume, dtype=np.int64)
        v = self.volume
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ConfigurationError("traffic matrix must be square")
        if (v < 0).any():
            raise ConfigurationError("traffic volumes must be non-negative")
        if np.diagonal(v).any():
            raise ConfigurationError("traffic matrix diagonal must be zero")

    @classmethod
    def zeros(cls, n: int) -> "TrafficMatrix":
        return cls(np.zeros((n, n), dtype=np.int64))

    @classmethod
    def from_pairs(cls, n: int, pairs) -> "TrafficMatrix":
        v = np.zeros((n, n), dtype=np.int64)
        for s, d, vol in pairs:
            v[s, d] += vol
        return cls(v)

    @property
    def size(self) -> int:
        return self.volume.shape[0]

    @property
    def total(self) -> int:
        return int(self.volume.sum())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("src", "dst", "volume"))
        for s, d in zip(*np.nonzero(self.volume)):
            w.writerow((int(s), int(d), int(self.volume[s, d])))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, n: int) -> "TrafficMatrix":
        v = np.zeros((n, n), dtype=np.int64)
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#") or line.replace(" ", "") == "src,dst,volume":
                continue
            parts = [p.strip() for p in line.split(",")]
            try:
                s, d, vol = (int(p) for p in parts)
            except ValueError:
                raise TraceParseError(f"expected 'src,dst,volume', got {raw!r}", lineno) from None
            if not (0 <= s < n and 0 <= d < n) or vol < 0 or s == d:
                raise TraceParseError(f"invalid matrix entry {raw!r}", lineno)
            v[s, d] += vol
        return cls(v)


@dataclass(frozen=True)
class SelectionConstraints:
    total_links: int = 32  # E_tot, per waveguide direction
    node_links: int = 4  # E_node, outgoing and incoming per router
    snakes: int = 1

    def __post_init__(self):
        if self.total_links < 0 or self.node_links < 1 or self.snakes < 1:
            raise ConfigurationError("link budgets must be positive")
        if self.total_links % self.snakes:
            raise ConfigurationError(f"E_tot={self.total_links} not divisible by K={self.snakes}")

    @property
    def snake_links(self) -> int:
        return self.total_links // self.snakes


@dataclass(frozen=True)
class HybridCosts:
    hop_cycles: int = 1
    ingress_cycles: int = 1
    photonic_cycles: int = 1
    egress_cycles: int = 1
    single_photonic: bool = True

    @property
    def photonic_edge(self) -> int:
        return self.ingress_cycles + self.photonic_cycles + self.egress_cycles


def mesh_costs(mesh: MeshSpec, hop_cycles: int = 1) -> np.ndarray:
    xs = np.arange(mesh.routers) % mesh.width
    ys = np.arange(mesh.routers) // mesh.width
    return (np.abs(xs[:, None] - xs[None, :]) + np.abs(ys[:, None] - ys[None, :])) * hop_cycles


def weighted_latency(costs: np.ndarray, traffic: TrafficMatrix) -> float:
    total = traffic.total
    if total == 0:
        raise UndefinedLatencyError("traffic matrix carries no volume")
    return float((traffic.volume * costs).sum()) / total


def base_latency(mesh: MeshSpec, traffic: TrafficMatrix, hop_cycles: int = 1) -> float:
    """Volume-weighted Manhattan hop latency of the plain mesh."""
    return weighted_latency(mesh_costs(mesh, hop_cycles), traffic)


def hybrid_costs(mesh: MeshSpec, links, costs: HybridCosts = HybridCosts()) -> np.ndarray:
    """All-pairs path cost with the given active links."""
    m = mesh_costs(mesh, costs.hop_cycles)
    if not links:
        return m
    pe = costs.photonic_edge
    if costs.single_photonic:
        c = m.copy()
        for link in links:
            np.minimum(c, m[:, [link.source]] + pe + m[[link.destination], :], out=c)
        return c
    n = mesh.routers
    rows, cols, w = [], [], []
    for r in range(n):
        for nb in mesh.neighbors(r):
            rows.append(r), cols.append(nb), w.append(costs.hop_cycles)
    for link in links:
        rows.append(link.source), cols.append(link.destination), w.append(pe)
    graph = csr_matrix((w, (rows, cols)), shape=(n, n))
    # duplicate (src, dst) entries would be summed by csr; keep the cheapest
    graph.sum_duplicates()
    dist = shortest_path(graph, method="D", directed=True)
    return np.rint(dist).astype(np.int64)


def _gain_volumes(mesh, traffic, current, cand_src, cand_dst, costs, chunk=1 << 22):
    """Integer volume-weighted cost reduction of adding each candidate alone."""
    s, d = np.nonzero(traffic.volume)
    vol = traffic.volume[s, d]
    cur = current[s, d]
    m = mesh_costs(mesh, costs.hop_cycles)
    out = np.zeros(len(cand_src), dtype=np.int64)
    if not len(s):
        return out
    step = max(1, chunk // len(s))
    for i in range(0, len(cand_src), step):
        a = cand_src[i:i + step]
        b = cand_dst[i:i + step]
        via = m[np.ix_(s, a)] + costs.photonic_edge + m[np.ix_(b, d)].T
        out[i:i + step] = (np.maximum(cur[:, None] - via, 0) * vol[:, None]).sum(axis=0)
    return out


def marginal_gain(candidate: LogicalLinkCandidate, active, traffic: TrafficMatrix,
                  layout: SnakeLayout, costs: HybridCosts = HybridCosts()) -> float:
    """Reduction in weighted latency from activating ``candidate`` on top of ``active``."""
    if candidate in active:
        raise ConfigurationError("candidate is already active")
    total = traffic.total
    if total == 0:
        return 0.0
    mesh = layout.mesh
    before = hybrid_costs(mesh, list(active), costs)
    after = hybrid_costs(mesh, list(active) + [candidate], costs)
    return float((traffic.volume * (before - after)).sum()) / total


@dataclass
class SelectionStep:
    step: int
    candidate: LogicalLinkCandidate
    gain: float  # weighted-latency reduction, cycles
    gain_volume: int  # flit-cycles
    accepted: bool
    reason: str = ""


@dataclass
class LinkSelection:
    layout: SnakeLayout
    constraints: SelectionConstraints
    costs: HybridCosts
    active: list = field(default_factory=list)
    log: list = field(default_factory=list)
    base: float | None = None
    final: float | None = None

    def usage(self):
        per_dir, per_snake, out_n, in_n = {}, {}, {}, {}
        for c in self.active:
            per_dir[c.direction] = per_dir.get(c.direction, 0) + 1
            key = (c.snake, c.direction)
            per_snake[key] = per_snake.get(key, 0) + 1
            out_n[c.source] = out_n.get(c.source, 0) + 1
            in_n[c.destination] = in_n.get(c.destination, 0) + 1
        return per_dir, per_snake, out_n, in_n

    def check_constraints(self):
        per_dir, per_snake, out_n, in_n = self.usage()
        cons = self.constraints
        assert all(v <= cons.total_links for v in per_dir.values()), per_dir
        assert all(v <= cons.snake_links for v in per_snake.values()), per_snake
        assert all(v <= cons.node_links for v in out_n.values()), out_n
        assert all(v <= cons.node_links for v in in_n.values()), in_n

    def to_dict(self) -> dict:
        def link(c):
            return {"snake": c.snake, "source": c.source, "destination": c.destination,
                    "direction": c.direction.value}
        return {
            "K": self.layout.snakes_count,
            "S": self.layout.stride,
            "constraints": {"E_tot": self.constraints.total_links,
                            "E_node": self.constraints.node_links,
                            "E_snake": self.constraints.snake_links},
            "base_latency": self.base,
            "final_latency": self.final,
            "activated": [link(c) for c in self.active],
            "log": [
                {"step": s.step, **link(s.candidate), "gain": s.gain,
                 "accepted": s.accepted, "reason": s.reason}
                for s in self.log
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


class _Usage:
    def __init__(self):
        self.per_dir, self.per_snake, self.out_n, self.in_n = {}, {}, {}, {}

    def add(self, c):
        for table, key in ((self.per_dir, c.direction), (self.per_snake, (c.snake, c.direction)),
                           (self.out_n, c.source), (self.in_n, c.destination)):
            table[key] = table.get(key, 0) + 1


def _feasible(c, cons, u: _Usage) -> str:
    if u.per_dir.get(c.direction, 0) >= cons.total_links:
        return "E_tot"
    if u.per_snake.get((c.snake, c.direction), 0) >= cons.snake_links:
        return "E_snake"
    if u.out_n.get(c.source, 0) >= cons.node_links:
        return "E_node(out)"
    if u.in_n.get(c.destination, 0) >= cons.node_links:
        return "E_node(in)"
    return ""


def select(layout: SnakeLayout, traffic: TrafficMatrix,
           constraints: SelectionConstraints | None = None,
           costs: HybridCosts = HybridCosts(), lazy: bool | None = None) -> LinkSelection:
    """Greedy link activation in decreasing order of latency contribution.

    Each iteration takes the best remaining candidate (largest gain, then
    lowest (snake, source, destination)), activates it if the budgets allow,
    and re-scores every remaining candidate against the new topology.
    Candidates with no positive gain are never activated.  ``lazy`` picks
    the heap-based evaluation order (default: on for single-link routes,
    where it is exact); both orders produce the same selection.
    """
    cons = constraints or SelectionConstraints(snakes=layout.snakes_count)
    if cons.snakes != layout.snakes_count:
        raise ConfigurationError("constraints were built for a different snake count")
    mesh = layout.mesh
    sel = LinkSelection(layout, cons, costs)
    if traffic.size != mesh.routers:
        raise ConfigurationError("traffic matrix does not match the mesh size")
    if traffic.total == 0:
        return sel
    sel.base = base_latency(mesh, traffic, costs.hop_cycles)
    pool = candidates(layout)  # already in tie-break order
    state = _Usage()
    total = traffic.total
    if lazy is None:
        lazy = costs.single_photonic
    if lazy and not costs.single_photonic:
        raise ConfigurationError("lazy evaluation requires single-link routes")
    pick = _lazy_picks if lazy else _eager_picks
    for cand, g in pick(mesh, traffic, pool, sel.active, costs):
        reason = _feasible(cand, cons, state)
        sel.log.append(SelectionStep(len(sel.log) + 1, cand, g / total, g, not reason, reason))
        if not reason:
            sel.active.append(cand)
            state.add(cand)
    sel.final = weighted_latency(hybrid_costs(mesh, sel.active, costs), traffic)
    return sel


def _lazy_picks(mesh, traffic, pool, active, costs):
    """Yield (candidate, gain) in greedy order for single-link routes.

    Activating a link can only lower current path costs, so every remaining
    gain is non-increasing over the run.  Stale gains are therefore upper
    bounds and a candidate whose refreshed gain still heads the heap is the
    exact argmax under the (gain desc, key asc) order.
    """
    current = mesh_costs(mesh, costs.hop_cycles)
    src = np.array([c.source for c in pool], dtype=np.int64)
    dst = np.array([c.destination for c in pool], dtype=np.int64)
    gains = _gain_volumes(mesh, traffic, current, src, dst, costs)
    heap = [(-int(g), c.key, i, 0) for i, (c, g) in enumerate(zip(pool, gains)) if g > 0]
    heapq.heapify(heap)
    epoch = 0
    n_active = len(active)
    while heap:
        neg, key, i, seen = heapq.heappop(heap)
        if len(active) != n_active:
            n_active = len(active)
            current = hybrid_costs(mesh, active, costs)
            epoch += 1
        if seen != epoch:
            g = int(_gain_volumes(mesh, traffic, current, src[i:i + 1], dst[i:i + 1], costs)[0])
            if g > 0:
                heapq.heappush(heap, (-g, key, i, epoch))
            continue
        yield pool[i], -neg


def _eager_picks(mesh, traffic, pool, active, costs):
    remaining = list(pool)
    while remaining:
        before = int((traffic.volume * hybrid_costs(mesh, active, costs)).sum())
        gains = [before - int((traffic.volume * hybrid_costs(mesh, active + [c], costs)).sum())
                 for c in remaining]
        best = int(np.argmax(gains))  # first maximum keeps key order on ties
        if gains[best] <= 0:
            return
        yield remaining.pop(best), gains[best]


@dataclass
class RoutingTables:
    """Routes over the hybrid graph.

    ``cost[s, d]`` is the path cost in cycles; ``route_link[s, d]`` is the index
    into ``links`` of the logical link used by the route from ``s`` (or -1);
    ``next_hop[d][n]`` is ``(kind, router)`` for the first hop of ``n``'s route.
    """

    mesh: MeshSpec
    links: list
    costs: HybridCosts
    cost: np.ndarray
    route_link: np.ndarray
    next_hop: list = field(default_factory=list)

    def path(self, src: int, dst: int) -> list[tuple[str, int, int]]:
        """Hops ``(kind, from, to)`` from ``src`` to ``dst``."""
        mesh = self.mesh
        if self.costs.single_photonic:
            li = int(self.route_link[src, dst])
            if li < 0:
                nodes = mesh.xy_path(src, dst)
                return [(MESH, a, b) for a, b in zip(nodes, nodes[1:])]
            link = self.links[li]
            head = mesh.xy_path(src, link.source)
            tail = mesh.xy_path(link.destination, dst)
            return ([(MESH, a, b) for a, b in zip(head, head[1:])]
                    + [(PHOTONIC, link.source, link.destination)]
                    + [(MESH, a, b) for a, b in zip(tail, tail[1:])])
        hops, node = [], src
        while node != dst:
            kind, nxt = self.next_hop[dst][node]
            hops.append((kind, node, nxt))
            node = nxt
        return hops

    def path_cost(self, src: int, dst: int) -> int:
        pe, hc = self.costs.photonic_edge, self.costs.hop_cycles
        return sum(pe if k == PHOTONIC else hc for k, _, _ in self.path(src, dst))

    def link_index(self, source: int, destination: int) -> int:
        for i, link in enumerate(self.links):
            if link.source == source and link.destination == destination:
                return i
        raise KeyError((source, destination))

    def to_dict(self) -> dict:
        n = self.mesh.routers
        return {
            "routers": n,
            "links": [[l.source, l.destination] for l in self.links],
            "next_hop": [[list(self.next_hop[d][r]) if r != d else None for r in range(n)]
                         for d in range(n)],
        }


def routing_tables(layout: SnakeLayout, selection: LinkSelection | list | None = None,
                   costs: HybridCosts | None = None) -> RoutingTables:
    """Shortest paths over the hybrid graph with XY electrical segments.

    A logical link is used only when it strictly lowers the path cost; among
    equally good links the earliest in (snake, source, destination) order wins.
    """
    if isinstance(selection, LinkSelection):
        links, costs = list(selection.active), costs or selection.costs
    else:
        links, costs = list(selection or []), costs or HybridCosts()
    links.sort(key=lambda c: c.key)
    mesh = layout.mesh
    n = mesh.routers
    m = mesh_costs(mesh, costs.hop_cycles)
    cost = hybrid_costs(mesh, links, costs)
    route_link = np.full((n, n), -1, dtype=np.int64)
    pe = costs.photonic_edge
    if costs.single_photonic:
        best = m.copy()
        for i, link in enumerate(links):
            via = m[:, [link.source]] + pe + m[[link.destination], :]
            better = via < best
            route_link[better] = i
            np.minimum(best, via, out=best)
    tables = RoutingTables(mesh, links, costs, cost, route_link)
    tables.next_hop = [_next_hops_to(tables, d) for d in range(n)]
    return tables


def _next_hops_to(tables: RoutingTables, dst: int) -> list:
    mesh, costs = tables.mesh, tables.costs
    out = [None] * mesh.routers
    if costs.single_photonic:
        for r in range(mesh.routers):
            if r != dst:
                kind, _, nxt = tables.path(r, dst)[0]
                out[r] = (kind, nxt)
        return out
    # multi-link routes: descend the cost field, XY neighbour first, then
    # other neighbours, then logical links in key order
    cost, hc, pe = tables.cost, costs.hop_cycles, costs.photonic_edge
    for r in range(mesh.routers):
        if r == dst:
            continue
        choices = [(MESH, mesh.xy_next(r, dst))]
        choices += [(MESH, nb) for nb in mesh.neighbors(r)]
        choices += [(PHOTONIC, l.destination) for l in tables.links if l.source == r]
        for kind, nxt in choices:
            edge = pe if kind == PHOTONIC else hc
            if cost[r, dst] == edge + cost[nxt, dst]:
                if kind == MESH and nxt not in mesh.neighbors(r):
                    continue
                out[r] = (kind, nxt)
                break
    return out


def next_hop_is_dag(tables: RoutingTables) -> bool:
    """True if every per-destination next-hop graph reaches its root without cycles."""
    n = tables.mesh.routers
    for d in range(n):
        for r in range(n):
            seen, node = set(), r
            while node != d:
                if node in seen:
                    return False
                seen.add(node)
                node = tables.next_hop[d][node][1]
    return True


def load_traffic_csv(path: str | Path, n: int) -> TrafficMatrix:
    return TrafficMatrix.from_csv(Path(path).read_text(), n)


__all__ = [
    "Direction", "HybridCosts", "LinkSelection", "RoutingTables", "SelectionConstraints",
    "SelectionStep", "TrafficMatrix", "base_latency", "hybrid_costs", "marginal_gain",
    "mesh_costs", "next_hop_is_dag", "routing_tables", "select", "weighted_latency",
]
