"""Trace-driven cycle-level simulator of the hybrid mesh.

Router model: single stage per hop (VC allocation and switch traversal in one
cycle), credit-based wormhole flow control, and four VCs per input port with
fixed roles:

* VC0, VC1: regular mesh traffic
* VC2: staging for flits whose next hop is a logical link (add-on crossbar)
* VC3: flits that already crossed a logical link

Each incoming logical link gets its own VC3 lane on the local input port.
A flit granted at cycle ``t`` is usable downstream at ``t + latency``; ejection
adds one cycle.  VC allocation is non-atomic: a VC is locked to one packet
from its head to its tail entering, so packets queue back to back without
interleaving.  Each cycle first computes every grant from the state at the
start of the cycle, then commits them, so router order never matters.
"""

from __future__ import annotations

import csv
import io
import json
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigurationError, IngestionError, LivelockError
from .selector import MESH, PHOTONIC, RoutingTables
from .topology import MeshSpec
from .traffic import Trace

LOCAL, NORTH, EAST, SOUTH, WEST = range(5)
OPPOSITE = {NORTH: SOUTH, SOUTH: NORTH, EAST: WEST, WEST: EAST}
REGULAR, OUTBOUND, INBOUND = "regular", "outbound", "inbound"
MAX_LINKS_PER_ROUTER = 4


@dataclass(frozen=True)
class SimConfig:
    clock: float = 1e9
    hop_cycles: int = 1
    ingress_cycles: int = 1
    photonic_cycles: int = 1
    egress_cycles: int = 1
    ejection_cycles: int = 1
    flit_bits: int = 128
    vc_depth: int = 4
    link_length_mm: float = 2.5
    warmup: int = 0  # packets injected before this cycle are excluded from latency stats
    cycle_ceiling: int | None = None  # default: last injection + 200000
    seed: int | None = None  # no stochastic choices are made

    def __post_init__(self):
        counts = (self.hop_cycles, self.ingress_cycles, self.photonic_cycles,
                  self.egress_cycles, self.ejection_cycles, self.flit_bits, self.vc_depth)
        if min(counts) < 1:
            raise ConfigurationError("cycle counts, flit size and VC depth must be positive")
        if self.clock <= 0 or self.warmup < 0:
            raise ConfigurationError("clock must be positive and warmup non-negative")

    @property
    def photonic_edge_cycles(self) -> int:
        return self.ingress_cycles + self.photonic_cycles + self.egress_cycles


@dataclass(frozen=True)
class Request:
    port: int
    vc: int
    output: tuple  # ("main", out_port) or ("addon", link_slot)


class ArbiterState:
    """Round-robin pointers of one hybrid router."""

    def __init__(self, ports: int = 5, outputs: int = 5, addon_outputs: int = MAX_LINKS_PER_ROUTER):
        self.input_ptr = [0] * ports
        self.output_ptr = [0] * outputs
        self.addon_ptr = [0] * addon_outputs


def _rr_pick(options, pointer: int, modulo: int):
    return min(options, key=lambda o: (o - pointer) % modulo)


def contention_arbitration(state: ArbiterState, requests, vcs_per_port: int = 8) -> list[Request]:
    """Separable round-robin allocation for the main and add-on crossbars.

    Main crossbar: each input port grants one of its requesting VCs, then
    each output grants one of the surviving input ports.  Add-on requests
    are arbitrated independently per link output, so an input port can win
    both crossbars in the same cycle.
    """
    grants = []
    main: dict[int, dict[int, Request]] = {}
    addon: dict[int, dict[int, Request]] = {}
    for req in requests:
        kind, out = req.output
        if kind == "main":
            main.setdefault(req.port, {})[req.vc] = req
        else:
            addon.setdefault(out, {})[req.port] = req
    nports = len(state.input_ptr)
    contenders: dict[int, dict[int, Request]] = {}
    for port in sorted(main):
        vc = _rr_pick(main[port], state.input_ptr[port], vcs_per_port)
        req = main[port][vc]
        contenders.setdefault(req.output[1], {})[port] = req
    for out in sorted(contenders):
        port = _rr_pick(contenders[out], state.output_ptr[out], nports)
        req = contenders[out][port]
        state.output_ptr[out] = (port + 1) % nports
        state.input_ptr[port] = (req.vc + 1) % vcs_per_port
        grants.append(req)
    for out in sorted(addon):
        port = _rr_pick(addon[out], state.addon_ptr[out], nports)
        state.addon_ptr[out] = (port + 1) % nports
        grants.append(addon[out][port])
    return grants


def crossbar_area_model(n_in: int, n_out: int) -> int:
    """Relative crossbar area, proportional to the crosspoint count."""
    if n_in < 1 or n_out < 1:
        raise ConfigurationError("crossbar port counts must be positive")
    return n_in * n_out


class _VC:
    __slots__ = ("router", "port", "index", "role", "buf", "owner", "target", "occ", "link")

    def __init__(self, router, port, index, role, link=-1):
        self.router, self.port, self.index, self.role, self.link = router, port, index, role, link
        self.buf = deque()  # entries: (ready, pid, hop, is_head, is_tail)
        self.owner = None
        self.target = None  # (kind, out, downstream _VC | None, latency)
        self.occ = 0


@dataclass
class SimReport:
    latencies: list  # per packet id, cycles
    injection_cycles: list
    cycles: int
    packets_injected: int
    packets_ejected: int
    flits_injected: int
    flits_ejected: int
    router_traversals: int
    link_traversals: int
    link_mm: float
    addon_traversals: int
    photonic_flits: int
    photonic_bits: int
    photonic_flits_per_link: list
    mesh_flit_hops_expected: int
    photonic_flit_hops_expected: int
    vc_usage: dict
    photonic_links: list = field(default_factory=list)  # [snake, src, dst, direction] per link
    warmup: int = 0
    flit_bits: int = 128
    clock: float = 1e9

    def _measured(self):
        return [lat for lat, c in zip(self.latencies, self.injection_cycles) if c >= self.warmup]

    @property
    def mean_latency(self) -> float:
        lat = self._measured()
        return float(np.mean(lat)) if lat else 0.0

    def percentile(self, q: float) -> float:
        lat = self._measured()
        return float(np.percentile(lat, q)) if lat else 0.0

    @property
    def simulated_time(self) -> float:
        return self.cycles / self.clock

    def conservation_ok(self) -> bool:
        return (self.packets_injected == self.packets_ejected
                and self.flits_injected == self.flits_ejected
                and self.router_traversals == self.mesh_flit_hops_expected
                and self.link_traversals == self.mesh_flit_hops_expected
                and self.photonic_flits == self.photonic_flit_hops_expected
                and self.addon_traversals == self.photonic_flits
                and self.photonic_bits == self.photonic_flits * self.flit_bits)

    def summary(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("latencies", "injection_cycles")}
        d.update(mean_latency=self.mean_latency, p50_latency=self.percentile(50),
                 p95_latency=self.percentile(95), p99_latency=self.percentile(99))
        return d

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)

    def latencies_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("packet", "injection_cycle", "latency"))
        for i, (c, lat) in enumerate(zip(self.injection_cycles, self.latencies)):
            w.writerow((i, c, lat))
        return buf.getvalue()


def _direction(mesh: MeshSpec, a: int, b: int) -> int:
    ax, ay = mesh.coords(a)
    bx, by = mesh.coords(b)
    if bx == ax + 1 and by == ay:
        return EAST
    if bx == ax - 1 and by == ay:
        return WEST
    if by == ay + 1 and bx == ax:
        return SOUTH
    if by == ay - 1 and bx == ax:
        return NORTH
    raise ConfigurationError(f"routers {a} and {b} are not mesh neighbours")


def _vc_class(route, hop: int) -> str:
    """Traffic class of a flit sitting at the router before ``route[hop]``."""
    if hop < len(route) and route[hop][0] == PHOTONIC:
        return OUTBOUND
    if any(k == PHOTONIC for k, _, _ in route[:hop]):
        return INBOUND
    return REGULAR


_CLASS_VCS = {REGULAR: (0, 1), OUTBOUND: (2,), INBOUND: (3,)}


def idle_latency(tables: RoutingTables, src: int, dst: int, size: int = 1,
                 cfg: SimConfig = SimConfig()) -> int:
    """Analytic latency of a lone packet: path cost, ejection and serialisation."""
    return int(tables.cost[src, dst]) + cfg.ejection_cycles + size - 1


def run(layout, selection, tables: RoutingTables, trace: Trace,
        cfg: SimConfig = SimConfig()) -> SimReport:
    """Simulate ``trace`` to completion and return latency and resource counters.

    ``layout`` and ``selection`` are accepted for provenance; routes come
    entirely from ``tables``.
    """
    mesh = tables.mesh
    n = mesh.routers
    if tables.costs.hop_cycles != cfg.hop_cycles or tables.costs.photonic_edge != cfg.photonic_edge_cycles:
        raise ConfigurationError("routing-table costs disagree with the simulator latencies")
    packets = trace.packets
    for p in packets:
        if not (0 <= p.src < n and 0 <= p.dst < n):
            raise IngestionError(f"packet {p.id} references a router outside the {n}-router mesh")
        if p.src == p.dst:
            raise IngestionError(f"packet {p.id} is a loopback packet")

    links = tables.links
    out_slot: dict[int, int] = {}
    lanes: dict[int, _VC] = {}
    out_count, in_count = [0] * n, [0] * n
    vcs = [[[_VC(r, port, i, i) for i in range(4)] for port in range(5)] for r in range(n)]
    for li, link in enumerate(links):
        out_slot[li] = out_count[link.source]
        out_count[link.source] += 1
        local = vcs[link.destination][LOCAL]
        lane = _VC(link.destination, LOCAL, len(local), 3, li)
        local.append(lane)
        lanes[li] = lane
        in_count[link.destination] += 1
    if max(out_count + in_count, default=0) > MAX_LINKS_PER_ROUTER:
        raise ConfigurationError("a router exceeds four outgoing or incoming logical links")
    arbiters = [ArbiterState() for _ in range(n)]
    vcs_per_port = 4 + MAX_LINKS_PER_ROUTER

    route_cache: dict[tuple[int, int], list] = {}
    routes = []
    mesh_hops_expected = photonic_hops_expected = 0
    for p in packets:
        key = (p.src, p.dst)
        if key not in route_cache:
            route_cache[key] = tables.path(p.src, p.dst)
        r = route_cache[key]
        routes.append(r)
        ph = sum(1 for k, _, _ in r if k == PHOTONIC)
        photonic_hops_expected += ph * p.size
        mesh_hops_expected += (len(r) - ph) * p.size
    link_of = {(l.source, l.destination): i for i, l in enumerate(links)}

    depth = cfg.vc_depth
    pe = cfg.photonic_edge_cycles
    latencies = [None] * len(packets)
    vc_usage = {REGULAR: {}, OUTBOUND: {}, INBOUND: {}}
    stats = dict(router=0, link=0, addon=0, photonic=0, flits_in=0, flits_out=0, done=0)
    per_link = [0] * len(links)

    def free_vc(port_vcs, cls):
        for i in _CLASS_VCS[cls]:
            v = port_vcs[i]
            if v.owner is None and v.occ < depth:
                return v
        return None

    # sources: pending packets in trace order, plus the packet currently being written
    pending = [deque() for _ in range(n)]
    for p in packets:
        pending[p.src].append(p.id)
    injecting: dict[int, list] = {}  # src -> [pid, next_flit, vc]
    ceiling = cfg.cycle_ceiling
    if ceiling is None:
        ceiling = (packets[-1].cycle if packets else 0) + 200_000
    busy = [0] * n  # flits buffered per router
    total = len(packets)
    t = packets[0].cycle if packets else 0

    while stats["done"] < total:
        if t > ceiling:
            raise LivelockError(f"{total - stats['done']} packets undelivered at cycle {t}")
        # injection: one flit per source per cycle
        for src in range(n):
            cur = injecting.get(src)
            if cur is None:
                q = pending[src]
                if not q or packets[q[0]].cycle > t:
                    continue
                pid = q[0]
                cls = _vc_class(routes[pid], 0)
                vc = free_vc(vcs[src][LOCAL], cls)
                if vc is None:
                    continue
                q.popleft()
                vc.owner = pid
                vc_usage[cls][vc.role] = vc_usage[cls].get(vc.role, 0) + 1
                cur = injecting[src] = [pid, 0, vc]
            pid, k, vc = cur
            if vc.occ >= depth:
                continue
            size = packets[pid].size
            vc.buf.append((t, pid, 0, k == 0, k == size - 1))
            vc.occ += 1
            busy[src] += 1
            stats["flits_in"] += 1
            if k == size - 1:
                vc.owner = None
                del injecting[src]
            else:
                cur[1] = k + 1

        # compute
        moves = []
        for r in range(n):
            if not busy[r]:
                continue
            requests, targets = [], {}
            for port in range(5):
                for vc in vcs[r][port]:
                    if not vc.buf:
                        continue
                    ready, pid, hop, head, tail = vc.buf[0]
                    if ready > t:
                        continue
                    if head:
                        route = routes[pid]
                        if hop == len(route):
                            tgt = ("main", LOCAL, None, 0)
                        else:
                            kind, a, b = route[hop]
                            if kind == MESH:
                                d = _direction(mesh, a, b)
                                cls = _vc_class(route, hop + 1)
                                down = free_vc(vcs[b][OPPOSITE[d]], cls)
                                if down is None:
                                    continue
                                tgt = ("main", d, down, cfg.hop_cycles)
                            else:
                                li = link_of[(a, b)]
                                down = lanes[li]
                                if down.owner is not None or down.occ >= depth:
                                    continue
                                tgt = ("addon", out_slot[li], down, pe)
                    else:
                        tgt = vc.target
                        if tgt[2] is not None and tgt[2].occ >= depth:
                            continue
                    requests.append(Request(port, vc.index, tgt[:2]))
                    targets[(port, vc.index)] = tgt
            if requests:
                for g in contention_arbitration(arbiters[r], requests, vcs_per_port):
                    moves.append((vcs[r][g.port][g.vc], targets[(g.port, g.vc)]))

        # commit
        for vc, tgt in moves:
            ready, pid, hop, head, tail = vc.buf.popleft()
            vc.occ -= 1
            busy[vc.router] -= 1
            kind, out, down, lat = tgt
            if head:
                vc.target = tgt
                if down is not None:
                    down.owner = pid
                    cls = _vc_class(routes[pid], hop + 1)
                    role = down.role
                    vc_usage[cls][role] = vc_usage[cls].get(role, 0) + 1
            if down is None:  # ejection
                stats["flits_out"] += 1
                if tail:
                    latencies[pid] = t + cfg.ejection_cycles - packets[pid].cycle
                    stats["done"] += 1
            else:
                down.buf.append((t + lat, pid, hop + 1, head, tail))
                down.occ += 1
                busy[down.router] += 1
                if kind == "main":
                    stats["router"] += 1
                    stats["link"] += 1
                else:
                    stats["addon"] += 1
                    stats["photonic"] += 1
                    per_link[down.link] += 1
            if tail:
                vc.target = None
                if down is not None:
                    down.owner = None

        t += 1
        if not any(busy) and not injecting:
            # idle network: jump to the next injection
            waiting = [packets[q[0]].cycle for q in pending if q]
            if waiting:
                t = max(t, min(waiting))

    end = max((packets[i].cycle + lat for i, lat in enumerate(latencies)), default=0)
    return SimReport(
        latencies=latencies,
        injection_cycles=[p.cycle for p in packets],
        cycles=end,
        packets_injected=total,
        packets_ejected=stats["done"],
        flits_injected=stats["flits_in"],
        flits_ejected=stats["flits_out"],
        router_traversals=stats["router"],
        link_traversals=stats["link"],
        link_mm=stats["link"] * cfg.link_length_mm,
        addon_traversals=stats["addon"],
        photonic_flits=stats["photonic"],
        photonic_bits=stats["photonic"] * cfg.flit_bits,
        photonic_flits_per_link=per_link,
        mesh_flit_hops_expected=mesh_hops_expected,
        photonic_flit_hops_expected=photonic_hops_expected,
        vc_usage={k: {str(i): c for i, c in sorted(v.items())} for k, v in vc_usage.items()},
        photonic_links=[[l.snake, l.source, l.destination, l.direction.value] for l in links],
        warmup=cfg.warmup,
        flit_bits=cfg.flit_bits,
        clock=cfg.clock,
    )


__all__ = [
    "ArbiterState", "Request", "SimConfig", "SimReport", "contention_arbitration",
    "crossbar_area_model", "idle_latency", "run",
]
