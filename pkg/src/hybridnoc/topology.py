"""Mesh construction, serpentine snake overlay and candidate logical links."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .errors import LayoutError

# 14 (K, S) variants realisable on the 8x8 mesh with a constant link budget
VARIANTS = (
    (1, 1), (1, 2), (1, 4), (1, 8),
    (2, 1), (2, 2), (2, 4), (2, 8),
    (4, 1), (4, 2), (4, 4),
    (8, 1), (8, 2), (8, 4),
)


@dataclass(frozen=True)
class MeshSpec:
    width: int = 8
    height: int = 8
    hop_length: float = 2.5  # mm
    cores_per_router: int = 4

    def __post_init__(self):
        if self.width < 2 or self.height < 2:
            raise LayoutError("mesh must be at least 2x2")

    @property
    def routers(self) -> int:
        return self.width * self.height

    def router_id(self, x: int, y: int) -> int:
        return y * self.width + x

    def coords(self, router: int) -> tuple[int, int]:
        return router % self.width, router // self.width

    def distance(self, a: int, b: int) -> int:
        ax, ay = self.coords(a)
        bx, by = self.coords(b)
        return abs(ax - bx) + abs(ay - by)

    def neighbors(self, router: int) -> list[int]:
        x, y = self.coords(router)
        out = []
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nx, ny = x + dx, y + dy
            if 0 <= nx < self.width and 0 <= ny < self.height:
                out.append(self.router_id(nx, ny))
        return out

    def xy_next(self, current: int, dest: int) -> int:
        """Next router on the X-then-Y route from ``current`` to ``dest``."""
        cx, cy = self.coords(current)
        dx, dy = self.coords(dest)
        if cx != dx:
            return self.router_id(cx + (1 if dx > cx else -1), cy)
        if cy != dy:
            return self.router_id(cx, cy + (1 if dy > cy else -1))
        return current

    def xy_path(self, src: int, dst: int) -> list[int]:
        path = [src]
        while path[-1] != dst:
            path.append(self.xy_next(path[-1], dst))
        return path


class Direction(str, Enum):
    FORWARD = "forward"
    REVERSE = "reverse"


@dataclass(frozen=True)
class Snake:
    index: int
    rows: tuple[int, ...]
    sequence: tuple[int, ...]  # router ids in waveguide order
    sites: tuple[int, ...]
    length: float  # m

    def position(self, router: int) -> int:
        return self.sequence.index(router)


@dataclass(frozen=True)
class SnakeLayout:
    mesh: MeshSpec
    snakes_count: int
    stride: int
    snakes: tuple[Snake, ...]

    @property
    def sites(self) -> list[int]:
        return [r for s in self.snakes for r in s.sites]

    @property
    def addon_routers(self) -> int:
        return sum(len(s.sites) for s in self.snakes)

    @property
    def waveguide_length(self) -> float:
        return self.snakes[0].length

    def snake_of(self, router: int) -> Snake:
        for s in self.snakes:
            if router in s.sequence:
                return s
        raise KeyError(router)

    def to_dict(self) -> dict:
        mesh = self.mesh
        return {
            "mesh": {"width": mesh.width, "height": mesh.height, "hop_length_mm": mesh.hop_length},
            "K": self.snakes_count,
            "S": self.stride,
            "addon_routers": self.addon_routers,
            "candidate_count": len(candidates(self)),
            "snakes": [
                {
                    "index": s.index,
                    "rows": list(s.rows),
                    "length_m": s.length,
                    "sequence": list(s.sequence),
                    "sites": [list(mesh.coords(r)) for r in s.sites],
                }
                for s in self.snakes
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def build(mesh: MeshSpec, snakes: int, stride: int, offset: int = 0) -> SnakeLayout:
    """Split the mesh into ``snakes`` horizontal bands, each traversed boustrophedon.

    Sites sit on every ``stride``-th router of a snake, starting at ``offset``.
    """
    if snakes < 1 or mesh.height % snakes:
        raise LayoutError(f"K={snakes} does not divide mesh height {mesh.height}")
    band = mesh.height // snakes
    per_snake = band * mesh.width
    if stride < 1 or per_snake % stride:
        raise LayoutError(f"S={stride} does not divide the {per_snake} routers of a snake")
    if not 0 <= offset < stride:
        raise LayoutError(f"site offset {offset} must lie in [0, {stride})")
    out = []
    for k in range(snakes):
        rows = tuple(range(k * band, (k + 1) * band))
        seq = []
        for i, y in enumerate(rows):
            xs = range(mesh.width) if i % 2 == 0 else range(mesh.width - 1, -1, -1)
            seq.extend(mesh.router_id(x, y) for x in xs)
        length = per_snake * mesh.hop_length * 1e-3
        out.append(Snake(k, rows, tuple(seq), tuple(seq[offset::stride]), length))
    return SnakeLayout(mesh, snakes, stride, tuple(out))


@dataclass(frozen=True, order=True)
class LogicalLinkCandidate:
    snake: int
    source: int
    destination: int
    direction: Direction

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.snake, self.source, self.destination)


def candidates(layout: SnakeLayout) -> list[LogicalLinkCandidate]:
    """Every ordered site pair within each snake, in (snake, source, destination) order."""
    out = []
    for snake in layout.snakes:
        pos = {r: i for i, r in enumerate(snake.sequence)}
        for a in snake.sites:
            for b in snake.sites:
                if a == b:
                    continue
                d = Direction.FORWARD if pos[a] < pos[b] else Direction.REVERSE
                out.append(LogicalLinkCandidate(snake.index, a, b, d))
    out.sort(key=lambda c: c.key)
    return out


@dataclass(frozen=True)
class ResourceSummary:
    waveguides: int
    avg_wavelengths_per_waveguide: float
    length_per_waveguide: float  # m
    addon_routers: int
    mrrs: int
    data_rate: float  # bit/s


def resource_summary(layout: SnakeLayout, waveguides_per_snake: int,
                     wavelengths_per_waveguide: float, data_rate: float) -> ResourceSummary:
    """Hardware census of a layout given the per-snake optical configuration.

    ``waveguides_per_snake`` counts both directions; ``wavelengths_per_waveguide``
    is the average number of wavelengths in use per waveguide.
    """
    rings = sum(
        len(s.sites) * waveguides_per_snake * wavelengths_per_waveguide * 2
        for s in layout.snakes
    )
    return ResourceSummary(
        waveguides=waveguides_per_snake * layout.snakes_count,
        avg_wavelengths_per_waveguide=wavelengths_per_waveguide,
        length_per_waveguide=layout.waveguide_length,
        addon_routers=layout.addon_routers,
        mrrs=round(rings),
        data_rate=data_rate,
    )
