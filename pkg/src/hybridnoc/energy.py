"""Energy accounting of simulated runs.

Dynamic energy is a linear functional of the simulator's resource counters;
static power (photonic laser, trimming and leakage plus electrical router
leakage) is charged over the whole simulated time, drain included.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import photonic as ph
from .dse import DseResult, find_optimum
from .electrical import (
    ElectricalCoefficients, RouterConfig, link_energy_per_flit, router_energy_per_flit,
    router_leakage,
)
from .errors import ConfigurationError
from .sim import SimConfig, SimReport
from .topology import Direction, MeshSpec, SnakeLayout

PJ = 1e-12


@dataclass(frozen=True)
class SnakeDesign:
    snake: int
    direction: Direction
    result: DseResult


def snake_designs(layout: SnakeLayout, tech: ph.PhotonicTechParams, total_links: int = 32,
                  injection_rate: float = 0.1) -> list[SnakeDesign]:
    """Optimised link design for each (snake, direction) waveguide bundle.

    Every bundle carries ``total_links / K`` logical links over the snake length.
    """
    k = layout.snakes_count
    if total_links % k:
        raise ConfigurationError(f"E_tot={total_links} not divisible by K={k}")
    best = find_optimum(layout.waveguide_length, total_links // k, layout.stride, tech,
                        injection_rate)
    # all snakes of a layout share length and stride
    return [SnakeDesign(s.index, d, best) for s in layout.snakes for d in Direction]


@dataclass(frozen=True)
class StaticPower:
    laser: float  # W
    trimming: float
    leakage: float

    @property
    def total(self) -> float:
        return self.laser + self.trimming + self.leakage


def static_power_summary(layout: SnakeLayout | None, designs) -> StaticPower:
    """Static photonic power [W] summed over the given waveguide bundles."""
    designs = list(designs)
    results = [d.result if isinstance(d, SnakeDesign) else d for d in designs]
    if layout is not None and len(results) not in (layout.snakes_count, 2 * layout.snakes_count):
        raise ConfigurationError("expected one design per snake or per snake direction")
    return StaticPower(
        laser=sum(r.breakdown.laser for r in results),
        trimming=sum(r.breakdown.mrr_heating for r in results),
        leakage=sum(r.breakdown.leakage for r in results),
    )


def mesh_link_count(mesh: MeshSpec) -> int:
    """Directional router-to-router links."""
    return 2 * ((mesh.width - 1) * mesh.height + mesh.width * (mesh.height - 1))


@dataclass
class EnergyReport:
    router_dynamic: float  # J
    link_dynamic: float
    photonic_modulator: float
    photonic_serdes: float
    photonic_static_power: float  # W
    electrical_leakage_power: float  # W
    simulated_time: float  # s
    bits_delivered: int
    ratios: dict = field(default_factory=dict)

    @property
    def photonic_dynamic(self) -> float:
        return self.photonic_modulator + self.photonic_serdes

    @property
    def electrical_dynamic(self) -> float:
        return self.router_dynamic + self.link_dynamic

    @property
    def dynamic(self) -> float:
        return self.electrical_dynamic + self.photonic_dynamic

    @property
    def static(self) -> float:
        return (self.photonic_static_power + self.electrical_leakage_power) * self.simulated_time

    @property
    def total(self) -> float:
        return self.dynamic + self.static

    def _per_bit(self, joules: float) -> float | None:
        return joules / self.bits_delivered / PJ if self.bits_delivered else None

    @property
    def dynamic_pj_per_bit(self) -> float | None:
        return self._per_bit(self.dynamic)

    @property
    def total_pj_per_bit(self) -> float | None:
        return self._per_bit(self.total)

    def metrics(self) -> dict:
        return {
            "router_dynamic_J": self.router_dynamic,
            "link_dynamic_J": self.link_dynamic,
            "photonic_modulator_J": self.photonic_modulator,
            "photonic_serdes_J": self.photonic_serdes,
            "photonic_dynamic_J": self.photonic_dynamic,
            "dynamic_J": self.dynamic,
            "photonic_static_W": self.photonic_static_power,
            "electrical_leakage_W": self.electrical_leakage_power,
            "static_J": self.static,
            "total_J": self.total,
            "bits_delivered": self.bits_delivered,
            "dynamic_pJ_per_bit": self.dynamic_pj_per_bit,
            "total_pJ_per_bit": self.total_pj_per_bit,
        }

    def to_json(self) -> str:
        return json.dumps({**self.metrics(), "ratios": self.ratios}, indent=2, sort_keys=True)


RATIO_KEYS = ("dynamic_J", "static_J", "total_J", "dynamic_pJ_per_bit", "total_pJ_per_bit")


def _ratio(a, b) -> float | None:
    if a is None or b is None:
        return None
    if a == b:
        return 1.0
    return a / b if b else math.inf


def ratio_report(report: EnergyReport, baseline: EnergyReport) -> dict:
    m, b = report.metrics(), baseline.metrics()
    return {k: _ratio(m[k], b[k]) for k in RATIO_KEYS}


def account(report: SimReport, selection=None, designs=None,
            coef: ElectricalCoefficients = ElectricalCoefficients(),
            cfg: SimConfig = SimConfig(), router: RouterConfig | None = None,
            mesh: MeshSpec = MeshSpec(), baseline: EnergyReport | None = None) -> EnergyReport:
    """Energy of one simulated run.

    ``designs`` lists a SnakeDesign per (snake, direction); it may be omitted
    only when no flit crossed a logical link.  ``selection`` is accepted for
    provenance; links are identified from the report itself.
    """
    rc = router or RouterConfig(cfg.clock)
    if rc.flit_size != cfg.flit_bits:
        raise ConfigurationError("router flit size disagrees with the simulator flit size")
    router_dyn = report.router_traversals * router_energy_per_flit(rc, coef)
    # link energy is linear in length, so the summed length stands in for per-link terms
    link_dyn = link_energy_per_flit(rc, coef, report.link_mm) if report.link_traversals else 0.0

    by_bundle = {}
    for d in designs or ():
        by_bundle[(d.snake, Direction(d.direction))] = d.result
    modulator = serdes = 0.0
    for (snake, _, _, direction), flits in zip(report.photonic_links, report.photonic_flits_per_link):
        if not flits:
            continue
        result = by_bundle.get((snake, Direction(direction)))
        if result is None:
            raise ConfigurationError(
                f"no photonic design for snake {snake} ({direction}) with {flits} flits"
            )
        parts = result.breakdown.energy_per_bit_components
        bits = flits * cfg.flit_bits
        modulator += bits * parts["modulator"] * PJ
        serdes += bits * parts["serdes"] * PJ

    static_ph = static_power_summary(None, by_bundle.values()).total if by_bundle else 0.0
    wire_mm = mesh_link_count(mesh) * cfg.link_length_mm
    leak = mesh.routers * router_leakage(rc, coef) + coef.link_leakage * wire_mm
    out = EnergyReport(
        router_dynamic=router_dyn,
        link_dynamic=link_dyn,
        photonic_modulator=modulator,
        photonic_serdes=serdes,
        photonic_static_power=static_ph,
        electrical_leakage_power=leak,
        simulated_time=report.simulated_time,
        bits_delivered=report.flits_ejected * cfg.flit_bits,
    )
    if baseline is not None:
        out.ratios = ratio_report(out, baseline)
    return out


__all__ = [
    "EnergyReport", "SnakeDesign", "StaticPower", "account", "mesh_link_count",
    "ratio_report", "snake_designs", "static_power_summary",
]
