"""Parametric energy model of electronic mesh routers and links.

All energies are closed forms of declared coefficients.  Defaults are
calibrated so that, at an injection rate of 0.1, the 128-bit / 1 GHz router is
the minimum-energy point of the four constant-bandwidth configurations and a
2.5 mm router+link hop costs roughly 0.28 pJ/bit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationError, UndefinedEnergyError

PJ = 1e-12
LINK_RATE = 128e9  # bit/s per link, fixed across router configs
PORT_STORAGE = 512  # bits per input port
CLOCKS = (4e9, 2e9, 1e9, 0.5e9)


@dataclass(frozen=True)
class RouterConfig:
    clock: float  # Hz
    ports: int = 5
    vcs_per_port: int = 4

    def __post_init__(self):
        if self.clock <= 0:
            raise ConfigurationError("router clock must be positive")
        flit = LINK_RATE / self.clock
        if abs(flit - round(flit)) > 1e-9 or PORT_STORAGE % round(flit):
            raise ConfigurationError(f"clock {self.clock:g} Hz gives no integral flit/buffer split")

    @property
    def flit_size(self) -> int:
        return round(LINK_RATE / self.clock)

    @property
    def buffer_depth(self) -> int:
        return PORT_STORAGE // self.flit_size

    @property
    def label(self) -> str:
        return f"{self.flit_size}b@{self.clock / 1e9:g}GHz"


@dataclass(frozen=True)
class ElectricalCoefficients:
    router_dynamic: float = 0.1e-12  # J/bit per router traversal at 1 GHz
    link_dynamic: float = 0.04e-12  # J/bit/mm at 1 GHz
    frequency_exponent: float = 0.15
    router_leakage_base: float = 0.6e-3  # W
    decode_leakage: float = 2.5e-6  # W per VC buffer entry
    crossbar_leakage: float = 4.8828125e-10  # W per (ports * flit bits)^2
    link_leakage: float = 0.0  # W/mm

    def __post_init__(self):
        for name, value in vars(self).items():
            if name != "frequency_exponent" and value < 0:
                raise ConfigurationError(f"electrical coefficient {name} must be non-negative")


def router_configs(ports: int = 5, vcs_per_port: int = 4) -> list[RouterConfig]:
    """The four constant-bandwidth router configurations, fastest clock first."""
    return [RouterConfig(f, ports, vcs_per_port) for f in CLOCKS]


def _frequency_factor(rc: RouterConfig, coef: ElectricalCoefficients) -> float:
    return (rc.clock / 1e9) ** coef.frequency_exponent


def router_energy_per_flit(rc: RouterConfig, coef: ElectricalCoefficients) -> float:
    """Dynamic energy [J] of one flit crossing one router."""
    return coef.router_dynamic * rc.flit_size * _frequency_factor(rc, coef)


def link_energy_per_flit(rc: RouterConfig, coef: ElectricalCoefficients,
                         length_mm: float) -> float:
    return coef.link_dynamic * rc.flit_size * length_mm * _frequency_factor(rc, coef)


def router_leakage(rc: RouterConfig, coef: ElectricalCoefficients) -> float:
    """Router leakage [W].

    Base leakage, plus buffer decode logic growing with the per-VC depth, plus
    a crossbar term growing with the square of the datapath width.
    """
    entries = rc.buffer_depth * rc.vcs_per_port * rc.ports
    width = rc.ports * rc.flit_size
    return (
        coef.router_leakage_base
        + coef.decode_leakage * entries
        + coef.crossbar_leakage * width * width
    )


def _offered_bit_rate(injection_rate: float) -> float:
    if not 0 < injection_rate <= 1:
        raise UndefinedEnergyError(f"injection rate {injection_rate} not in (0, 1]")
    return injection_rate * LINK_RATE


@dataclass(frozen=True)
class SweepRow:
    config: RouterConfig
    dynamic_pj: float
    leakage_pj: float

    @property
    def energy_per_bit(self) -> float:
        return self.dynamic_pj + self.leakage_pj


def router_energy_per_bit(rc: RouterConfig, coef: ElectricalCoefficients,
                          injection_rate: float, hop_length_mm: float = 2.5) -> SweepRow:
    bit_rate = _offered_bit_rate(injection_rate)
    flit_rate = injection_rate * rc.clock
    dyn = (router_energy_per_flit(rc, coef) + link_energy_per_flit(rc, coef, hop_length_mm))
    leak = router_leakage(rc, coef) + coef.link_leakage * hop_length_mm
    return SweepRow(rc, dyn * flit_rate / bit_rate / PJ, leak / bit_rate / PJ)


def sweep_router_configs(coef: ElectricalCoefficients, injection_rate: float,
                         hop_length_mm: float = 2.5) -> list[SweepRow]:
    return [router_energy_per_bit(rc, coef, injection_rate, hop_length_mm)
            for rc in router_configs()]


def electrical_chain_energy_per_bit(length: float, coef: ElectricalCoefficients,
                                    injection_rate: float, hop_length: float = 2.5,
                                    rc: RouterConfig | None = None) -> float:
    """Energy per bit [pJ] of a back-to-back router+link chain spanning ``length`` metres."""
    hops = length * 1e3 / hop_length
    if length <= 0 or abs(hops - round(hops)) > 1e-9:
        raise ConfigurationError(f"length {length} m is not a positive multiple of the hop")
    row = router_energy_per_bit(rc or RouterConfig(1e9), coef, injection_rate, hop_length)
    return round(hops) * row.energy_per_bit
