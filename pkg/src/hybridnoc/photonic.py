"""Closed-form power, loss and latency model of an MWMR nanophotonic interconnect.

One :class:`MwmrLinkConfig` describes a single direction of a serpentine
waveguide bundle: ``waveguides`` parallel waveguides of ``length`` metres with a
modulator/detector site every ``stride`` router hops, carrying
``logical_links`` point-to-point channels of ``logical_link_rate`` each.

Wavelength accounting
---------------------
``channels_per_waveguide`` is the WDM capacity of a waveguide
(aggregate rate / per-wavelength rate).  The wavelengths actually *in use* are
``logical_links * wavelengths_per_link`` spread as evenly as possible over the
waveguides; every site carries one modulator and one detector ring per in-use
wavelength on every waveguide.  The ring census, the worst-case loss and the
bit-reshuffle trimming all follow from the in-use count.

Units: lengths in metres unless a name says ``_mm``; powers in watts; losses
in dB; energies per bit reported in pJ/bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError, InfeasibleDesignError, UndefinedEnergyError

PJ = 1e-12

DATA_RATES = (2e9, 4e9, 8e9, 16e9, 32e9)
LOGICAL_LINK_COUNTS = (4, 8, 16, 32)
STRIDES = (1, 2, 4, 8)

TUNING_GRID_POINTS = 25
TUNING_MIN_DB = 0.01
TUNING_MAX_DB = 10.0


@dataclass(frozen=True)
class PhotonicTechParams:
    """Device constants, rates and calibration coefficients of the photonic link.

    Loss and efficiency defaults are the 11 nm nanophotonic parameter set;
    latency components are the per-stage delays of the E-O-E path.  The last
    block holds calibrated coefficients standing in for circuit-level
    receiver, leakage and serializer models.
    """

    waveguide_loss: float = 100.0  # dB/m
    coupler_loss: float = 1.0  # dB
    bending_loss: float = 0.0  # dB
    laser_efficiency: float = 0.25
    ring_through_loss: float = 0.01  # dB per ring passed
    ring_drop_loss: float = 1.0  # dB
    detector_loss: float = 1.0  # dB
    ring_area: float = 100.0  # um^2
    fsr: float = 2e12  # Hz
    tuning_efficiency: float = 10e9  # Hz/K
    heating_efficiency: float = 100.0  # K/mW
    temp_range: float = 100.0  # K (280-380 K)
    clamp_temp_range: bool = False
    responsivity: float = 1.1  # A/W
    target_ber: float = 1e-15
    base_detector_sensitivity: float = -22.0  # dBm at reference_rate

    modulator_driver_latency: float = 9.5  # ps
    modulator_delay: float = 14.3  # ps
    photodetector_delay: float = 0.2  # ps
    amplifier_delay: float = 4.0  # ps
    propagation_delay: float = 4.67  # ps/mm

    aggregate_waveguide_rate: float = 512e9
    logical_link_rate: float = 128e9
    hop_length: float = 2.5  # mm

    # calibration: receiver rate scaling and ring-modulator bandwidth penalty
    reference_rate: float = 16e9
    ring_bandwidth: float = 8e9
    # calibration: modulator drive energy grows with IL + ER
    modulator_energy: float = 5e-15  # J/bit/dB
    # calibration: per-bit serializer/driver/receiver electronics
    serdes_energy_fixed: float = 0.0  # J/bit
    serdes_energy_lane: float = 0.075e-12  # J/bit at reference_rate, ~1/D
    serdes_energy_rate: float = 0.06e-12  # J/bit at reference_rate, ~D^2
    leakage_per_site: float = 0.73e-3  # W
    laser_ceiling: float = 10.0  # W per waveguide

    def __post_init__(self):
        losses = (
            self.waveguide_loss, self.coupler_loss, self.bending_loss,
            self.ring_through_loss, self.ring_drop_loss, self.detector_loss,
        )
        if any(x < 0 for x in losses):
            raise ConfigurationError("loss values must be non-negative")
        positive = (
            self.laser_efficiency, self.tuning_efficiency, self.heating_efficiency,
            self.responsivity, self.aggregate_waveguide_rate, self.logical_link_rate,
            self.fsr, self.hop_length, self.reference_rate, self.ring_bandwidth,
            self.temp_range, self.laser_ceiling,
        )
        if any(x <= 0 for x in positive):
            raise ConfigurationError("efficiencies, rates and spans must be positive")
        ratio = self.aggregate_waveguide_rate / self.logical_link_rate
        if not _is_integer(ratio):
            raise ConfigurationError(
                "aggregate_waveguide_rate must be an integer multiple of logical_link_rate"
            )

    @property
    def max_links_per_waveguide(self) -> int:
        return round(self.aggregate_waveguide_rate / self.logical_link_rate)

    @property
    def fixed_latency(self) -> float:
        """E-O-E overhead in ps, independent of length."""
        return (
            self.modulator_driver_latency + self.modulator_delay
            + self.photodetector_delay + self.amplifier_delay
        )


@dataclass(frozen=True)
class MwmrLinkConfig:
    data_rate: float  # bit/s per wavelength
    logical_links: int
    waveguides: int
    length: float  # m
    stride: int
    injection_rate: float = 0.1

    @property
    def length_mm(self) -> float:
        return self.length * 1e3


@dataclass(frozen=True)
class ModulatorTuning:
    insertion_loss: float  # dB
    extinction_ratio: float  # dB

    def __post_init__(self):
        for name in ("insertion_loss", "extinction_ratio"):
            value = getattr(self, name)
            if not TUNING_MIN_DB - 1e-12 <= value <= TUNING_MAX_DB + 1e-12:
                raise ConfigurationError(f"{name}={value} dB outside [0.01, 10] dB")


@dataclass(frozen=True)
class LinkGeometry:
    sites: int
    channels_per_waveguide: int  # WDM capacity N_lambda
    wavelengths_per_link: int
    links_per_waveguide: int
    total_wavelengths: int  # in use, across all waveguides
    wavelengths_per_waveguide: float  # in use, average
    max_wavelengths_per_waveguide: int  # in use, most loaded waveguide
    total_rings: int


@dataclass(frozen=True)
class PowerBreakdown:
    laser: float
    mrr_heating: float
    leakage: float
    dynamic: float
    delivered_rate: float  # bit/s
    energy_per_bit_components: dict = field(default_factory=dict)  # pJ/bit

    @property
    def static(self) -> float:
        return self.laser + self.mrr_heating + self.leakage

    @property
    def total(self) -> float:
        return self.static + self.dynamic

    @property
    def total_pj(self) -> float:
        return self.energy_per_bit_components["total"]

    @property
    def dynamic_pj(self) -> float:
        return self.energy_per_bit_components["dynamic"]


class TrimmingMode(str, Enum):
    FULL_FSR = "full_fsr"
    BIT_RESHUFFLE = "bit_reshuffle"


def _is_integer(x: float, tol: float = 1e-9) -> bool:
    return abs(x - round(x)) <= tol * max(1.0, abs(x))


def dbm_to_watt(dbm: float) -> float:
    return 1e-3 * 10.0 ** (dbm / 10.0)


def sites_for(length: float, stride: int, hop_length_mm: float) -> int:
    """Number of modulator/detector sites along a waveguide of ``length`` metres."""
    if length <= 0 or stride <= 0:
        raise ConfigurationError("length and stride must be positive")
    raw = length * 1e3 / (hop_length_mm * stride)
    if not _is_integer(raw) or round(raw) < 1:
        raise ConfigurationError(
            f"length {length} m with stride {stride} gives non-integer site count {raw:g}"
        )
    return round(raw)


def derive_geometry(cfg: MwmrLinkConfig, tech: PhotonicTechParams) -> LinkGeometry:
    """Validate ``cfg`` and derive its site, wavelength and ring counts."""
    if cfg.data_rate <= 0 or cfg.logical_links <= 0 or cfg.waveguides <= 0:
        raise ConfigurationError("data rate, logical links and waveguides must be positive")
    n_channels = tech.aggregate_waveguide_rate / cfg.data_rate
    if not _is_integer(n_channels):
        raise ConfigurationError(
            f"data rate {cfg.data_rate:g} b/s does not divide the waveguide aggregate rate"
        )
    per_link = tech.logical_link_rate / cfg.data_rate
    if not _is_integer(per_link):
        raise ConfigurationError(
            f"data rate {cfg.data_rate:g} b/s does not divide the logical link rate"
        )
    n_channels, per_link = round(n_channels), round(per_link)
    links_per_wg = min(tech.max_links_per_waveguide, n_channels // per_link)
    w_min = math.ceil(cfg.logical_links / links_per_wg)
    if not w_min <= cfg.waveguides <= n_channels:
        raise ConfigurationError(
            f"W={cfg.waveguides} outside [{w_min}, {n_channels}] for E={cfg.logical_links}"
        )
    sites = sites_for(cfg.length, cfg.stride, tech.hop_length)
    total_wl = cfg.logical_links * per_link
    return LinkGeometry(
        sites=sites,
        channels_per_waveguide=n_channels,
        wavelengths_per_link=per_link,
        links_per_waveguide=links_per_wg,
        total_wavelengths=total_wl,
        wavelengths_per_waveguide=total_wl / cfg.waveguides,
        max_wavelengths_per_waveguide=math.ceil(total_wl / cfg.waveguides),
        total_rings=2 * sites * total_wl,
    )


def loss_budget(length: float, sites: int, wavelengths: int, tech: PhotonicTechParams,
                insertion_loss: float) -> float:
    """Worst-case optical loss in dB for a waveguide carrying ``wavelengths`` channels.

    The worst wavelength passes every modulator and detector ring on the
    waveguide except its own drop ring.
    """
    through_rings = max(2 * wavelengths * sites - 1, 0)
    return (
        tech.coupler_loss
        + tech.waveguide_loss * length
        + tech.bending_loss
        + tech.ring_through_loss * through_rings
        + insertion_loss
        + tech.ring_drop_loss
        + tech.detector_loss
    )


def worst_case_loss(cfg: MwmrLinkConfig, tech: PhotonicTechParams,
                    tuning: ModulatorTuning) -> float:
    geo = derive_geometry(cfg, tech)
    return loss_budget(cfg.length, geo.sites, geo.max_wavelengths_per_waveguide,
                       tech, tuning.insertion_loss)


def extinction_penalty_db(extinction_ratio):
    """Receiver power penalty 10 log10((r+1)/(r-1)) of a finite extinction ratio."""
    r = 10.0 ** (np.asarray(extinction_ratio, dtype=float) / 10.0)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10((r + 1.0) / (r - 1.0))
    return float(out) if out.ndim == 0 else out


def rate_scaling(data_rate: float, tech: PhotonicTechParams) -> float:
    """Receiver power multiplier relative to ``reference_rate``.

    Linear in data rate, times a ring-modulator bandwidth penalty
    (1 + (D/B)^2) normalised to 1 at the reference rate.
    """
    def bw(d):
        return 1.0 + (d / tech.ring_bandwidth) ** 2
    return (data_rate / tech.reference_rate) * bw(data_rate) / bw(tech.reference_rate)


def required_receiver_power(data_rate: float, extinction_ratio, tech: PhotonicTechParams):
    """Optical power [W] a detector needs at ``data_rate`` for the target BER."""
    return (
        dbm_to_watt(tech.base_detector_sensitivity)
        * 10.0 ** (np.asarray(extinction_penalty_db(extinction_ratio)) / 10.0)
        * rate_scaling(data_rate, tech)
    )


def wall_plug_power(required_power: float, loss_db, efficiency: float, wavelengths: float):
    """Electrical laser power delivering ``required_power`` through ``loss_db``."""
    return required_power * 10.0 ** (np.asarray(loss_db) / 10.0) / efficiency * wavelengths


def delivered_bit_rate(cfg: MwmrLinkConfig, tech: PhotonicTechParams) -> float:
    if not 0 < cfg.injection_rate <= 1:
        raise UndefinedEnergyError(f"injection rate {cfg.injection_rate} not in (0, 1]")
    return cfg.injection_rate * cfg.logical_links * tech.logical_link_rate


def _laser_grid(cfg, tech, geo, insertion_loss, extinction_ratio):
    base = loss_budget(cfg.length, geo.sites, geo.max_wavelengths_per_waveguide, tech, 0.0)
    p_rx = required_receiver_power(cfg.data_rate, extinction_ratio, tech)
    return wall_plug_power(p_rx, base + insertion_loss, tech.laser_efficiency,
                           geo.total_wavelengths)


def modulator_energy_per_bit(tuning: ModulatorTuning, tech: PhotonicTechParams) -> float:
    return tech.modulator_energy * (tuning.insertion_loss + tuning.extinction_ratio)


def tuning_grid(points: int = TUNING_GRID_POINTS) -> np.ndarray:
    return np.logspace(math.log10(TUNING_MIN_DB), math.log10(TUNING_MAX_DB), points)


def modulator_objective(cfg: MwmrLinkConfig, tech: PhotonicTechParams,
                        insertion_loss, extinction_ratio):
    """Laser plus modulator drive power [W] for arrays of tuning points."""
    geo = derive_geometry(cfg, tech)
    il = np.asarray(insertion_loss, dtype=float)
    er = np.asarray(extinction_ratio, dtype=float)
    laser = _laser_grid(cfg, tech, geo, il, er)
    drive = tech.modulator_energy * (il + er) * delivered_bit_rate(cfg, tech)
    return laser + drive


def optimize_modulator(cfg: MwmrLinkConfig, tech: PhotonicTechParams,
                       points: int = TUNING_GRID_POINTS) -> ModulatorTuning:
    """Grid search of insertion loss x extinction ratio minimising laser + drive power.

    Ties go to the lowest insertion loss, then the lowest extinction ratio.
    """
    grid = tuning_grid(points)
    il, er = np.meshgrid(grid, grid, indexing="ij")
    obj = modulator_objective(cfg, tech, il, er)
    # row-major argmin returns the first minimum: lowest IL, then lowest ER
    i, j = np.unravel_index(int(np.argmin(obj)), obj.shape)
    return ModulatorTuning(float(grid[i]), float(grid[j]))


def laser_power(cfg: MwmrLinkConfig, tech: PhotonicTechParams,
                tuning: ModulatorTuning) -> float:
    geo = derive_geometry(cfg, tech)
    total = float(_laser_grid(cfg, tech, geo, tuning.insertion_loss, tuning.extinction_ratio))
    per_waveguide = total / geo.total_wavelengths * geo.max_wavelengths_per_waveguide
    if per_waveguide > tech.laser_ceiling:
        raise InfeasibleDesignError(
            f"laser power {per_waveguide:.3g} W per waveguide exceeds ceiling "
            f"{tech.laser_ceiling:g} W"
        )
    return total


def trimming_power_per_ring(tech: PhotonicTechParams, mode: TrimmingMode | str,
                            wavelengths_per_waveguide: float = 1.0) -> float:
    """Heater power [W] holding one ring on its channel."""
    mode = TrimmingMode(mode)
    if mode is TrimmingMode.FULL_FSR:
        span = tech.fsr / tech.tuning_efficiency
        if tech.clamp_temp_range:
            span = min(span, tech.temp_range)
    else:
        span = tech.fsr / wavelengths_per_waveguide / tech.tuning_efficiency
    return span / tech.heating_efficiency * 1e-3


def trimming_power(cfg: MwmrLinkConfig, tech: PhotonicTechParams,
                   mode: TrimmingMode | str = TrimmingMode.BIT_RESHUFFLE) -> float:
    geo = derive_geometry(cfg, tech)
    if TrimmingMode(mode) is TrimmingMode.BIT_RESHUFFLE:
        # rings x (FSR / rings-per-bank) collapses to one FSR span per bank,
        # independent of the channel count
        return 2 * geo.sites * cfg.waveguides * trimming_power_per_ring(tech, mode, 1.0)
    per_ring = trimming_power_per_ring(tech, mode, geo.wavelengths_per_waveguide)
    return per_ring * geo.total_rings


def leakage_power(cfg: MwmrLinkConfig, tech: PhotonicTechParams) -> float:
    return tech.leakage_per_site * derive_geometry(cfg, tech).sites


def serdes_energy_per_bit(data_rate: float, tech: PhotonicTechParams) -> float:
    x = data_rate / tech.reference_rate
    return (
        tech.serdes_energy_fixed
        + tech.serdes_energy_lane / x
        + tech.serdes_energy_rate * x * x
    )


def energy_per_bit(cfg: MwmrLinkConfig, tech: PhotonicTechParams,
                   tuning: ModulatorTuning | None = None) -> PowerBreakdown:
    """Static and dynamic power of a link and their per-delivered-bit energies.

    Static power (laser, bit-reshuffle trimming, leakage) is amortised over
    the delivered bit rate ``injection_rate * E * logical_link_rate``; dynamic
    energy is charged per transferred bit.
    """
    rate = delivered_bit_rate(cfg, tech)
    if tuning is None:
        tuning = optimize_modulator(cfg, tech)
    laser = laser_power(cfg, tech, tuning)
    heat = trimming_power(cfg, tech, TrimmingMode.BIT_RESHUFFLE)
    leak = leakage_power(cfg, tech)
    mod_j = modulator_energy_per_bit(tuning, tech)
    serdes_j = serdes_energy_per_bit(cfg.data_rate, tech)
    dyn_j = mod_j + serdes_j
    parts = {
        "laser": laser / rate / PJ,
        "mrr_heating": heat / rate / PJ,
        "leakage": leak / rate / PJ,
        "dynamic": dyn_j / PJ,
    }
    parts["total"] = sum(parts.values())
    # split of the dynamic term, not added to the total again
    parts["modulator"] = mod_j / PJ
    parts["serdes"] = serdes_j / PJ
    return PowerBreakdown(laser, heat, leak, dyn_j * rate, rate, parts)


def link_latency(length_mm: float, tech: PhotonicTechParams) -> float:
    """E-O-E latency in ps of a waveguide traversal of ``length_mm``."""
    if length_mm <= 0:
        raise ConfigurationError("link length must be positive")
    return tech.fixed_latency + tech.propagation_delay * length_mm


def photonic_hop_cycles(length_mm: float, tech: PhotonicTechParams, clock_hz: float) -> int:
    if clock_hz <= 0:
        raise ConfigurationError("clock must be positive")
    period_ps = 1e12 / clock_hz
    # guard against 1000.0000001-style rounding at exact multiples
    cycles = math.ceil(link_latency(length_mm, tech) / period_ps - 1e-9)
    return max(1, cycles)
