"""Published reference values used for regression checks."""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple


class VariantResources(NamedTuple):
    K: int
    S: int
    waveguides: int  # total over all snakes, both directions
    avg_wavelengths: Fraction  # per waveguide
    length_m: float  # per waveguide
    addon_routers: int
    mrrs: int
    data_rate_gbps: int


# hardware census of the 14 snake variants on the 8x8 mesh
VARIANT_RESOURCES = (
    VariantResources(1, 1, 64, Fraction(8), 0.16, 64, 65536, 16),
    VariantResources(1, 2, 32, Fraction(16), 0.16, 32, 32768, 16),
    VariantResources(1, 4, 32, Fraction(16), 0.16, 16, 16384, 16),
    VariantResources(1, 8, 32, Fraction(32), 0.16, 8, 16384, 8),
    VariantResources(2, 1, 24, Fraction(64, 3), 0.08, 64, 32768, 16),  # printed as 21.33
    VariantResources(2, 2, 16, Fraction(32), 0.08, 32, 16384, 16),
    VariantResources(2, 4, 16, Fraction(64), 0.08, 16, 16384, 8),
    VariantResources(2, 8, 16, Fraction(64), 0.08, 8, 8192, 8),
    VariantResources(4, 1, 16, Fraction(32), 0.04, 64, 16384, 16),
    VariantResources(4, 2, 16, Fraction(64), 0.04, 32, 16384, 8),
    VariantResources(4, 4, 16, Fraction(128), 0.04, 16, 16384, 4),
    VariantResources(8, 1, 16, Fraction(64), 0.02, 64, 16384, 8),
    VariantResources(8, 2, 16, Fraction(128), 0.02, 32, 16384, 4),
    VariantResources(8, 4, 16, Fraction(128), 0.02, 16, 8192, 4),
)

# energy-per-bit breakdown at L = 70 mm, E = 16, S = 1, W = 6, injection 0.1 (pJ/bit)
PUBLISHED_MRR_HEATING_PJ = 3.38
PUBLISHED_LASER_D16_PJ = 2.06

LONGEST_PATH_LATENCY_PS = 775.0
FULL_FSR_TRIM_PER_RING_W = 2e-3
RESHUFFLE_TRIM_PER_RING_W = 31e-6
