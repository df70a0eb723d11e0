import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybridnoc import photonic as ph
from hybridnoc.errors import ConfigurationError, InfeasibleDesignError, UndefinedEnergyError



def cfg(d=16e9, e=16, w=6, length=0.07, s=1, inj=0.1):
    return ph.MwmrLinkConfig(d, e, w, length, s, inj)


def test_channel_counts(tech):
    geo = ph.derive_geometry(cfg(), tech)
    assert geo.channels_per_waveguide == 32
    assert geo.wavelengths_per_link == 8


def test_k1s1_ring_count(tech):
    # one direction: 32 links x 8 wavelengths over 32 waveguides
    geo = ph.derive_geometry(cfg(16e9, 32, 32, 0.16, 1), tech)
    assert geo.sites == 64
    assert geo.wavelengths_per_waveguide == 8
    assert 2 * geo.total_rings == 64 * 64 * 8 * 2


def test_short_snake_ring_count(tech):
    geo = ph.derive_geometry(cfg(4e9, 32, 8, 0.02, 4), tech)
    assert geo.sites == 2
    assert geo.channels_per_waveguide == 128
    assert geo.total_rings == 2 * 2 * 8 * 128


@pytest.mark.parametrize("bad", [
    dict(d=3e9), dict(w=3), dict(w=33), dict(length=0.071), dict(e=0),
])
def test_invalid_geometry(tech, bad):
    with pytest.raises(ConfigurationError):
        ph.derive_geometry(cfg(**bad), tech)


def test_loss_single_term():
    t = ph.PhotonicTechParams(waveguide_loss=0, ring_through_loss=0, ring_drop_loss=0,
                              detector_loss=0, coupler_loss=1.0)
    assert ph.loss_budget(0.0, 1, 1, t, 0.5) == pytest.approx(1.5)


def test_loss_hand_sum(tech):
    loss = ph.loss_budget(0.16, 64, 8, tech, 1.0)
    assert loss == pytest.approx(1 + 16 + 0.01 * 1023 + 1 + 1 + 1)


def test_loss_falls_with_stride(tech):
    t = ph.ModulatorTuning(1.0, 3.0)
    a = ph.worst_case_loss(cfg(s=1), tech, t)
    b = ph.worst_case_loss(cfg(s=2), tech, t)
    assert b < a


def test_wall_plug_hand_value():
    p = ph.wall_plug_power(ph.dbm_to_watt(-22), 30.0, 0.25, 1)
    assert float(p) == pytest.approx(6.30957e-6 * 1000 / 0.25, rel=1e-5)


def test_wall_plug_identity():
    assert float(ph.wall_plug_power(7e-6, 0.0, 1.0, 1)) == pytest.approx(7e-6)


def test_laser_grows_with_sites(tech):
    t = ph.ModulatorTuning(1.0, 3.0)
    assert ph.laser_power(cfg(length=0.05), tech, t) < ph.laser_power(cfg(length=0.07), tech, t)


def test_laser_ceiling(tech):
    tiny = replace(tech, laser_ceiling=1e-9)
    with pytest.raises(InfeasibleDesignError):
        ph.laser_power(cfg(), tiny, ph.ModulatorTuning(1.0, 3.0))


def test_optimizer_is_grid_minimum(tech):
    c = cfg()
    best = ph.optimize_modulator(c, tech)
    grid = ph.tuning_grid()
    il, er = np.meshgrid(grid, grid, indexing="ij")
    obj = ph.modulator_objective(c, tech, il, er)
    assert ph.modulator_objective(c, tech, best.insertion_loss, best.extinction_ratio) <= obj.min()


def test_optimizer_lossless_picks_lowest_il():
    t = ph.PhotonicTechParams(waveguide_loss=0, coupler_loss=0, ring_through_loss=0,
                              ring_drop_loss=0, detector_loss=0)
    best = ph.optimize_modulator(cfg(), t)
    assert best.insertion_loss == pytest.approx(ph.TUNING_MIN_DB)


def test_trimming_closed_forms(tech):
    assert ph.trimming_power_per_ring(tech, "full_fsr") == pytest.approx(2e-3)
    assert ph.trimming_power_per_ring(tech, "bit_reshuffle", 64) == pytest.approx(31.25e-6)
    assert ph.trimming_power_per_ring(tech, "bit_reshuffle", 8) == pytest.approx(250e-6)


def test_full_fsr_clamp(tech):
    clamped = replace(tech, clamp_temp_range=True)
    assert ph.trimming_power_per_ring(clamped, "full_fsr") == pytest.approx(1e-3)


def test_mrr_heating_hand_value(tech):
    b = ph.energy_per_bit(cfg(), tech)
    # 28 sites x 2 banks x 2 mW per waveguide, 6 waveguides, 204.8 Gb/s delivered
    assert b.mrr_heating == pytest.approx(0.672)
    assert b.energy_per_bit_components["mrr_heating"] == pytest.approx(3.28125)


@pytest.mark.parametrize("d", [2e9, 4e9, 8e9, 16e9, 32e9])
def test_reshuffle_total_independent_of_rate(tech, d):
    ref = ph.trimming_power(cfg(d=16e9, w=8), tech)
    assert ph.trimming_power(cfg(d=d, w=8), tech) == ref


def test_doubling_injection_halves_statics(tech):
    a = ph.energy_per_bit(cfg(inj=0.1), tech).energy_per_bit_components
    b = ph.energy_per_bit(cfg(inj=0.2), tech).energy_per_bit_components
    for key in ("laser", "mrr_heating", "leakage"):
        assert b[key] == pytest.approx(a[key] / 2, rel=1e-12)
    assert b["dynamic"] == pytest.approx(a["dynamic"])


def test_components_add_up(tech):
    e = ph.energy_per_bit(cfg(), tech).energy_per_bit_components
    assert e["total"] == pytest.approx(e["laser"] + e["mrr_heating"] + e["leakage"] + e["dynamic"])
    assert e["dynamic"] == pytest.approx(e["modulator"] + e["serdes"])


def test_bad_injection(tech):
    with pytest.raises(UndefinedEnergyError):
        ph.energy_per_bit(cfg(inj=0.0), tech)


def test_link_latency(tech):
    assert ph.link_latency(160, tech) == pytest.approx(775.2)
    assert ph.link_latency(2.5, tech) == pytest.approx(39.675)
    assert ph.link_latency(1e-9, tech) == pytest.approx(28.0)
    with pytest.raises(ConfigurationError):
        ph.link_latency(0, tech)


def test_hop_cycles(tech):
    assert ph.photonic_hop_cycles(160, tech, 1e9) == 1
    assert ph.photonic_hop_cycles(160, tech, 2e9) == 2
    assert ph.photonic_hop_cycles(2.5, tech, 1e9) == 1


@given(st.floats(0.1, 500), st.floats(0.1, 500))
def test_latency_affine(a, b):
    tech = ph.PhotonicTechParams()
    slope = (ph.link_latency(b, tech) - ph.link_latency(a, tech)) / (b - a) if a != b else 4.67
    assert math.isclose(slope, 4.67, rel_tol=1e-6)


@given(st.sampled_from(ph.DATA_RATES), st.sampled_from([1, 2, 4, 8]),
       st.sampled_from([0.02, 0.04, 0.08, 0.16]))
def test_reshuffle_total_property(d, s, length):
    tech = ph.PhotonicTechParams()
    c = cfg(d=d, e=16, w=16, length=length, s=s)
    sites = ph.sites_for(length, s, tech.hop_length)
    assert ph.trimming_power(c, tech) == pytest.approx(2 * sites * 16 * 2e-3 / 1)
