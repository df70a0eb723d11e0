import pytest
from hypothesis import given, strategies as st

from hybridnoc.errors import LayoutError
from hybridnoc.reference import VARIANT_RESOURCES
from hybridnoc.topology import VARIANTS, MeshSpec, build, candidates, resource_summary


def test_k1s1(mesh):
    lay = build(mesh, 1, 1)
    assert lay.addon_routers == 64
    assert lay.waveguide_length == pytest.approx(0.16)


def test_k8s4(mesh):
    lay = build(mesh, 8, 4)
    assert lay.addon_routers == 16
    assert all(s.length == pytest.approx(0.02) for s in lay.snakes)


def test_k2s8(mesh):
    assert build(mesh, 2, 8).addon_routers == 8


@pytest.mark.parametrize("k,s", [(3, 1), (1, 3), (8, 16), (0, 1)])
def test_rejected_variants(mesh, k, s):
    with pytest.raises(LayoutError):
        build(mesh, k, s)


def test_snake_is_boustrophedon(mesh):
    seq = build(mesh, 1, 1).snakes[0].sequence
    assert sorted(seq) == list(range(64))
    assert all(mesh.distance(a, b) == 1 for a, b in zip(seq, seq[1:]))


def test_two_site_snake():
    lay = build(MeshSpec(2, 2), 1, 2)
    assert len(candidates(lay)) == 2


def test_candidate_count(mesh):
    lay = build(mesh, 1, 8)
    cands = candidates(lay)
    assert len(cands) == 56
    sites = set(lay.sites)
    assert all(c.source in sites and c.destination in sites for c in cands)


@given(st.sampled_from(VARIANTS))
def test_candidates_per_snake(variant):
    lay = build(MeshSpec(), *variant)
    per = len(lay.snakes[0].sites)
    assert len(candidates(lay)) == lay.snakes_count * per * (per - 1)


def test_resources_k1s1(mesh):
    assert resource_summary(build(mesh, 1, 1), 64, 8, 16e9).mrrs == 65536


def test_resources_k1s8(mesh):
    assert resource_summary(build(mesh, 1, 8), 32, 32, 8e9).mrrs == 16384


def test_resources_zero_waveguides(mesh):
    assert resource_summary(build(mesh, 1, 1), 0, 8, 16e9).mrrs == 0


@pytest.mark.parametrize("row", VARIANT_RESOURCES, ids=lambda r: f"K{r.K}S{r.S}")
def test_table_regression(mesh, row):
    lay = build(mesh, row.K, row.S)
    res = resource_summary(lay, row.waveguides // row.K, row.avg_wavelengths, row.data_rate_gbps * 1e9)
    assert res.addon_routers == row.addon_routers
    assert res.length_per_waveguide == pytest.approx(row.length_m, abs=1e-12)
    assert res.mrrs == row.mrrs
    assert res.waveguides == row.waveguides


def test_layout_json_roundtrip(mesh):
    import json
    data = json.loads(build(mesh, 2, 4).to_json())
    assert data["K"] == 2 and data["addon_routers"] == 16
    assert data["candidate_count"] == 2 * 8 * 7


def test_xy_path(mesh):
    path = mesh.xy_path(0, 63)
    assert len(path) == 15
    assert [mesh.coords(r)[1] for r in path[:8]] == [0] * 8
