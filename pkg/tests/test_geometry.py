import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cellfree_urllc.config import AreaSpec, ConfigError, SimConfig
from cellfree_urllc.geometry import Deployment, ap_grid, build_deployment, grid_shape, pairwise_geometry


def _dep(ue, ap):
    ue, ap = np.atleast_2d(ue).astype(float), np.atleast_2d(ap).astype(float)
    return Deployment("cellfree", ap, ue, len(ap), 1, len(ue))


def test_l4_grid_points():
    pts = ap_grid(4, 150.0)
    assert sorted(map(tuple, pts)) == [(37.5, 37.5), (37.5, 112.5), (112.5, 37.5), (112.5, 112.5)]


@pytest.mark.parametrize("L,shape", [(1, (1, 1)), (16, (4, 4)), (100, (10, 10)), (200, (10, 20)), (12, (3, 4))])
def test_grid_shape(L, shape):
    assert grid_shape(L) == shape


def test_grid_shape_rejects_primes():
    with pytest.raises(ConfigError):
        grid_shape(13)


def test_cellular_single_ap_at_center():
    cfg = SimConfig(mode="cellular", L=10, M=4, K=2, n_pilot=2, n=262)
    dep = build_deployment(cfg, np.random.default_rng(0))
    np.testing.assert_array_equal(dep.ap_positions, [[75.0, 75.0]])
    assert dep.antennas_per_ap == 40


def test_ues_inside_area():
    cfg = SimConfig()
    ue = build_deployment(cfg, np.random.default_rng(1)).ue_positions
    assert ue.shape == (40, 2)
    assert np.all((ue >= 0) & (ue < 150))


def test_wraparound_distance_example():
    g = pairwise_geometry(_dep([1, 75], [149, 75]), AreaSpec())
    assert g.d[0, 0] == pytest.approx(np.sqrt(104.0), abs=1e-12)
    # displacement UE - AP is +2 m along x after wrapping
    assert g.phi[0, 0] == pytest.approx(0.0, abs=1e-12)


def test_no_wrap_uses_plain_distance():
    g = pairwise_geometry(_dep([1, 75], [149, 75]), AreaSpec(wrap_around=False))
    assert g.d[0, 0] == pytest.approx(np.hypot(148.0, 10.0))
    assert g.phi[0, 0] == pytest.approx(np.pi)


def test_colocated_distance_is_height():
    g = pairwise_geometry(_dep([75, 75], [75, 75]), AreaSpec())
    assert g.d[0, 0] == pytest.approx(10.0)


def test_axis_aligned_azimuth():
    g = pairwise_geometry(_dep([80, 75], [75, 75]), AreaSpec())
    assert g.phi[0, 0] == 0.0
    g = pairwise_geometry(_dep([75, 80], [75, 75]), AreaSpec())
    assert g.phi[0, 0] == pytest.approx(np.pi / 2)


coord = st.floats(0.0, 150.0, allow_nan=False, exclude_max=True)


@settings(max_examples=200, deadline=None)
@given(coord, coord, coord, coord)
def test_torus_metric_properties(ux, uy, ax, ay):
    area = AreaSpec()
    d = pairwise_geometry(_dep([ux, uy], [ax, ay]), area).d[0, 0]
    d_sym = pairwise_geometry(_dep([ax, ay], [ux, uy]), area).d[0, 0]
    assert d == pytest.approx(d_sym, rel=1e-12)
    # torus distance is at most half the diagonal
    assert area.ap_height <= d <= np.hypot(75.0 * np.sqrt(2), area.ap_height) + 1e-9
    plain = pairwise_geometry(_dep([ux, uy], [ax, ay]), AreaSpec(wrap_around=False)).d[0, 0]
    assert d <= plain + 1e-12


@settings(max_examples=100, deadline=None)
@given(coord, coord, coord, coord)
def test_azimuth_range(ux, uy, ax, ay):
    phi = pairwise_geometry(_dep([ux, uy], [ax, ay]), AreaSpec()).phi[0, 0]
    assert -np.pi < phi <= np.pi
