import math

import numpy as np
import pytest

from bandService import (
    EnergyScan,
    FlaggedValue,
    bloch_q,
    dispersion_point,
    energy_at_q,
    find_band,
    find_bands,
    group_velocity,
    re_a,
)
from potentialModel import Layer, UnitCell, free_velocity
from transferMatrix import richardson_derivative
from tunnelingErrors import BandNotFoundError, DomainError, OutOfBandError


def test_gaas_band_edges_satisfy_dispersion(gaas_window):
    assert 0 < gaas_window.E_low < gaas_window.E_high < 0.288
    for E in gaas_window.edges():
        assert abs(abs(re_a(E, gaas_window.cell)) - 1.0) < 1e-9


def test_gaas_band_matches_dense_scan(gaas_cell, gaas_window):
    # 1 micro-eV scan around the polished edges
    for edge in gaas_window.edges():
        grid = np.arange(edge - 5e-5, edge + 5e-5, 1e-6)
        inside = [abs(re_a(float(E), gaas_cell)) <= 1.0 for E in grid]
        crossings = [float(grid[i]) for i in range(1, len(grid)) if inside[i] != inside[i - 1]]
        assert len(crossings) == 1
        assert abs(crossings[0] - edge) <= 1e-6


def test_re_a_bounded_inside_band(gaas_window):
    for E in np.linspace(gaas_window.E_low, gaas_window.E_high, 200)[1:-1]:
        assert abs(re_a(float(E), gaas_window.cell)) <= 1.0


def test_find_bands_returns_ordered_disjoint_windows(gaas_cell):
    bands = find_bands(gaas_cell, 2)
    assert [band.band_index for band in bands] == [1, 2]
    assert bands[0].E_high < bands[1].E_low


def test_band_outside_scan_window_is_not_found(gaas_cell):
    with pytest.raises(BandNotFoundError):
        find_band(gaas_cell, 1, EnergyScan(E_min=1e-6, E_max=0.01))
    with pytest.raises(DomainError):
        find_band(gaas_cell, 0)


def test_invalid_scan_is_rejected():
    with pytest.raises(DomainError):
        EnergyScan(step=0.0)
    with pytest.raises(DomainError):
        EnergyScan(E_min=0.5, E_max=0.1)


def test_bloch_q_principal_branch(gaas_window):
    d = gaas_window.d
    for E in np.linspace(gaas_window.E_low, gaas_window.E_high, 50):
        E = float(E)
        q = bloch_q(E, gaas_window)
        assert 0.0 <= q * d <= math.pi
        assert math.cos(q * d) == pytest.approx(re_a(E, gaas_window.cell), abs=1e-10)


def test_bloch_q_at_band_edges(gaas_window):
    qd = sorted(bloch_q(E, gaas_window) * gaas_window.d for E in gaas_window.edges())
    assert qd[0] == pytest.approx(0.0, abs=1e-4)
    assert qd[1] == pytest.approx(math.pi, abs=1e-4)


def test_bloch_q_monotone_across_band(gaas_window):
    q = [bloch_q(float(E), gaas_window) for E in np.linspace(gaas_window.E_low, gaas_window.E_high, 400)]
    steps = np.diff(q)
    assert np.all(steps > 0) or np.all(steps < 0)


def test_out_of_band_energy_is_rejected(gaas_window):
    with pytest.raises(OutOfBandError):
        bloch_q(gaas_window.E_high + 0.01, gaas_window)


def test_group_velocity_equals_inverse_dq_de(gaas_window):
    hbar = gaas_window.cell.constants.hbar_ev_fs
    for E in np.linspace(gaas_window.E_low, gaas_window.E_high, 12)[2:-2]:
        E = float(E)
        dq = richardson_derivative(lambda x: bloch_q(x, gaas_window), E, 1e-7)
        assert group_velocity(E, gaas_window).value == pytest.approx(1.0 / (hbar * abs(dq)), rel=1e-6)


def test_group_velocity_vanishes_at_edges(gaas_window):
    for E in gaas_window.edges():
        v = group_velocity(E, gaas_window)
        assert isinstance(v, FlaggedValue)
        assert v.value == pytest.approx(0.0, abs=1e-3)
    interior = group_velocity(0.5 * sum(gaas_window.edges()), gaas_window)
    assert not interior.at_edge and float(interior) > 0


def test_group_velocity_falls_toward_both_edges(gaas_window):
    margin = 0.01 * gaas_window.width
    lower = np.linspace(gaas_window.E_low, gaas_window.E_low + margin, 41)[1:]
    upper = np.linspace(gaas_window.E_high - margin, gaas_window.E_high, 41)[:-1]
    v_lower = [group_velocity(float(E), gaas_window).value for E in lower]
    v_upper = [group_velocity(float(E), gaas_window).value for E in upper]
    assert np.all(np.diff(v_lower) > 0)
    assert np.all(np.diff(v_upper) < 0)


def test_free_cell_band_and_velocity(free_cell, free_window):
    assert free_window.is_free
    assert free_window.E_low == 0.0
    E = 0.6 * free_window.E_high
    assert group_velocity(E, free_window).value == pytest.approx(free_velocity(E, free_cell), rel=1e-10)
    assert bloch_q(E, free_window) == pytest.approx(math.sqrt(E * free_cell.mass_factor), rel=1e-10)


def test_free_cell_second_band_folds_back(free_cell):
    window = find_band(free_cell, 2)
    E = 0.5 * (window.E_low + window.E_high)
    k = math.sqrt(E * free_cell.mass_factor)
    assert bloch_q(E, window) == pytest.approx(2 * math.pi / free_cell.period - k, rel=1e-10)
    assert energy_at_q(bloch_q(E, window), window) == pytest.approx(E, rel=1e-10)


@pytest.mark.parametrize("fraction", [0.1, 0.5, 0.9])
def test_energy_at_q_inverts_dispersion(gaas_window, fraction):
    q = fraction * math.pi / gaas_window.d
    E = energy_at_q(q, gaas_window)
    assert gaas_window.contains(E)
    assert bloch_q(E, gaas_window) == pytest.approx(q, rel=1e-9)
    point = dispersion_point(E, gaas_window)
    assert point.xi(gaas_window.d).real == pytest.approx(math.cos(q * gaas_window.d), abs=1e-10)


def test_energy_at_q_outside_zone(gaas_window):
    with pytest.raises(DomainError):
        energy_at_q(-1.0, gaas_window)


def test_barrier_only_band_exists_above_zero():
    cell = UnitCell.barrier_well(1.0, 10.0, 0.5)
    window = find_band(cell, 1)
    assert 0 < window.E_low < window.E_high < 0.5


def test_flat_potential_band_is_shifted():
    cell = UnitCell(layers=(Layer(9.0, 0.1),))
    window = find_band(cell, 1)
    mu = cell.mass_factor
    assert window.is_free
    assert window.E_low == pytest.approx(0.1, abs=1e-15)
    assert window.E_high == pytest.approx(0.1 + (math.pi / 9.0) ** 2 / mu, rel=1e-12)
    E = 0.5 * (window.E_low + window.E_high)
    K = math.sqrt((E - 0.1) * mu)
    assert re_a(E, cell) == pytest.approx(math.cos(K * 9.0), abs=1e-12)
    assert bloch_q(E, window) == pytest.approx(K, rel=1e-10)
    assert energy_at_q(K, window) == pytest.approx(E, rel=1e-12)


def test_flat_well_below_zero_clamps_band_bottom():
    mu = UnitCell.free(9.0).mass_factor
    depth = 0.5 * (math.pi / 9.0) ** 2 / mu
    window = find_band(UnitCell(layers=(Layer(9.0, -depth),)), 1)
    assert window.E_low == 0.0
    assert window.E_high == pytest.approx(depth, rel=1e-12)
    with pytest.raises(BandNotFoundError):
        find_band(UnitCell(layers=(Layer(9.0, -1.0),)), 1)
