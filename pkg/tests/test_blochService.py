import cmath
import math

import numpy as np
import pytest

from bandService import find_band
from blochService import (
    cross_integral_checks,
    bloch_coefficients,
    bloch_norm,
    current_at,
    dwell_time,
    dwell_time_quadrature,
    extract_uq,
    layer_integrals,
    norm_in_structure,
    periodicity_residual,
    probability_current,
    reconstruct_psi,
    reconstruction_residual,
    sample_positions,
    scattering_state,
    tilde_alpha,
    tilde_alpha_closed_form_abs2,
    velocity_expectation,
    velocity_numerator,
    wavefunction_rows,
)
from potentialModel import Layer, UnitCell, free_velocity
from resonanceService import find_resonances, phase_time, resonant_velocity
from scipy.integrate import quad
from transferMatrix import cos_like, sin_over_k
from tunnelingErrors import DomainError, OffResonanceError


@pytest.fixture(scope="module")
def off_resonance_energy(gaas_levels):
    # transmission minimum between two neighbouring levels
    return 0.5 * (gaas_levels[2].E_j + gaas_levels[3].E_j)


@pytest.fixture(scope="module")
def resonant_states(gaas_cell, gaas_levels):
    return [scattering_state(level.E_j, gaas_cell, 6) for level in gaas_levels]


@pytest.mark.parametrize("K2", [-3.0, -1e-4, 0.0, 1e-6, 0.5, 4.0])
def test_layer_integrals_match_quadrature(K2):
    w = 2.5
    i_cc, i_cs, i_ss = layer_integrals(K2, w)
    assert i_cc == pytest.approx(quad(lambda s: cos_like(K2, s) ** 2, 0, w, epsabs=1e-14, epsrel=1e-13)[0], rel=1e-11)
    assert i_cs == pytest.approx(quad(lambda s: cos_like(K2, s) * sin_over_k(K2, s), 0, w, epsabs=1e-14, epsrel=1e-13)[0], rel=1e-11)
    assert i_ss == pytest.approx(quad(lambda s: sin_over_k(K2, s) ** 2, 0, w, epsabs=1e-14, epsrel=1e-13)[0], rel=1e-11)


def test_free_cell_state_is_plane_wave(free_cell):
    E = 0.05
    state = scattering_state(E, free_cell, 3)
    k = state.k
    assert abs(state.r_n) < 1e-14
    for x in np.linspace(0, state.length, 17):
        assert state.psi(float(x)) == pytest.approx(cmath.exp(1j * k * x), abs=1e-12)
    assert dwell_time(state) == pytest.approx(state.length / free_velocity(E, free_cell), rel=1e-12)


def test_boundary_values(gaas_cell):
    for E in [0.02, 0.05, 0.12]:
        state = scattering_state(E, gaas_cell, 6)
        assert state.psi(0.0) == pytest.approx(1.0 + state.r_n, abs=1e-10)
        assert abs(state.psi(state.length) - state.t_n) < 1e-10 * max(1.0, abs(state.t_n))
        assert abs(state.t_n) ** 2 + abs(state.r_n) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_resonant_boundary_densities(resonant_states):
    for state in resonant_states:
        assert abs(state.psi(0.0)) ** 2 == pytest.approx(1.0, abs=1e-8)
        assert abs(state.psi(state.length)) ** 2 == pytest.approx(1.0, abs=1e-8)
        assert state.is_resonant


def test_current_is_constant(gaas_cell):
    rng = np.random.default_rng(3)
    for E in [0.03, 0.05, 0.15]:
        state = scattering_state(E, gaas_cell, 6)
        j = probability_current(state, samples_per_layer=4)
        assert np.std(j) / np.mean(j) < 1e-8
        j_expected = state.incident_current * abs(state.t_n) ** 2
        for x in rng.uniform(0, state.length, 50):
            assert current_at(state, float(x)) == pytest.approx(j_expected, rel=1e-10)


def test_dwell_time_closed_form_matches_quadrature(gaas_cell):
    for E in [0.02, 0.05, 0.2, 0.4]:
        state = scattering_state(E, gaas_cell, 3)
        assert dwell_time(state) == pytest.approx(dwell_time_quadrature(state), rel=1e-9)


def test_dwell_time_equals_phase_time_at_resonance(gaas_cell, gaas_levels, resonant_states):
    for level, state in zip(gaas_levels, resonant_states):
        assert dwell_time(state) == pytest.approx(phase_time(level.E_j, gaas_cell, 6), rel=1e-8)


def test_velocity_numerator_is_integrated_current(resonant_states):
    for state in resonant_states:
        numerator = velocity_numerator(state)
        assert numerator.real == pytest.approx(state.incident_current * state.length, rel=1e-7)
        assert abs(numerator.imag) < 1e-8 * numerator.real


def test_velocity_numerator_not_hermitian_off_resonance(gaas_cell, gaas_window, off_resonance_energy):
    E = off_resonance_energy
    state = scattering_state(E, gaas_cell, 6)
    numerator = velocity_numerator(state)
    assert abs(numerator.imag) > 1e-6 * abs(numerator.real)


def test_velocity_expectation_equals_resonant_velocity(gaas_cell, gaas_window, gaas_levels, resonant_states):
    for level, state in zip(gaas_levels, resonant_states):
        expectation = velocity_expectation(state, gaas_window)
        v_res = resonant_velocity(level, gaas_cell)
        assert expectation.quadrature == pytest.approx(v_res, rel=1e-7)
        assert expectation.closed_form == pytest.approx(v_res, rel=1e-7)
        assert expectation.hermiticity_residual < 1e-8


def test_velocity_expectation_refuses_off_resonance(gaas_cell, gaas_window, off_resonance_energy):
    E = off_resonance_energy
    with pytest.raises(OffResonanceError):
        velocity_expectation(scattering_state(E, gaas_cell, 6), gaas_window)


def test_free_cell_velocity_expectation(free_cell, free_window):
    E = 0.4 * free_window.E_high
    state = scattering_state(E, free_cell, 3)
    expectation = velocity_expectation(state, free_window)
    assert expectation.quadrature == pytest.approx(free_velocity(E, free_cell), rel=1e-10)
    assert expectation.closed_form == pytest.approx(free_velocity(E, free_cell), rel=1e-10)


def test_tilde_alpha_independent_of_n(gaas_cell, gaas_window):
    for E in np.linspace(gaas_window.E_low, gaas_window.E_high, 9)[1:-1]:
        moduli = [abs(tilde_alpha(float(E), gaas_cell, n, gaas_window)) for n in (2, 3, 6, 12)]
        assert max(moduli) - min(moduli) < 1e-10
        assert max(moduli) < 1.0


def test_tilde_alpha_closed_form_modulus(gaas_cell, gaas_window):
    for E in np.linspace(gaas_window.E_low, gaas_window.E_high, 41)[1:-1]:
        E = float(E)
        assert abs(tilde_alpha(E, gaas_cell, 6, gaas_window)) ** 2 == pytest.approx(
            tilde_alpha_closed_form_abs2(E, gaas_cell), abs=1e-10
        )


def test_tilde_alpha_reaches_one_at_band_edges(gaas_cell, gaas_window):
    for E in gaas_window.edges():
        assert abs(tilde_alpha(E, gaas_cell, 6, gaas_window)) > 1.0 - 1e-5


def test_tilde_alpha_vanishes_for_transparent_cell(free_cell, free_window):
    E = 0.3 * free_window.E_high
    assert abs(tilde_alpha(E, free_cell, 4, free_window)) < 1e-12


def test_bloch_coefficients_gauge_and_norm(gaas_cell, gaas_window, resonant_states):
    d = gaas_cell.period
    for state in resonant_states:
        decomposition = bloch_coefficients(state, gaas_window)
        assert decomposition.alpha_q > 0
        assert decomposition.alpha_minus_q == pytest.approx(decomposition.tilde_alpha * decomposition.alpha_q)
        for period in range(state.n):
            assert bloch_norm(decomposition, period) == pytest.approx(d / (2 * math.pi), rel=1e-8)


def test_bloch_coefficients_refuse_off_resonance(gaas_cell, gaas_window, off_resonance_energy):
    E = off_resonance_energy
    with pytest.raises(OffResonanceError):
        bloch_coefficients(scattering_state(E, gaas_cell, 6), gaas_window)


def test_uq_is_periodic_and_rebuilds_psi(gaas_window, resonant_states):
    for state in resonant_states:
        decomposition = bloch_coefficients(state, gaas_window)
        assert periodicity_residual(state, decomposition) < 1e-8
        assert reconstruction_residual(state, decomposition) < 1e-8
        x, rebuilt = reconstruct_psi(state, decomposition, samples_per_layer=8)
        assert len(x) == len(rebuilt) == 2 * 6 * 8 + 1


def test_free_cell_uq_is_constant(free_cell, free_window):
    E = 0.5 * free_window.E_high
    state = scattering_state(E, free_cell, 2)
    decomposition = bloch_coefficients(state, free_window)
    _, u = extract_uq(state, decomposition, samples_per_layer=16)
    assert np.max(np.abs(u - u[0])) < 1e-10
    assert abs(u[0]) ** 2 == pytest.approx(1.0 / (2 * math.pi), rel=1e-10)


def test_cross_integrals_vanish_at_resonance(gaas_window, resonant_states):
    for state in resonant_states:
        report = cross_integral_checks(state, bloch_coefficients(state, gaas_window))
        assert report.phi_dphi_residual < 1e-8
        assert report.phi_phi_residual < 1e-8
        assert report.passed()


def test_cross_integrals_survive_off_resonance(gaas_cell, gaas_window, off_resonance_energy):
    E = off_resonance_energy
    state = scattering_state(E, gaas_cell, 6)
    decomposition = bloch_coefficients(state, gaas_window, require_resonance=False)
    report = cross_integral_checks(state, decomposition)
    assert not report.passed()


def test_free_cell_cross_integrals_vanish_exactly(free_cell, free_window):
    # k d = pi/2, the n = 2 resonance, set analytically
    E = (0.5 * math.pi / free_cell.period) ** 2 / free_cell.mass_factor
    state = scattering_state(E, free_cell, 2)
    report = cross_integral_checks(state, bloch_coefficients(state, free_window))
    assert report.phi_dphi_residual < 1e-12
    assert report.phi_phi_residual < 1e-12


def test_wavefunction_rows_layout(gaas_window, resonant_states):
    state = resonant_states[2]
    rows = wavefunction_rows(state, bloch_coefficients(state, gaas_window), samples_per_layer=8)
    assert len(rows) == len(sample_positions(state, 8))
    assert rows[0]["x_nm"] == 0.0
    assert rows[-1]["x_nm"] == pytest.approx(state.length)
    currents = np.array([row["current"] for row in rows])
    assert np.std(currents) / np.mean(currents) < 1e-8
    assert {"re_u", "im_u", "abs2_u"} <= set(rows[0])


def test_norm_in_structure_positive(gaas_cell):
    state = scattering_state(0.02, gaas_cell, 2)
    assert norm_in_structure(state) > 0


def test_generic_three_layer_cell(gaas_cell):
    cell = UnitCell(layers=(Layer(1.0, 0.3), Layer(6.0, 0.0), Layer(1.5, 0.15)), effective_mass_ratio=0.067)
    window = find_band(cell, 1)
    for level in find_resonances(cell, 3, window=window):
        state = scattering_state(level.E_j, cell, 3)
        assert dwell_time(state) == pytest.approx(phase_time(level.E_j, cell, 3), rel=1e-8)
        expectation = velocity_expectation(state, window)
        assert expectation.relative_difference < 1e-7


def test_sample_positions_validation(gaas_cell):
    state = scattering_state(0.05, gaas_cell, 2)
    with pytest.raises(DomainError):
        sample_positions(state, 0)
    with pytest.raises(DomainError):
        state.psi(state.length + 1.0)
