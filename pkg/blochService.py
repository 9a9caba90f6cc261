"""
Scattering state inside the n-period structure, its split into the two Bloch
waves of the infinite medium at a resonance, and the integrals built on it:
norm, dwell time, velocity expectation value.

Inside a layer every solution is f(s) = f0 C(s) + f1 S(s) with s measured from
the layer's left edge, C = cos(Ks) and S = sin(Ks)/K, so products of two such
solutions integrate in closed form.
"""
import cmath
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import quad

from bandService import BandWindow, bloch_q, group_velocity
from potentialModel import Layer, UnitCell, free_velocity, layer_wavevector_squared, wavevector_well
from transferMatrix import cos_like, sin_over_k, structure_matrix, unit_cell_matrix
from tunnelingErrors import (
    BandEdgeError,
    DegenerateDecompositionError,
    DomainError,
    OffResonanceError,
)

RESONANCE_TOLERANCE = 1e-8
BAND_EDGE_TOLERANCE = 1e-10
SAMPLES_PER_LAYER = 64

Coefficients = Tuple[complex, complex]


@dataclass(frozen=True)
class Segment:
    """One layer of the structure with the state's (Psi, Psi') at its left edge."""
    x_start: float
    layer: Layer
    K2: float
    psi0: complex
    dpsi0: complex

    @property
    def x_end(self) -> float:
        return self.x_start + self.layer.width

    def coefficients(self) -> Coefficients:
        return self.psi0, self.dpsi0

    def value(self, x: float) -> Tuple[complex, complex]:
        s = x - self.x_start
        C = cos_like(self.K2, s)
        S = sin_over_k(self.K2, s)
        return self.psi0 * C + self.dpsi0 * S, -self.K2 * self.psi0 * S + self.dpsi0 * C


@dataclass(frozen=True)
class ScatteringState:
    E: float
    n: int
    cell: UnitCell = field(repr=False)
    k: float
    t_n: complex
    r_n: complex
    segments: Tuple[Segment, ...] = field(repr=False)

    @property
    def length(self) -> float:
        return self.n * self.cell.period

    @property
    def incident_current(self) -> float:
        """j_in = hbar k/m* for unit incident amplitude, in nm/fs."""
        return free_velocity(self.E, self.cell)

    @property
    def is_resonant(self) -> bool:
        return abs(abs(self.t_n) ** 2 - 1.0) <= RESONANCE_TOLERANCE

    def segment_at(self, x: float) -> Segment:
        if not -1e-12 <= x <= self.length + 1e-12:
            raise DomainError(f"x={x} nm lies outside the structure [0, {self.length}] nm")
        for segment in self.segments:
            if x <= segment.x_end:
                return segment
        return self.segments[-1]

    def psi(self, x: float) -> complex:
        return self.segment_at(x).value(x)[0]

    def dpsi(self, x: float) -> complex:
        return self.segment_at(x).value(x)[1]

    def samples(self, samples_per_layer: int = SAMPLES_PER_LAYER) -> List[Tuple[float, complex, complex]]:
        """(x, Psi, Psi') on the reporting grid."""
        return [(x, *self.segment_at(x).value(x)) for x in map(float, sample_positions(self, samples_per_layer))]


@dataclass(frozen=True)
class BlochDecomposition:
    """Psi = alpha_q phi_q + alpha_{-q} phi_{-q} with phi_{+-q} = exp(+-iqx) u_{+-q}, u_{-q} = u_q*."""
    state: ScatteringState = field(repr=False)
    q: float
    xi: complex
    tilde_alpha: complex
    alpha_q: float
    alpha_minus_q: complex
    group_velocity: float

    def phi_coefficients(self, segment: Segment) -> Coefficients:
        """Layer coefficients of phi_q = (Psi - tilde_alpha Psi*)/((1 - |tilde_alpha|^2) alpha_q)."""
        scale = (1.0 - abs(self.tilde_alpha) ** 2) * self.alpha_q
        psi0, dpsi0 = segment.coefficients()
        return (
            (psi0 - self.tilde_alpha * psi0.conjugate()) / scale,
            (dpsi0 - self.tilde_alpha * dpsi0.conjugate()) / scale,
        )

    def uq_at(self, x: float) -> complex:
        """u_q(x) = (Psi - tilde_alpha Psi*) exp(-iqx) / ((1 - |tilde_alpha|^2) alpha_q)."""
        psi = self.state.psi(x)
        scale = (1.0 - abs(self.tilde_alpha) ** 2) * self.alpha_q
        return (psi - self.tilde_alpha * psi.conjugate()) * cmath.exp(-1j * self.q * x) / scale


@dataclass(frozen=True)
class VelocityExpectation:
    quadrature: float
    closed_form: float
    numerator: complex
    norm: float

    @property
    def hermiticity_residual(self) -> float:
        """|Im numerator| / |Re numerator|"""
        return abs(self.numerator.imag) / abs(self.numerator.real)

    @property
    def relative_difference(self) -> float:
        return abs(self.quadrature - self.closed_form) / abs(self.closed_form)


@dataclass(frozen=True)
class CrossTermReport:
    """Integrals over [0, L] that vanish at a resonance, with their diagonal scales."""
    phi_dphi: complex
    phi_phi: complex
    phi_conj_dphi: complex
    norm: float

    @property
    def phi_dphi_residual(self) -> float:
        return abs(self.phi_dphi) / abs(self.phi_conj_dphi)

    @property
    def phi_phi_residual(self) -> float:
        return abs(self.phi_phi) / self.norm

    def passed(self, tolerance: float = 1e-8) -> bool:
        return self.phi_dphi_residual < tolerance and self.phi_phi_residual < tolerance


# ---------------------------------------------------------------------------
# closed-form layer integrals
# ---------------------------------------------------------------------------

def _integral_ss(K2: float, w: float, C: float, S: float) -> float:
    """int_0^w S(s)^2 ds"""
    if abs(K2) * w * w < 1.0:
        # sum_m (-1)^(m+1) 2^(2m-1) K^(2m-2) w^(2m+1) / ((2m)! (2m+1))
        total = 0.0
        power = w ** 3
        for m in range(1, 20):
            term = (-1) ** (m + 1) * 2 ** (2 * m - 1) * power / (math.factorial(2 * m) * (2 * m + 1))
            total += term
            if abs(term) < 1e-18 * abs(total):
                break
            power *= K2 * w * w
        return total
    return (w - C * S) / (2.0 * K2)


def layer_integrals(K2: float, w: float) -> Tuple[float, float, float]:
    """(int C^2, int C S, int S^2) over a layer of width w."""
    C = cos_like(K2, w)
    S = sin_over_k(K2, w)
    return 0.5 * (w + C * S), 0.5 * S * S, _integral_ss(K2, w, C, S)


def _product_integral(f: Coefficients, g: Coefficients, integrals: Tuple[float, float, float]) -> complex:
    i_cc, i_cs, i_ss = integrals
    f0, f1 = f
    g0, g1 = g
    return f0 * g0 * i_cc + (f0 * g1 + f1 * g0) * i_cs + f1 * g1 * i_ss


def _derivative(f: Coefficients, K2: float) -> Coefficients:
    return f[1], -K2 * f[0]


def _conjugate(f: Coefficients) -> Coefficients:
    return f[0].conjugate(), f[1].conjugate()


# ---------------------------------------------------------------------------
# scattering state
# ---------------------------------------------------------------------------

def scattering_state(E: float, cell: UnitCell, n: int) -> ScatteringState:
    """
    Left-incident state exp(ikx) + r exp(-ikx) carried through the n periods.

    Args:
        E (float): energy in eV
        cell (UnitCell): the period
        n (int): number of periods

    Returns:
        ScatteringState: t, r and the per-layer (Psi, Psi') at each left edge
    """
    m_n = structure_matrix(E, cell, n)
    t, r = m_n.transmission_amplitude(), m_n.reflection_amplitude()
    k = wavevector_well(E, cell)
    psi, dpsi = 1.0 + r, 1j * k * (1.0 - r)
    segments = []
    x = 0.0
    for _ in range(n):
        for layer in cell.layers:
            K2 = layer_wavevector_squared(E, layer, cell)
            segments.append(Segment(x, layer, K2, psi, dpsi))
            C = cos_like(K2, layer.width)
            S = sin_over_k(K2, layer.width)
            psi, dpsi = C * psi + S * dpsi, -K2 * S * psi + C * dpsi
            x += layer.width
    return ScatteringState(E, n, cell, k, t, r, tuple(segments))


def sample_positions(state: ScatteringState, samples_per_layer: int = SAMPLES_PER_LAYER) -> np.ndarray:
    if samples_per_layer < 1:
        raise DomainError(f"samples per layer must be >= 1, got {samples_per_layer}")
    positions = [
        segment.x_start + np.linspace(0.0, segment.layer.width, samples_per_layer, endpoint=False)
        for segment in state.segments
    ]
    positions.append(np.array([state.length]))
    return np.concatenate(positions)


def current_at(state: ScatteringState, x: float) -> float:
    psi, dpsi = state.segment_at(x).value(x)
    return state.cell.hbar_over_mass * (psi.conjugate() * dpsi).imag


def probability_current(state: ScatteringState, samples_per_layer: int = SAMPLES_PER_LAYER) -> np.ndarray:
    """j(x) = (hbar/m*) Im{Psi* Psi'} in nm/fs on the sample grid."""
    return np.array([current_at(state, float(x)) for x in sample_positions(state, samples_per_layer)])


def norm_in_structure(state: ScatteringState) -> float:
    """int_0^L |Psi|^2 dx in nm."""
    total = 0.0
    for segment in state.segments:
        f = segment.coefficients()
        total += _product_integral(_conjugate(f), f, layer_integrals(segment.K2, segment.layer.width)).real
    return total


def velocity_numerator(state: ScatteringState) -> complex:
    """(-i hbar/m*) int_0^L Psi* Psi' dx; the real part is the integrated current."""
    total = 0j
    for segment in state.segments:
        f = segment.coefficients()
        integrals = layer_integrals(segment.K2, segment.layer.width)
        total += _product_integral(_conjugate(f), _derivative(f, segment.K2), integrals)
    return -1j * state.cell.hbar_over_mass * total


def dwell_time(state: ScatteringState) -> float:
    """tau_D = int_0^L |Psi|^2 dx / j_in in fs."""
    return norm_in_structure(state) / state.incident_current


def dwell_time_quadrature(state: ScatteringState) -> float:
    total = 0.0
    for segment in state.segments:
        value, _ = quad(lambda x: abs(segment.value(x)[0]) ** 2, segment.x_start, segment.x_end,
                        epsabs=1e-13, epsrel=1e-12, limit=200)
        total += value
    return total / state.incident_current


# ---------------------------------------------------------------------------
# Bloch decomposition
# ---------------------------------------------------------------------------

def forward_q(E: float, window: BandWindow) -> float:
    """Bloch wavenumber of the right-going wave: -q where Im{a} > 0."""
    q = bloch_q(E, window)
    return -q if unit_cell_matrix(E, window.cell).a.imag > 0 else q


def _tilde_alpha(E: float, cell: UnitCell, t_n: complex, q: float) -> complex:
    m = unit_cell_matrix(E, cell)
    xi = cmath.exp(1j * q * cell.period)
    denominator = m.a - m.b - xi
    if abs(denominator) < 1e-12:
        raise DegenerateDecompositionError(f"a - b - exp(iqd) vanishes at E={E} eV; tilde alpha is 0/0")
    return (m.a.conjugate() - m.b.conjugate() - xi) / denominator * t_n / t_n.conjugate()


def tilde_alpha(E: float, cell: UnitCell, n: int, window: BandWindow) -> complex:
    """
    alpha_{-q}/alpha_q of the n-period scattering state:

        (a* - b* - xi)/(a - b - xi) * t^(n)/t^(n)*,   xi = exp(iqd)

    Its modulus does not depend on n.
    """
    t_n = structure_matrix(E, cell, n).transmission_amplitude()
    return _tilde_alpha(E, cell, t_n, forward_q(E, window))


def tilde_alpha_closed_form_abs2(E: float, cell: UnitCell) -> float:
    """|tilde alpha|^2 = (Im{a} + s)/(Im{a} - s), s = sqrt(1 - Re^2{a}), taking Im{a} < 0."""
    a = unit_cell_matrix(E, cell).a
    s = math.sqrt(max(0.0, 1.0 - a.real ** 2))
    y = -abs(a.imag)
    if abs(y - s) < 1e-14:
        raise DegenerateDecompositionError(f"|tilde alpha|^2 is 0/0 at E={E} eV")
    return (y + s) / (y - s)


def bloch_coefficients(state: ScatteringState, window: BandWindow,
                       require_resonance: bool = True) -> BlochDecomposition:
    """
    Bloch amplitudes of a scattering state, alpha_q real and positive:

        alpha_q = [2 pi j_in / ((1 - |tilde alpha|^2) |v_g|)]^(1/2),   alpha_{-q} = tilde_alpha alpha_q

    The amplitudes describe Psi only at a resonance; require_resonance=False
    keeps the same construction elsewhere for comparison.
    """
    if require_resonance and not state.is_resonant:
        raise OffResonanceError(
            f"|t|^2 = {abs(state.t_n) ** 2:.12g} at E={state.E} eV; the decomposition needs a resonance"
        )
    a = unit_cell_matrix(state.E, state.cell).a
    if math.sqrt(max(0.0, 1.0 - a.real ** 2)) < BAND_EDGE_TOLERANCE:
        raise BandEdgeError(f"E={state.E} eV is on a band edge where q and -q coincide")
    q = forward_q(state.E, window)
    ratio = _tilde_alpha(state.E, state.cell, state.t_n, q)
    one_minus = 1.0 - abs(ratio) ** 2
    if one_minus <= BAND_EDGE_TOLERANCE:
        raise DegenerateDecompositionError(f"|tilde alpha| reaches 1 at E={state.E} eV")
    velocity = group_velocity(state.E, window)
    if velocity.at_edge:
        raise BandEdgeError(f"group velocity vanishes at E={state.E} eV")
    alpha_q = math.sqrt(2.0 * math.pi * state.incident_current / (one_minus * abs(velocity.value)))
    return BlochDecomposition(
        state=state,
        q=q,
        xi=cmath.exp(1j * q * state.cell.period),
        tilde_alpha=ratio,
        alpha_q=alpha_q,
        alpha_minus_q=ratio * alpha_q,
        group_velocity=velocity.value,
    )


def extract_uq(state: ScatteringState, decomposition: BlochDecomposition,
               samples_per_layer: int = SAMPLES_PER_LAYER) -> Tuple[np.ndarray, np.ndarray]:
    """u_q sampled on the reporting grid over all n periods, as (x, u)."""
    x = sample_positions(state, samples_per_layer)
    return x, np.array([decomposition.uq_at(float(value)) for value in x])


def periodicity_residual(state: ScatteringState, decomposition: BlochDecomposition,
                         samples_per_layer: int = SAMPLES_PER_LAYER) -> float:
    """max |u_q(x + p d) - u_q(x)| over x in the first period and p = 1..n-1."""
    d = state.cell.period
    first = [float(x) for x in sample_positions(state, samples_per_layer) if x < d]
    residual = 0.0
    for p in range(1, state.n):
        for x in first:
            residual = max(residual, abs(decomposition.uq_at(x + p * d) - decomposition.uq_at(x)))
    return residual


def reconstruct_psi(state: ScatteringState, decomposition: BlochDecomposition,
                    samples_per_layer: int = SAMPLES_PER_LAYER) -> Tuple[np.ndarray, np.ndarray]:
    """
    Psi rebuilt as alpha_q exp(iqx) u_q + alpha_{-q} exp(-iqx) u_q*, with u_q
    taken from the first period and continued periodically.
    """
    d = state.cell.period
    x = sample_positions(state, samples_per_layer)
    rebuilt = []
    for value in map(float, x):
        u = decomposition.uq_at(min(math.fmod(value, d), d))
        phase = cmath.exp(1j * decomposition.q * value)
        rebuilt.append(decomposition.alpha_q * phase * u
                       + decomposition.alpha_minus_q * phase.conjugate() * u.conjugate())
    return x, np.array(rebuilt)


def reconstruction_residual(state: ScatteringState, decomposition: BlochDecomposition,
                            samples_per_layer: int = SAMPLES_PER_LAYER) -> float:
    x, rebuilt = reconstruct_psi(state, decomposition, samples_per_layer)
    exact = np.array([state.psi(float(value)) for value in x])
    return float(np.max(np.abs(rebuilt - exact)))


def bloch_norm(decomposition: BlochDecomposition, period_index: int = 0) -> float:
    """int |u_q|^2 over one period; d/(2 pi) for a correctly scaled alpha_q."""
    layers = len(decomposition.state.cell.layers)
    if not 0 <= period_index < decomposition.state.n:
        raise DomainError(f"period index must lie in 0..{decomposition.state.n - 1}, got {period_index}")
    total = 0.0
    for segment in decomposition.state.segments[period_index * layers:(period_index + 1) * layers]:
        f = decomposition.phi_coefficients(segment)
        total += _product_integral(_conjugate(f), f, layer_integrals(segment.K2, segment.layer.width)).real
    return total


def velocity_expectation(state: ScatteringState, window: BandWindow) -> VelocityExpectation:
    """
    <v> inside the structure at a resonance, two ways:

        quadrature   Re <Psi|v P|Psi> / <Psi|P|Psi>   (per-layer closed-form integrals)
        closed form  (1 - |tilde alpha|^2)/(1 + |tilde alpha|^2) v_g

    Raises:
        OffResonanceError: the closed form holds only at a resonance
    """
    decomposition = bloch_coefficients(state, window)
    numerator = velocity_numerator(state)
    norm = norm_in_structure(state)
    abs2 = abs(decomposition.tilde_alpha) ** 2
    return VelocityExpectation(
        quadrature=numerator.real / norm,
        closed_form=(1.0 - abs2) / (1.0 + abs2) * abs(decomposition.group_velocity),
        numerator=numerator,
        norm=norm,
    )


def cross_integral_checks(state: ScatteringState, decomposition: BlochDecomposition) -> CrossTermReport:
    """int phi_q phi_q' and int phi_q^2 over [0, L], phi_q = exp(iqx) u_q."""
    phi_dphi, phi_phi, phi_conj_dphi, norm = 0j, 0j, 0j, 0.0
    for segment in state.segments:
        f = decomposition.phi_coefficients(segment)
        df = _derivative(f, segment.K2)
        integrals = layer_integrals(segment.K2, segment.layer.width)
        phi_dphi += _product_integral(f, df, integrals)
        phi_phi += _product_integral(f, f, integrals)
        phi_conj_dphi += _product_integral(_conjugate(f), df, integrals)
        norm += _product_integral(_conjugate(f), f, integrals).real
    return CrossTermReport(phi_dphi, phi_phi, phi_conj_dphi, norm)


def wavefunction_rows(state: ScatteringState, decomposition: Optional[BlochDecomposition] = None,
                      samples_per_layer: int = SAMPLES_PER_LAYER) -> List[Dict[str, float]]:
    """CSV-ready rows: x_nm, re_psi, im_psi, abs2_psi, current (+ u_q columns with a decomposition)."""
    rows = []
    hbar_over_mass = state.cell.hbar_over_mass
    for x, psi, dpsi in state.samples(samples_per_layer):
        row = {
            "x_nm": x,
            "re_psi": psi.real,
            "im_psi": psi.imag,
            "abs2_psi": abs(psi) ** 2,
            "current": hbar_over_mass * (psi.conjugate() * dpsi).imag,
        }
        if decomposition is not None:
            u = decomposition.uq_at(x)
            row.update({"re_u": u.real, "im_u": u.imag, "abs2_u": abs(u) ** 2})
        rows.append(row)
    return rows
