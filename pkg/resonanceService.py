"""
Transmission resonances of the n-period structure and the tunneling times and
velocities evaluated at (and, for the phase time, away from) them.
"""
import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from blochService import dwell_time, scattering_state
from bandService import (
    ROOT_MAXITER,
    BandWindow,
    EnergyScan,
    FlaggedValue,
    find_band,
    re_a,
    root_xtol,
)
from potentialModel import UnitCell
from transferMatrix import (
    chebyshev_u,
    richardson_derivative,
    structure_matrix,
    transmission_chebyshev,
    unit_cell_derivatives,
    unit_cell_matrix,
)
from tunnelingErrors import (
    BandEdgeError,
    DomainError,
    OutOfBandError,
    ResonanceNotFoundError,
    SingularPointError,
    StepUnderflowError,
)

BRACKET_STEP_EV = 1e-4
DERIVATIVE_STEP_EV = 1e-6
# finite-difference steps stay below this fraction of hbar/tau_phase
STEP_FRACTION = 1e-2
SINGULAR_TOLERANCE = 1e-14


@dataclass(frozen=True)
class ResonanceLevel:
    n: int
    j: int
    band_index: int
    E_j: float
    q_j: float


@dataclass(frozen=True)
class TimeReport:
    E: float
    n: int
    tau_phase: float
    tau_res: Optional[float]
    tau_dwell: float
    tau_TE: complex
    tau_TV: complex

    def real_times(self) -> List[float]:
        times = [self.tau_phase, self.tau_dwell, self.tau_TE.real, self.tau_TV.real]
        if self.tau_res is not None:
            times.append(self.tau_res)
        return times

    def max_relative_spread(self) -> float:
        """Largest |tau - tau_phase|/tau_phase over the real parts."""
        return max(abs(tau - self.tau_phase) for tau in self.real_times()) / abs(self.tau_phase)


def _bracket_and_polish(window: BandWindow, target: float, step: float) -> Optional[float]:
    cell = window.cell
    f = lambda E: re_a(E, cell) - target
    count = max(2, int(math.ceil(window.width / step)) + 1)
    grid = np.linspace(window.search_low, window.E_high, count)
    prev_E, prev_f = float(grid[0]), f(float(grid[0]))
    for E in grid[1:]:
        E = float(E)
        value = f(E)
        if value == 0.0:
            return E
        if prev_f * value < 0:
            return brentq(f, prev_E, E, xtol=root_xtol(window.width), maxiter=ROOT_MAXITER)
        prev_E, prev_f = E, value
    return None


def level_at(window: BandWindow, n: int, j: int, step: float = BRACKET_STEP_EV) -> Optional[ResonanceLevel]:
    """The level with Re{a} = cos(j pi/n) inside the band, or None if not bracketed."""
    if not 1 <= j <= n - 1:
        raise DomainError(f"resonance index j must lie in 1..{n - 1}, got {j}")
    step = min(step, window.width / (4.0 * n))
    E = _bracket_and_polish(window, math.cos(j * math.pi / n), step)
    if E is None:
        return None
    return ResonanceLevel(n, j, window.band_index, E, j * math.pi / (n * window.d))


def find_resonances(cell: UnitCell, n: int, band_index: int = 1,
                    window: Optional[BandWindow] = None,
                    scan: EnergyScan = EnergyScan(), workers: int = 1) -> List[ResonanceLevel]:
    """
    All n-1 transmission resonances of the n-period structure in one band.

    Args:
        cell (UnitCell): the period
        n (int): number of periods, >= 2
        band_index (int): miniband, counted from 1
        window (BandWindow, optional): an already located band
        scan (EnergyScan): band search window when `window` is not given
        workers (int): threads used to polish the levels

    Returns:
        list: ResonanceLevel objects ordered by energy
    """
    if n < 2:
        raise DomainError(f"resonances need n >= 2 periods, got {n}")
    if window is None:
        window = find_band(cell, band_index, scan)
    js = list(range(1, n))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            found = list(executor.map(lambda j: level_at(window, n, j), js))
    else:
        found = [level_at(window, n, j) for j in js]
    missing = [j for j, level in zip(js, found) if level is None]
    if missing:
        raise ResonanceNotFoundError(
            f"band {window.band_index} window misses resonances j={missing}", missing
        )
    return sorted(found, key=lambda level: level.E_j)


def resonance_levels_for_q(cell: UnitCell, n_values: Iterable[int], qd_over_pi: Fraction = Fraction(1, 2),
                           window: Optional[BandWindow] = None) -> List[ResonanceLevel]:
    """
    One level per n at the same Bloch wavenumber q = qd_over_pi * pi/d, i.e. j = n * qd_over_pi.

    Raises:
        DomainError: when n * qd_over_pi is not an integer in 1..n-1
    """
    window = window or find_band(cell, 1)
    levels = []
    for n in n_values:
        j = n * Fraction(qd_over_pi)
        if j.denominator != 1 or not 1 <= j < n:
            raise DomainError(f"q d = {qd_over_pi} pi is not a resonance of n={n} periods")
        level = level_at(window, n, int(j))
        if level is None:
            raise ResonanceNotFoundError(f"no level at q d = {qd_over_pi} pi for n={n}", [int(j)])
        levels.append(level)
    return levels


def phase_time(E: float, cell: UnitCell, n: int) -> float:
    """
    Closed-form phase time of n periods in fs:

        tau = hbar T [ (n - Re{a} U_{2n-1}/2) Im{a}/(1 - Re^2{a}) dRe{a}/dE
                       - U_{2n-1} dIm{a}/dE / 2 ]
    """
    m = unit_cell_matrix(E, cell)
    x, y = m.a.real, m.a.imag
    if abs(1.0 - x * x) < SINGULAR_TOLERANCE:
        raise SingularPointError(f"phase time is singular at |Re a| = 1 (E={E} eV)")
    d_re, d_im = unit_cell_derivatives(E, cell)
    u = chebyshev_u(2 * n - 1, x)
    T = transmission_chebyshev(m, n)
    hbar = cell.constants.hbar_ev_fs
    return hbar * T * ((n - 0.5 * x * u) * y / (1.0 - x * x) * d_re - 0.5 * u * d_im)


def _transmission_amplitude(E: float, cell: UnitCell, n: int) -> complex:
    return structure_matrix(E, cell, n).transmission_amplitude()


def derivative_step(E: float, cell: UnitCell, n: int) -> float:
    """
    Default finite-difference step in eV at E: DERIVATIVE_STEP_EV, reduced on slow
    resonances so that it stays a small fraction of the resonance width hbar/tau_phase.
    """
    try:
        tau = abs(phase_time(E, cell, n))
    except SingularPointError:
        return DERIVATIVE_STEP_EV
    if tau == 0.0:
        return DERIVATIVE_STEP_EV
    return min(DERIVATIVE_STEP_EV, STEP_FRACTION * cell.constants.hbar_ev_fs / tau)


def phase_time_numeric(E: float, cell: UnitCell, n: int, h: Optional[float] = None) -> float:
    """hbar d(arg t)/dE from an unwrapped five-point stencil; h defaults to derivative_step."""
    if h is None:
        h = derivative_step(E, cell, n)
    _check_step(E, h)
    energies = E + h * np.array([-2.0, -1.0, 1.0, 2.0])
    phases = np.unwrap([cmath.phase(_transmission_amplitude(float(x), cell, n)) for x in energies])
    derivative = (phases[0] - 8.0 * phases[1] + 8.0 * phases[2] - phases[3]) / (12.0 * h)
    return cell.constants.hbar_ev_fs * float(derivative)


def _level_unit_cell(level: ResonanceLevel, cell: UnitCell) -> Tuple[float, float, float]:
    m = unit_cell_matrix(level.E_j, cell)
    x, y = m.a.real, m.a.imag
    if abs(1.0 - x * x) < SINGULAR_TOLERANCE:
        raise BandEdgeError(f"level j={level.j} sits on a band edge")
    d_re, _ = unit_cell_derivatives(level.E_j, cell)
    return x, y, d_re


def resonant_time(level: ResonanceLevel, cell: UnitCell) -> float:
    """tau_res = hbar n Im{a}/(1 - Re^2{a}) dRe{a}/dE in fs."""
    x, y, d_re = _level_unit_cell(level, cell)
    return cell.constants.hbar_ev_fs * level.n * y / (1.0 - x * x) * d_re


def resonant_velocity(level: ResonanceLevel, cell: UnitCell) -> float:
    """v_res = d (1 - Re^2{a}) / (hbar (-Im{a}) (-dRe{a}/dE)) in nm/fs; independent of n."""
    x, y, d_re = _level_unit_cell(level, cell)
    return cell.period * (1.0 - x * x) / (cell.constants.hbar_ev_fs * (-y) * (-d_re))


def resonant_velocity_t_form(level: ResonanceLevel, cell: UnitCell) -> float:
    """
    v_res from the unit-cell transmission amplitude t = 1/a.

    The derivative is taken of Re{t}/|t|^2, which is the form that agrees with
    resonant_velocity; differentiating Re{t} alone does not.
    """
    E = level.E_j
    a = unit_cell_matrix(E, cell).a
    d_re, d_im = unit_cell_derivatives(E, cell)
    t = 1.0 / a
    dt = -t * t * complex(d_re, d_im)
    abs2 = abs(t) ** 2
    d_abs2 = 2.0 * (t.conjugate() * dt).real
    d_reduced = (dt.real * abs2 - t.real * d_abs2) / abs2 ** 2
    numerator = abs2 ** 2 - t.real ** 2
    hbar = cell.constants.hbar_ev_fs
    return cell.period * numerator / (abs2 * t.imag) / (hbar * -d_reduced)


def velocity_ratio(E: float, cell: UnitCell) -> FlaggedValue:
    """v_res/v_g = sqrt(1 - Re^2{a})/|Im{a}|; 0 flagged at the band edges."""
    a = unit_cell_matrix(E, cell).a
    x, y = a.real, a.imag
    if abs(x) > 1.0 + 1e-12:
        raise OutOfBandError(f"E={E} eV is in a gap (Re a = {x})")
    root = math.sqrt(max(0.0, 1.0 - x * x))
    if root <= 1e-12:
        return FlaggedValue(0.0, True)
    return FlaggedValue(root / abs(y), False)


def velocity_ratio_t_form(E: float, cell: UnitCell) -> float:
    """sqrt(|t|^4 - Re^2{t})/|Im{t}| with t = 1/a of the unit cell."""
    t = 1.0 / unit_cell_matrix(E, cell).a
    return math.sqrt(max(0.0, abs(t) ** 4 - t.real ** 2)) / abs(t.imag)


def _check_step(E: float, h: float):
    if not h > 0 or E + h == E or E - 2.0 * h <= 0:
        raise StepUnderflowError(f"finite-difference step {h} eV unusable at E={E} eV")


def tunneling_time_tTE(E: float, cell: UnitCell, n: int, h: Optional[float] = None) -> complex:
    """tau_T^E = -i hbar d ln t/dE in fs (Richardson central difference)."""
    if h is None:
        h = derivative_step(E, cell, n)
    _check_step(E, h)
    t0 = _transmission_amplitude(E, cell, n)
    if t0 == 0:
        raise SingularPointError(f"t^(n) vanishes at E={E} eV")
    log_ratio = lambda delta: cmath.log(_transmission_amplitude(E + delta, cell, n) / t0)
    derivative = richardson_derivative(log_ratio, 0.0, h)
    return -1j * cell.constants.hbar_ev_fs * derivative


def tunneling_time_tTV(E: float, cell: UnitCell, n: int, delta_v: Optional[float] = None,
                       scope: str = "structure") -> complex:
    """
    tau_T^V = i hbar d ln t/dV in fs, V being a uniform shift of the layer potentials.

    Args:
        E (float): energy in eV
        cell (UnitCell): the period
        n (int): number of periods
        delta_v (float, optional): finite-difference step of the shift in eV,
            derivative_step(E, cell, n) when omitted
        scope (str): "structure" shifts every layer, "barriers" only layers with V > 0

    Returns:
        complex: the time in fs
    """
    if delta_v is None:
        delta_v = derivative_step(E, cell, n)
    if not delta_v > 0 or E + delta_v == E:
        raise StepUnderflowError(f"potential step {delta_v} eV unusable at E={E} eV")
    t0 = _transmission_amplitude(E, cell, n)
    if t0 == 0:
        raise SingularPointError(f"t^(n) vanishes at E={E} eV")
    log_ratio = lambda delta: cmath.log(
        _transmission_amplitude(E, cell.shifted(delta, scope), n) / t0
    )
    derivative = richardson_derivative(log_ratio, 0.0, delta_v)
    return 1j * cell.constants.hbar_ev_fs * derivative


def time_report(E: float, cell: UnitCell, n: int, level: Optional[ResonanceLevel] = None) -> TimeReport:
    """All tunneling-time definitions at one energy; tau_res only when a level is given."""
    state = scattering_state(E, cell, n)
    return TimeReport(
        E=E,
        n=n,
        tau_phase=phase_time(E, cell, n),
        tau_res=resonant_time(level, cell) if level is not None else None,
        tau_dwell=dwell_time(state),
        tau_TE=tunneling_time_tTE(E, cell, n),
        tau_TV=tunneling_time_tTV(E, cell, n),
    )
