"""
Numerical self-check of a configured superlattice: matrix identities, resonance
structure, coincidence of the tunneling times, velocity equivalences and the
Bloch-decomposition identities. Every check reports a residual and its tolerance.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np

from bandService import BandWindow, find_band, group_velocity
from blochService import (
    cross_integral_checks,
    bloch_coefficients,
    bloch_norm,
    dwell_time,
    dwell_time_quadrature,
    periodicity_residual,
    probability_current,
    reconstruction_residual,
    scattering_state,
    tilde_alpha,
    tilde_alpha_closed_form_abs2,
    velocity_expectation,
    velocity_numerator,
)
from configService import SweepConfig
from potentialModel import UnitCell
from resonanceService import (
    ResonanceLevel,
    find_resonances,
    phase_time,
    phase_time_numeric,
    resonance_levels_for_q,
    resonant_time,
    resonant_velocity,
    resonant_velocity_t_form,
    tunneling_time_tTE,
    tunneling_time_tTV,
    velocity_ratio,
)
from transferMatrix import NPeriodMatrix, TransferMatrix, nth_power_chebyshev, nth_power_product, unit_cell_matrix
from tunnelingErrors import TunnelingError

PowerFunction = Callable[[TransferMatrix, int], NPeriodMatrix]

DETERMINANT_POINTS = 10_000
CHEBYSHEV_MAX_N = 50
CHEBYSHEV_ENERGIES = 100
BOUND_MAX_N = 12
TILDE_ALPHA_PERIODS = (2, 3, 6, 12)
RANDOM_SEED = 20


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return math.isfinite(self.residual) and self.residual <= self.tolerance

    def line(self) -> str:
        glyph = "✅" if self.passed else "❌"
        text = f"{glyph} {self.name}: residual={self.residual:.3e} tol={self.tolerance:.1e}"
        return f"{text} ({self.detail})" if self.detail else text


@dataclass
class VerificationReport:
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def check(self, name: str) -> CheckResult:
        for result in self.checks:
            if result.name == name:
                return result
        raise KeyError(name)


def _relative(x: float, y: float) -> float:
    return abs(x - y) / max(abs(y), 1e-300)


class VerificationService:
    def __init__(self, config: SweepConfig, power: PowerFunction = nth_power_chebyshev, verbose: bool = False):
        """
        Args:
            config (SweepConfig): the superlattice and number of periods to check
            power (callable): M -> M^n, replaceable to check a different power routine
            verbose (bool): print one line per check
        """
        self.config = config
        self.tolerances = config.tolerances
        self.cell: UnitCell = config.unit_cell()
        self.n = config.n
        self.power = power
        self.verbose = verbose
        self.report = VerificationReport()
        self._window = None
        self._levels = None

    @property
    def window(self) -> BandWindow:
        if self._window is None:
            self._window = find_band(self.cell, self.config.band_index, self.config.energy_scan())
        return self._window

    @property
    def levels(self) -> List[ResonanceLevel]:
        if self._levels is None:
            self._levels = find_resonances(self.cell, self.n, self.config.band_index,
                                           window=self.window, workers=self.config.workers)
        return self._levels

    def _record(self, name: str, residual: float, tolerance: float, detail: str = ""):
        result = CheckResult(name, float(residual), tolerance, detail)
        self.report.checks.append(result)
        if self.verbose:
            print(result.line())

    def _guarded(self, name: str, check: Callable[[], None]):
        try:
            check()
        except (TunnelingError, ArithmeticError, ValueError, RuntimeError) as e:
            self._record(name, math.inf, 0.0, f"{type(e).__name__}: {e}")

    def _energy_range(self):
        top = max(layer.potential for layer in self.cell.layers)
        if top <= 0:
            top = self.window.E_high
        return max(self.config.scan.e_min_ev, 1e-6), top

    # -----------------------------------------------------------------------
    # transfer matrices
    # -----------------------------------------------------------------------

    def check_determinant(self):
        lo, hi = self._energy_range()
        residual = 0.0
        for E in np.linspace(lo, hi, DETERMINANT_POINTS):
            m = unit_cell_matrix(float(E), self.cell)
            m_n = self.power(m, self.n)
            residual = max(
                residual,
                abs(m.determinant() - 1.0) / max(1.0, abs(m.a) ** 2),
                abs(m_n.determinant() - 1.0) / max(1.0, abs(m_n.a) ** 2),
            )
        self._record("determinant", residual, self.tolerances.determinant,
                     f"{DETERMINANT_POINTS} energies in [{lo:.3g}, {hi:.3g}] eV, relative to |a|^2")

    def check_chebyshev_power(self):
        lo, hi = self._energy_range()
        rng = np.random.default_rng(RANDOM_SEED)
        residual = 0.0
        for E in rng.uniform(lo, hi, CHEBYSHEV_ENERGIES):
            m = unit_cell_matrix(float(E), self.cell)
            for n in range(2, CHEBYSHEV_MAX_N + 1):
                fast, slow = self.power(m, n), nth_power_product(m, n)
                scale = abs(slow.a)
                residual = max(residual, abs(fast.a - slow.a) / scale, abs(fast.b - slow.b) / scale)
        self._record("chebyshev power vs product", residual, self.tolerances.chebyshev,
                     f"n=2..{CHEBYSHEV_MAX_N}, {CHEBYSHEV_ENERGIES} energies")

    # -----------------------------------------------------------------------
    # resonances and times
    # -----------------------------------------------------------------------

    def check_resonances(self):
        levels = self.levels
        self._record("resonance count", abs(len(levels) - (self.n - 1)), 0.0, f"{len(levels)} levels")
        t_residual, amplitude_residual = 0.0, 0.0
        for level in levels:
            m_n = self.power(unit_cell_matrix(level.E_j, self.cell), self.n)
            t_residual = max(t_residual, 1.0 - m_n.transmission())
            amplitude_residual = max(amplitude_residual, abs(m_n.transmission_amplitude() - (-1) ** level.j))
        self._record("resonance transmission", t_residual, self.tolerances.resonance_transmission)
        self._record("resonance amplitude (-1)^j", amplitude_residual, self.tolerances.resonance_amplitude)

    def check_times(self):
        dwell, tau_te, tau_tv, numeric, quadrature, resonant = 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
        for level in self.levels:
            E = level.E_j
            tau_phase = phase_time(E, self.cell, self.n)
            state = scattering_state(E, self.cell, self.n)
            tau_dwell = dwell_time(state)
            dwell = max(dwell, _relative(tau_dwell, tau_phase))
            quadrature = max(quadrature, _relative(dwell_time_quadrature(state), tau_dwell))
            resonant = max(resonant, _relative(resonant_time(level, self.cell), tau_phase))
            numeric = max(numeric, _relative(phase_time_numeric(E, self.cell, self.n), tau_phase))
            te = tunneling_time_tTE(E, self.cell, self.n)
            tau_te = max(tau_te, abs(te.imag) / abs(te.real))
            tau_tv = max(tau_tv, _relative(tunneling_time_tTV(E, self.cell, self.n).real, tau_phase))
        self._record("dwell time = phase time", dwell, self.tolerances.dwell_time)
        self._record("resonant time = phase time", resonant, self.tolerances.dwell_time)
        self._record("dwell time closed form vs quadrature", quadrature, self.tolerances.dwell_time)
        self._record("phase time vs unwrapped difference", numeric, self.tolerances.tau_te_imaginary)
        self._record("Im tau_T^E at resonance", tau_te, self.tolerances.tau_te_imaginary)
        self._record("tau_T^V = phase time", tau_tv, self.tolerances.tau_tv)

    # -----------------------------------------------------------------------
    # velocities
    # -----------------------------------------------------------------------

    def check_velocities(self):
        length = self.n * self.cell.period
        pairwise, t_form, closed_form, hermiticity = 0.0, 0.0, 0.0, 0.0
        for level in self.levels:
            state = scattering_state(level.E_j, self.cell, self.n)
            from_time = length / resonant_time(level, self.cell)
            a_form = resonant_velocity(level, self.cell)
            expectation = velocity_expectation(state, self.window)
            pairwise = max(pairwise, _relative(from_time, a_form), _relative(expectation.quadrature, a_form),
                           _relative(expectation.quadrature, from_time))
            t_form = max(t_form, _relative(resonant_velocity_t_form(level, self.cell), a_form))
            closed_form = max(closed_form, expectation.relative_difference)
            hermiticity = max(hermiticity, expectation.hermiticity_residual)
        self._record("v_res = L/tau_res = <v>", pairwise, self.tolerances.velocity)
        self._record("v_res a-form vs t-form", t_form, self.tolerances.tilde_alpha)
        self._record("<v> quadrature vs closed form", closed_form, self.tolerances.velocity)
        self._record("<v> numerator hermiticity", hermiticity, self.tolerances.current)

    def check_velocity_bound(self):
        excess, equality = 0.0, 0.0
        for n in range(2, BOUND_MAX_N + 1):
            for level in find_resonances(self.cell, n, self.config.band_index, window=self.window):
                v_res = resonant_velocity(level, self.cell)
                abs_t = abs(unit_cell_matrix(level.E_j, self.cell).transmission_amplitude())
                bound = abs_t * abs(group_velocity(level.E_j, self.window).value)
                excess = max(excess, v_res / bound - 1.0)
                if 2 * level.j == n:
                    equality = max(equality, _relative(v_res, bound))
        self._record("v_res <= |t| v_g", max(0.0, excess), self.tolerances.bound_equality,
                     f"n=2..{BOUND_MAX_N}")
        self._record("v_res = |t| v_g at q d = pi/2", equality, self.tolerances.bound_equality)

    def check_n_invariance(self):
        levels = resonance_levels_for_q(self.cell, (2, 4, 6), window=self.window)
        velocities = [resonant_velocity(level, self.cell) for level in levels]
        residual = (max(velocities) - min(velocities)) / max(velocities)
        self._record("v_res independent of n at q d = pi/2", residual, self.tolerances.tilde_alpha)

    def check_reference_orderings(self):
        """Known orderings for the six-period GaAs/AlGaAs cell."""
        if self.cell != UnitCell.gaas_superlattice() or self.n != 6 or self.config.band_index != 1:
            return
        levels = self.levels
        v_g = [group_velocity(level.E_j, self.window).value for level in levels]
        v_res = [resonant_velocity(level, self.cell) for level in levels]
        j_vg = levels[int(np.argmax(v_g))].j
        j_vres = levels[int(np.argmax(v_res))].j
        self._record("max v_g at j=4", abs(j_vg - 4), 0.0, f"argmax j={j_vg}")
        self._record("max v_res at j=3", abs(j_vres - 3), 0.0, f"argmax j={j_vres}")
        ratios = [velocity_ratio(float(E), self.cell).value
                  for E in np.linspace(self.window.E_low, self.window.E_high, 2001)[1:-1]]
        self._record("v_res/v_g below one third", max(ratios), 1.0 / 3.0)

    # -----------------------------------------------------------------------
    # Bloch decomposition
    # -----------------------------------------------------------------------

    def _interior_energies(self, count: int) -> List[float]:
        window = self.window
        return [float(E) for E in np.linspace(window.E_low, window.E_high, count + 2)[1:-1]]

    def check_tilde_alpha(self):
        n_residual, closed_residual = 0.0, 0.0
        for E in self._interior_energies(25):
            moduli = [abs(tilde_alpha(E, self.cell, n, self.window)) for n in TILDE_ALPHA_PERIODS]
            n_residual = max(n_residual, max(moduli) - min(moduli))
            closed_residual = max(closed_residual, abs(moduli[0] ** 2 - tilde_alpha_closed_form_abs2(E, self.cell)))
        self._record("|tilde alpha| independent of n", n_residual, self.tolerances.tilde_alpha)
        self._record("|tilde alpha|^2 closed form", closed_residual, self.tolerances.tilde_alpha)
        if not self.window.is_free:
            edge = max(1.0 - abs(tilde_alpha(E, self.cell, self.n, self.window))
                       for E in self.window.edges())
            self._record("|tilde alpha| = 1 at band edges", edge, self.tolerances.band_edge_alpha)

    def check_bloch_states(self):
        d = self.cell.period
        norm, reconstruction, periodic, cross, current, numerator = 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
        for level in self.levels:
            state = scattering_state(level.E_j, self.cell, self.n)
            decomposition = bloch_coefficients(state, self.window)
            norm = max(norm, _relative(bloch_norm(decomposition), d / (2.0 * math.pi)))
            reconstruction = max(reconstruction, reconstruction_residual(state, decomposition))
            periodic = max(periodic, periodicity_residual(state, decomposition))
            report = cross_integral_checks(state, decomposition)
            cross = max(cross, report.phi_dphi_residual, report.phi_phi_residual)
            j = probability_current(state)
            current = max(current, float(np.std(j) / np.mean(j)))
            numerator = max(numerator, _relative(velocity_numerator(state).real,
                                                 state.incident_current * state.length))
        self._record("u_q normalization d/(2 pi)", norm, self.tolerances.cross_terms)
        self._record("Psi rebuilt from u_q", reconstruction, self.tolerances.cross_terms)
        self._record("u_q periodicity", periodic, self.tolerances.cross_terms)
        self._record("cross integrals vanish", cross, self.tolerances.cross_terms)
        self._record("current constancy", current, self.tolerances.current)
        self._record("<Psi|v|Psi> = j_in L", numerator, self.tolerances.velocity)

    def run(self) -> VerificationReport:
        checks = [
            ("determinant", self.check_determinant),
            ("chebyshev power vs product", self.check_chebyshev_power),
            ("resonances", self.check_resonances),
            ("times", self.check_times),
            ("velocities", self.check_velocities),
            ("velocity bound", self.check_velocity_bound),
            ("n invariance", self.check_n_invariance),
            ("claims", self.check_reference_orderings),
            ("tilde alpha", self.check_tilde_alpha),
            ("bloch states", self.check_bloch_states),
        ]
        for name, check in checks:
            self._guarded(name, check)
        if self.verbose:
            glyph = "✅" if self.report.passed else "❌"
            print(f"📊 {glyph} {len(self.report.checks) - len(self.report.failures)}/{len(self.report.checks)} checks passed")
        return self.report


def run_verify(config: SweepConfig, power: PowerFunction = nth_power_chebyshev,
               verbose: bool = False) -> VerificationReport:
    return VerificationService(config, power, verbose).run()
