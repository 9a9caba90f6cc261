"""
Tables produced from a run configuration: the band sweep (E- or q-parameterized),
the resonance table and the wave-function dump at one resonance.
"""
import csv
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from bandService import BandWindow, bloch_q, energy_at_q, find_band, group_velocity
from blochService import (
    bloch_coefficients,
    dwell_time,
    scattering_state,
    tilde_alpha_closed_form_abs2,
    wavefunction_rows,
)
from configService import SweepConfig
from resonanceService import (
    ResonanceLevel,
    find_resonances,
    phase_time,
    resonant_time,
    resonant_velocity,
    velocity_ratio,
)
from transferMatrix import nth_power_chebyshev, unit_cell_matrix
from tunnelingErrors import (
    DegenerateDecompositionError,
    OutOfBandError,
    SingularPointError,
    UnknownLevelError,
)

SWEEP_COLUMNS = [
    "E_ev", "q_per_nm", "re_a", "im_a", "T_n", "abs_t_unit", "tilde_alpha_abs",
    "v_g", "v_res", "ratio", "tau_phase_fs", "resonance_j",
]
RESONANCE_COLUMNS = [
    "j", "E_ev", "q_per_nm", "T_n", "tau_res_fs", "tau_phase_fs", "tau_dwell_fs",
    "v_g", "v_res", "ratio", "abs_t_unit", "tilde_alpha_abs",
]
WAVEFUNCTION_COLUMNS = ["x_nm", "re_psi", "im_psi", "abs2_psi", "current", "re_u", "im_u", "abs2_u"]

Row = Dict[str, object]
GridPoint = Tuple[float, Optional[int]]


def format_cell(value) -> str:
    """12 significant digits, '.' decimal; None becomes an empty field."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def write_csv(rows: Iterable[Row], header: Sequence[str], path: Optional[str] = None) -> Optional[str]:
    """Write rows under a fixed header to path, or to stdout when path is None."""
    if path is None:
        _write_rows(sys.stdout, rows, header)
        return None
    with open(path, "w", encoding="utf-8", newline="") as file:
        _write_rows(file, rows, header)
    return path


def _write_rows(stream, rows: Iterable[Row], header: Sequence[str]):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(row.get(column)) for column in header])


class SweepService:
    def __init__(self, config: SweepConfig, verbose: bool = False):
        """
        Tables for one configured superlattice.

        Args:
            config (SweepConfig): validated run configuration
            verbose (bool): print progress lines
        """
        self.config = config
        self.cell = config.unit_cell()
        self.n = config.n
        self.verbose = verbose
        self._window: Optional[BandWindow] = None
        self._levels: Optional[List[ResonanceLevel]] = None

    def _log(self, message: str):
        if self.verbose:
            print(message, file=sys.stderr)

    @property
    def window(self) -> BandWindow:
        if self._window is None:
            self._window = find_band(self.cell, self.config.band_index, self.config.energy_scan())
            self._log(
                f"✅ Band {self._window.band_index}: "
                f"[{self._window.E_low:.9g}, {self._window.E_high:.9g}] eV"
            )
        return self._window

    @property
    def levels(self) -> List[ResonanceLevel]:
        if self._levels is None:
            self._levels = find_resonances(
                self.cell, self.n, self.config.band_index, window=self.window, workers=self.config.workers
            )
            self._log(f"✅ Found {len(self._levels)} resonances for n={self.n}")
        return self._levels

    def level(self, j: int) -> ResonanceLevel:
        for level in self.levels:
            if level.j == j:
                return level
        raise UnknownLevelError(j, [level.j for level in self.levels])

    def _map(self, function, items: List) -> List:
        if self.config.workers > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as executor:
                return list(executor.map(function, items))
        return [function(item) for item in items]

    # -----------------------------------------------------------------------
    # sweep
    # -----------------------------------------------------------------------

    def _energy_grid(self) -> List[float]:
        sweep = self.config.sweep
        window = self.window
        lo = sweep.e_min_ev if sweep.e_min_ev is not None else window.E_low
        hi = sweep.e_max_ev if sweep.e_max_ev is not None else window.E_high
        if sweep.e_step_ev is not None:
            count = int(math.floor((hi - lo) / sweep.e_step_ev + 1e-9)) + 1
            grid = lo + sweep.e_step_ev * np.arange(count)
        else:
            grid = np.linspace(lo, hi, sweep.points)
        return [self._open_energy(float(E)) for E in grid]

    def _open_energy(self, E: float) -> float:
        # k vanishes at E = 0 and K at the bottom of a flat band
        window = self.window
        if E <= 0 or (window.is_free and E == window.E_low):
            return window.search_low if window.is_free else 1e-9 * window.width
        return E

    def _q_grid(self) -> List[float]:
        sweep = self.config.sweep
        lo = sweep.q_min_per_nm if sweep.q_min_per_nm is not None else 0.0
        hi = sweep.q_max_per_nm if sweep.q_max_per_nm is not None else math.pi / self.window.d
        if sweep.q_step_per_nm is not None:
            count = int(math.floor((hi - lo) / sweep.q_step_per_nm + 1e-9)) + 1
            return [float(q) for q in lo + sweep.q_step_per_nm * np.arange(count)]
        return [float(q) for q in np.linspace(lo, hi, sweep.points)]

    def sweep_grid(self) -> List[GridPoint]:
        """(E, resonance_j) pairs ordered by the sweep variable, resonances merged in."""
        window = self.window
        resonant = self.levels if self.config.sweep.include_resonances else []
        if self.config.sweep.parameterize == "q":
            keyed = []
            for q in self._q_grid():
                E = energy_at_q(q, window)
                keyed.append((q, self._open_energy(E), None))
        else:
            keyed = [(E, E, None) for E in self._energy_grid()]
        resonance_keys = []
        for level in resonant:
            key = level.q_j if self.config.sweep.parameterize == "q" else level.E_j
            resonance_keys.append((key, level.E_j, level.j))
        keyed = [point for point in keyed
                 if all(abs(point[0] - key) > 1e-12 for key, _, _ in resonance_keys)]
        return [(E, j) for _, E, j in sorted(keyed + resonance_keys, key=lambda point: point[0])]

    def sweep_row(self, point: GridPoint) -> Row:
        E, j = point
        cell, window = self.cell, self.window
        m = unit_cell_matrix(E, cell)
        m_n = nth_power_chebyshev(m, self.n)
        row: Row = {
            "E_ev": E,
            "re_a": m.a.real,
            "im_a": m.a.imag,
            "T_n": m_n.transmission(),
            "abs_t_unit": abs(m.transmission_amplitude()),
            "resonance_j": j,
        }
        try:
            row["tau_phase_fs"] = phase_time(E, cell, self.n)
        except SingularPointError:
            row["tau_phase_fs"] = None
        if not window.contains(E):
            return row
        row["q_per_nm"] = bloch_q(E, window)
        try:
            row["tilde_alpha_abs"] = math.sqrt(max(0.0, tilde_alpha_closed_form_abs2(E, cell)))
        except DegenerateDecompositionError:
            row["tilde_alpha_abs"] = None
        v_g = group_velocity(E, window)
        try:
            ratio = velocity_ratio(E, cell)
        except OutOfBandError:
            return row
        if not v_g.at_edge and not ratio.at_edge:
            row["v_g"] = v_g.value
            row["ratio"] = ratio.value
            row["v_res"] = ratio.value * v_g.value
        return row

    def run_sweep(self) -> List[Row]:
        grid = self.sweep_grid()
        self._log(f"ℹ️ Sweeping {len(grid)} points ({self.config.sweep.parameterize})")
        rows = self._map(self.sweep_row, grid)
        self._log(f"📊 {sum(1 for row in rows if row['resonance_j'] is not None)} resonance rows")
        return rows

    # -----------------------------------------------------------------------
    # resonances and wave functions
    # -----------------------------------------------------------------------

    def resonance_row(self, level: ResonanceLevel) -> Row:
        cell, window = self.cell, self.window
        E = level.E_j
        m = unit_cell_matrix(E, cell)
        ratio = velocity_ratio(E, cell)
        v_g = group_velocity(E, window)
        return {
            "j": level.j,
            "E_ev": E,
            "q_per_nm": level.q_j,
            "T_n": nth_power_chebyshev(m, self.n).transmission(),
            "tau_res_fs": resonant_time(level, cell),
            "tau_phase_fs": phase_time(E, cell, self.n),
            "tau_dwell_fs": dwell_time(scattering_state(E, cell, self.n)),
            "v_g": None if v_g.at_edge else v_g.value,
            "v_res": resonant_velocity(level, cell),
            "ratio": None if ratio.at_edge else ratio.value,
            "abs_t_unit": abs(m.transmission_amplitude()),
            "tilde_alpha_abs": math.sqrt(max(0.0, tilde_alpha_closed_form_abs2(E, cell))),
        }

    def resonance_table(self) -> List[Row]:
        return self._map(self.resonance_row, self.levels)

    def emit_wavefunction(self, j: int) -> List[Row]:
        level = self.level(j)
        state = scattering_state(level.E_j, self.cell, self.n)
        decomposition = bloch_coefficients(state, self.window)
        self._log(f"ℹ️ Level j={j}: E={level.E_j:.12g} eV, |t|^2={abs(state.t_n) ** 2:.12g}")
        return wavefunction_rows(state, decomposition, self.config.output.samples_per_layer)


def run_sweep(config: SweepConfig, verbose: bool = False) -> List[Row]:
    return SweepService(config, verbose).run_sweep()


def resonance_table(config: SweepConfig, verbose: bool = False) -> List[Row]:
    return SweepService(config, verbose).resonance_table()


def emit_wavefunction(config: SweepConfig, j: int, verbose: bool = False) -> List[Row]:
    return SweepService(config, verbose).emit_wavefunction(j)
