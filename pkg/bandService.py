"""
Minibands of the infinite periodic medium: band windows, Bloch wavenumbers and
group velocities from the dispersion relation Re{a(E)} = cos(qd).
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from potentialModel import UnitCell
from transferMatrix import unit_cell_derivatives, unit_cell_matrix
from tunnelingErrors import BandNotFoundError, DomainError, OutOfBandError

ROOT_XTOL_EV = 1e-13
ROOT_XTOL_RELATIVE = 1e-12
ROOT_MAXITER = 200
EDGE_TOLERANCE_EV = 1e-12


@dataclass(frozen=True)
class EnergyScan:
    E_min: float = 1e-6
    E_max: float = 1.0
    step: float = 1e-4

    def __post_init__(self):
        if self.step <= 0:
            raise DomainError(f"scan step must be > 0, got {self.step}")
        if not 0 < self.E_min < self.E_max:
            raise DomainError(f"scan window must satisfy 0 < E_min < E_max, got {self.E_min}, {self.E_max}")

    def grid(self) -> np.ndarray:
        count = int(math.floor((self.E_max - self.E_min) / self.step)) + 1
        return self.E_min + self.step * np.arange(count)


@dataclass(frozen=True)
class FlaggedValue:
    """A value that degenerates at a band edge; at_edge marks the degenerate case."""
    value: float
    at_edge: bool = False

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class BandWindow:
    band_index: int
    E_low: float
    E_high: float
    d: float
    cell: UnitCell = field(repr=False, compare=False)
    is_free: bool = False

    @property
    def width(self) -> float:
        return self.E_high - self.E_low

    def contains(self, E: float, tolerance: float = EDGE_TOLERANCE_EV) -> bool:
        return self.E_low - tolerance <= E <= self.E_high + tolerance

    def edges(self) -> Tuple[float, float]:
        return self.E_low, self.E_high

    @property
    def search_low(self) -> float:
        """Lowest energy safe to evaluate: the wavevector vanishes at the bottom of a flat band."""
        if self.is_free and (self.band_index == 1 or self.E_low == 0.0):
            return self.E_low + 1e-9 * self.width
        return self.E_low


@dataclass(frozen=True)
class DispersionPoint:
    E: float
    q: float
    band_index: int

    def xi(self, d: float) -> complex:
        """exp(i q d)"""
        return complex(math.cos(self.q * d), math.sin(self.q * d))


def re_a(E: float, cell: UnitCell) -> float:
    return unit_cell_matrix(E, cell).a.real


def root_xtol(width: float) -> float:
    """brentq tolerance in eV for roots inside a band of the given width."""
    return min(ROOT_XTOL_EV, ROOT_XTOL_RELATIVE * width)


def _polish_edge(cell: UnitCell, lo: float, hi: float) -> float:
    """Root of |Re a| = 1 between lo and hi, with Re a on the side of hi's sign."""
    target = 1.0 if re_a(hi, cell) + re_a(lo, cell) > 0 else -1.0
    f = lambda E: re_a(E, cell) - target
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    return brentq(f, lo, hi, xtol=ROOT_XTOL_EV, maxiter=ROOT_MAXITER)


def _uniform_band(cell: UnitCell, band_index: int) -> BandWindow:
    """Band p of a flat potential V0: K d in [(p-1) pi, p pi], edges cut at E = 0."""
    d = cell.period
    mu = cell.mass_factor
    V0 = cell.uniform_potential
    E_low = V0 + ((band_index - 1) * math.pi / d) ** 2 / mu
    E_high = V0 + (band_index * math.pi / d) ** 2 / mu
    if E_high <= 0:
        raise BandNotFoundError(f"band {band_index} of the flat {V0} eV potential lies below E = 0")
    return BandWindow(band_index, max(0.0, E_low), E_high, d, cell, is_free=True)


def scan_bands(cell: UnitCell, scan: EnergyScan = EnergyScan(), count: int = 1) -> List[BandWindow]:
    """
    Locate the first `count` minibands by scanning |Re a| - 1 upward in energy.

    Args:
        cell (UnitCell): the period
        scan (EnergyScan): window and step of the coarse scan
        count (int): number of bands wanted

    Returns:
        list: BandWindow per band, lowest first; None for a band cut by the scan
        start, and fewer entries if the window ends early
    """
    if cell.uniform_potential is not None:
        return [_uniform_band(cell, p) for p in range(1, count + 1)]

    d = cell.period
    bands: List[Optional[BandWindow]] = []
    prev_E, prev_inside = None, False
    lower: Optional[float] = None
    for i, E in enumerate(scan.grid()):
        E = float(E)
        inside = abs(re_a(E, cell)) <= 1.0
        if i == 0:
            # a band already open at the scan start has no locatable lower edge
            lower = None
        elif inside and not prev_inside:
            lower = _polish_edge(cell, prev_E, E)
        elif prev_inside and not inside:
            # truncated bands are kept as None so band indices stay reproducible
            if lower is None:
                bands.append(None)
            else:
                upper = _polish_edge(cell, prev_E, E)
                bands.append(BandWindow(len(bands) + 1, lower, upper, d, cell))
            lower = None
            if len(bands) == count:
                break
        prev_E, prev_inside = E, inside
    return bands


def find_band(cell: UnitCell, band_index: int = 1, scan: EnergyScan = EnergyScan()) -> BandWindow:
    """The band_index-th miniband, edges polished to |Re a| = 1."""
    if band_index < 1:
        raise DomainError(f"band index starts at 1, got {band_index}")
    if cell.uniform_potential is not None:
        return _uniform_band(cell, band_index)
    bands = scan_bands(cell, scan, band_index)
    if len(bands) < band_index or bands[band_index - 1] is None:
        raise BandNotFoundError(
            f"band {band_index} not found in [{scan.E_min}, {scan.E_max}] eV "
            f"(scan step {scan.step} eV)"
        )
    return bands[band_index - 1]


def find_bands(cell: UnitCell, count: int, scan: EnergyScan = EnergyScan()) -> List[BandWindow]:
    bands = scan_bands(cell, scan, count)
    if len(bands) < count or any(band is None for band in bands):
        raise BandNotFoundError(f"fewer than {count} complete bands in [{scan.E_min}, {scan.E_max}] eV")
    return bands


def _require_in_band(E: float, window: BandWindow):
    if not window.contains(E):
        raise OutOfBandError(
            f"E={E} eV lies outside band {window.band_index} "
            f"[{window.E_low}, {window.E_high}] eV"
        )


def bloch_q(E: float, window: BandWindow) -> float:
    """Principal Bloch wavenumber q = arccos(Re a)/d in [0, pi/d]."""
    _require_in_band(E, window)
    x = min(1.0, max(-1.0, re_a(E, window.cell)))
    return math.acos(x) / window.d


def dispersion_point(E: float, window: BandWindow) -> DispersionPoint:
    return DispersionPoint(E, bloch_q(E, window), window.band_index)


def energy_at_q(q: float, window: BandWindow) -> float:
    """Inverse dispersion E(q) inside the band, q in [0, pi/d]."""
    qd = q * window.d
    if not -1e-12 <= qd <= math.pi + 1e-12:
        raise DomainError(f"q d must lie in [0, pi], got {qd}")
    qd = min(math.pi, max(0.0, qd))
    if window.is_free:
        p = window.band_index
        kd = (p - 1) * math.pi + qd if p % 2 == 1 else p * math.pi - qd
        E = window.cell.uniform_potential + (kd / window.d) ** 2 / window.cell.mass_factor
        return min(window.E_high, max(window.E_low, E))
    target = math.cos(qd)
    f = lambda E: re_a(E, window.cell) - target
    f_lo, f_hi = f(window.E_low), f(window.E_high)
    if abs(f_lo) <= 1e-14 or abs(f_hi) <= 1e-14 or f_lo * f_hi > 0:
        # q at a zone boundary: the polished edges only reach |Re a| = 1 to ~1e-10
        return window.E_low if abs(f_lo) <= abs(f_hi) else window.E_high
    return brentq(f, window.E_low, window.E_high, xtol=root_xtol(window.width), maxiter=ROOT_MAXITER)


def group_velocity(E: float, window: BandWindow) -> FlaggedValue:
    """
    v_g = d sqrt(1 - Re^2{a}) / (hbar * (-dRe{a}/dE)) in nm/fs.

    Returns 0 flagged at_edge when sqrt(1 - Re^2 a) vanishes.
    """
    _require_in_band(E, window)
    cell = window.cell
    x = re_a(E, cell)
    root = math.sqrt(max(0.0, 1.0 - x * x))
    if root <= 1e-12:
        return FlaggedValue(0.0, True)
    d_re, _ = unit_cell_derivatives(E, cell)
    hbar = cell.constants.hbar_ev_fs
    return FlaggedValue(window.d * root / (hbar * -d_re), False)
