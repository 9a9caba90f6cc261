"""
Physical model of a superlattice unit cell.

Units used everywhere in the package: energies in eV, lengths in nm, masses as
m*/m0, times in fs and velocities in nm/fs. The two half-spaces that embed the
periodic structure sit at zero potential.
"""
import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

from tunnelingErrors import DomainError, PropagatingBarrierError

# CODATA 2018: hbar = 6.582119569e-16 eV s, hbar^2/(2 m_e) = 3.80998212 eV A^2
HBAR_EV_FS = 0.6582119569
HBAR2_OVER_2M0 = 0.0380998212

GAAS_BARRIER_NM = 2.5
GAAS_WELL_NM = 6.5
GAAS_BARRIER_EV = 0.288
GAAS_MASS_RATIO = 0.072
GAAS_PERIODS = 6
GAAS_TEMPERATURE_K = 4.0


@dataclass(frozen=True)
class PhysicalConstants:
    hbar2_over_2m0: float = HBAR2_OVER_2M0
    hbar_ev_fs: float = HBAR_EV_FS


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class Layer:
    width: float
    potential: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.width) or self.width <= 0:
            raise DomainError(f"layer width must be > 0 nm, got {self.width}")
        if not math.isfinite(self.potential):
            raise DomainError(f"layer potential must be finite, got {self.potential}")


@dataclass(frozen=True)
class UnitCell:
    """Ordered stack of constant-potential layers with a common effective mass."""

    layers: Tuple[Layer, ...]
    effective_mass_ratio: float = GAAS_MASS_RATIO
    constants: PhysicalConstants = field(default=CONSTANTS, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise DomainError("a unit cell needs at least one layer")
        if not math.isfinite(self.effective_mass_ratio) or self.effective_mass_ratio <= 0:
            raise DomainError(
                f"effective mass ratio must be > 0, got {self.effective_mass_ratio}"
            )

    @property
    def period(self) -> float:
        return sum(layer.width for layer in self.layers)

    @property
    def mass_factor(self) -> float:
        """2m*/hbar^2 in 1/(eV nm^2), so that K^2 = mass_factor * (E - V)."""
        return self.effective_mass_ratio / self.constants.hbar2_over_2m0

    @property
    def hbar_over_mass(self) -> float:
        """hbar/m* in nm^2/fs."""
        return 2.0 * self.constants.hbar2_over_2m0 / (
            self.effective_mass_ratio * self.constants.hbar_ev_fs
        )

    @property
    def is_free(self) -> bool:
        return self.uniform_potential == 0.0

    @property
    def uniform_potential(self) -> Optional[float]:
        """The common layer potential in eV when every layer shares it, else None."""
        first = self.layers[0].potential
        if all(layer.potential == first for layer in self.layers):
            return first
        return None

    def barrier_well_parameters(self) -> Optional[Tuple[float, float, float]]:
        """(L_b, L_w, V_b) when the cell is a barrier followed by a zero-potential well."""
        if len(self.layers) != 2:
            return None
        barrier, well = self.layers
        if well.potential != 0.0 or barrier.potential <= 0.0:
            return None
        return barrier.width, well.width, barrier.potential

    def shifted(self, delta: float, scope: str = "structure") -> "UnitCell":
        """
        Shift layer potentials by delta (eV); the half-spaces stay at zero.

        Args:
            delta (float): potential shift in eV
            scope (str): "structure" shifts every layer, "barriers" only layers with V > 0

        Returns:
            UnitCell: the shifted cell
        """
        if scope == "structure":
            layers = [replace(layer, potential=layer.potential + delta) for layer in self.layers]
        elif scope == "barriers":
            layers = [
                replace(layer, potential=layer.potential + delta) if layer.potential > 0 else layer
                for layer in self.layers
            ]
        else:
            raise DomainError(f"unknown potential shift scope '{scope}'")
        return replace(self, layers=tuple(layers))

    @classmethod
    def barrier_well(cls, barrier_width: float, well_width: float, barrier_height: float,
                     effective_mass_ratio: float = GAAS_MASS_RATIO) -> "UnitCell":
        return cls(
            layers=(Layer(barrier_width, barrier_height), Layer(well_width, 0.0)),
            effective_mass_ratio=effective_mass_ratio,
        )

    @classmethod
    def gaas_superlattice(cls) -> "UnitCell":
        """GaAs/Al(0.3)Ga(0.7)As cell: 2.5 nm barrier, 6.5 nm well, 288 meV offset."""
        return cls.barrier_well(GAAS_BARRIER_NM, GAAS_WELL_NM, GAAS_BARRIER_EV, GAAS_MASS_RATIO)

    @classmethod
    def free(cls, period: float, effective_mass_ratio: float = GAAS_MASS_RATIO) -> "UnitCell":
        return cls(layers=(Layer(period, 0.0),), effective_mass_ratio=effective_mass_ratio)


def _require_positive_energy(E: float):
    if not E > 0:
        raise DomainError(f"energy must be > 0 eV, got {E}")


def wavevector_well(E: float, cell: UnitCell) -> float:
    """k = sqrt(2 m* E)/hbar in 1/nm (zero-potential layers and half-spaces)."""
    _require_positive_energy(E)
    return math.sqrt(E * cell.mass_factor)


def decay_constant_barrier(E: float, Vb: float, cell: UnitCell) -> float:
    """kappa = sqrt(2 m* (V_b - E))/hbar in 1/nm, for 0 < E < V_b."""
    _require_positive_energy(E)
    if E >= Vb:
        raise PropagatingBarrierError(
            f"E={E} eV is not below the barrier V_b={Vb} eV; use barrier_wavevector"
        )
    return math.sqrt((Vb - E) * cell.mass_factor)


def barrier_wavevector(E: float, Vb: float, cell: UnitCell) -> complex:
    """kappa continued analytically: real below V_b, i*k_b above it."""
    _require_positive_energy(E)
    return cmath.sqrt((Vb - E) * cell.mass_factor)


def c_coefficients(k: float, kappa: float) -> Tuple[float, float]:
    """c_{1,2} = (k/kappa +- kappa/k)/2."""
    if not k > 0 or not kappa > 0:
        raise DomainError(f"c coefficients need k > 0 and kappa > 0, got k={k}, kappa={kappa}")
    c1 = 0.5 * (k / kappa + kappa / k)
    c2 = 0.5 * (k / kappa - kappa / k)
    return c1, c2


def layer_wavevector_squared(E: float, layer: Layer, cell: UnitCell) -> float:
    """K^2 in 1/nm^2; negative inside evanescent layers."""
    return (E - layer.potential) * cell.mass_factor


def free_velocity(E: float, cell: UnitCell) -> float:
    """hbar k / m* in nm/fs, the incident velocity in the half-spaces."""
    return cell.hbar_over_mass * wavevector_well(E, cell)
