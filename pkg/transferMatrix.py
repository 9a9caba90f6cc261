"""
Complex 2x2 transfer matrices of one-dimensional layer stacks.

Convention: the plane-wave coefficients on the left of a region equal M times
the coefficients on the right, each referenced to its own interface, so a free
region of length d has a = exp(-ikd) and b = 0. With det M = 1 the matrix is
fixed by the pair (a, b):

    M = [[a, b], [b*, a*]],   t = 1/a,   r = b*/a
"""
import cmath
import math
from dataclasses import dataclass
from typing import Callable, Tuple

from potentialModel import (
    Layer,
    UnitCell,
    barrier_wavevector,
    layer_wavevector_squared,
    wavevector_well,
)
from tunnelingErrors import DomainError

# below this |K w| sin(Kw)/K and sinh(kw)/k switch to their Taylor series
SMALL_PHASE = 1e-5
# below this |K w| the cancellation-prone derivative uses its series
SERIES_PHASE = 0.1

RealMatrix = Tuple[float, float, float, float]
IDENTITY_2X2: RealMatrix = (1.0, 0.0, 0.0, 1.0)
ZERO_2X2: RealMatrix = (0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class TransferMatrix:
    a: complex
    b: complex

    @classmethod
    def identity(cls) -> "TransferMatrix":
        return cls(1.0 + 0j, 0j)

    def determinant(self) -> float:
        return abs(self.a) ** 2 - abs(self.b) ** 2

    def inverse(self) -> "TransferMatrix":
        return TransferMatrix(self.a.conjugate(), -self.b)

    def compose(self, other: "TransferMatrix") -> "TransferMatrix":
        return compose(self, other)

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        return compose(self, other)

    def transmission_amplitude(self) -> complex:
        return 1.0 / self.a

    def reflection_amplitude(self) -> complex:
        return self.b.conjugate() / self.a

    def transmission(self) -> float:
        return 1.0 / abs(self.a) ** 2


@dataclass(frozen=True)
class NPeriodMatrix(TransferMatrix):
    n: int = 1

    @property
    def a_n(self) -> complex:
        return self.a

    @property
    def b_n(self) -> complex:
        return self.b


# ---------------------------------------------------------------------------
# per-layer functions written in K^2 so that propagating (K^2 > 0), evanescent
# (K^2 < 0) and flat (K^2 -> 0) layers share one code path
# ---------------------------------------------------------------------------

def cos_like(K2: float, x: float) -> float:
    """cos(Kx), or cosh(kappa x) for K^2 = -kappa^2."""
    if K2 > 0:
        return math.cos(math.sqrt(K2) * x)
    if K2 < 0:
        return math.cosh(math.sqrt(-K2) * x)
    return 1.0


def sin_over_k(K2: float, x: float) -> float:
    """sin(Kx)/K, or sinh(kappa x)/kappa for K^2 = -kappa^2."""
    phase = math.sqrt(abs(K2)) * abs(x)
    if phase < SMALL_PHASE:
        x3 = x ** 3
        return x - K2 * x3 / 6.0 + K2 * K2 * x3 * x * x / 120.0
    if K2 > 0:
        K = math.sqrt(K2)
        return math.sin(K * x) / K
    kappa = math.sqrt(-K2)
    return math.sinh(kappa * x) / kappa


def d_sin_over_k_dK2(K2: float, x: float) -> float:
    """d/d(K^2) of sin(Kx)/K."""
    phase = math.sqrt(abs(K2)) * abs(x)
    if phase < SERIES_PHASE:
        x3 = x ** 3
        x2 = x * x
        return x3 * (-1.0 / 6.0 + K2 * x2 / 60.0 - K2 ** 2 * x2 ** 2 / 1680.0
                     + K2 ** 3 * x2 ** 3 / 90720.0)
    return (x * cos_like(K2, x) - sin_over_k(K2, x)) / (2.0 * K2)


def _matmul(m1: RealMatrix, m2: RealMatrix) -> RealMatrix:
    a11, a12, a21, a22 = m1
    b11, b12, b21, b22 = m2
    return (
        a11 * b11 + a12 * b21,
        a11 * b12 + a12 * b22,
        a21 * b11 + a22 * b21,
        a21 * b12 + a22 * b22,
    )


def _matadd(m1: RealMatrix, m2: RealMatrix) -> RealMatrix:
    return tuple(x + y for x, y in zip(m1, m2))


def layer_state_matrix(E: float, layer: Layer, cell: UnitCell) -> RealMatrix:
    """Real matrix carrying (Psi, Psi') from the left to the right edge of a layer."""
    K2 = layer_wavevector_squared(E, layer, cell)
    C = cos_like(K2, layer.width)
    S = sin_over_k(K2, layer.width)
    return (C, S, -K2 * S, C)


def layer_state_derivative(E: float, layer: Layer, cell: UnitCell) -> RealMatrix:
    """Energy derivative of layer_state_matrix."""
    mu = cell.mass_factor
    w = layer.width
    K2 = layer_wavevector_squared(E, layer, cell)
    C = cos_like(K2, w)
    S = sin_over_k(K2, w)
    dC = -0.5 * mu * w * S
    dS = mu * d_sin_over_k_dK2(K2, w)
    dKS = -0.5 * mu * (S + w * C)
    return (dC, dS, dKS, dC)


def cell_state_matrix(E: float, cell: UnitCell) -> RealMatrix:
    N = IDENTITY_2X2
    for layer in cell.layers:
        N = _matmul(layer_state_matrix(E, layer, cell), N)
    return N


def cell_state_matrix_with_derivative(E: float, cell: UnitCell) -> Tuple[RealMatrix, RealMatrix]:
    N, dN = IDENTITY_2X2, ZERO_2X2
    for layer in cell.layers:
        P = layer_state_matrix(E, layer, cell)
        dP = layer_state_derivative(E, layer, cell)
        N, dN = _matmul(P, N), _matadd(_matmul(dP, N), _matmul(P, dN))
    return N, dN


def _plane_wave_pair(N: RealMatrix, k: float) -> Tuple[complex, complex]:
    n11, n12, n21, n22 = N
    a = complex(0.5 * (n11 + n22), 0.5 * (n21 / k - k * n12))
    b = complex(0.5 * (n22 - n11), 0.5 * (k * n12 + n21 / k))
    return a, b


def unit_cell_matrix(E: float, cell: UnitCell) -> TransferMatrix:
    """
    Transfer matrix of one period, composed layer by layer.

    Args:
        E (float): energy in eV, > 0
        cell (UnitCell): the period

    Returns:
        TransferMatrix: (a, b) in the half-space plane-wave basis
    """
    k = wavevector_well(E, cell)
    return TransferMatrix(*_plane_wave_pair(cell_state_matrix(E, cell), k))


def unit_cell_derivatives(E: float, cell: UnitCell) -> Tuple[float, float]:
    """Analytic (dRe{a}/dE, dIm{a}/dE) for any layer stack."""
    k = wavevector_well(E, cell)
    dk = 0.5 * cell.mass_factor / k
    (n11, n12, n21, n22), (d11, d12, d21, d22) = cell_state_matrix_with_derivative(E, cell)
    d_re = 0.5 * (d11 + d22)
    d_im = 0.5 * (d21 / k - n21 * dk / (k * k) - dk * n12 - k * d12)
    return d_re, d_im


def barrier_well_matrix(E: float, cell: UnitCell) -> TransferMatrix:
    """
    Closed-form matrix of a barrier-well cell:

        Re{a} =  cosh(kappa Lb) cos(k Lw) - c2 sinh(kappa Lb) sin(k Lw)
        Im{a} = -cosh(kappa Lb) sin(k Lw) - c2 sinh(kappa Lb) cos(k Lw)
        b     =  i c1 sinh(kappa Lb) exp(i k Lw)

    kappa is continued to i*k_b above the barrier.
    """
    params = cell.barrier_well_parameters()
    if params is None:
        raise DomainError("barrier_well_matrix needs a (barrier, zero-potential well) cell")
    Lb, Lw, Vb = params
    k = wavevector_well(E, cell)
    kappa = barrier_wavevector(E, Vb, cell)
    kappa2 = (kappa * kappa).real
    # cosh and sinh/kappa as functions of kappa^2 = -K^2
    ch = cos_like(-kappa2, Lb)
    sh_over_kappa = sin_over_k(-kappa2, Lb)
    kappa_sh = kappa2 * sh_over_kappa
    c1_sh = 0.5 * (k * sh_over_kappa + kappa_sh / k)
    c2_sh = 0.5 * (k * sh_over_kappa - kappa_sh / k)
    cos_w, sin_w = math.cos(k * Lw), math.sin(k * Lw)
    a = complex(ch * cos_w - c2_sh * sin_w, -ch * sin_w - c2_sh * cos_w)
    b = 1j * c1_sh * cmath.exp(1j * k * Lw)
    return TransferMatrix(a, b)


def compose(m1: TransferMatrix, m2: TransferMatrix) -> TransferMatrix:
    return TransferMatrix(
        m1.a * m2.a + m1.b * m2.b.conjugate(),
        m1.a * m2.b + m1.b * m2.a.conjugate(),
    )


def chebyshev_u(m: int, x: float) -> float:
    """
    Chebyshev polynomial of the second kind U_m(x), m >= -1.

    Forward recurrence inside [-1, 1]; outside, sinh((m+1)theta)/sinh(theta) with
    theta = arcosh|x|, since the recurrence is unstable in the gaps.
    """
    if m < -1:
        raise DomainError(f"U_m needs m >= -1, got {m}")
    if m == -1:
        return 0.0
    if abs(x) <= 1.0:
        if m == 0:
            return 1.0
        u_prev, u = 1.0, 2.0 * x
        for _ in range(m - 1):
            u_prev, u = u, 2.0 * x * u - u_prev
        return u
    theta = math.acosh(abs(x))
    value = math.sinh((m + 1) * theta) / math.sinh(theta)
    if x < 0 and m % 2 == 1:
        value = -value
    return value


def nth_power_chebyshev(m: TransferMatrix, n: int) -> NPeriodMatrix:
    """M^n via a^(n) = a U_{n-1} - U_{n-2}, b^(n) = b U_{n-1} at x = Re{a}."""
    if n < 1:
        raise DomainError(f"number of periods must be >= 1, got {n}")
    x = m.a.real
    u1 = chebyshev_u(n - 1, x)
    u2 = chebyshev_u(n - 2, x)
    return NPeriodMatrix(m.a * u1 - u2, m.b * u1, n)


def nth_power_product(m: TransferMatrix, n: int) -> NPeriodMatrix:
    if n < 1:
        raise DomainError(f"number of periods must be >= 1, got {n}")
    result = m
    for _ in range(n - 1):
        result = compose(result, m)
    return NPeriodMatrix(result.a, result.b, n)


def transmission(m_n: TransferMatrix) -> float:
    return m_n.transmission()


def transmission_chebyshev(m: TransferMatrix, n: int) -> float:
    u = chebyshev_u(n - 1, m.a.real)
    return 1.0 / (1.0 + abs(m.b) ** 2 * u * u)


def transmission_amplitude(m_n: TransferMatrix) -> complex:
    return m_n.transmission_amplitude()


def reflection_amplitude(m_n: TransferMatrix) -> complex:
    return m_n.reflection_amplitude()


def structure_matrix(E: float, cell: UnitCell, n: int,
                     power: Callable[[TransferMatrix, int], NPeriodMatrix] = nth_power_chebyshev) -> NPeriodMatrix:
    return power(unit_cell_matrix(E, cell), n)


def richardson_derivative(f: Callable[[float], complex], x: float, h: float) -> complex:
    """Central difference with one Richardson step; error O(h^4)."""
    d_h = (f(x + h) - f(x - h)) / (2.0 * h)
    d_half = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h
    return (4.0 * d_half - d_h) / 3.0
