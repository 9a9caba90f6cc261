from typing import List, Optional


class TunnelingError(ValueError):
    """Base error for every numerics and configuration failure in this package."""


class DomainError(TunnelingError):
    pass


class PropagatingBarrierError(TunnelingError):
    """E >= V_b: the barrier is not evanescent, use barrier_wavevector instead."""


class BandNotFoundError(TunnelingError):
    pass


class OutOfBandError(TunnelingError):
    pass


class BandEdgeError(TunnelingError):
    pass


class SingularPointError(TunnelingError):
    pass


class ResonanceNotFoundError(TunnelingError):
    def __init__(self, message: str, missing_j: Optional[List[int]] = None):
        super().__init__(message)
        self.missing_j = list(missing_j or [])


class UnknownLevelError(TunnelingError):
    def __init__(self, j: int, available_j: List[int]):
        if available_j:
            available = f"{min(available_j)}..{max(available_j)}"
        else:
            available = "none"
        super().__init__(f"unknown level j={j}, available j: {available}")
        self.j = j
        self.available_j = list(available_j)


class OffResonanceError(TunnelingError):
    pass


class DegenerateDecompositionError(TunnelingError):
    pass


class StepUnderflowError(TunnelingError):
    pass


class ConfigValidationError(TunnelingError):
    def __init__(self, message: str, field_paths: Optional[List[str]] = None):
        super().__init__(message)
        self.field_paths = list(field_paths or [])


class ConfigNotFoundError(FileNotFoundError):
    pass
