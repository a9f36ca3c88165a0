"""Exception types raised across the package."""


class NCQEDError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(NCQEDError, ValueError):
    pass


class OutOfRangeError(NCQEDError, ValueError):
    pass


class TruncationError(NCQEDError, ValueError):
    """Raised when a state does not fit into the truncated Fock space."""


class ResonantRegimeError(NCQEDError, ZeroDivisionError):
    """Dispersive quantities requested where the atom is resonant with the cavity."""


class DomainError(NCQEDError, ValueError):
    pass


class UnsupportedModelError(NCQEDError, ValueError):
    pass


class NonHermitianError(NCQEDError, ValueError):
    pass


class GuardViolation(NCQEDError, RuntimeError):
    """Integration aborted because a tail or norm guard was exceeded.

    Attributes
    ----------
    kind : str
        ``"tail"`` or ``"norm"``.
    time : float
        Time at which the violation was detected.
    magnitude : float
        Offending value (tail population or norm drift).
    """

    def __init__(self, kind, time, magnitude, limit):
        self.kind = kind
        self.time = time
        self.magnitude = magnitude
        self.limit = limit
        super().__init__(
            f"{kind} guard violated at t={time:.6g}: {magnitude:.3e} > {limit:.3e}"
        )


class NumericalBlowupError(NCQEDError, FloatingPointError):
    def __init__(self, time):
        self.time = time
        super().__init__(f"non-finite amplitudes at t={time:.6g}")


class ConfigError(NCQEDError, ValueError):
    pass
