class SpinwaveError(Exception):
    """Base class for errors raised by the entanglement app"""


class DomainError(SpinwaveError, ValueError):
    """Physically invalid input (zero detuning, non-positive k1, atom count out of range, ...)"""


class DegenerateCouplingError(DomainError):
    """The closed-form solutions are undefined at |k1^2 (+ k3^2) - k2^2| -> 0"""

    def __init__(self, imbalance, message=None):
        self.imbalance = imbalance
        if message is None:
            message = (
                f"Degenerate couplings (k1^2 + k3^2 - k2^2 = {imbalance:.3g}): the k2 = k1 case "
                "needs a stochastic-integration treatment and is not supported"
            )
        super().__init__(message)


class UsageError(SpinwaveError, ValueError):
    """Structural misuse: missing k3, wrong mode kind, dimension mismatch"""


class TruncationOverflowError(SpinwaveError, RuntimeError):
    """Population reached the last Fock level of a truncated mode"""

    def __init__(self, mode, population, threshold):
        self.mode = mode
        self.population = population
        self.threshold = threshold
        super().__init__(
            f"Truncation overflow in mode '{mode}': edge population {population:.3e} "
            f"exceeds {threshold:.1e}; increase the truncation for this mode"
        )
