"""Exception hierarchy shared by all wickphase modules."""


class WickPhaseError(Exception):
    """Base class for every error raised by the library."""


class ValidationError(WickPhaseError, ValueError):
    """Malformed input: wrong shape, non-finite entries, bad parameters."""


class NotPositiveDefinite(ValidationError):
    """A matrix required to be positive definite is not.

    Attributes
    ----------
    eigenvalue : float
        The smallest eigenvalue that failed the check.
    """

    def __init__(self, message, eigenvalue):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class AmbiguousClassification(WickPhaseError):
    """An eigenvalue sits too close to a category boundary to classify."""


class NumericalFailure(WickPhaseError):
    """An internal invariant failed beyond tolerance."""


class DivergenceError(WickPhaseError):
    """A symbol or partition function diverges at the requested parameter.

    Attributes
    ----------
    beta : float
        Parameter (inverse temperature or time) at which the divergence sits.
    side : str
        ``"weyl"`` (det(S - I) = 0) or ``"wigner"`` (det(S + I) = 0).
    """

    side = "unknown"

    def __init__(self, message, beta=None, side=None):
        super().__init__(message)
        self.beta = beta
        if side is not None:
            self.side = side


class DivergenceAtWeyl(DivergenceError):
    side = "weyl"


class DivergenceAtWigner(DivergenceError):
    side = "wigner"


class PartitionDiverges(DivergenceAtWeyl):
    """The partition function is infinite (det(S_beta - I) = 0)."""


class ParabolicPartition(DivergenceAtWeyl):
    """Parabolic Hamiltonians need a phase-space volume cut-off."""


class SimultaneousDivergence(DivergenceError):
    """Both symbols diverge at the same instant."""


class UnsupportedLinear(WickPhaseError):
    """A pure translation part cannot be absorbed into the fixed point."""


class NotAState(WickPhaseError):
    """Im C is not negative definite, so there is no Wigner function.

    The characteristic function is still well defined and is attached as
    ``characteristic`` when available.
    """

    def __init__(self, message, characteristic=None):
        super().__init__(message)
        self.characteristic = characteristic


class InsufficientDecay(WickPhaseError):
    """A grid function does not decay at the boundary.

    Attributes
    ----------
    ratio : float
        Boundary magnitude divided by peak magnitude.
    """

    def __init__(self, message, ratio):
        super().__init__(message)
        self.ratio = ratio


class IndexUndetermined(WickPhaseError):
    """The Conley-Zehnder index cannot be fixed by continuity here."""


class NotConverged(WickPhaseError):
    """A truncated-basis computation did not converge."""
