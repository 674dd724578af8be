"""Exception hierarchy shared by every geogap module."""


class GeogapError(Exception):
    """Base class for all library errors."""


class NumericalError(GeogapError):
    """A computation could not be carried out at the requested accuracy."""


class DegenerateLattice(GeogapError):
    """Invariants with zero discriminant; use the rational degeneration instead."""


class NonRectangular(GeogapError):
    """Invariants whose cubic has complex roots (non-rectangular lattice)."""


class NearPole(NumericalError):
    """Argument lies within the pole cutoff of a singularity."""


class OutOfDomain(GeogapError):
    """Argument outside the domain of a tabulated object."""


class SingularityInSpan(NumericalError):
    """Integration interval contains a singularity of the potential."""


class StepSizeUnderflow(NumericalError):
    """Adaptive integrator could not reach the tolerance."""


class DegenerateParameters(GeogapError):
    """Parameters for which a construction has no meaning."""


class BranchPoint(DegenerateParameters):
    """Spectral point is a branch point; the two-sheet basis degenerates."""


class DegenerateDelta(NumericalError):
    """|psi1*psi3 - psi2^2| is below the chart threshold."""


class VerticalSegment(NumericalError):
    """A trace cannot be written as a graph y(x) because dx vanishes."""


class NotXIndependent(NumericalError):
    """An expression expected to be constant in x varies."""


class ZeroOfQ(NumericalError):
    """Q(x, z) vanishes at the requested point."""


class OffCurve(GeogapError):
    """(z, w) does not lie on the spectral curve."""


class ConfigError(GeogapError):
    """Invalid scenario or command-line configuration."""
