"""Exception hierarchy.

Every numerical failure derives from :class:`ExstatError`; the class name is
what the CLI reports on its error stream, so names are part of the interface.
"""


class ExstatError(Exception):
    """Base class for numerical failures raised by the library."""

    @property
    def name(self) -> str:
        return type(self).__name__


class FermionDegenerate(ExstatError):
    """Gram determinant vanishes: coinciding fermions or N > 2j + 1."""


class PermanentOverCap(ExstatError):
    """Boson count exceeds the permanent size cap."""


class StepTooSmall(ExstatError):
    """Finite-difference metric lost Hermiticity to cancellation."""


class NegativeDensity(ExstatError):
    """Liouville density came out negative beyond rounding."""


class ZeroVolume(ExstatError):
    """Phase-space volume is zero (saturated / incompressible state)."""

    saturated = True


class DensityAboveMax(ExstatError):
    """alpha * rho >= 1: beyond the maximal (incompressible) density."""


class UnboundedDensity(ExstatError):
    """Maximal density requested for alpha = 0."""


class DomainViolation(ExstatError):
    """Occupation outside the domain of the exclusion entropy."""


class NoRoot(ExstatError):
    """Bracketed root search for an occupation failed."""


class SingularMetric(ExstatError):
    """Metric too ill-conditioned to invert."""


class StepFailure(ExstatError):
    """Adaptive integrator could not continue."""


class ChartExit(ExstatError):
    """A coordinate left the stereographic chart (|z| > 1e6)."""
