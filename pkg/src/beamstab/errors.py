"""Exception hierarchy shared across the package."""


class BeamstabError(Exception):
    """Base class for all package errors."""


class DomainError(BeamstabError):
    """An argument lies outside the mathematical domain of an operation."""


class AdmissibilityError(BeamstabError):
    """A memory kernel violates a structural admissibility requirement."""


class SpecError(BeamstabError):
    """A system description or run configuration is inconsistent."""


class SingularWeightError(BeamstabError):
    """The per-mode energy weight matrix is singular (curvature resonance)."""


class SpectralPointError(BeamstabError):
    """A requested resolvent point hits the spectrum of a mode generator."""

    def __init__(self, msg, lam=None, n=None, eigenvalue=None):
        super().__init__(msg)
        self.lam = lam
        self.n = n
        self.eigenvalue = eigenvalue


class NumericError(BeamstabError):
    """A numerical computation produced non-finite or inconsistent output."""


class InfeasibleError(BeamstabError):
    """A tuning or construction problem has no admissible solution."""


class UnsupportedMapError(BeamstabError):
    """The history-to-flux map is only defined for exponential kernels."""


class FitError(BeamstabError):
    """Not enough (or unusable) samples for a least-squares fit."""
