"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class AccordionError(Exception):
    """Base class for every error raised by this package."""


class DomainError(AccordionError, ValueError):
    """An input lies outside the domain of a physical formula."""


class ParameterError(AccordionError, ValueError):
    """A numerical parameter (sampling, fit data, ...) is unusable."""


class ConfigurationError(AccordionError, ValueError):
    """An optical configuration is inconsistent, e.g. an order misses the pupil."""


class DesignIndexError(AccordionError, IndexError):
    """A grating row index lies outside the plate."""


class UnreachableTargetError(AccordionError):
    """No plate row and tilt within limits produces the requested spacing.

    Attributes
    ----------
    target_nm : float
    reachable : tuple of (float, float)
        Overall interval of spacings the plate can produce.
    """

    def __init__(self, message, target_nm, reachable):
        super().__init__(message)
        self.target_nm = target_nm
        self.reachable = reachable


class CoverageGapError(UnreachableTargetError):
    """The target falls between the tilt-tuning ranges of two rows.

    ``below`` and ``above`` are the reachable intervals adjacent to the gap
    (``None`` when the gap is open-ended).
    """

    def __init__(self, message, target_nm, reachable, required_kappa, below, above):
        super().__init__(message, target_nm, reachable)
        self.required_kappa = required_kappa
        self.below = below
        self.above = above


class ShapeError(AccordionError, ValueError):
    """Array dimensions do not match."""


class FitError(AccordionError):
    """Base class for failures of the fitting routines."""


class NoFringeError(FitError):
    """No spectral peak rises above the noise floor."""


class FitConvergenceError(FitError):
    """The optimiser stopped without converging; ``best`` holds the last iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class InsufficientDataError(FitError):
    """Too few usable samples or windows for the requested estimate."""
