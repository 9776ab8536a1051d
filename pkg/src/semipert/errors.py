"""Exception types shared across the package.

ConfigError maps to CLI exit code 2, check failures to exit code 1.
"""

from __future__ import annotations


class SemipertError(Exception):
    """Base class for all package errors."""


class ConfigError(SemipertError):
    """Invalid run configuration (bad grid, misaligned steps, unknown kernel...)."""


class GridMismatchError(SemipertError):
    """Operands live on different grids or use different exponents."""


class AlignmentError(SemipertError):
    """A time or length is not a multiple of the relevant step."""


class DomainMembershipError(SemipertError):
    """A state or path fails the domain test required by an operator."""


class ContractionError(ConfigError):
    """The perturbation is too strong for the requested horizon (no convergence)."""


class ConvergenceError(SemipertError):
    """An iteration hit its cap without meeting its tolerance."""
