"""Exception hierarchy shared across the package.

The CLI maps these onto exit categories: config, data, solver, internal.
"""


class OdlcError(Exception):
    """Base class for all package errors."""

    category = "internal"


class ConfigError(OdlcError):
    """Invalid or inconsistent experiment configuration."""

    category = "config"


class TraceError(OdlcError):
    """Malformed or unusable trace data."""

    category = "data"


class SolverError(OdlcError):
    """Quadratic-program solver failure."""

    category = "solver"


class InfeasibleError(SolverError):
    """The requested schedule cannot satisfy its constraints."""


class ConvergenceError(SolverError):
    """Iteration budget exhausted before reaching the requested tolerance."""
