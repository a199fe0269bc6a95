"""Semantic exception hierarchy shared across the package."""


class SymbqError(Exception):
    """Base error for this package."""


class InvalidInputError(SymbqError, ValueError):
    """Inputs violate a contract: dimension mismatch, non-finite values, bad domain."""


class SingularGramError(SymbqError):
    """Gram matrix could not be factorized even after maximum jitter escalation.

    Usually signals duplicated or orbit-equivalent evaluation locations.
    """


class ConfigurationError(SymbqError):
    """Mismatched or inconsistent configuration objects (kernel spec, measure, table)."""


class OracleFailureError(SymbqError):
    """Numerical quadrature failed to converge to the requested tolerance."""


class FormatError(SymbqError):
    """A results file does not match the expected schema."""
