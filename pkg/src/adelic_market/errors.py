"""Exception classes shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class DataError(ValueError):
    """Input data (CSV, JSON) failed validation."""


class NumericalError(ArithmeticError):
    """A numerical routine failed to produce a finite result."""
