"""Error taxonomy shared across the library and the CLI.

Validation problems (bad arguments, out-of-domain inputs, inconsistent
configs) map to CLI exit code 2; numerical failures (blow-up, stalled
correctors, divergent recursions) map to exit code 3.
"""

from __future__ import annotations


class AffineVolError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ValidationError(AffineVolError, ValueError):
    exit_code = 2


class DomainError(ValidationError):
    """Input lies outside a function's mathematical domain."""


class ArgumentError(ValidationError):
    """Structurally invalid argument (counts, shapes, unsupported variants)."""


class ConfigError(ValidationError):
    """Invalid run configuration; carries every problem found, not just the first."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class NumericalError(AffineVolError, RuntimeError):
    """Numerical failure, optionally carrying the first bad step index."""

    exit_code = 3

    def __init__(self, message: str, step: int | None = None, diagnostic: str | None = None):
        self.step = step
        self.diagnostic = diagnostic
        full = message
        if step is not None:
            full += f" (step {step})"
        if diagnostic:
            full += f": {diagnostic}"
        super().__init__(full)
