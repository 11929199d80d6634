"""Exception hierarchy shared by the solvers and the command line."""

from __future__ import annotations


class DomainError(ValueError):
    """Parameters fall outside the hypothesis window of an operation.

    ``hypothesis`` names the violated condition in words so that the CLI can
    report it verbatim.
    """

    def __init__(self, message: str, hypothesis: str | None = None):
        super().__init__(message)
        self.hypothesis = hypothesis or message


class NumericalError(RuntimeError):
    """A numerical stage failed (no bracket, Newton stagnation, ...)."""

    stage = "numerical"


class DivergenceError(NumericalError):
    stage = "newton"

    def __init__(self, message: str, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class PositivityError(NumericalError):
    stage = "newton-positivity"

    def __init__(self, message: str, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class FitError(NumericalError):
    stage = "exponent-fit"
