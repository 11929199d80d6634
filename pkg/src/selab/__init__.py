"""Numerical toolkit for -Δu + m|∇u|^q - u^p = 0 near boundary singularities."""

from .constants import (
    ProblemParams,
    constant_report,
    critical_exponents,
    m_one,
    m_p_threshold,
    m_star,
    phi_eval,
    phi_roots,
    singular_exponents,
)
from .errors import (
    DivergenceError,
    DomainError,
    FitError,
    NumericalError,
    PositivityError,
)

__version__ = "0.1.0"

__all__ = [
    "ProblemParams",
    "constant_report",
    "critical_exponents",
    "m_one",
    "m_p_threshold",
    "m_star",
    "phi_eval",
    "phi_roots",
    "singular_exponents",
    "DivergenceError",
    "DomainError",
    "FitError",
    "NumericalError",
    "PositivityError",
]
