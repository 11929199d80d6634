"""Closed-form constants of -Δu + m|∇u|^q - u^p = 0 and the constant-solution map.

Everything here is a pure function of (N, p, q, m).  The algebraic function

    Φ(X) = X^(p-1) - m α^(2p/(p+1)) X^((p-1)/(p+1)) - α(N-2-α),   α = 2/(p-1),

has positive roots exactly at the constant self-similar solutions
u = X |x|^(-α) of the equation in the whole space.  Roots are located via the
substitution Y = X^((p-1)/(p+1)), which turns Φ into the convex-after-Y₀
polynomial-like function

    Φ̃(Y) = Y^(p+1) - m α^(2p/(p+1)) Y - α(N-2-α).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

from .errors import DomainError, NumericalError

INF = math.inf

# relative slack used for every "p >= p_c"-type comparison at a window edge
EDGE_RTOL = 1e-12

# |m - m*| at or below this counts as the tangential (double-root) case
TANGENCY_BAND = 1e-8


def at_least(x: float, edge: float) -> bool:
    """x >= edge, counting values within EDGE_RTOL of the edge as equal."""
    if edge == INF:
        return x == INF
    return x >= edge - EDGE_RTOL * (edge if edge > 1.0 else max(1.0, -edge))


def is_edge(x: float, edge: float) -> bool:
    if edge == INF or edge == -INF:
        return False
    return abs(x - edge) <= EDGE_RTOL * (edge if edge > 1.0 else max(1.0, -edge))


@dataclass(frozen=True)
class ProblemParams:
    """The quadruple (N, p, q, m)."""

    N: int
    p: float
    q: float
    m: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"N={self.N} must be an integer >= 2", "N >= 2")
        object.__setattr__(self, "N", int(self.N))
        if not self.p > 1:
            raise DomainError(f"p={self.p} must exceed 1", "p > 1")
        if not 1 < self.q < 2:
            raise DomainError(f"q={self.q} must lie in (1, 2)", "1 < q < 2")
        if not self.m >= 0:
            raise DomainError(f"m={self.m} must be nonnegative", "m >= 0")

    @property
    def alpha(self) -> float:
        return 2.0 / (self.p - 1.0)

    @property
    def beta(self) -> float:
        return (2.0 - self.q) / (self.q - 1.0)

    @property
    def q_star(self) -> float:
        return 2.0 * self.p / (self.p + 1.0)

    @property
    def p_c(self) -> float:
        return (self.N + 1.0) / (self.N - 1.0)

    @property
    def q_c(self) -> float:
        return (self.N + 1.0) / self.N

    @property
    def p_serrin(self) -> float:
        return INF if self.N == 2 else self.N / (self.N - 2.0)

    @property
    def p_sobolev(self) -> float:
        return INF if self.N == 2 else (self.N + 2.0) / (self.N - 2.0)

    # hypothesis windows -------------------------------------------------
    def a_priori_window(self) -> bool:
        """1 < p < (N+2)/(N-2) with q below (or at) 2p/(p+1) and m > 0."""
        return (
            self.m > 0
            and not at_least(self.p, self.p_sobolev)
            and (self.q < self.q_star or is_edge(self.q, self.q_star))
        )

    def profile_nonexistence_window(self) -> bool:
        """1 < p < (N+1)/(N-1): the window where b_p > 1 and m_p is defined."""
        return not at_least(self.p, self.p_c)

    def strong_singularity_window(self) -> bool:
        """2p/(p+1) < q < (N+1)/N."""
        return self.q > self.q_star and not at_least(self.q, self.q_c) and not is_edge(
            self.q, self.q_star
        )

    def as_dict(self) -> dict:
        return {"N": self.N, "p": self.p, "q": self.q, "m": self.m}


@dataclass(frozen=True)
class CriticalExponents:
    p_c: float
    q_c: float
    p_serrin: float
    p_sobolev: float


@dataclass(frozen=True)
class SingularExponents:
    alpha: float
    beta: float
    q_star: float


@dataclass(frozen=True)
class MpThreshold:
    b_p: float
    theta_star: float
    m_p: float
    theta_naive: float
    m_p_naive_pair: tuple[float, float]
    consistent: bool


@dataclass(frozen=True)
class ConstantReport:
    alpha: float
    beta: float
    p_c: float
    q_c: float
    p_serrin: float
    p_sobolev: float
    q_star: float
    m_star: float | None
    y0: float | None
    phi_roots: tuple[float, ...]
    b_p: float | None
    theta_star: float | None
    m_p: float | None
    m_p_naive_pair: tuple[float, float] | None
    m_one: float | None
    params: ProblemParams | None = None
    citations: dict = field(default_factory=dict)


FIELD_TAGS = {
    "alpha": "self-similar exponent 2/(p-1)",
    "beta": "gradient-driven exponent (2-q)/(q-1)",
    "p_c": "boundary critical exponent (N+1)/(N-1)",
    "q_c": "gradient critical exponent (N+1)/N",
    "p_serrin": "interior Serrin exponent N/(N-2)",
    "p_sobolev": "Sobolev exponent (N+2)/(N-2)",
    "q_star": "scaling-balanced exponent 2p/(p+1)",
    "m_star": "constant-solution threshold m*",
    "y0": "minimiser of the reduced constant-solution map",
    "phi_roots": "constant self-similar solutions in R^N",
    "b_p": "power-substitution exponent b_p",
    "theta_star": "optimised Holder weight",
    "m_p": "profile nonexistence threshold m_p (optimised crossing)",
    "m_p_naive_pair": "m_p at the closed-form weight p/(b(b-1)), kept as a diagnostic",
    "m_one": "boundary-trace smallness bound m_1 (supremum over b)",
}


# --------------------------------------------------------------------------
@functools.lru_cache(maxsize=64)
def critical_exponents(N: int) -> CriticalExponents:
    if int(N) != N or N < 2:
        raise DomainError(f"N={N} must be an integer >= 2", "N >= 2")
    N = int(N)
    if N == 2:
        return CriticalExponents(3.0, 1.5, INF, INF)
    return CriticalExponents(
        (N + 1.0) / (N - 1.0), (N + 1.0) / N, N / (N - 2.0), (N + 2.0) / (N - 2.0)
    )


def singular_exponents(p: float, q: float) -> SingularExponents:
    if not p > 1:
        raise DomainError(f"p={p} must exceed 1", "p > 1")
    if not 1 < q < 2:
        raise DomainError(f"q={q} must lie in (1, 2)", "1 < q < 2")
    return SingularExponents(2.0 / (p - 1.0), (2.0 - q) / (q - 1.0), 2.0 * p / (p + 1.0))


def m_star(N: int, p: float) -> float:
    """Threshold m* = (p+1) ((N - p(N-2)) / (2p))^(p/(p+1)).

    Defined only below the Serrin exponent N/(N-2); for N = 2 always.
    """
    crit = critical_exponents(N)
    if not p > 1:
        raise DomainError(f"p={p} must exceed 1", "p > 1")
    if p >= crit.p_serrin:
        raise DomainError(
            "m* undefined in Serrin-supercritical range",
            f"p < N/(N-2) = {crit.p_serrin}",
        )
    base = (N - p * (N - 2)) / (2.0 * p)
    return (p + 1.0) * base ** (p / (p + 1.0))


def _phi_coeffs(params: ProblemParams) -> tuple[float, float]:
    """(c, k) with Φ̃(Y) = Y^(p+1) - c Y - k."""
    a = params.alpha
    c = params.m * a ** (2.0 * params.p / (params.p + 1.0))
    k = a * (params.N - 2.0 - a)
    return c, k


def phi_eval(X: float, params: ProblemParams) -> float:
    if X < 0:
        raise DomainError(f"X={X} must be nonnegative", "X >= 0")
    p = params.p
    c, k = _phi_coeffs(params)
    if X == 0:
        return -k
    return X ** (p - 1.0) - c * X ** ((p - 1.0) / (p + 1.0)) - k


def phi_tilde(Y: float, params: ProblemParams) -> float:
    c, k = _phi_coeffs(params)
    return Y ** (params.p + 1.0) - c * Y - k


def y0(params: ProblemParams) -> float:
    """Unique minimiser of Φ̃ on (0, ∞) when m > 0."""
    return (params.m / (params.p + 1.0)) ** (1.0 / params.p) * params.alpha ** (
        2.0 / (params.p + 1.0)
    )


def _bisect(f, lo: float, hi: float) -> float:
    """Bisection on a sign-change bracket, run down to adjacent floats."""
    flo = f(lo)
    if flo == 0:
        return lo
    fhi = f(hi)
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError("bracket does not change sign")
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid


def _upper_bracket(f, start: float) -> float:
    hi = max(2.0 * start, 1.0)
    while f(hi) <= 0:
        hi *= 2.0
    return hi


def phi_roots(params: ProblemParams) -> tuple[float, ...]:
    """Positive roots of Φ, ascending.

    The count follows the constant-solution classification: one root when
    p >= N/(N-2); otherwise two above m*, one (tangential) at m*, none below.
    """
    if params.m <= 0:
        raise DomainError("phi_roots needs m > 0", "m > 0")
    p = params.p

    def to_x(Y):
        try:
            return Y ** ((p + 1.0) / (p - 1.0))
        except OverflowError:
            raise NumericalError(f"root X = Y^((p+1)/(p-1)) overflows for Y={Y:g}, p={p:g}")

    f = lambda Y: phi_tilde(Y, params)  # noqa: E731
    Y0 = y0(params)
    f0 = f(0.0)
    if f0 <= 0:
        # Φ̃ decreases on [0, Y₀], so the only positive crossing lies beyond Y₀
        return (to_x(_bisect(f, Y0, _upper_bracket(f, Y0))),)
    below_serrin = p < critical_exponents(params.N).p_serrin
    if below_serrin and abs(params.m - m_star(params.N, p)) <= TANGENCY_BAND:
        return (to_x(Y0),)
    if f(Y0) > 0:
        return ()
    y_1 = _bisect(f, 0.0, Y0)
    y_2 = _bisect(f, Y0, _upper_bracket(f, Y0))
    return (to_x(y_1), to_x(y_2))


def x_m_star(N: int, p: float) -> float:
    """Double root of Φ at m = m*: X = Y₀^((p+1)/(p-1))."""
    ms = m_star(N, p)
    params = ProblemParams(N, p, 1.5, ms)
    return y0(params) ** ((p + 1.0) / (p - 1.0))


# --------------------------------------------------------------------------
def _holder_branches(p: float, b: float):
    def f1(theta):
        return (p + 1.0) * (b - 1.0) * theta ** ((p + 1.0) / p) / (
            p * b ** ((p - 1.0) / (p + 1.0))
        )

    def f2(theta):
        return (p + 1.0) / (b ** (2.0 * p / (p + 1.0)) * theta ** (p + 1.0))

    return f1, f2


def m_p_threshold(N: int, p: float) -> MpThreshold:
    """Nonexistence threshold for positive half-sphere profiles.

    f1 (increasing) and f2 (decreasing) are the two admissible bounds on m
    coming from the Hölder splitting; ``m_p`` is their common value at the
    unique crossing.  The pair evaluated at θ = p/(b_p(b_p-1)) is reported
    alongside, with ``consistent`` telling whether the two agree.
    """
    crit = critical_exponents(N)
    if not p > 1:
        raise DomainError(f"p={p} must exceed 1", "p > 1")
    if at_least(p, crit.p_c):
        raise DomainError(
            "b_p <= 1: nonexistence window empty", f"p < (N+1)/(N-1) = {crit.p_c}"
        )
    a = 2.0 / (p - 1.0)
    b = a * (a + 2.0 - N) / (N - 1.0)
    f1, f2 = _holder_branches(p, b)
    g = lambda t: math.log(f1(t)) - math.log(f2(t))  # noqa: E731
    lo, hi = 1.0, 1.0
    while g(lo) >= 0:
        lo *= 0.5
    while g(hi) <= 0:
        hi *= 2.0
    theta_star = _bisect(g, lo, hi)
    theta_naive = p / (b * (b - 1.0))
    pair = (f1(theta_naive), f2(theta_naive))
    consistent = math.isclose(pair[0], pair[1], rel_tol=1e-8)
    return MpThreshold(b, theta_star, f2(theta_star), theta_naive, pair, consistent)


def m_one(p: float, b: float) -> float:
    """((b-1)/(2b))^(p/(p+1)); increases to (1/2)^(p/(p+1)) as b → ∞."""
    if not p > 1:
        raise DomainError(f"p={p} must exceed 1", "p > 1")
    if not b > 1:
        raise DomainError(f"b={b} must exceed 1", "b > 1")
    if math.isinf(b):
        return 0.5 ** (p / (p + 1.0))
    return ((b - 1.0) / (2.0 * b)) ** (p / (p + 1.0))


def m_one_sup(p: float) -> float:
    return m_one(p, INF)


def constant_report(params: ProblemParams) -> ConstantReport:
    crit = critical_exponents(params.N)
    ex = singular_exponents(params.p, params.q)
    p = params.p
    ms = m_star(params.N, p) if p < crit.p_serrin else None
    yy = y0(params) if params.m > 0 else None
    roots = phi_roots(params) if params.m > 0 else ()
    if params.profile_nonexistence_window():
        mp = m_p_threshold(params.N, p)
        b_p, th, m_p, lit = mp.b_p, mp.theta_star, mp.m_p, mp.m_p_naive_pair
    else:
        b_p = th = m_p = lit = None
    return ConstantReport(
        alpha=ex.alpha,
        beta=ex.beta,
        p_c=crit.p_c,
        q_c=crit.q_c,
        p_serrin=crit.p_serrin,
        p_sobolev=crit.p_sobolev,
        q_star=ex.q_star,
        m_star=ms,
        y0=yy,
        phi_roots=tuple(roots),
        b_p=b_p,
        theta_star=th,
        m_p=m_p,
        m_p_naive_pair=lit,
        m_one=m_one_sup(p),
        params=params,
        citations=dict(FIELD_TAGS),
    )
