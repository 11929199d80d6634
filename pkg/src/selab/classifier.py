"""Regime verdicts for boundary singularities of -Δu + m|∇u|^q - u^p = 0.

Every function here is total on the valid parameter box: hypotheses that fail
produce a NotCovered-style verdict, never an exception.  Window edges
(p = p_c, q = q_c, q = 2p/(p+1)) are compared with ``at_least`` / ``is_edge``
so that values within EDGE_RTOL of an edge land on the edge.

Point-capacity rule: a single boundary point has zero Bessel capacity
Cap_{a,b} on the (N-1)-dimensional boundary exactly when a·b <= N-1.
For (a, b) = (2/p, p') this is p >= p_c, for ((2-q)/q, q') it is q >= q_c.
"""

from __future__ import annotations

import enum
import functools
import json
from dataclasses import dataclass, field

from .errors import DomainError
from .constants import ProblemParams, at_least, critical_exponents, is_edge, m_one_sup


class SingularityType(enum.Enum):
    WEAK_POISSON = "WeakPoisson"
    LOG_CRITICAL = "LogCritical"
    STRONG_ALPHA = "StrongAlpha"
    NOT_COVERED = "NotCovered"


class Removability(enum.Enum):
    REMOVABLE_ISOLATED = "RemovableIsolated"
    NOT_COVERED = "NotCovered"


class Existence(enum.Enum):
    SOLVABLE_SMALL_MASS = "SolvableSmallMass"
    SOLVABLE_UNDER_CAPACITY_CONDITION = "SolvableUnderCapacityCondition"
    NECESSARY_CONDITION_VIOLATED = "NecessaryConditionViolated"
    OUTSIDE_PROVEN_REGIMES = "OutsideProvenRegimes"


class TraceType(enum.Enum):
    RADON_MEASURE_TRACE = "RadonMeasureTrace"
    BOREL_TRACE_POSSIBLE = "BorelTracePossible"
    NOT_COVERED = "NotCovered"


class Condition(enum.Enum):
    UNCONDITIONAL = "UNCONDITIONAL"
    CAP_P_ONLY = "CAP_P_ONLY"
    CAP_Q_ONLY = "CAP_Q_ONLY"
    BOTH_MIN = "BOTH_MIN"


class MeasureKind(enum.Enum):
    DIRAC_POINT = "DiracPoint"
    GENERAL_NONNEGATIVE = "GeneralNonnegative"


# citation tags: what result a verdict rests on, described in words
TAG_SINGULARITY = "isolated boundary singularity behaviour (Poisson / log / self-similar)"
TAG_POISSON = "subcritical source: Poisson-kernel asymptotics at the singular point"
TAG_LOG = "critical source: log-corrected first-eigenfunction asymptotics"
TAG_ALPHA = "supercritical source: convergence to the positive half-sphere profile"
TAG_REMOVABLE = "supercritical source: isolated boundary singularities are removable"
TAG_SMALL_MASS = "subcritical source and gradient: small multiples of any measure are solvable"
TAG_CAP_BOTH = "sufficient condition bounding the measure by both boundary capacities"
TAG_CAP_P = "sufficient condition with the source capacity Cap_{2/p,p'} only"
TAG_CAP_Q = "sufficient condition with the gradient capacity Cap_{(2-q)/q,q'} only"
TAG_CAP_P_VIA_Q = "gradient exponent below 2p/(p+1): gradient capacity dominated by source capacity"
TAG_CAP_Q_VIA_P = "gradient exponent at or above 2p/(p+1): source capacity dominated by gradient capacity"
TAG_NEC_P = "necessary condition: measure vanishes on Cap_{2/p,p'}-null sets"
TAG_NEC_Q = "necessary condition: measure vanishes on Cap_{(2-q)/q,q'}-null sets"
TAG_TRACE_RADON = "gradient-dominated regime: positive solutions have a Radon measure trace"
TAG_TRACE_BOREL = "gradient exponent above 2p/(p+1): explicit |x|^(-β) solutions with unbounded trace"

FLAG_EPS_STAR = "requires 0 < m < ε* (non-constructive smallness constant)"
FLAG_SMALL_MASS = "requires mass below a non-constructive threshold"
FLAG_M_ONE = "requires 0 < m <= m_1 (supremum over the admissible family reported)"


def point_capacity_null(a: float, b: float, N: int) -> bool:
    """Whether one boundary point has zero Cap_{a,b}: a·b <= N-1."""
    return a * b <= N - 1


def point_null_for_source(N: int, p: float) -> bool:
    """A boundary point is Cap_{2/p,p'}-null; equivalent to p >= p_c."""
    return at_least(p, critical_exponents(N).p_c)


def point_null_for_gradient(N: int, q: float) -> bool:
    """A boundary point is Cap_{(2-q)/q,q'}-null; equivalent to q >= q_c."""
    return at_least(q, critical_exponents(N).q_c)


def classify_boundary_singularity(
    N: int, p: float, q: float | None = None, m: float | None = None
) -> tuple[SingularityType, tuple[str, ...]]:
    """Behaviour of a positive solution with an isolated boundary singularity.

    When q and m are given they must satisfy q < 2p/(p+1) and m > 0.
    """
    crit = critical_exponents(N)
    if q is not None and at_least(q, 2 * p / (p + 1)):
        return SingularityType.NOT_COVERED, ()
    if m is not None and not m > 0:
        return SingularityType.NOT_COVERED, ()
    if at_least(p, crit.p_sobolev):
        return SingularityType.NOT_COVERED, ()
    if is_edge(p, crit.p_c):
        return SingularityType.LOG_CRITICAL, (TAG_SINGULARITY, TAG_LOG)
    if p < crit.p_c:
        return SingularityType.WEAK_POISSON, (TAG_SINGULARITY, TAG_POISSON)
    return SingularityType.STRONG_ALPHA, (TAG_SINGULARITY, TAG_ALPHA)


def singularity_rate(N: int, p: float) -> dict:
    """Blow-up rate attached to each singularity type."""
    kind, _ = classify_boundary_singularity(N, p)
    if kind is SingularityType.WEAK_POISSON:
        return {"radial_exponent": -(N - 1.0), "log_exponent": 0.0}
    if kind is SingularityType.LOG_CRITICAL:
        return {"radial_exponent": -(N - 1.0), "log_exponent": -(N - 1.0) / 2.0}
    if kind is SingularityType.STRONG_ALPHA:
        return {"radial_exponent": -2.0 / (p - 1.0), "log_exponent": 0.0}
    return {}


def removability(params: ProblemParams) -> tuple[Removability, tuple[str, ...], tuple[str, ...]]:
    """(verdict, citations, qualitative flags)."""
    p, q, m = params.p, params.q, params.m
    crit = critical_exponents(params.N)
    in_p = p > crit.p_c and not is_edge(p, crit.p_c) and not at_least(p, crit.p_sobolev)
    if not in_p or not m > 0:
        return Removability.NOT_COVERED, (), ()
    qs = params.q_star
    if is_edge(q, qs):
        return Removability.REMOVABLE_ISOLATED, (TAG_REMOVABLE,), (FLAG_EPS_STAR,)
    if q < qs:
        return Removability.REMOVABLE_ISOLATED, (TAG_REMOVABLE,), ()
    return Removability.NOT_COVERED, (), ()


@functools.lru_cache(maxsize=4096)
def dirac_admissibility(
    N: int, p: float, q: float
) -> tuple[Existence, tuple[str, ...], tuple[str, ...]]:
    """(verdict, citations, violated capacities) for data k·δ₀."""
    null_p = point_null_for_source(N, p)
    null_q = point_null_for_gradient(N, q)
    if not null_p and not null_q:
        return Existence.SOLVABLE_SMALL_MASS, (TAG_SMALL_MASS,), ()
    cites, violated = [], []
    if null_q:
        cites.append(TAG_NEC_Q)
        violated.append("Cap_{(2-q)/q,q'}")
    if null_p:
        cites.append(TAG_NEC_P)
        violated.append("Cap_{2/p,p'}")
    return Existence.NECESSARY_CONDITION_VIOLATED, tuple(cites), tuple(violated)


@dataclass(frozen=True)
class ConditionSet:
    applicable: tuple[Condition, ...]
    citations: tuple[str, ...]


@functools.lru_cache(maxsize=4096)
def measure_conditions(N: int, p: float, q: float) -> ConditionSet:
    """Sufficient conditions on a measure that apply at (N, p, q).

    BOTH_MIN is always listed.  Edges p = p_c and q = q_c go to the
    supercritical side.
    """
    crit = critical_exponents(N)
    sup_p = at_least(p, crit.p_c)
    sup_q = at_least(q, crit.q_c)
    qs = 2 * p / (p + 1)
    conds, cites = [], []
    if not sup_p and not sup_q:
        conds.append(Condition.UNCONDITIONAL)
        cites.append(TAG_SMALL_MASS)
    elif sup_p and not sup_q:
        conds.append(Condition.CAP_P_ONLY)
        cites.append(TAG_CAP_P)
    elif not sup_p and sup_q:
        conds.append(Condition.CAP_Q_ONLY)
        cites.append(TAG_CAP_Q)
    elif not at_least(q, qs):
        conds.append(Condition.CAP_P_ONLY)
        cites.append(TAG_CAP_P_VIA_Q)
    else:
        conds.append(Condition.CAP_Q_ONLY)
        cites.append(TAG_CAP_Q_VIA_P)
    conds.append(Condition.BOTH_MIN)
    cites.append(TAG_CAP_BOTH)
    return ConditionSet(tuple(conds), tuple(cites))


def trace_existence(params: ProblemParams) -> tuple[TraceType, tuple[str, ...], tuple[str, ...]]:
    """(verdict, citations, flags) for the boundary trace of positive solutions."""
    p, q, m = params.p, params.q, params.m
    if not m > 0:
        return TraceType.NOT_COVERED, (), ()
    qs = params.q_star
    if is_edge(q, qs):
        if m <= m_one_sup(p):
            return TraceType.RADON_MEASURE_TRACE, (TAG_TRACE_RADON,), (FLAG_M_ONE,)
        return TraceType.NOT_COVERED, (), ()
    if q < qs:
        return TraceType.RADON_MEASURE_TRACE, (TAG_TRACE_RADON,), ()
    return TraceType.BOREL_TRACE_POSSIBLE, (TAG_TRACE_BOREL,), ()


@dataclass(frozen=True)
class MeasureDescriptor:
    kind: MeasureKind = MeasureKind.DIRAC_POINT
    mass: float | None = 1.0

    def __post_init__(self):
        kind = MeasureKind(self.kind) if not isinstance(self.kind, MeasureKind) else self.kind
        object.__setattr__(self, "kind", kind)
        if kind is MeasureKind.DIRAC_POINT and not (self.mass is not None and self.mass > 0):
            raise DomainError("a Dirac mass needs mass > 0", "mass > 0")


@dataclass(frozen=True)
class RegimeReport:
    existence: Existence
    removability: Removability
    singularity: SingularityType
    trace: TraceType
    citations: tuple[str, ...]
    conditions: tuple[Condition, ...] = ()
    flags: tuple[str, ...] = ()
    violated_capacities: tuple[str, ...] = ()
    params: ProblemParams | None = field(default=None, compare=False)

    def as_dict(self) -> dict:
        out = {
            "existence": self.existence.value,
            "removability": self.removability.value,
            "singularity": self.singularity.value,
            "trace": self.trace.value,
            "citations": list(self.citations),
            "conditions": [c.value for c in self.conditions],
            "flags": list(self.flags),
            "violated_capacities": list(self.violated_capacities),
        }
        if self.params is not None:
            out["params"] = self.params.as_dict()
        return out

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)


def _unique(items) -> tuple:
    return tuple(dict.fromkeys(items))


_UNIT_DIRAC = MeasureDescriptor()


@functools.lru_cache(maxsize=65536)
def _verdicts(N: int, p: float, q: float, positive_m: bool, small_m: bool, kind: MeasureKind):
    # m enters every rule only through m > 0 and m <= sup m_1, so a
    # representative m stands in for the whole class
    m = (0.5 * m_one_sup(p) if small_m else 2.0 * m_one_sup(p)) if positive_m else 0.0
    params = ProblemParams(N, p, q, m)
    cites: list[str] = []
    flags: list[str] = []
    violated: tuple[str, ...] = ()

    sing, c = classify_boundary_singularity(N, p, q, m)
    cites += c
    rem, c, f = removability(params)
    cites += c
    flags += f
    tr, c, f = trace_existence(params)
    cites += c
    flags += f
    conds = measure_conditions(N, p, q)

    if not positive_m:
        existence = Existence.OUTSIDE_PROVEN_REGIMES
    elif kind is MeasureKind.DIRAC_POINT:
        existence, c, violated = dirac_admissibility(N, p, q)
        cites += c
        if existence is Existence.SOLVABLE_SMALL_MASS:
            flags.append(FLAG_SMALL_MASS)
    else:
        cites += conds.citations
        if Condition.UNCONDITIONAL in conds.applicable:
            existence = Existence.SOLVABLE_SMALL_MASS
            flags.append(FLAG_SMALL_MASS)
        else:
            existence = Existence.SOLVABLE_UNDER_CAPACITY_CONDITION
    return existence, rem, sing, tr, _unique(cites), conds.applicable, _unique(flags), violated


def classify(params: ProblemParams, measure: MeasureDescriptor | None = None) -> RegimeReport:
    """All verdicts for one parameter point and one kind of boundary datum."""
    measure = measure or _UNIT_DIRAC
    m = params.m
    positive = m > 0
    small = positive and m <= m_one_sup(params.p)
    v = _verdicts(params.N, params.p, params.q, positive, small, measure.kind)
    return RegimeReport(*v, params=params)
