import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selab.constants import (
    EDGE_RTOL,
    ProblemParams,
    at_least,
    constant_report,
    critical_exponents,
    is_edge,
    m_one,
    m_one_sup,
    m_p_threshold,
    m_star,
    phi_eval,
    phi_roots,
    phi_tilde,
    singular_exponents,
    x_m_star,
    y0,
    _holder_branches,
)
from selab.errors import DomainError, NumericalError

# 50-digit mpmath evaluations, computed once and frozen
M_STAR_3_2 = 1.1905507889761496060637792294542311952936199959249
M_STAR_2_3 = 1.7547653506033232810922918690626654068800914536078
M_ONE_2_2 = 0.39685026299204986868792640981807706509787333197496
THETA_STAR_3_15 = 0.48725106948642400031319293934413901050486997549025
M_P_3_15 = 1.757019193094791508297043488936207505003900684583
NAIVE_PAIR_3_15 = (
    0.039518930044746579764846708005952413657553731794492,
    520.87498069785684050554504809766111227357382401014,
)
ROOTS_3_2_M2 = (
    0.069216180033222102687956195162440880511605713644778,
    8.136280786890926252966425893280115052214453308549,
)


def test_critical_exponents_n3():
    c = critical_exponents(3)
    assert c.p_c == 2.0
    assert c.q_c == pytest.approx(4 / 3, rel=1e-15)
    assert c.p_serrin == 3.0
    assert c.p_sobolev == 5.0


def test_critical_exponents_n2_infinite():
    c = critical_exponents(2)
    assert (c.p_c, c.q_c) == (3.0, 1.5)
    assert math.isinf(c.p_serrin) and math.isinf(c.p_sobolev)


@pytest.mark.parametrize("N", [1, 0, 2.5])
def test_critical_exponents_rejects_bad_dimension(N):
    with pytest.raises(DomainError):
        critical_exponents(N)


def test_singular_exponents():
    e = singular_exponents(3.0, 1.5)
    assert e.alpha == 1.0
    assert e.beta == 1.0
    assert e.q_star == 1.5


def test_problem_params_validation():
    for bad in [(1, 2, 1.5, 1), (3, 1.0, 1.5, 1), (3, 2, 2.0, 1), (3, 2, 1.5, -1)]:
        with pytest.raises(DomainError) as info:
            ProblemParams(*bad)
        assert info.value.hypothesis


def test_m_star_oracle():
    assert m_star(3, 2) == pytest.approx(M_STAR_3_2, rel=1e-14)
    assert m_star(3, 2) == pytest.approx(3 * 0.25 ** (2 / 3), abs=1e-12)
    assert m_star(2, 3) == pytest.approx(M_STAR_2_3, rel=1e-14)


def test_m_star_undefined_above_serrin():
    with pytest.raises(DomainError):
        m_star(3, 3.0)


def test_x_m_star_is_one_for_n3_p2():
    assert x_m_star(3, 2) == pytest.approx(1.0, abs=1e-14)


def test_m_one_oracle():
    assert m_one(2, 2) == pytest.approx(M_ONE_2_2, rel=1e-14)
    assert m_one_sup(2) == pytest.approx(0.5 ** (2 / 3), rel=1e-15)
    assert m_one(2, math.inf) == m_one_sup(2)
    assert m_one(2, 3.0) == pytest.approx((1 / 3) ** (2 / 3), rel=1e-15)


def test_phi_roots_oracle_two_roots():
    roots = phi_roots(ProblemParams(3, 2, 1.2, 2.0))
    assert len(roots) == 2
    for got, want in zip(roots, ROOTS_3_2_M2):
        assert got == pytest.approx(want, rel=1e-12)


def test_phi_roots_tangent_at_m_star():
    P = ProblemParams(3, 2, 1.2, m_star(3, 2))
    roots = phi_roots(P)
    assert len(roots) == 1
    assert roots[0] == pytest.approx(1.0, abs=1e-12)
    assert abs(phi_eval(roots[0], P)) <= 1e-10


@pytest.mark.parametrize("dm,count", [(-2e-8, 0), (-5e-9, 1), (5e-9, 1), (2e-8, 2)])
def test_tangency_band_in_m(dm, count):
    assert len(phi_roots(ProblemParams(3, 2, 1.2, m_star(3, 2) + dm))) == count


def test_phi_roots_none_below_m_star():
    assert phi_roots(ProblemParams(3, 2, 1.2, 1.0)) == ()


def test_phi_roots_single_above_serrin():
    P = ProblemParams(3, 4, 1.2, 0.05)
    (x,) = phi_roots(P)
    assert abs(phi_eval(x, P)) <= 1e-10


def test_phi_roots_overflow_is_a_numerical_error():
    with pytest.raises(NumericalError):
        phi_roots(ProblemParams(5, 1.0156, 1.2, 1.5 * m_star(5, 1.0156)))


def test_phi_roots_requires_positive_m():
    with pytest.raises(DomainError):
        phi_roots(ProblemParams(3, 2, 1.2, 0.0))


def test_phi_and_reduced_map_agree():
    P = ProblemParams(3, 1.7, 1.2, 0.8)
    for X in [0.1, 1.0, 7.5]:
        Y = X ** ((P.p - 1) / (P.p + 1))
        assert phi_eval(X, P) == pytest.approx(phi_tilde(Y, P), rel=1e-13, abs=1e-13)


def test_m_p_threshold_oracle():
    mp = m_p_threshold(3, 1.5)
    assert mp.b_p == 6.0
    assert mp.theta_star == pytest.approx(THETA_STAR_3_15, rel=1e-13)
    assert mp.m_p == pytest.approx(M_P_3_15, rel=1e-13)
    assert mp.theta_naive == pytest.approx(0.05, rel=1e-15)
    assert mp.m_p_naive_pair[0] == pytest.approx(NAIVE_PAIR_3_15[0], rel=1e-13)
    assert mp.m_p_naive_pair[1] == pytest.approx(NAIVE_PAIR_3_15[1], rel=1e-13)
    assert mp.consistent is False


def test_m_p_closed_form_crossing():
    # f1 = f2 solves to θ = (p / (b(b-1)))^(p/(p+1)^2)
    mp = m_p_threshold(3, 1.5)
    p, b = 1.5, 6.0
    assert mp.theta_star == pytest.approx((p / (b * (b - 1))) ** (p / (p + 1) ** 2), rel=1e-14)


def test_m_p_outside_window():
    with pytest.raises(DomainError):
        m_p_threshold(3, 2.0)


def test_m_p_exceeds_m_star_at_n3_p15():
    assert m_p_threshold(3, 1.5).m_p > m_star(3, 1.5)


def test_edge_helpers():
    assert at_least(2.0 * (1 - EDGE_RTOL / 2), 2.0)
    assert not at_least(2.0 - 1e-9, 2.0)
    assert is_edge(4 / 3 + 1e-14, 4 / 3)
    assert not at_least(1e300, math.inf)
    assert not is_edge(5.0, math.inf)


def test_constant_report_fields_cited():
    rep = constant_report(ProblemParams(3, 1.5, 1.2, 1.0))
    assert rep.b_p == 6.0
    assert rep.m_p == pytest.approx(M_P_3_15, rel=1e-13)
    for name in ("alpha", "beta", "m_star", "m_p", "m_one", "phi_roots"):
        assert rep.citations[name]


def test_constant_report_above_serrin_has_no_m_star():
    rep = constant_report(ProblemParams(3, 3.5, 1.2, 1.0))
    assert rep.m_star is None and rep.b_p is None
    assert len(rep.phi_roots) == 1


# ---------------------------------------------------------------- properties

dims = st.integers(min_value=2, max_value=8)


@given(dims)
def test_exponent_ordering(N):
    c = critical_exponents(N)
    assert 1 < c.q_c < c.p_c <= c.p_serrin <= c.p_sobolev
    assert c.q_c < 2


@given(st.floats(1.0001, 50.0), st.floats(1.0001, 1.9999))
def test_alpha_beta_positive_and_q_star_below_two(p, q):
    e = singular_exponents(p, q)
    assert e.alpha > 0 and e.beta > 0
    assert 1 < e.q_star < 2


@settings(max_examples=60, deadline=None)
@given(
    st.integers(min_value=3, max_value=6),
    st.floats(0.1, 0.98),
    st.floats(0.05, 0.9),
)
def test_root_count_transition_at_m_star(N, frac, gap):
    p = 1 + frac * (N / (N - 2) - 1)
    ms = m_star(N, p)
    below = ProblemParams(N, p, 1.2, ms * (1 - gap))
    above = ProblemParams(N, p, 1.2, ms * (1 + gap))
    assert phi_roots(below) == ()
    roots = phi_roots(above)
    assert len(roots) == 2 and roots[0] < roots[1]
    scale = max(1.0, above.alpha * abs(N - 2 - above.alpha))
    for x in roots:
        assert abs(phi_eval(x, above)) <= 1e-10 * scale * max(1.0, x ** (p - 1))


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=3, max_value=6), st.floats(0.0, 4.0), st.floats(1e-3, 10.0))
def test_single_root_from_serrin_up(N, extra, m):
    p = N / (N - 2) + extra
    P = ProblemParams(N, p, 1.2, m)
    roots = phi_roots(P)
    assert len(roots) == 1
    assert abs(phi_eval(roots[0], P)) <= 1e-10 * max(1.0, roots[0] ** (p - 1))


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=2, max_value=6), st.floats(0.01, 0.99))
def test_m_p_crossing_property(N, frac):
    p = 1 + frac * ((N + 1) / (N - 1) - 1)
    mp = m_p_threshold(N, p)
    assert mp.b_p > 1
    f1, f2 = _holder_branches(p, mp.b_p)
    assert f1(mp.theta_star) == pytest.approx(f2(mp.theta_star), rel=1e-10)
    # f1 increases, f2 decreases
    t = mp.theta_star
    assert f1(0.5 * t) < f1(t) < f1(2 * t)
    assert f2(0.5 * t) > f2(t) > f2(2 * t)


@given(st.floats(1.01, 20.0), st.floats(1.01, 1e6), st.floats(1.01, 10.0))
def test_m_one_increasing_in_b_and_bounded(p, b, factor):
    assert m_one(p, b) < m_one(p, b * factor) <= m_one_sup(p)


@given(st.floats(0.01, 10.0), st.floats(1.05, 2.9))
def test_y0_minimises_reduced_map(m, p):
    P = ProblemParams(3, p, 1.2, m)
    Y = y0(P)
    assert phi_tilde(Y, P) <= phi_tilde(Y * 1.01, P)
    assert phi_tilde(Y, P) <= phi_tilde(Y * 0.99, P)
