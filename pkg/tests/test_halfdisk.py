import json
import math

import numpy as np
import pytest

from selab.constants import ProblemParams
from selab.errors import DivergenceError, DomainError, FitError, PositivityError
from selab.halfdisk import (
    BoundarySpec,
    FieldSolution,
    MollifiedDirac,
    PolarGrid,
    SeparableProfile,
    Terms,
    _newton,
    certificate_residual,
    default_window,
    estimate_m_threshold,
    fit_exponent,
    gradient_ratio,
    ray_values,
    solve_bvp,
    threshold_from_M,
)

HARMONIC = Terms(False, False)
GRADIENT = Terms(True, False)
SOURCE = Terms(False, True)
BOTH = Terms(True, True)


# ------------------------------------------------------------- grid


def test_grid_validation():
    with pytest.raises(DomainError):
        PolarGrid(1.0, 1.0, 32, 32)
    with pytest.raises(DomainError):
        PolarGrid(0.0, 1.0, 32, 32)
    with pytest.raises(DomainError):
        PolarGrid(1.0, 2.0, 15, 32)
    with pytest.raises(DomainError):
        PolarGrid(1.0, 2.0, 32, 8)


def test_grid_nodes():
    g = PolarGrid(1e-2, 1e2, 33, 17)
    assert g.r[0] == 1e-2 and g.r[-1] == 1e2
    assert np.allclose(np.diff(np.log(g.r)), g.ds, rtol=1e-12)
    assert g.theta[0] == 0.0 and g.theta[-1] == math.pi
    assert g.refined().n_r == 66 and g.refined().n_theta == 34
    assert default_window(g) == (2e-2, pytest.approx(1.0))


# ------------------------------------------------------------- fitting


def _synthetic(grid, power, params=ProblemParams(2, 2.0, 1.5)):
    r, th = grid.r[:, None], grid.theta[None, :]
    u = r**power * (1.0 + np.sin(th)) * np.sin(th)
    return FieldSolution.from_field(grid, u, params)


def test_fit_exact_power_law():
    g = PolarGrid(1e-3, 1e3, 64, 32)
    fit = fit_exponent(_synthetic(g, -2.0))
    assert fit.slope == pytest.approx(-2.0, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    assert fit.n_points >= 2


def test_fit_off_grid_ray():
    g = PolarGrid(1e-3, 1e3, 64, 32)
    fit = fit_exponent(_synthetic(g, -2.0), ray_theta=1.0)
    assert fit.slope == pytest.approx(-2.0, abs=1e-12)


def test_fit_rejects_zero_values():
    g = PolarGrid(1.0, 10.0, 32, 16)
    sol = FieldSolution.from_field(g, np.zeros((32, 16)), ProblemParams(2, 2.0, 1.5))
    with pytest.raises(FitError):
        fit_exponent(sol)


def test_fit_window_and_ray_checks():
    g = PolarGrid(1.0, 10.0, 32, 16)
    sol = _synthetic(g, -1.0)
    with pytest.raises(DomainError):
        fit_exponent(sol, window=(0.5, 5.0))
    with pytest.raises(DomainError):
        fit_exponent(sol, window=(5.0, 2.0))
    with pytest.raises(DomainError):
        fit_exponent(sol, ray_theta=0.0)
    with pytest.raises(FitError):
        fit_exponent(sol, window=(1.01, 1.02))


def test_ray_values_on_grid_column():
    g = PolarGrid(1.0, 10.0, 32, 17)
    sol = _synthetic(g, -1.0)
    assert np.allclose(ray_values(sol, g.theta[8]), sol.u[:, 8], rtol=1e-14)


def test_from_field_shape_check():
    with pytest.raises(DomainError):
        FieldSolution.from_field(PolarGrid(1.0, 2.0, 16, 16), np.ones((16, 17)), ProblemParams(2, 2.0, 1.5))


# ------------------------------------------------------------- boundary data


def test_mollified_dirac_mass_and_far_field():
    d = MollifiedDirac(mass=2.0, width=1e-3)
    t, w = np.polynomial.legendre.leggauss(200)
    x = 1e-3 * t
    assert np.sum(1e-3 * w * d.flat(x)) == pytest.approx(2.0, rel=1e-3)
    th = np.linspace(0.1, 3.0, 7)
    far = d.poisson(np.cos(th), np.sin(th))
    assert np.allclose(far, d.continuum(1.0, th), rtol=1e-5)
    with pytest.raises(DomainError):
        MollifiedDirac(mass=0.0)


def test_boundary_spec_validation():
    with pytest.raises(DomainError):
        BoundarySpec(MollifiedDirac(), outer="periodic")
    with pytest.raises(DomainError):
        BoundarySpec(MollifiedDirac(), outer="separable")


def test_solve_preconditions():
    g = PolarGrid(1.0, 10.0, 16, 16)
    with pytest.raises(DomainError):
        solve_bvp(g, ProblemParams(3, 2.0, 1.5, 1.0), GRADIENT, BoundarySpec(MollifiedDirac()))
    with pytest.raises(DomainError):
        solve_bvp(g, ProblemParams(2, 2.0, 1.5, 0.0), GRADIENT, BoundarySpec(MollifiedDirac()))
    with pytest.raises(DomainError):
        solve_bvp(g, ProblemParams(2, 2.0, 1.5, 1.0), GRADIENT, BoundarySpec(MollifiedDirac()), initial="separable")


# ------------------------------------------------------------- solves


@pytest.fixture(scope="module")
def harmonic_pair():
    P = ProblemParams(2, 2.0, 1.5, 0.0)
    g = PolarGrid(1e-3, 1e3, 64, 32)
    b = BoundarySpec(MollifiedDirac())
    return solve_bvp(g, P, HARMONIC, b), solve_bvp(g.refined(), P, HARMONIC, b)


def test_harmonic_slope_and_refinement(harmonic_pair):
    coarse, fine = harmonic_pair
    e0 = abs(fit_exponent(coarse).slope + 1)
    e1 = abs(fit_exponent(fine).slope + 1)
    assert e0 <= 0.05
    assert e1 < 0.5 * e0


def test_harmonic_flat_rows_vanish(harmonic_pair):
    sol = harmonic_pair[0]
    # the bump support (half-width 1e-6) lies inside the excised disk
    assert np.all(sol.u[:, 0] == 0.0) and np.all(sol.u[:, -1] == 0.0)
    assert np.all(sol.u >= 0)
    assert sol.residual <= 1e-10


@pytest.fixture(scope="module")
def chi_run():
    P = ProblemParams(2, 2.0, 1.25, 1.0)
    g = PolarGrid(1.0, 100.0, 64, 32)
    return solve_bvp(g, P, GRADIENT, BoundarySpec(SeparableProfile("chi"), "separable"))


def test_chi_run_matches_separable_field(chi_run):
    g, P = chi_run.grid, chi_run.params
    exact = SeparableProfile("chi").field(P, g.r[:, None], g.theta[None, :])
    inner = g.r <= math.sqrt(g.r_min * g.r_max)
    err = np.max(np.abs(chi_run.u - exact)[inner]) / np.max(exact[inner])
    assert err <= 0.05
    assert fit_exponent(chi_run).slope == pytest.approx(-3.0, rel=0.05)


def _boundary_max(u):
    return max(u[0].max(), u[-1].max(), u[:, 0].max(), u[:, -1].max())


def test_maximum_principle_gradient_only(chi_run):
    assert chi_run.u[1:-1, 1:-1].max() <= _boundary_max(chi_run.u)
    P = ProblemParams(2, 2.0, 1.25, 3.0)
    d = solve_bvp(PolarGrid(1e-2, 1.0, 48, 32), P, GRADIENT, BoundarySpec(MollifiedDirac()))
    assert d.u[1:-1, 1:-1].max() <= _boundary_max(d.u)
    assert d.residual <= 1e-10


@pytest.mark.parametrize(
    "params,grid,inner,scale",
    [
        (ProblemParams(2, 2.0, 1.25, 1.0), PolarGrid(1e-2, 1.0, 64, 32), MollifiedDirac(1.0), 1.0),
        (ProblemParams(2, 4.0, 1.25, 1.0), PolarGrid(1.0, 100.0, 64, 32), SeparableProfile("chi"), 0.1),
    ],
)
def test_comparison_under_data_scaling(params, grid, inner, scale):
    big = solve_bvp(grid, params, BOTH, BoundarySpec(inner, "zero", scale))
    small = solve_bvp(grid, params, BOTH, BoundarySpec(inner, "zero", 0.1 * scale))
    assert np.all(small.u <= big.u)
    assert np.all(small.u[1:-1, 1:-1] < big.u[1:-1, 1:-1])
    assert big.residual <= 1e-10 and small.residual <= 1e-10


def test_certificate_residual_psi():
    P = ProblemParams(2, 4.0, 1.25, 0.0)
    g = PolarGrid(1e-2, 1e2, 256, 128)
    tol = 1e-8
    b = BoundarySpec(SeparableProfile("psi"), "separable")
    sol = solve_bvp(g, P, SOURCE, b, tol=tol, initial="separable")
    assert sol.residual <= tol
    assert certificate_residual(sol) <= 10 * tol
    assert fit_exponent(sol).slope == pytest.approx(-2 / 3, rel=0.05)


def test_stagnation_raises_divergence_with_history():
    P = ProblemParams(2, 4.0, 1.25, 1.0)
    with pytest.raises(DivergenceError) as info:
        solve_bvp(PolarGrid(1.0, 100.0, 32, 16), P, BOTH, BoundarySpec(SeparableProfile("chi")))
    assert len(info.value.residual_history) > 0


class _PushesNegative:
    # residual U + 1 with identity Jacobian: every step overshoots below zero
    ni = nj = 2

    def residual(self, U, lam):
        F = U[1:-1, 1:-1] + 1.0
        return F, np.ones_like(F)

    def jacobian(self, U, lam):
        import scipy.sparse as sp

        return sp.identity(4, format="csr")


def test_negative_steps_raise_positivity():
    with pytest.raises(PositivityError) as info:
        _newton(_PushesNegative(), np.zeros((4, 4)), 0.0, 1e-10, [])
    assert info.value.residual_history


def test_solve_is_deterministic():
    P = ProblemParams(2, 2.0, 1.25, 1.0)
    g = PolarGrid(1e-2, 1.0, 32, 16)
    b = BoundarySpec(MollifiedDirac())
    assert solve_bvp(g, P, BOTH, b).to_csv() == solve_bvp(g, P, BOTH, b).to_csv()


def test_csv_and_metadata(chi_run):
    text = chi_run.to_csv()
    lines = text.splitlines()
    g = chi_run.grid
    assert lines[0] == "r,theta,u"
    assert len(lines) == 1 + g.n_r * g.n_theta
    r, th, u = map(float, lines[1 + g.n_theta + 2].split(","))
    assert (r, th, u) == (g.r[1], g.theta[2], chi_run.u[1, 2])
    meta = chi_run.metadata({"pi/2": -3.0})
    data = json.loads(json.dumps(meta))
    assert data["boundary"]["inner"] == {"type": "SeparableProfile", "kind": "chi"}
    assert data["fitted_slopes"] == {"pi/2": -3.0}
    assert data["newton_iters"] == chi_run.newton_iters
    assert data["residual_history"] == list(chi_run.residual_history)


# ------------------------------------------------------------- threshold


def test_threshold_from_M_arithmetic():
    p, q, M = 1.5, 1.25, 0.2
    X0, closed, direct = threshold_from_M(M, p, q)
    assert X0 == pytest.approx(((p - q) / ((q - 1) * M)) ** ((q - 1) / (p - 1)), rel=1e-15)
    assert closed == pytest.approx(direct, rel=1e-12)
    # X0 minimises X + 1/(X^((p-q)/(q-1)) M)
    g = lambda X: X + 1.0 / (X ** ((p - q) / (q - 1)) * M)
    assert g(X0) <= g(1.01 * X0) and g(X0) <= g(0.99 * X0)


@pytest.fixture(scope="module")
def synthetic_vchi():
    P = ProblemParams(2, 1.5, 1.25, 1.0)
    g = PolarGrid(1.0, 100.0, 128, 64)
    sp = SeparableProfile("chi")
    u = sp.field(P, g.r[:, None], g.theta[None, :])
    return FieldSolution.from_field(g, u, P), sp.profile(P)


def _analytic_min(grid, params, chi):
    beta = params.beta
    r = grid.r[1:-1, None]
    a = np.abs(0.5 * math.pi - grid.theta[None, 1:-1])
    c, dc = chi(a), chi.derivative(a)
    val = r ** (beta * params.p - (beta + 1) * params.q) * (beta**2 * c**2 + dc**2) ** (params.q / 2) / c**params.p
    return float(np.min(val))


def test_threshold_on_synthetic_field(synthetic_vchi):
    sol, chi = synthetic_vchi
    est = estimate_m_threshold(sol)
    want = _analytic_min(sol.grid, sol.params, chi)
    assert est.M_est == pytest.approx(want, rel=0.02)
    assert est.m_threshold == pytest.approx(est.m_threshold_check, rel=1e-10)
    assert est.critical_nodes == 0 and est.warnings == ()
    assert sol.grid.r_min <= est.argmin[0] <= sol.grid.r_max


def test_threshold_window_precondition(synthetic_vchi):
    sol, _ = synthetic_vchi
    with pytest.raises(DomainError):
        estimate_m_threshold(sol, ProblemParams(2, 2.0, 1.25, 1.0))


def _plateau_field():
    g = PolarGrid(1.0, 10.0, 32, 32)
    r, th = g.r[:, None], g.theta[None, :]
    # flat for r <= e, so every node there is a critical point
    u = 2.0 + np.maximum(0.0, np.log(r) - 1.0) ** 2 * np.ones_like(th)
    return FieldSolution.from_field(g, u, ProblemParams(2, 1.5, 1.25, 1.0)), g


def test_threshold_flags_critical_points():
    sol, _ = _plateau_field()
    ratio, rel = gradient_ratio(sol)
    assert np.any(rel < 1e-8)
    est = estimate_m_threshold(sol)
    assert est.M_est == 0.0
    assert est.warnings == ("M_est may be spurious zero",)
    assert math.isinf(est.m_threshold)


def test_threshold_exclusion_removes_warning():
    sol, g = _plateau_field()
    est = estimate_m_threshold(sol, exclusion_radius=0.5)
    assert est.M_est > 0 and est.warnings == ()
    assert est.critical_nodes > 0
    assert est.m_threshold == pytest.approx(est.m_threshold_check, rel=1e-10)
