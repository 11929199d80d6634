"""Finite-difference solver for -Δu + m|∇u|^q - u^p = 0 on a planar half-annulus.

The domain is {r_min < r < r_max, 0 < φ < π} with φ measured from the flat
boundary, so φ = π/2 is the inward normal ray through the singular point.
Radial nodes are uniform in s = ln r.  Multiplying the equation by r² gives

    -(u_ss + u_φφ) + m r^(2-q) (u_s² + u_φ²)^(q/2) - λ r² u^p = 0,

which is discretized with the 5-point Laplacian and solved by damped Newton
with a sparse direct solver.  λ ramps from 0 to 1 when the source is on.
"""

from __future__ import annotations

import functools
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import spsolve
from scipy.stats import linregress

from .constants import ProblemParams
from .errors import DivergenceError, DomainError, FitError, PositivityError
from .profiles import ProfileKind, solve_profile

log = logging.getLogger(__name__)

DAMPING_FLOOR = 2.0**-20
CONTINUATION_STEPS = 8
UPWIND_CELLS = 3
MAX_NEWTON = 60
DEFAULT_TOL = 1e-10
PROFILE_STEPS = 1024
PERMUTATION = "MMD_AT_PLUS_A"


@dataclass(frozen=True)
class PolarGrid:
    r_min: float
    r_max: float
    n_r: int
    n_theta: int

    def __post_init__(self):
        if not 0 < self.r_min < self.r_max:
            raise DomainError(
                f"need 0 < r_min < r_max, got {self.r_min}, {self.r_max}", "0 < r_min < r_max"
            )
        if self.n_r < 16 or self.n_theta < 16:
            raise DomainError("grid needs at least 16 nodes per direction", "n_r, n_theta >= 16")

    @property
    def s(self) -> np.ndarray:
        return np.linspace(math.log(self.r_min), math.log(self.r_max), self.n_r)

    @property
    def r(self) -> np.ndarray:
        r = np.exp(self.s)
        r[0], r[-1] = self.r_min, self.r_max
        return r

    @property
    def theta(self) -> np.ndarray:
        return np.linspace(0.0, math.pi, self.n_theta)

    @property
    def ds(self) -> float:
        return math.log(self.r_max / self.r_min) / (self.n_r - 1)

    @property
    def dtheta(self) -> float:
        return math.pi / (self.n_theta - 1)

    def refined(self) -> "PolarGrid":
        """Same annulus with twice as many nodes in each direction."""
        return PolarGrid(self.r_min, self.r_max, 2 * self.n_r, 2 * self.n_theta)

    def as_dict(self) -> dict:
        return {"r_min": self.r_min, "r_max": self.r_max, "n_r": self.n_r, "n_theta": self.n_theta}


@dataclass(frozen=True)
class Terms:
    absorption_q: bool = True
    source_p: bool = False

    def as_dict(self) -> dict:
        return {"absorption_q": self.absorption_q, "source_p": self.source_p}


# --------------------------------------------------------------------------
# boundary data


def _bump(t):
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


@dataclass(frozen=True)
class MollifiedDirac:
    """k·ρ_w on the flat boundary, ρ_w a normalized bump of half-width w.

    On the inner arc the datum is the half-plane Poisson integral of k·ρ_w,
    so the excised disk B_{r_min} carries the same singular point.
    """

    mass: float = 1.0
    width: float = 1e-6
    quadrature: int = 96

    def __post_init__(self):
        if not self.mass > 0 or not self.width > 0:
            raise DomainError("mollified Dirac needs mass > 0 and width > 0", "k > 0, w > 0")

    def _nodes(self):
        t, wt = np.polynomial.legendre.leggauss(self.quadrature)
        dens = _bump(t)
        dens = dens / np.sum(wt * dens)
        return self.width * t, wt * dens * self.mass

    def flat(self, x1) -> np.ndarray:
        """k·ρ_w(x1) on the flat boundary."""
        t, wt = np.polynomial.legendre.leggauss(self.quadrature)
        norm = np.sum(wt * _bump(t))
        return self.mass * _bump(np.asarray(x1, dtype=float) / self.width) / (norm * self.width)

    def poisson(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        """(1/π) ∫ x2 / ((x1-y)² + x2²) k ρ_w(y) dy for x2 > 0."""
        y, wts = self._nodes()
        x1 = np.asarray(x1, dtype=float)[..., None]
        x2 = np.asarray(x2, dtype=float)[..., None]
        return np.sum(wts * x2 / ((x1 - y) ** 2 + x2**2), axis=-1) / math.pi

    def continuum(self, r, theta):
        """Point-mass limit k·x2/(π|x|²)."""
        return self.mass * np.sin(theta) / (math.pi * r)

    def as_dict(self) -> dict:
        return {"type": "MollifiedDirac", "mass": self.mass, "width": self.width}


@functools.lru_cache(maxsize=32)
def _cached_profile(kind: ProfileKind, params: ProblemParams):
    sol = solve_profile(kind, params, n_steps=PROFILE_STEPS)
    if sol is None:
        raise DomainError(f"no {kind.value} profile at {params.as_dict()}", "profile exists")
    return sol


@dataclass(frozen=True)
class SeparableProfile:
    """r^(-γ) f(|π/2 - φ|) with f the half-circle profile of the given kind."""

    kind: ProfileKind = ProfileKind.CHI

    def __post_init__(self):
        object.__setattr__(self, "kind", ProfileKind.parse(self.kind))

    def exponent(self, params: ProblemParams) -> float:
        return params.beta if self.kind is ProfileKind.CHI else params.alpha

    def profile(self, params: ProblemParams):
        return _cached_profile(self.kind, params)

    def field(self, params: ProblemParams, r, theta, profile=None):
        f = profile or self.profile(params)
        ang = f(np.abs(0.5 * math.pi - np.asarray(theta)))
        return np.asarray(r, dtype=float) ** (-self.exponent(params)) * ang

    def as_dict(self) -> dict:
        return {"type": "SeparableProfile", "kind": self.kind.value}


@dataclass(frozen=True)
class BoundarySpec:
    inner: MollifiedDirac | SeparableProfile
    outer: str = "zero"  # "zero" or "separable"
    scale: float = 1.0

    def __post_init__(self):
        if self.outer not in ("zero", "separable"):
            raise DomainError(f"outer boundary {self.outer!r}", "outer in {zero, separable}")
        if self.outer == "separable" and not isinstance(self.inner, SeparableProfile):
            raise DomainError("separable outer data needs a separable inner datum", "inner separable")

    def values(self, grid: PolarGrid, params: ProblemParams) -> np.ndarray:
        """Full (n_r, n_theta) array holding Dirichlet data on the boundary, 0 inside."""
        r, th = grid.r, grid.theta
        U = np.zeros((grid.n_r, grid.n_theta))
        inn = self.inner
        if isinstance(inn, MollifiedDirac):
            U[:, 0] = inn.flat(r)
            U[:, -1] = inn.flat(-r)
            U[0, 1:-1] = inn.poisson(r[0] * np.cos(th[1:-1]), r[0] * np.sin(th[1:-1]))
        else:
            prof = inn.profile(params)
            U[0, :] = inn.field(params, r[0], th, prof)
            if self.outer == "separable":
                U[-1, :] = inn.field(params, r[-1], th, prof)
            U[:, 0] = U[:, -1] = 0.0
        return self.scale * U

    def as_dict(self) -> dict:
        return {"inner": self.inner.as_dict(), "flat": "zero", "outer": self.outer, "scale": self.scale}


# --------------------------------------------------------------------------
# discrete operator


def _radial_stencils(n_r: int, ds: float) -> list:
    rows = np.arange(1, n_r - 1)
    coef = {off: np.zeros(rows.size) for off in (-2, -1, 0, 1)}
    centred = rows > UPWIND_CELLS
    coef[1][centred] = 0.5 / ds
    coef[-1][centred] = -0.5 / ds
    first = rows == 1
    coef[0][first] = 1.0 / ds
    coef[-1][first] = -1.0 / ds
    second = (rows >= 2) & (rows <= UPWIND_CELLS)
    coef[0][second] = 1.5 / ds
    coef[-1][second] = -2.0 / ds
    coef[-2][second] = 0.5 / ds
    return [(off, c) for off, c in coef.items() if np.any(c)]


class _Operator:
    def __init__(self, grid: PolarGrid, params: ProblemParams, terms: Terms):
        self.grid = grid
        self.params = params
        self.terms = terms
        self.ds, self.dth = grid.ds, grid.dtheta
        self.ni, self.nj = grid.n_r - 2, grid.n_theta - 2
        r = grid.r[1:-1, None]
        self.r_grad = params.m * r ** (2.0 - params.q) if terms.absorption_q else None
        self.r_src = r**2 if terms.source_p else None
        self.radial = _radial_stencils(grid.n_r, self.ds)

    def _grad(self, U):
        ni, nj = self.ni, self.nj
        a = np.zeros((ni, nj))
        # one ghost row so that offset -2 slices stay in range at i = 1
        Up = np.vstack([np.zeros((1, U.shape[1])), U])
        for off, c in self.radial:
            a += c[:, None] * Up[2 + off : 2 + off + ni, 1:-1]
        b = (U[1:-1, 2:] - U[1:-1, :-2]) / (2 * self.dth)
        return a, b

    def residual(self, U, lam: float):
        """(F, scale) on interior nodes."""
        ds2, dt2 = self.ds**2, self.dth**2
        c = U[1:-1, 1:-1]
        lr = U[2:, 1:-1] - 2 * c + U[:-2, 1:-1]
        la = U[1:-1, 2:] - 2 * c + U[1:-1, :-2]
        F = -(lr / ds2 + la / dt2)
        ac = np.abs(c)
        scale = (np.abs(U[2:, 1:-1]) + 2 * ac + np.abs(U[:-2, 1:-1])) / ds2 + (
            np.abs(U[1:-1, 2:]) + 2 * ac + np.abs(U[1:-1, :-2])
        ) / dt2
        if self.r_grad is not None:
            a, b = self._grad(U)
            g = self.r_grad * (a * a + b * b) ** (0.5 * self.params.q)
            F = F + g
            scale = scale + g
        if self.r_src is not None and lam:
            s = lam * self.r_src * np.abs(c) ** self.params.p
            F = F - np.sign(c) * s
            scale = scale + s
        return F, scale

    def jacobian(self, U, lam: float) -> sp.csr_matrix:
        ni, nj = self.ni, self.nj
        n = ni * nj
        idx = np.arange(n).reshape(ni, nj)
        I, J = np.meshgrid(np.arange(ni), np.arange(nj), indexing="ij")
        rows, cols, vals = [], [], []

        def add(di, dj, coef):
            ii, jj = I + di, J + dj
            ok = (ii >= 0) & (ii < ni) & (jj >= 0) & (jj < nj)
            coef = np.broadcast_to(coef, (ni, nj))
            rows.append(idx[ok])
            cols.append(idx[ii[ok], jj[ok]])
            vals.append(coef[ok])

        ds2, dt2 = self.ds**2, self.dth**2
        diag = np.full((ni, nj), 2 / ds2 + 2 / dt2)
        add(1, 0, -1 / ds2)
        add(-1, 0, -1 / ds2)
        add(0, 1, -1 / dt2)
        add(0, -1, -1 / dt2)
        if self.r_grad is not None:
            q = self.params.q
            a, b = self._grad(U)
            g2 = a * a + b * b
            with np.errstate(divide="ignore", invalid="ignore"):
                k = np.where(g2 > 0, self.r_grad * q * g2 ** (0.5 * q - 1.0), 0.0)
            ka, kb = k * a, k * b
            for off, c in self.radial:
                if off == 0:
                    diag = diag + ka * c[:, None]
                else:
                    add(off, 0, ka * c[:, None])
            add(0, 1, kb / (2 * self.dth))
            add(0, -1, -kb / (2 * self.dth))
        if self.r_src is not None and lam:
            c = U[1:-1, 1:-1]
            diag = diag - lam * self.r_src * self.params.p * np.abs(c) ** (self.params.p - 1)
        add(0, 0, diag)
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        )


# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FieldSolution:
    grid: PolarGrid
    u: np.ndarray = field(repr=False)
    params: ProblemParams
    terms: Terms
    boundary: BoundarySpec | None
    residual_history: tuple = ()
    newton_iters: int = 0
    residual: float = math.nan

    @classmethod
    def from_field(cls, grid: PolarGrid, u: np.ndarray, params: ProblemParams, terms=None):
        """Wrap an externally computed field (no solve performed)."""
        u = np.asarray(u, dtype=float)
        if u.shape != (grid.n_r, grid.n_theta):
            raise DomainError(f"field shape {u.shape} does not match the grid", "shape (n_r, n_theta)")
        return cls(grid, u, params, terms or Terms(True, False), None)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("r,theta,u\n")
        r, th = self.grid.r, self.grid.theta
        for i in range(self.grid.n_r):
            for j in range(self.grid.n_theta):
                buf.write(f"{r[i]:.17g},{th[j]:.17g},{self.u[i, j]:.17g}\n")
        return buf.getvalue()

    def metadata(self, slopes: dict | None = None) -> dict:
        return {
            "grid": self.grid.as_dict(),
            "params": self.params.as_dict(),
            "terms": self.terms.as_dict(),
            "boundary": self.boundary.as_dict() if self.boundary else None,
            "residual_history": list(self.residual_history),
            "newton_iters": self.newton_iters,
            "residual": self.residual,
            "fitted_slopes": slopes or {},
        }


def _scaled(F, scale) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(scale > 0, np.abs(F) / scale, np.abs(F))
    return float(np.max(rel))


def _newton(op: _Operator, U: np.ndarray, lam: float, tol: float, history: list) -> tuple[np.ndarray, int]:
    ni, nj = op.ni, op.nj
    F, scale = op.residual(U, lam)
    res = _scaled(F, scale)
    norm = float(np.linalg.norm(F))
    for it in range(MAX_NEWTON):
        if res <= tol:
            return U, it
        J = op.jacobian(U, lam)
        delta = spsolve(J.tocsc(), -F.ravel(), permc_spec=PERMUTATION).reshape(ni, nj)
        t, negative_only = 1.0, True
        while t >= DAMPING_FLOOR:
            trial = U.copy()
            trial[1:-1, 1:-1] += t * delta
            if np.all(trial[1:-1, 1:-1] >= 0):
                Ft, st = op.residual(trial, lam)
                nt = float(np.linalg.norm(Ft))
                if np.isfinite(nt) and nt < norm:
                    break
                negative_only = False
            t *= 0.5
        else:
            history.append(res)
            exc = PositivityError if negative_only else DivergenceError
            raise exc(
                f"damping floor 2^-20 reached at λ={lam:g} after {it} Newton steps",
                residual_history=list(history),
            )
        U, F, scale, norm = trial, Ft, st, nt
        res = _scaled(F, scale)
        history.append(res)
        log.debug("newton λ=%g it=%d step=%g residual=%.3e", lam, it, t, res)
    if res <= tol:
        return U, MAX_NEWTON
    raise DivergenceError(
        f"no convergence in {MAX_NEWTON} Newton steps at λ={lam:g}", residual_history=list(history)
    )


def _harmonic(grid: PolarGrid, U: np.ndarray) -> np.ndarray:
    op = _Operator(grid, ProblemParams(2, 2.0, 1.5, 0.0), Terms(False, False))
    F, _ = op.residual(U, 0.0)
    J = op.jacobian(U, 0.0)
    out = U.copy()
    out[1:-1, 1:-1] += spsolve(J.tocsc(), -F.ravel(), permc_spec=PERMUTATION).reshape(op.ni, op.nj)
    return out


def solve_bvp(
    grid: PolarGrid,
    params: ProblemParams,
    terms: Terms,
    boundary: BoundarySpec,
    tol: float = DEFAULT_TOL,
    initial: np.ndarray | str | None = None,
) -> FieldSolution:
    """Damped Newton solve of the discrete problem.

    With the source on and no ``initial`` iterate, the source coefficient is
    ramped 1/8, 2/8, ..., 1 starting from the solution without source.  That
    path follows the minimal solution; ``initial="separable"`` seeds Newton
    with the self-similar field of a SeparableProfile boundary instead.
    """
    if params.N != 2:
        raise DomainError(f"the half-disk solver is planar, got N={params.N}", "N = 2")
    if terms.absorption_q and not params.m > 0:
        raise DomainError("absorption term enabled with m = 0", "m > 0")
    B = boundary.values(grid, params)
    op = _Operator(grid, params, terms)
    history: list[float] = []
    iters = 0
    if isinstance(initial, str):
        if initial != "separable" or not isinstance(boundary.inner, SeparableProfile):
            raise DomainError(
                f"initial={initial!r} needs a SeparableProfile boundary", "initial = separable"
            )
        g = grid
        initial = boundary.scale * boundary.inner.field(
            params, g.r[:, None], g.theta[None, :], boundary.inner.profile(params)
        )
    if initial is not None:
        U = np.array(initial, dtype=float)
        U[0], U[-1], U[:, 0], U[:, -1] = B[0], B[-1], B[:, 0], B[:, -1]
        lams = [1.0] if terms.source_p else [0.0]
    else:
        U = _harmonic(grid, B)
        np.maximum(U, 0.0, out=U)
        lams = [0.0]
        if terms.source_p:
            lams += [k / CONTINUATION_STEPS for k in range(1, CONTINUATION_STEPS + 1)]
    for lam in lams:
        if lam == 0.0 and not terms.absorption_q:
            continue  # the harmonic start is already the solution
        U, k = _newton(op, U, lam, tol, history)
        iters += k
    F, scale = op.residual(U, 1.0 if terms.source_p else 0.0)
    final = _scaled(F, scale)
    if not history:
        history.append(final)
    return FieldSolution(grid, U, params, terms, boundary, tuple(history), iters, final)


def certificate_residual(sol: FieldSolution) -> float:
    """Scaled residual of the continuous operator with fourth-order differences.

    Evaluated on nodes at least two cells from every boundary.
    """
    g, U = sol.grid, sol.u
    ds, dt = g.ds, g.dtheta
    c = U[2:-2, 2:-2]

    def d1(a, ax, h):
        sl = lambda k: np.take(a, range(2 + k, a.shape[ax] - 2 + k), axis=ax)  # noqa: E731
        return (-sl(2) + 8 * sl(1) - 8 * sl(-1) + sl(-2)) / (12 * h)

    def d2(a, ax, h):
        sl = lambda k: np.take(a, range(2 + k, a.shape[ax] - 2 + k), axis=ax)  # noqa: E731
        return (-sl(2) + 16 * sl(1) - 30 * sl(0) + 16 * sl(-1) - sl(-2)) / (12 * h * h)

    us = d1(U, 0, ds)[:, 2:-2]
    uss = d2(U, 0, ds)[:, 2:-2]
    ut = d1(U, 1, dt)[2:-2, :]
    utt = d2(U, 1, dt)[2:-2, :]
    F = -(uss + utt)
    ac = np.abs(c)
    scale = (np.abs(U[3:-1, 2:-2]) + 2 * ac + np.abs(U[1:-3, 2:-2])) / ds**2 + (
        np.abs(U[2:-2, 3:-1]) + 2 * ac + np.abs(U[2:-2, 1:-3])
    ) / dt**2
    r = g.r[2:-2, None]
    p = sol.params
    if sol.terms.absorption_q:
        gr = p.m * r ** (2 - p.q) * (us**2 + ut**2) ** (0.5 * p.q)
        F, scale = F + gr, scale + gr
    if sol.terms.source_p:
        s = r**2 * ac**p.p
        F, scale = F - s, scale + s
    return _scaled(F, scale)


# --------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    r2: float
    intercept: float
    n_points: int


def default_window(grid: PolarGrid) -> tuple[float, float]:
    return 2.0 * grid.r_min, math.sqrt(grid.r_min * grid.r_max)


def ray_values(sol: FieldSolution, ray_theta: float) -> np.ndarray:
    """u along the ray φ = ray_theta, cubic in φ between grid columns."""
    return CubicSpline(sol.grid.theta, sol.u, axis=1)(ray_theta)


def fit_exponent(
    sol: FieldSolution, ray_theta: float = 0.5 * math.pi, window: tuple[float, float] | None = None
) -> ExponentFit:
    """Least-squares slope of log u against log r along one ray."""
    g = sol.grid
    if not 0 < ray_theta < math.pi:
        raise DomainError("ray must be strictly inside (0, π)", "0 < theta < pi")
    lo, hi = window or default_window(g)
    eps = 1e-12
    if lo < g.r_min * (1 - eps) or hi > g.r_max * (1 + eps) or not lo < hi:
        raise DomainError(f"window [{lo}, {hi}] outside [{g.r_min}, {g.r_max}]", "window within grid")
    r = g.r
    sel = (r >= lo * (1 - eps)) & (r <= hi * (1 + eps))
    if sel.sum() < 2:
        raise FitError("fewer than two radial nodes in the fit window")
    vals = ray_values(sol, ray_theta)[sel]
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise FitError("non-positive values in the fit window")
    fit = linregress(np.log(r[sel]), np.log(vals))
    return ExponentFit(float(fit.slope), float(fit.rvalue**2), float(fit.intercept), int(sel.sum()))


@dataclass(frozen=True)
class ThresholdEstimate:
    M_est: float
    X0: float
    m_threshold: float
    m_threshold_check: float
    argmin: tuple[float, float]
    critical_nodes: int
    warnings: tuple[str, ...] = ()


CRITICAL_REL = 1e-8


def gradient_ratio(sol: FieldSolution) -> tuple[np.ndarray, np.ndarray]:
    """(|∇u|^q / u^p, r|∇u|/u) on interior nodes from centred differences."""
    g, U, p = sol.grid, sol.u, sol.params
    us = (U[2:, 1:-1] - U[:-2, 1:-1]) / (2 * g.ds)
    ut = (U[1:-1, 2:] - U[1:-1, :-2]) / (2 * g.dtheta)
    r = g.r[1:-1, None]
    grad = np.sqrt(us**2 + ut**2) / r
    c = U[1:-1, 1:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = grad**p.q / c**p.p
        rel = grad * r / c
    return ratio, rel


def threshold_from_M(M: float, p: float, q: float) -> tuple[float, float, float]:
    """(X0, closed-form threshold, minimised expression at X0)."""
    X0 = ((p - q) / ((q - 1) * M)) ** ((q - 1) / (p - 1))
    closed = (p - 1) / (p - q) * X0
    direct = X0 + 1.0 / (X0 ** ((p - q) / (q - 1)) * M)
    return X0, closed, direct


def estimate_m_threshold(
    sol: FieldSolution, params: ProblemParams | None = None, exclusion_radius: float = 0.0
) -> ThresholdEstimate:
    """Grid minimum M of |∇v|^q / v^p and the mass threshold it implies.

    Nodes where r|∇v|/v < CRITICAL_REL count as near-critical.  With a positive
    ``exclusion_radius`` every node closer than that to a near-critical node
    is dropped from the minimum.
    """
    params = params or sol.params
    p, q = params.p, params.q
    if not (params.q_star < q < params.q_c):
        raise DomainError(
            f"threshold needs 2p/(p+1) < q < (N+1)/N, got p={p}, q={q}",
            "2p/(p+1) < q < (N+1)/N",
        )
    ratio, rel = gradient_ratio(sol)
    crit = ~(rel >= CRITICAL_REL)
    mask = np.isfinite(ratio) & ~crit
    warnings = []
    n_crit = int(crit.sum())
    if n_crit and exclusion_radius > 0:
        g = sol.grid
        r = g.r[1:-1, None] * np.ones((1, g.n_theta - 2))
        th = np.ones((g.n_r - 2, 1)) * g.theta[None, 1:-1]
        x, y = r * np.cos(th), r * np.sin(th)
        for cx, cy in zip(x[crit], y[crit]):
            mask &= np.hypot(x - cx, y - cy) >= exclusion_radius
    elif n_crit:
        warnings.append("M_est may be spurious zero")
    if not mask.any():
        raise FitError("no admissible node for the gradient ratio minimum")
    vals = np.where(mask, ratio, np.inf)
    k = np.unravel_index(np.argmin(vals), vals.shape)
    M = float(vals[k])
    if n_crit and not exclusion_radius > 0:
        M = 0.0
    if M <= 0:
        return ThresholdEstimate(0.0, math.inf, math.inf, math.inf, (math.nan, math.nan), n_crit, tuple(warnings))
    X0, closed, direct = threshold_from_M(M, p, q)
    where = (float(sol.grid.r[k[0] + 1]), float(sol.grid.theta[k[1] + 1]))
    return ThresholdEstimate(M, X0, closed, direct, where, n_crit, tuple(warnings))
