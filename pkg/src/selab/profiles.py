"""Axisymmetric profiles on the upper half-sphere S^{N-1}_+.

A profile w(θ) depends on the colatitude θ ∈ [0, π/2] only (θ = 0 is the pole,
θ = π/2 the equator where w vanishes).  For such functions the
Laplace-Beltrami operator reduces to

    Δ'w = w'' + (N-2) cot(θ) w',     |∇'w|² = w'².

Four equations are handled, all of the form -Δ'w + G(w, w') = 0:

    PSI    G = α(N-2-α) w - w^p
    OMEGA  G = α(N-2-α) w + m (α²w² + w'²)^(p/(p+1)) - w^p
    ETA    G = α(N-2-α) w + m (α²w² + w'²)^(p/(p+1))
    CHI    G = -β(β+2-N) w + m (β²w² + w'²)^(q/2)

Solutions are computed by shooting from the pole with a fixed-step RK4
integrator and bisecting on the pole value.
"""

from __future__ import annotations

import enum
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .constants import ProblemParams, at_least, phi_roots
from .errors import DomainError, NumericalError

log = logging.getLogger(__name__)

HALF_PI = 0.5 * math.pi
POLE_START = 1e-6
OVERFLOW_GUARD = 1e100
SWEEP_RANGE = (1e-8, 1e8)
SWEEP_SAMPLES = 200
DEFAULT_STEPS = 512
MIN_STEPS = 64
# points per multisection pass; each pass shrinks a bracket by (SECTIONS + 1)
SECTIONS = 63
GUARD_EVERY = 8


class ProfileKind(enum.Enum):
    PSI = "psi"
    OMEGA = "omega"
    ETA = "eta"
    CHI = "chi"

    @classmethod
    def parse(cls, name: str | "ProfileKind") -> "ProfileKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise DomainError(f"unknown profile kind {name!r}", "kind in psi/omega/eta/chi")


@dataclass(frozen=True)
class _Coeffs:
    lin: float  # coefficient of w in G
    grad_weight: float  # γ in (γ²w² + w'²)
    grad_power: float  # exponent applied to (γ²w² + w'²); 0 disables
    m: float
    p: float | None  # sink -w^p, None disables
    N: int


def _coeffs(kind: ProfileKind, params: ProblemParams) -> _Coeffs:
    N, p = params.N, params.p
    a, b = params.alpha, params.beta
    if kind is ProfileKind.PSI:
        return _Coeffs(a * (N - 2 - a), 0.0, 0.0, 0.0, p, N)
    if kind is ProfileKind.OMEGA:
        return _Coeffs(a * (N - 2 - a), a, p / (p + 1), params.m, p, N)
    if kind is ProfileKind.ETA:
        return _Coeffs(a * (N - 2 - a), a, p / (p + 1), params.m, None, N)
    return _Coeffs(-b * (b + 2 - N), b, params.q / 2, params.m, None, N)


def _forcing(c: _Coeffs, w, w1):
    """G(w, w') evaluated elementwise (odd extension of w^p below zero)."""
    g = c.lin * w
    if c.grad_power and c.m:
        g = g + c.m * (c.grad_weight**2 * w * w + w1 * w1) ** c.grad_power
    if c.p is not None:
        g = g - np.copysign(np.abs(w) ** c.p, w)
    return g


def ode_residual(kind, params: ProblemParams, theta: float, w, w1, w2):
    """Residual -(w'' + (N-2) cot θ w') + G(w, w') at colatitude θ ∈ (0, π/2]."""
    kind = ProfileKind.parse(kind)
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise DomainError(
            "the pole θ = 0 is singular for cot θ; use the series start",
            "theta in (0, pi/2]",
        )
    c = _coeffs(kind, params)
    lap = w2 + (c.N - 2) * w1 / np.tan(theta)
    return -lap + _forcing(c, np.asarray(w, dtype=float), np.asarray(w1, dtype=float))


def _rhs(c: _Coeffs, theta: float, w, v):
    acc = _forcing(c, w, v)
    if c.N != 2:
        acc = acc - (c.N - 2) * v / math.tan(theta)
    return v, acc


@dataclass
class _Trajectories:
    theta: np.ndarray
    w: np.ndarray | None  # (n+1, K) when kept
    v: np.ndarray | None
    end_w: np.ndarray
    crossed: np.ndarray
    cross_theta: np.ndarray
    blown: np.ndarray

    def shooting_map(self) -> np.ndarray:
        """w(π/2) without an earlier zero, -(π/2 - θ_zero) with one, NaN on blow-up."""
        s = np.where(self.crossed, -(HALF_PI - self.cross_theta), self.end_w)
        return np.where(self.blown, np.nan, s)


def _integrate(kind, params, a0, n_steps: int, keep: bool = False) -> _Trajectories:
    """RK4 from the pole for every pole value in ``a0`` simultaneously.

    Trajectories are not masked inside the loop; a trajectory is settled at
    its first zero or when it leaves the overflow guard, whichever comes
    first (the guard is checked every GUARD_EVERY steps).  With ``keep`` the
    stored path is frozen after the settling step.
    """
    c = _coeffs(kind, params)
    a0 = np.atleast_1d(np.asarray(a0, dtype=float))
    h = HALF_PI / n_steps
    theta = h * np.arange(n_steps + 1)
    K = a0.size
    # even series w = a0 + c2 θ² at the pole: (N-1) w''(0) = G(a0, 0)
    c2 = _forcing(c, a0, np.zeros(K)) / (2.0 * (c.N - 1))
    w = a0 + c2 * POLE_START**2
    v = 2.0 * c2 * POLE_START
    watch = a0 > 0
    crossed = np.zeros(K, dtype=bool)
    blown = np.zeros(K, dtype=bool)
    cross_theta = np.full(K, np.nan)
    settled_at = np.full(K, n_steps, dtype=int)
    end_w = np.empty(K)
    if keep:
        W = np.empty((n_steps + 1, K))
        V = np.empty((n_steps + 1, K))
        W[0], V[0] = a0, 0.0
    t0 = POLE_START
    last = n_steps
    with np.errstate(all="ignore"):
        for k in range(n_steps):
            t1 = theta[k + 1]
            dt = t1 - t0
            half = 0.5 * dt
            k1w, k1v = _rhs(c, t0, w, v)
            k2w, k2v = _rhs(c, t0 + half, w + half * k1w, v + half * k1v)
            k3w, k3v = _rhs(c, t0 + half, w + half * k2w, v + half * k2v)
            k4w, k4v = _rhs(c, t1, w + dt * k3w, v + dt * k3v)
            nw = w + dt / 6 * (k1w + 2 * (k2w + k3w) + k4w)
            nv = v + dt / 6 * (k1v + 2 * (k2v + k3v) + k4v)
            if k % GUARD_EVERY == GUARD_EVERY - 1 or k == n_steps - 1:
                big = watch & ~((np.abs(nw) < OVERFLOW_GUARD) & (np.abs(nv) < OVERFLOW_GUARD))
                if big.any():
                    blown |= big
                    watch &= ~big
                    end_w[big] = np.nan
                    settled_at[big] = k
            neg = nw <= 0
            if neg.any():
                hit = neg & watch
                if hit.any():
                    frac = w[hit] / (w[hit] - nw[hit])
                    cross_theta[hit] = t0 + frac * dt
                    crossed |= hit
                    watch &= ~hit
                    end_w[hit] = nw[hit]
                    settled_at[hit] = k + 1
            w, v = nw, nv
            if keep:
                W[k + 1], V[k + 1] = w, v
            t0 = t1
            if not watch.any():
                last = k + 1
                break
    open_ = ~(crossed | blown)
    end_w[open_] = w[open_]
    if keep:
        # frozen after the settling step, as if integration had stopped there
        for j in np.nonzero(~open_)[0]:
            r = settled_at[j]
            if blown[j]:
                # the guard is checked in blocks: go back to the last in-guard row
                ok = (np.abs(W[: r + 2, j]) < OVERFLOW_GUARD) & (np.abs(V[: r + 2, j]) < OVERFLOW_GUARD)
                r = int(np.nonzero(~ok)[0][0]) - 1
            W[r + 1 :, j], V[r + 1 :, j] = W[r, j], V[r, j]
        if last < n_steps:
            W[last + 1 :], V[last + 1 :] = W[last], V[last]
    return _Trajectories(
        theta, W if keep else None, V if keep else None, end_w, crossed, cross_theta, blown
    )


@dataclass(frozen=True)
class ShotResult:
    endpoint: float
    hit_zero_early: bool
    blown_up: bool
    theta: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    slopes: np.ndarray = field(repr=False)


def shoot(kind, params: ProblemParams, a0: float, n_steps: int = DEFAULT_STEPS) -> ShotResult:
    """Integrate w(0) = a0, w'(0) = 0 to the equator.

    ``endpoint`` is w(π/2), or the value at the first zero if the trajectory
    reaches zero early, or +inf if the overflow guard tripped.
    """
    kind = ProfileKind.parse(kind)
    if n_steps < MIN_STEPS:
        raise DomainError(f"n_steps={n_steps} below {MIN_STEPS}", f"n_steps >= {MIN_STEPS}")
    if a0 < 0:
        raise DomainError("pole value must be nonnegative", "a0 >= 0")
    tr = _integrate(kind, params, [a0], n_steps, keep=True)
    if tr.blown[0]:
        endpoint = math.inf
    elif tr.crossed[0]:
        endpoint = 0.0
    else:
        endpoint = float(tr.end_w[0])
    return ShotResult(
        endpoint, bool(tr.crossed[0]), bool(tr.blown[0]), tr.theta, tr.w[:, 0], tr.v[:, 0]
    )


# --------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class ProfileSolution:
    kind: ProfileKind
    params: ProblemParams
    theta_grid: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    pole_value: float
    residual_sup: float
    endpoint_value: float
    residuals: np.ndarray = field(repr=False)
    # residual_sup divided by the largest |G(w, w')| on the grid
    residual_rel: float = math.nan

    @property
    def max_value(self) -> float:
        return float(self.values.max())

    def __call__(self, theta):
        """Cubic Hermite interpolant of the profile at colatitude(s) θ."""
        spline = CubicHermiteSpline(self.theta_grid, self.values, self.slopes)
        return spline(np.clip(theta, 0.0, HALF_PI))

    def derivative(self, theta):
        spline = CubicHermiteSpline(self.theta_grid, self.values, self.slopes)
        return spline.derivative()(np.clip(theta, 0.0, HALF_PI))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("theta,value,residual\n")
        for t, w, r in zip(self.theta_grid, self.values, self.residuals):
            buf.write(f"{t:.17g},{w:.17g},{r:.17g}\n")
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "kind": self.kind.value,
            "params": self.params.as_dict(),
            "n_nodes": int(self.theta_grid.size),
            "pole_value": self.pole_value,
            "max_value": self.max_value,
            "endpoint_value": self.endpoint_value,
            "residual_sup": self.residual_sup,
            "residual_rel": self.residual_rel,
        }


def _residuals(kind, params, theta, w, v) -> np.ndarray:
    """ODE residual on the grid, w'' from a fourth-order difference of w'.

    Nodes too close to either end for the centred five-point stencil are
    reported as zero.
    """
    h = theta[1] - theta[0]
    res = np.zeros_like(w)
    w2 = (-v[4:] + 8 * v[3:-1] - 8 * v[1:-3] + v[:-4]) / (12 * h)
    res[2:-2] = ode_residual(kind, params, theta[2:-2], w[2:-2], v[2:-2], w2)
    return res


def _check_window(kind: ProfileKind, params: ProblemParams) -> None:
    if kind in (ProfileKind.OMEGA, ProfileKind.ETA, ProfileKind.CHI) and params.m <= 0:
        raise DomainError(f"{kind.value} profile needs m > 0", "m > 0")
    if kind is ProfileKind.ETA and at_least(params.p, params.p_c):
        raise DomainError(
            "eta profile exists only for 1 < p < (N+1)/(N-1)",
            f"p < (N+1)/(N-1) = {params.p_c:g}",
        )
    if kind is ProfileKind.CHI and at_least(params.q, params.q_c):
        raise DomainError(
            "chi profile exists only for 1 < q < (N+1)/N", f"q < (N+1)/N = {params.q_c:g}"
        )


def _refine(kind, params, lo: np.ndarray, hi: np.ndarray, n_steps: int):
    """Multisection on brackets [lo, hi] whose shooting-map signs differ.

    Runs until every bracket has collapsed to adjacent floating-point values.
    Returns the endpoint on the positive side of the shooting map.
    """
    lo = lo.copy()
    hi = hi.copy()
    s_lo = _integrate(kind, params, lo, n_steps).shooting_map()
    frac = np.arange(1, SECTIONS + 1) / (SECTIONS + 1)
    for _ in range(200):
        width = hi - lo
        if np.all(width <= 2 * np.spacing(hi)):
            break
        pts = lo[:, None] + width[:, None] * frac[None, :]
        s = _integrate(kind, params, pts.ravel(), n_steps).shooting_map().reshape(pts.shape)
        for i in range(lo.size):
            same = np.sign(s[i]) == np.sign(s_lo[i])
            # first section point whose sign differs from the left end
            flip = np.nonzero(~same | np.isnan(s[i]))[0]
            j = flip[0] if flip.size else SECTIONS
            new_lo = pts[i, j - 1] if j > 0 else lo[i]
            new_hi = pts[i, j] if j < SECTIONS else hi[i]
            if j > 0:
                s_lo[i] = s[i, j - 1]
            lo[i], hi[i] = new_lo, new_hi
    pos_left = s_lo > 0
    return np.where(pos_left, lo, hi)


def sweep_range(kind, params: ProblemParams) -> tuple[float, float]:
    """Pole values scanned for brackets.

    The default range is widened (never narrowed) to cover the a-priori bounds
    sup η <= eta_sup_bound and sup ω <= larger root of Φ.
    """
    kind = ProfileKind.parse(kind)
    lo, hi = SWEEP_RANGE
    bound = None
    if kind is ProfileKind.ETA and params.alpha + 2 - params.N > 0:
        bound = eta_sup_bound(params)
    elif kind is ProfileKind.OMEGA:
        try:
            roots = phi_roots(params)
        except NumericalError:
            roots = ()
        bound = roots[-1] if roots else None
    if bound is not None and math.isfinite(bound) and 4 * bound > hi:
        hi = 4 * bound
    return lo, hi


def _candidates(kind, params, n_steps: int) -> list[float]:
    lo, hi = sweep_range(kind, params)
    # keep the default sampling density when the range widens
    n = SWEEP_SAMPLES + max(0, int(math.ceil((math.log10(hi) - 8) * SWEEP_SAMPLES / 16)))
    a0 = np.geomspace(lo, hi, n)
    s = _integrate(kind, params, a0, n_steps).shooting_map()
    ok = np.isfinite(s[:-1]) & np.isfinite(s[1:])
    change = ok & (np.sign(s[:-1]) != np.sign(s[1:]))
    idx = np.nonzero(change)[0]
    log.debug("%s sweep at n=%d: %d bracket(s)", kind.value, n_steps, idx.size)
    if idx.size == 0:
        return []
    return list(_refine(kind, params, a0[idx], a0[idx + 1], n_steps))


def _build(kind, params, a0: float, n_steps: int, tol: float) -> ProfileSolution | None:
    tr = _integrate(kind, params, [a0], n_steps, keep=True)
    if tr.blown[0]:
        return None
    w, v = tr.w[:, 0], tr.v[:, 0]
    interior = w[1:-1]
    if tr.crossed[0] and tr.cross_theta[0] < HALF_PI - tol:
        return None
    if not np.all(interior > 0):
        return None
    end = float(w[-1])
    # relative to the amplitude once it exceeds 1: bisection stops at adjacent floats of a0
    if abs(end) > tol * max(1.0, float(a0)):
        return None
    res = _residuals(kind, params, tr.theta, w, v)
    scale = float(np.max(np.abs(_forcing(_coeffs(kind, params), w, v))))
    sup = float(np.max(np.abs(res)))
    return ProfileSolution(
        kind=kind,
        params=params,
        theta_grid=tr.theta,
        values=w,
        slopes=v,
        pole_value=float(a0),
        residual_sup=sup,
        endpoint_value=end,
        residuals=res,
        residual_rel=sup / scale if scale > 0 else sup,
    )


def solve_all_profiles(
    kind, params: ProblemParams, tol: float = 1e-8, n_steps: int = DEFAULT_STEPS
) -> list[ProfileSolution]:
    """Every positive profile the shooting sweep can bracket, by pole value.

    A candidate is accepted when |w(π/2)| <= tol·max(1, w(0)) and w > 0 inside.

    The sweep runs at ``n_steps`` and, if nothing is found there, again at
    twice the resolution.  An empty list means no bracket at either
    resolution, which is consistent with (but does not prove) nonexistence.
    """
    kind = ProfileKind.parse(kind)
    _check_window(kind, params)
    if n_steps < MIN_STEPS:
        raise DomainError(f"n_steps={n_steps} below {MIN_STEPS}", f"n_steps >= {MIN_STEPS}")
    for n in (n_steps, 2 * n_steps):
        found = []
        for a0 in _candidates(kind, params, n):
            sol = _build(kind, params, a0, n, tol)
            if sol is not None:
                found.append(sol)
        if found:
            if n != n_steps:
                log.info("profile found only at refined resolution n=%d", n)
            return sorted(found, key=lambda s: s.pole_value)
    return []


def solve_profile(
    kind, params: ProblemParams, tol: float = 1e-8, n_steps: int = DEFAULT_STEPS
) -> ProfileSolution | None:
    """Positive profile with the smallest pole value, or None if none is found."""
    sols = solve_all_profiles(kind, params, tol=tol, n_steps=n_steps)
    return sols[0] if sols else None


def scaling_exponent(kind, params: ProblemParams) -> float:
    """s with w_m = m^(-s) w_1 for the homogeneous kinds."""
    kind = ProfileKind.parse(kind)
    if kind is ProfileKind.CHI:
        return 1.0 / (params.q - 1.0)
    if kind is ProfileKind.ETA:
        return (params.p + 1.0) / (params.p - 1.0)
    raise DomainError(
        f"no scaling law in m for {kind.value} profiles", "kind in {chi, eta}"
    )


def profile_scaling_check(
    kind, params: ProblemParams, m2: float, tol: float = 1e-8, n_steps: int = DEFAULT_STEPS
) -> float:
    """Sup-norm of m^s w_m - m2^s w_m2 on the common grid (zero if the law holds)."""
    kind = ProfileKind.parse(kind)
    s = scaling_exponent(kind, params)
    other = ProblemParams(params.N, params.p, params.q, m2)
    a = solve_profile(kind, params, tol=tol, n_steps=n_steps)
    b = solve_profile(kind, other, tol=tol, n_steps=n_steps) if m2 != params.m else a
    if a is None or b is None:
        raise DomainError("profile not found for the scaling check", "profile exists")
    return float(np.max(np.abs(params.m**s * a.values - m2**s * b.values)))


def eta_sup_bound(params: ProblemParams) -> float:
    """Maximum-principle bound (1/α)((α+2-N)/m)^((p+1)/(p-1)) for ETA profiles."""
    a, p = params.alpha, params.p
    return (1.0 / a) * ((a + 2.0 - params.N) / params.m) ** ((p + 1.0) / (p - 1.0))

