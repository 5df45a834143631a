"""Wulff-radial reduction of the anisotropic operator.

For u(x) = phi(F0(x)) the operator reduces to the norm-independent radial form

    Qu = phi'' + (N-1) phi' / r,      r = F0(x),

a consequence of the structural identities (Euler identity, unit-dual
relations, sign rule and the inverse-duality relation).  Everything in this
module therefore depends only on the dimension N and, for the Henon-type
problems, on the weight exponent alpha in r^alpha e^phi.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import BlowUp, GridTooCoarse, InvalidDimension, ValidationError

BLOWUP_LIMIT = 1e6


@dataclass
class RadialProfile:
    """Sampled radial function phi(r) on a strictly increasing grid."""

    grid: np.ndarray
    values: np.ndarray
    dim: int
    henon_alpha: float = 0.0
    origin_value: float | None = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.ndim != 1 or self.grid.shape != self.values.shape:
            raise ValidationError("grid and values must be matching 1D arrays")
        if np.any(np.diff(self.grid) <= 0):
            raise ValidationError("grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("profile values must be finite")
        if self.dim < 2:
            raise InvalidDimension("dimension must be >= 2")

    def __len__(self):
        return self.grid.size

    def interp(self, r) -> np.ndarray:
        return np.interp(r, self.grid, self.values)


def geometric_grid(r_min: float, r_max: float, nodes_per_decade: int = 120) -> np.ndarray:
    """Geometric grid (uniform in log r), >= 3 nodes."""
    if not (0 < r_min < r_max):
        raise ValidationError("need 0 < r_min < r_max")
    n = max(3, int(np.ceil(np.log10(r_max / r_min) * nodes_per_decade)) + 1)
    return np.geomspace(r_min, r_max, n)


def radial_apply_Q(profile: RadialProfile) -> np.ndarray:
    """Second-order finite differences of phi'' + (N-1) phi'/r on the grid.

    Interior nodes use the 3-point nonuniform stencil; a node at r = 0 uses the
    regularized limit N phi''(0) with the reflected (even) parabola; end nodes
    use one-sided 3-point formulas.  Exact for quadratic polynomials.
    """
    r = profile.grid
    phi = profile.values
    n = r.size
    if n < 3:
        raise GridTooCoarse("radial_apply_Q needs at least 3 nodes")
    N = profile.dim
    out = np.empty(n)

    h1 = r[1:-1] - r[:-2]
    h2 = r[2:] - r[1:-1]
    denom = h1 * h2 * (h1 + h2)
    d2 = 2.0 * (h1 * phi[2:] - (h1 + h2) * phi[1:-1] + h2 * phi[:-2]) / denom
    d1 = (h1**2 * phi[2:] + (h2**2 - h1**2) * phi[1:-1] - h2**2 * phi[:-2]) / denom
    out[1:-1] = d2 + (N - 1) * d1 / r[1:-1]

    def one_sided(i0, i1, i2):
        # quadratic through three nodes, evaluated at node i0
        x0, x1, x2 = r[i0], r[i1], r[i2]
        f0, f1, f2 = phi[i0], phi[i1], phi[i2]
        c0 = f0 / ((x0 - x1) * (x0 - x2))
        c1 = f1 / ((x1 - x0) * (x1 - x2))
        c2 = f2 / ((x2 - x0) * (x2 - x1))
        d2 = 2.0 * (c0 + c1 + c2)
        d1 = c0 * (2 * x0 - x1 - x2) + c1 * (2 * x0 - x0 - x2) + c2 * (2 * x0 - x0 - x1)
        return d1, d2

    if r[0] == 0.0:
        # even reflection phi'(0) = 0: phi = phi0 + b r^2 gives Q(0) = N * 2b
        b = (phi[1] - phi[0]) / r[1] ** 2
        out[0] = N * 2.0 * b
    else:
        d1, d2 = one_sided(0, 1, 2)
        out[0] = d2 + (N - 1) * d1 / r[0]
    d1, d2 = one_sided(n - 1, n - 2, n - 3)
    out[-1] = d2 + (N - 1) * d1 / r[-1]
    return out


def _henon_rhs(N: int, alpha: float, lam: float):
    def rhs(r, y):
        phi, dphi = y
        return [dphi, -(N - 1) * dphi / r - lam * r**alpha * np.exp(phi)]
    return rhs


def _series_start(N: int, alpha: float, lam: float, c: float, r0: float):
    # phi = c - lam e^c r^(2+alpha) / ((2+alpha)(N+alpha)) + O(r^(4+2alpha))
    coef = lam * np.exp(c) / ((2.0 + alpha) * (N + alpha))
    phi0 = c - coef * r0 ** (2.0 + alpha)
    dphi0 = -coef * (2.0 + alpha) * r0 ** (1.0 + alpha)
    return phi0, dphi0


def _integrate_radial(N: int, alpha: float, lam: float, center_value: float,
                      r_max: float, tol: float, r0: float | None = None):
    """DOP853 solve of phi'' + (N-1)phi'/r + lam r^alpha e^phi = 0 from the center."""
    if N < 2:
        raise InvalidDimension("N must be >= 2")
    if alpha <= -2.0:
        raise ValidationError("alpha must exceed -2")
    if lam <= 0:
        raise ValidationError("lambda must be positive")
    if tol <= 0:
        raise ValidationError("tol must be positive")
    if r0 is None:
        r0 = min(1e-8, 1e-8 * r_max)
    y0 = _series_start(N, alpha, lam, center_value, r0)

    def blowup(r, y):
        return BLOWUP_LIMIT - abs(y[0])
    blowup.terminal = True

    sol = solve_ivp(_henon_rhs(N, alpha, lam), (r0, r_max), y0, method="DOP853",
                    rtol=tol, atol=tol * 1e-2, dense_output=True, events=blowup)
    if sol.status == 1:
        raise BlowUp("radial solution left [-1e6, 1e6]",
                     radius=float(sol.t_events[0][0]))
    if not sol.success:
        raise BlowUp(f"integrator failed: {sol.message}")
    return sol, r0


def shoot_gelfand(N: int, lam: float, center_value: float, r_max: float,
                  tol: float = 1e-10, n_out: int = 2049) -> RadialProfile:
    """Outward integration of phi'' + (N-1)phi'/r + lam e^phi = 0, phi'(0)=0."""
    sol, r0 = _integrate_radial(N, 0.0, lam, center_value, r_max, tol)
    r = np.linspace(0.0, r_max, n_out)
    vals = np.empty(n_out)
    inside = r <= r0
    vals[inside] = center_value
    vals[~inside] = sol.sol(r[~inside])[0]
    return RadialProfile(grid=r, values=vals, dim=N, henon_alpha=0.0,
                         origin_value=center_value)


def gelfand_first_zero(N: int, lam: float, center_value: float,
                       r_max: float = 50.0, tol: float = 1e-12) -> float:
    """Radius of the first sign change of the shooting solution (closed-family oracle hook)."""
    sol, r0 = _integrate_radial(N, 0.0, lam, center_value, r_max, tol)
    rr = np.linspace(r0, r_max, 4097)
    vals = sol.sol(rr)[0]
    idx = np.nonzero(vals <= 0.0)[0]
    if idx.size == 0:
        raise ValidationError(f"no zero of phi in (0, {r_max}]")
    i = idx[0]
    return float(brentq(lambda r: sol.sol(r)[0], rr[i - 1], rr[i], xtol=1e-14))


@dataclass
class EntireSolution:
    """Entire radial solution of the Henon-type equation with its dense evaluator."""

    dim: int
    alpha: float
    center_value: float
    r_max: float
    _sol: object = field(repr=False)
    r_start: float = 1e-8

    def phi(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.empty(r.shape)
        small = r <= self.r_start
        out[small] = self.center_value
        if np.any(~small):
            out[~small] = self._sol.sol(r[~small])[0]
        return out

    def weighted_tail(self, r) -> np.ndarray:
        """r^(2+alpha) e^phi(r); tends to (2+alpha)(N-2) for N >= 3."""
        return np.asarray(r, dtype=float) ** (2.0 + self.alpha) * np.exp(self.phi(r))

    def profile(self, grid: np.ndarray) -> RadialProfile:
        return RadialProfile(grid=grid, values=self.phi(grid), dim=self.dim,
                             henon_alpha=self.alpha, origin_value=self.center_value)


def entire_solution(N: int, alpha: float, center_value: float, r_max: float,
                    tol: float = 1e-10) -> EntireSolution:
    """Integrate the entire radial solution (lam = 1 weight) out to r_max."""
    sol, r0 = _integrate_radial(N, alpha, 1.0, center_value, r_max, tol)
    return EntireSolution(dim=N, alpha=alpha, center_value=center_value,
                          r_max=r_max, _sol=sol, r_start=r0)


@dataclass
class SingularSolutionReport:
    dim: int
    alpha: float
    coefficient: float           # (2+alpha)(N-2), the weight amplitude of the explicit solution
    lambda_singular: float       # parameter making u = -(2+alpha) log r vanish on the unit Wulff sphere
    profile: RadialProfile
    residual: float              # max |(-Qu - r^alpha e^u) r^2| / coefficient, exact derivatives
    fd_residual: float           # same through the finite-difference operator

    @property
    def description(self) -> str:
        return (f"u*(x) = -({2 + self.alpha:g}) log F0(x) + log({self.coefficient:g}), "
                f"singular at the origin, e^u integrable for N >= 3")


def singular_solution(N: int, alpha: float = 0.0,
                      grid: np.ndarray | None = None) -> SingularSolutionReport:
    """Explicit singular solution u* = -(2+alpha) log r + log((2+alpha)(N-2)).

    Verifies the equation residual on the grid twice: with exact derivatives
    (phi' = -(2+alpha)/r, phi'' = (2+alpha)/r^2), and through radial_apply_Q
    at the grid's own truncation level.
    """
    if N <= 2:
        raise InvalidDimension("singular solution needs N >= 3 (coefficient vanishes)")
    if alpha <= -2.0:
        raise ValidationError("alpha must exceed -2")
    coef = (2.0 + alpha) * (N - 2.0)
    if grid is None:
        grid = np.geomspace(1e-3, 1e3, 1201)
    phi = -(2.0 + alpha) * np.log(grid) + np.log(coef)
    prof = RadialProfile(grid=grid, values=phi, dim=N, henon_alpha=alpha)

    # algebraic residual: -Qu = (2+alpha)(N-2)/r^2 vs r^alpha e^u, scaled by r^2
    q_exact = (2.0 + alpha) / grid**2 - (N - 1) * (2.0 + alpha) / grid**2
    rhs = grid**alpha * np.exp(phi)
    residual = float(np.max(np.abs(-q_exact - rhs) * grid**2) / coef)

    q_fd = radial_apply_Q(prof)
    fd_residual = float(np.max(np.abs(-q_fd - rhs) * grid**2) / coef)

    # for the unit-ball Dirichlet problem, shift u* to vanish at r = 1:
    # u = -(2+alpha) log r solves -Qu = lam r^alpha e^u with lam = coef
    return SingularSolutionReport(dim=N, alpha=alpha, coefficient=coef,
                                  lambda_singular=coef, profile=prof,
                                  residual=residual, fd_residual=fd_residual)


@dataclass
class NonexistenceReport:
    violated: bool
    threshold_radius: float | None   # candidate violated for r1 at/below this radius
    divergence_curve: list           # rows (r1, lower_bound, candidate_value)
    constant: float                  # 1/(N+alpha)


def henon_nonexistence_check(N: int, alpha: float,
                             profile: RadialProfile,
                             r_ref: float | None = None,
                             r1_values: np.ndarray | None = None) -> NonexistenceReport:
    """Divergence of the spherical-mean lower bound for alpha <= -2.

    Any spherical mean v(r) of a weak solution obeys
    e^{-v(r)} >= C * int_{r1}^{r} t^{1+alpha} dt with C = 1/(N+alpha); the
    integral diverges as r1 -> 0 (logarithmically at alpha = -2, as a power
    below), so every candidate profile is violated below a computable radius.
    """
    if alpha > -2.0:
        raise ValidationError("nonexistence check applies to alpha <= -2")
    if N + alpha <= 0.0:
        raise ValidationError("quantitative bound needs N + alpha > 0")
    C = 1.0 / (N + alpha)
    if r_ref is None:
        r_ref = float(profile.grid[-1])
    cand = float(np.exp(-profile.interp(r_ref)))
    if r1_values is None:
        r1_values = np.geomspace(r_ref * 1e-12, r_ref * 0.5, 49)

    def kernel_integral(r1):
        if alpha == -2.0:
            return np.log(r_ref / r1)
        p = 2.0 + alpha  # negative here
        return (r1**p - r_ref**p) / (-p)

    rows = []
    threshold = None
    for r1 in np.sort(np.asarray(r1_values, dtype=float))[::-1]:
        bound = C * kernel_integral(r1)
        rows.append((float(r1), float(bound), cand))
        if bound > cand and threshold is None:
            threshold = float(r1)
    return NonexistenceReport(violated=threshold is not None,
                              threshold_radius=threshold,
                              divergence_curve=rows, constant=C)
