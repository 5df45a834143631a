"""Discrete radial stability form and its smallest generalized eigenvalue.

For Wulff-radial solutions and radial test functions the second-variation
form reduces (the transverse Hessian term drops by the null identity
F_xixi(xi) xi = 0) to

    B(psi, psi) = int (psi'^2 - w psi^2) r^(N-1) dr,

tested against the weighted mass int psi^2 r^(N-1) dr.  Assembly is P1 with
exact cell integrals (the weight enters as its nodal P1 interpolant); the
smallest eigenvalue is certified by Sturm (inertia) bisection on the
tridiagonal pencil and the eigenvector recovered by shifted inverse iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import GridTooCoarse, SingularMassMatrix, ValidationError
from .radial import RadialProfile


@dataclass
class StabilityReport:
    mu1: float
    eigenfunction: RadialProfile
    domain: tuple
    weight_description: str
    matrix_dimension: int
    bc: str


def _moments(r0, r1, N, kmax):
    """Exact int_{r0}^{r1} r^(N-1+k) dr for k = 0..kmax, vectorized over cells."""
    out = []
    for k in range(kmax + 1):
        p = N + k
        out.append((r1**p - r0**p) / p)
    return out


def assemble_radial_form(r: np.ndarray, w: np.ndarray, N: int):
    """Tridiagonal (diag, off) triples for stiffness K, weight term W, mass M."""
    n = r.size
    if n < 3:
        raise GridTooCoarse("stability assembly needs at least 3 nodes")
    r0, r1 = r[:-1], r[1:]
    h = r1 - r0
    M0, M1, M2, M3 = _moments(r0, r1, N, 3)

    kd = np.zeros(n)
    ko = M0 / h**2 * (-1.0)
    kd[:-1] += M0 / h**2
    kd[1:] += M0 / h**2

    # P1 mass: integrals of a^2, ab, b^2 against r^(N-1)
    aa = (r1**2 * M0 - 2 * r1 * M1 + M2) / h**2
    ab = (-r0 * r1 * M0 + (r0 + r1) * M1 - M2) / h**2
    bb = (r0**2 * M0 - 2 * r0 * M1 + M2) / h**2
    md = np.zeros(n)
    md[:-1] += aa
    md[1:] += bb
    mo = ab.copy()

    # weight as P1 interpolant: cubic integrals a^3, a^2 b, a b^2, b^3
    a3 = (r1**3 * M0 - 3 * r1**2 * M1 + 3 * r1 * M2 - M3) / h**3
    b3 = (-(r0**3) * M0 + 3 * r0**2 * M1 - 3 * r0 * M2 + M3) / h**3
    a2b = (-(r1**2) * r0 * M0 + (r1**2 + 2 * r1 * r0) * M1 - (2 * r1 + r0) * M2 + M3) / h**3
    ab2 = (r0**2 * r1 * M0 - (2 * r0 * r1 + r0**2) * M1 + (r1 + 2 * r0) * M2 - M3) / h**3
    wa, wb = w[:-1], w[1:]
    w11 = wa * a3 + wb * a2b
    w12 = wa * a2b + wb * ab2
    w22 = wa * ab2 + wb * b3
    wd = np.zeros(n)
    wd[:-1] += w11
    wd[1:] += w22
    wo = w12
    return (kd, ko), (wd, wo), (md, mo)


def _ldl_negative_count(d, e):
    """Number of negative pivots of the LDL^T of a symmetric tridiagonal matrix."""
    count = 0
    piv = d[0]
    if piv == 0.0:
        piv = -1e-300
    if piv < 0:
        count += 1
    for i in range(1, d.size):
        piv = d[i] - e[i - 1] ** 2 / piv
        if piv == 0.0:
            piv = -1e-300
        if piv < 0:
            count += 1
    return count


def smallest_eig_tridiag(ad, ae, md, me, tol_rel: float = 1e-13):
    """Smallest eigenvalue/vector of the generalized tridiagonal pencil (A, M).

    M must be positive definite (SingularMassMatrix otherwise).  The eigenvalue
    is bracketed by Sturm bisection on A - mu M; the eigenvector comes from
    shifted inverse iteration just below the converged bracket.
    """
    if _ldl_negative_count(md, me) > 0:
        raise SingularMassMatrix("mass matrix not positive definite")

    def count_below(mu):
        return _ldl_negative_count(ad - mu * md, ae - mu * me)

    scale = float(np.max(np.abs(ad)) / max(np.max(np.abs(md)), 1e-300))
    ones = np.ones_like(ad)
    ray = _tri_quadform(ad, ae, ones) / _tri_quadform(md, me, ones)
    hi = ray + abs(ray) * 1e-12 + 1e-300
    lo = min(-1.0, hi - 1.0)
    while count_below(lo) > 0:
        lo = hi - 2.0 * (hi - lo)
        if not np.isfinite(lo):
            raise ValidationError("failed to bracket smallest eigenvalue")
    if count_below(hi) == 0:
        # Rayleigh guess was exactly optimal; widen a touch
        hi = hi + max(abs(hi), 1.0) * 1e-8
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if count_below(mid) == 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol_rel * max(abs(lo), abs(hi), scale * 1e-3):
            break
    mu = 0.5 * (lo + hi)

    # inverse iteration on A - sigma M, sigma strictly below mu1
    sigma = lo - max((hi - lo), abs(mu) * 1e-12, scale * 1e-15)
    band = np.zeros((3, ad.size))
    band[0, 1:] = ae - sigma * me
    band[1, :] = ad - sigma * md
    band[2, :-1] = ae - sigma * me
    rng = np.random.default_rng(12345)
    x = rng.standard_normal(ad.size)
    x /= np.sqrt(_tri_quadform(md, me, x))
    for _ in range(8):
        y = solve_banded((1, 1), band, _tri_matvec(md, me, x))
        ny = np.sqrt(_tri_quadform(md, me, y))
        if not np.isfinite(ny) or ny == 0.0:
            break
        x = y / ny
    mu_ray = _tri_quadform(ad, ae, x) / _tri_quadform(md, me, x)
    return float(mu_ray), x


def _tri_matvec(d, e, x):
    y = d * x
    y[:-1] += e * x[1:]
    y[1:] += e * x[:-1]
    return y


def _tri_quadform(d, e, x):
    return float(x @ (d * x) + 2.0 * (x[:-1] * e) @ x[1:])


def radial_stability(profile: RadialProfile, weight: np.ndarray,
                     domain: tuple | None = None,
                     bc: str = "dirichlet_outer") -> StabilityReport:
    """Smallest eigenvalue of the reduced stability form on [domain] of the grid.

    ``bc='dirichlet_both'`` constrains the test functions at both ends of the
    domain (truncated-interval eigenproblem); ``'dirichlet_outer'`` leaves the
    inner end free (radial perturbations not vanishing at the center).
    mu1 < 0 certifies instability against radial perturbations; mu1 >= 0 only
    certifies discrete radial stability.
    """
    weight = np.asarray(weight, dtype=float)
    if weight.shape != profile.grid.shape:
        raise ValidationError("weight must be sampled on the profile grid")
    if domain is None:
        domain = (float(profile.grid[0]), float(profile.grid[-1]))
    lo, hi = domain
    eps = 1e-12 * max(abs(lo), abs(hi))
    if lo < profile.grid[0] - eps or hi > profile.grid[-1] + eps:
        raise ValidationError("domain outside grid range")
    mask = (profile.grid >= lo - eps) & (profile.grid <= hi + eps)
    r = profile.grid[mask]
    w = weight[mask]
    if r.size < 4:
        raise GridTooCoarse("too few grid nodes inside the domain")
    (kd, ko), (wd, wo), (md, mo) = assemble_radial_form(r, w, profile.dim)
    ad, ae = kd - wd, ko - wo

    if bc == "dirichlet_both":
        sl = slice(1, r.size - 1)
    elif bc == "dirichlet_outer":
        sl = slice(0, r.size - 1)
    else:
        raise ValidationError(f"unknown bc {bc!r}")
    adc, mdc = ad[sl], md[sl]
    aec = ae[sl.start:sl.stop - 1]
    mec = mo[sl.start:sl.stop - 1]
    mu1, x = smallest_eig_tridiag(adc, aec, mdc, mec)

    full = np.zeros(r.size)
    full[sl] = x
    eig = RadialProfile(grid=r, values=full, dim=profile.dim,
                        henon_alpha=profile.henon_alpha)
    return StabilityReport(mu1=mu1, eigenfunction=eig, domain=(lo, hi),
                           weight_description="nodal P1 interpolant",
                           matrix_dimension=int(adc.size), bc=bc)


def hardy_crossing(N: int, ratio: float = 1e6, bc: str = "dirichlet_both",
                   nodes_per_decade: int = 160, r_max: float = 1.0,
                   rel_bracket: tuple = (0.5, 2.0), tol: float = 1e-6) -> float:
    """Weight amplitude c at which mu1 of psi'' + c psi / r^2 changes sign.

    Bisects c in units of the sharp constant (N-2)^2/4 on a geometric grid with
    overall ratio r_max/r_min = ``ratio``.  The continuum crossing sits at
    (N-2)^2/4 + nu1 with nu1 the first log-coordinate eigenvalue of the
    truncation, O((pi/log ratio)^2).
    """
    c_hardy = (N - 2) ** 2 / 4.0
    grid = np.geomspace(r_max / ratio, r_max,
                        int(np.log10(ratio) * nodes_per_decade) + 1)
    prof = RadialProfile(grid=grid, values=np.zeros_like(grid), dim=N)
    inv_r2 = 1.0 / grid**2

    def mu1(c):
        return radial_stability(prof, c * inv_r2, bc=bc).mu1

    clo, chi = rel_bracket[0] * c_hardy, rel_bracket[1] * c_hardy
    flo, fhi = mu1(clo), mu1(chi)
    if not (flo > 0 > fhi):
        raise ValidationError(f"crossing not bracketed: mu1({clo})={flo}, mu1({chi})={fhi}")
    while chi - clo > tol * c_hardy:
        mid = 0.5 * (clo + chi)
        if mu1(mid) > 0:
            clo = mid
        else:
            chi = mid
    return 0.5 * (clo + chi)
