"""Wulff-ball geometry: unit-ball volume kappa0 and derived constants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteDual, ValidationError
from .norms import FinslerNorm


@dataclass
class WulffGeometry:
    norm: FinslerNorm
    kappa0: float
    quadrature_order: int


@dataclass
class VolumeResult:
    kappa0: float
    error_estimate: float


def _sphere_average_dual_power(norm: FinslerNorm, n_theta: int, n_mu: int) -> float:
    """Average of F0(theta)^(-N) over the unit sphere (N = 2 or 3)."""
    N = norm.dim
    if N == 2:
        th = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
        d = np.stack([np.cos(th), np.sin(th)], axis=-1)
        vals = norm.dual_value(d) ** (-2.0)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteDual("dual norm non-finite on a quadrature node")
        return float(np.mean(vals))
    if N == 3:
        mu, w = np.polynomial.legendre.leggauss(n_mu)
        th = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
        sin_phi = np.sqrt(1.0 - mu**2)
        d = np.empty((n_mu, n_theta, 3))
        d[..., 0] = sin_phi[:, None] * np.cos(th)[None, :]
        d[..., 1] = sin_phi[:, None] * np.sin(th)[None, :]
        d[..., 2] = mu[:, None]
        vals = norm.dual_value(d.reshape(-1, 3)).reshape(n_mu, n_theta) ** (-3.0)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteDual("dual norm non-finite on a quadrature node")
        # weights integrate d(mu) over [-1,1]; theta by trapezoid; /(4 pi) normalizes
        return float(np.sum(w[:, None] * vals) / (2.0 * n_theta))
    raise ValidationError("polar quadrature implemented for N = 2, 3; use monte_carlo")


def _sphere_surface(N: int) -> float:
    from math import gamma, pi
    return 2.0 * pi ** (N / 2.0) / gamma(N / 2.0)


def wulff_volume(norm: FinslerNorm, method: str = "polar_quadrature",
                 budget: int = 10**5, seed: int = 42) -> VolumeResult:
    """Lebesgue volume of the unit Wulff ball {F0 < 1}.

    polar_quadrature integrates (1/N) F0(theta)^(-N) over the unit sphere
    (spectrally accurate for the smooth built-in families); monte_carlo samples
    the bounding box [-b, b]^N, which always contains {F0 < 1} since
    F0(x) >= |x|/b.
    """
    if budget < 10**3:
        raise ValidationError("budget must be >= 1e3")
    N = norm.dim
    if method == "polar_quadrature":
        if N == 2:
            n1, n0 = budget, budget // 2
            coarse = _sphere_average_dual_power(norm, n0, 0)
            fine = _sphere_average_dual_power(norm, n1, 0)
        elif N == 3:
            n_mu = max(8, int(np.sqrt(budget / 2)))
            n_th = max(16, 2 * n_mu)
            coarse = _sphere_average_dual_power(norm, n_th // 2, n_mu // 2)
            fine = _sphere_average_dual_power(norm, n_th, n_mu)
        else:
            raise ValidationError("polar quadrature implemented for N = 2, 3; use monte_carlo")
        kappa = _sphere_surface(N) / N * fine
        err = abs(_sphere_surface(N) / N * (fine - coarse))
        return VolumeResult(kappa0=kappa, error_estimate=err)
    if method == "monte_carlo":
        rng = np.random.default_rng(seed)
        b = norm.b_upper
        pts = rng.uniform(-b, b, size=(budget, N))
        vals = norm.dual_value(pts)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteDual("dual norm non-finite on a sample point")
        p = float(np.mean(vals < 1.0))
        box = (2.0 * b) ** N
        return VolumeResult(kappa0=p * box,
                            error_estimate=box * float(np.sqrt(max(p * (1 - p), 1e-12) / budget)))
    raise ValidationError(f"unknown volume method {method!r}")


def make_wulff_geometry(norm: FinslerNorm, budget: int = 2**13) -> WulffGeometry:
    res = wulff_volume(norm, "polar_quadrature", budget)
    return WulffGeometry(norm=norm, kappa0=res.kappa0, quadrature_order=budget)


def moser_trudinger_constant(geom: WulffGeometry) -> float:
    """Optimal exponential-integrability constant N^(N/(N-1)) kappa0^(1/(N-1))."""
    if geom.kappa0 <= 0:
        raise ValidationError("kappa0 must be positive")
    N = geom.norm.dim
    return N ** (N / (N - 1.0)) * geom.kappa0 ** (1.0 / (N - 1.0))
