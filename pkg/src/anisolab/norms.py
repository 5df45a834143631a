"""Smooth convex 1-homogeneous norm families and their duals.

Three built-in families:

* ``euclidean``                 -- F(xi) = |xi|, self-dual,
* ``quadratic``                 -- F(xi) = sqrt(xi^T A xi) with A symmetric
                                   positive definite; dual is sqrt(x^T A^-1 x),
* ``quadratic_plus_euclidean``  -- F(xi) = sqrt(xi^T A xi) + beta |xi|;
                                   genuinely non-quadratic, dual evaluated
                                   numerically as sup <x, xi> over {F(xi) = 1}.

All evaluations are vectorized over a leading batch axis.  A norm object is
immutable after construction (the lazily filled ellipticity record is the one
cached annotation) and every operation is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import DegenerateHessian, NonConvergence, ValidationError, ZeroVector

ZERO_EPS = 1e-300          # below this euclidean length a vector counts as zero
DUAL_STATIONARITY_TOL = 1e-10
DUAL_PRESCAN = 4096        # dense pre-scan directions before the local ascent


@dataclass
class EllipticityEstimate:
    """Sampled norm and transverse-Hessian bounds on the unit sphere."""

    a_lower: float
    b_upper: float
    lambda_sq: float   # squared lower Hessian bound, stored as in the ellipticity assumption
    Lambda: float


@dataclass
class NormEval:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


@dataclass
class DualEval:
    value: float
    gradient: np.ndarray


def _as_batch(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x[None, :], True
    return x, False


def _check_nonzero(x: np.ndarray) -> None:
    if np.any(np.linalg.norm(x, axis=-1) < ZERO_EPS):
        raise ZeroVector("norm evaluation at zero vector; caller must regularize")


class FinslerNorm:
    """One member of the built-in norm families; construct via the factories below."""

    def __init__(self, family: str, dim: int, A: np.ndarray | None = None,
                 beta: float = 0.0):
        if dim < 2:
            raise ValidationError("dimension must be >= 2")
        self.family = family
        self.dim = dim
        self.beta = float(beta)
        self.ellipticity: EllipticityEstimate | None = None
        if family == "euclidean":
            self.A = None
            self.A_inv = None
            self._a = 1.0
            self._b = 1.0
            self.dual_mode = "closed_form"
        elif family in ("quadratic", "quadratic_plus_euclidean"):
            A = np.asarray(A, dtype=float)
            if A.shape != (dim, dim):
                raise ValidationError(f"A must be {dim}x{dim}, got {A.shape}")
            if not np.allclose(A, A.T, atol=1e-12):
                raise ValidationError("A must be symmetric")
            eigs = np.linalg.eigvalsh(A)
            if eigs[0] <= 0.0:
                raise ValidationError(f"A must be positive definite (min eigenvalue {eigs[0]:g})")
            self.A = A
            self.A_inv = np.linalg.inv(A)
            self._a = float(np.sqrt(eigs[0]))
            self._b = float(np.sqrt(eigs[-1]))
            if family == "quadratic_plus_euclidean":
                if self.beta <= 0.0:
                    raise ValidationError("beta must be positive")
                self._a += self.beta
                self._b += self.beta
                self.dual_mode = "numeric"
            else:
                self.dual_mode = "closed_form"
        else:
            raise ValidationError(f"unknown norm family {family!r}")
        self._prescan_cache: tuple[np.ndarray, np.ndarray] | None = None

    # -- bounds a|xi| <= F(xi) <= b|xi|, exact for the built-in families
    @property
    def a_lower(self) -> float:
        return self._a

    @property
    def b_upper(self) -> float:
        return self._b

    def __repr__(self):
        if self.family == "euclidean":
            return f"FinslerNorm(euclidean, N={self.dim})"
        extra = f", beta={self.beta}" if self.family == "quadratic_plus_euclidean" else ""
        return f"FinslerNorm({self.family}, N={self.dim}, A=diag-ish{extra})"

    # ------------------------------------------------------------------ primal
    def value(self, xi) -> np.ndarray:
        xi, single = _as_batch(xi)
        _check_nonzero(xi)
        v = self._value(xi)
        return v[0] if single else v

    def _value(self, xi: np.ndarray) -> np.ndarray:
        if self.family == "euclidean":
            return np.linalg.norm(xi, axis=-1)
        s = np.sqrt(np.einsum("...i,ij,...j->...", xi, self.A, xi))
        if self.family == "quadratic":
            return s
        return s + self.beta * np.linalg.norm(xi, axis=-1)

    def gradient(self, xi) -> np.ndarray:
        xi, single = _as_batch(xi)
        _check_nonzero(xi)
        g = self._gradient(xi)
        return g[0] if single else g

    def _gradient(self, xi: np.ndarray) -> np.ndarray:
        if self.family == "euclidean":
            return xi / np.linalg.norm(xi, axis=-1, keepdims=True)
        p = xi @ self.A
        s = np.sqrt(np.einsum("...i,...i->...", p, xi))[..., None]
        if self.family == "quadratic":
            return p / s
        n = np.linalg.norm(xi, axis=-1, keepdims=True)
        return p / s + self.beta * xi / n

    def hessian(self, xi) -> np.ndarray:
        xi, single = _as_batch(xi)
        _check_nonzero(xi)
        h = self._hessian(xi)
        return h[0] if single else h

    def _hessian(self, xi: np.ndarray) -> np.ndarray:
        eye = np.eye(self.dim)
        n = np.linalg.norm(xi, axis=-1)[..., None, None]
        xxT = np.einsum("...i,...j->...ij", xi, xi)
        if self.family == "euclidean":
            return (eye - xxT / (n[..., 0, 0] ** 2)[..., None, None]) / n
        p = xi @ self.A
        s = np.sqrt(np.einsum("...i,...i->...", p, xi))[..., None, None]
        ppT = np.einsum("...i,...j->...ij", p, p)
        h = self.A / s - ppT / s**3
        if self.family == "quadratic_plus_euclidean":
            h = h + self.beta * (eye - xxT / (n[..., 0, 0] ** 2)[..., None, None]) / n
        return h

    # -------------------------------------------------------------------- dual
    def dual_value(self, x) -> np.ndarray:
        x, single = _as_batch(x)
        _check_nonzero(x)
        v, _ = self._dual(x, need_gradient=False)
        return v[0] if single else v

    def dual_gradient(self, x) -> np.ndarray:
        x, single = _as_batch(x)
        _check_nonzero(x)
        _, g = self._dual(x, need_gradient=True)
        return g[0] if single else g

    def dual(self, x) -> tuple[np.ndarray, np.ndarray]:
        x, single = _as_batch(x)
        _check_nonzero(x)
        v, g = self._dual(x, need_gradient=True)
        return (v[0], g[0]) if single else (v, g)

    def _dual(self, x: np.ndarray, need_gradient: bool) -> tuple[np.ndarray, np.ndarray | None]:
        if self.family == "euclidean":
            v = np.linalg.norm(x, axis=-1)
            g = x / v[..., None] if need_gradient else None
            return v, g
        if self.family == "quadratic":
            q = x @ self.A_inv
            v = np.sqrt(np.einsum("...i,...i->...", q, x))
            g = q / v[..., None] if need_gradient else None
            return v, g
        return self._dual_numeric(x)

    # numeric dual: sup over the F-unit sphere, dense pre-scan + local ascent
    def _prescan_directions(self) -> tuple[np.ndarray, np.ndarray]:
        if self._prescan_cache is None:
            if self.dim == 2:
                th = np.linspace(0.0, 2 * np.pi, DUAL_PRESCAN, endpoint=False)
                d = np.stack([np.cos(th), np.sin(th)], axis=-1)
            else:
                rng = np.random.default_rng(123456789)
                d = rng.standard_normal((DUAL_PRESCAN, self.dim))
                d = np.concatenate([d, np.eye(self.dim), -np.eye(self.dim)])
                d /= np.linalg.norm(d, axis=-1, keepdims=True)
            self._prescan_cache = (d, self._value(d))
        return self._prescan_cache

    def _dual_numeric(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        flat = x.reshape(-1, self.dim)
        if flat.shape[0] > 8192:  # chunk the pre-scan matrix (n_points x 4096)
            vals, grads = [], []
            for lo in range(0, flat.shape[0], 8192):
                v, g = self._dual_numeric(flat[lo:lo + 8192])
                vals.append(v)
                grads.append(g)
            return (np.concatenate(vals).reshape(x.shape[:-1]),
                    np.concatenate(grads).reshape(x.shape))
        d, fd = self._prescan_directions()
        scores = (x @ d.T) / fd
        best = np.argmax(scores, axis=-1)
        scale = np.linalg.norm(x, axis=-1)
        if self.dim == 2:
            theta = np.arctan2(d[best, 1], d[best, 0])
            theta, ok = self._polish_angle(x, theta, scale)
        else:
            theta = None
        if self.dim == 2:
            u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        else:
            u = d[best]
            u, ok = self._polish_direction(x, u, scale)
        if not np.all(ok):
            raise NonConvergence(
                "numeric dual ascent failed stationarity tolerance",
                last_value=float(np.max(scale)),
            )
        fu = self._value(u)[..., None]
        xi_star = u / fu
        value = np.einsum("...i,...i->...", x, xi_star)
        return value, xi_star

    def _polish_angle(self, x, theta, scale):
        # Newton on d/dtheta of <x,u>/F(u); quadratic from the pre-scan bracket.
        ok = np.zeros(theta.shape, dtype=bool)
        for _ in range(40):
            u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
            up = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
            A_ = np.einsum("...i,...i->...", x, u)
            Ap = np.einsum("...i,...i->...", x, up)
            B = self._value(u)
            Fg = self._gradient(u)
            Bp = np.einsum("...i,...i->...", Fg, up)
            H = self._hessian(u)
            Bpp = np.einsum("...i,...ij,...j->...", up, H, up) - B
            hp = (Ap * B - A_ * Bp) / B**2
            hpp = (-A_ * B - A_ * Bpp) / B**2 - 2 * Bp * (Ap * B - A_ * Bp) / B**3
            ok = np.abs(hp) <= DUAL_STATIONARITY_TOL * scale
            if np.all(ok):
                break
            step = np.where(hpp < 0, -hp / np.where(hpp < 0, hpp, -1.0), np.sign(hp) * 1e-3)
            step = np.clip(step, -0.1, 0.1)
            theta = np.where(ok, theta, theta + step)
        return theta, ok

    def _polish_direction(self, x, u, scale):
        # BFGS on the 0-homogeneous objective -<x,d>/F(d); gradient is analytic.
        out = np.empty_like(u)
        ok = np.zeros(u.shape[:-1], dtype=bool)
        flat_x = x.reshape(-1, self.dim)
        flat_u = u.reshape(-1, self.dim)
        for k in range(flat_x.shape[0]):
            xi = flat_x[k]

            def fun(d, xi=xi):
                F = self._value(d[None])[0]
                h = float(xi @ d) / F
                g = -(xi / F - h * self._gradient(d[None])[0] / F)
                return -h, g

            res = minimize(fun, flat_u[k], jac=True, method="BFGS",
                           options={"gtol": 1e-13, "maxiter": 200})
            d = res.x / np.linalg.norm(res.x)
            out.reshape(-1, self.dim)[k] = d
            _, g = fun(d)
            ok.reshape(-1)[k] = np.linalg.norm(g) <= DUAL_STATIONARITY_TOL * max(scale.reshape(-1)[k], 1e-30)
        return out, ok


def euclidean_norm(dim: int = 2) -> FinslerNorm:
    return FinslerNorm("euclidean", dim)


def quadratic_norm(A, dim: int | None = None) -> FinslerNorm:
    A = np.asarray(A, dtype=float)
    return FinslerNorm("quadratic", dim or A.shape[0], A=A)


def quadratic_plus_euclidean_norm(A, beta: float, dim: int | None = None) -> FinslerNorm:
    A = np.asarray(A, dtype=float)
    return FinslerNorm("quadratic_plus_euclidean", dim or A.shape[0], A=A, beta=beta)


def norm_from_spec(spec: dict) -> FinslerNorm:
    """Build a norm from its config representation, e.g. {"family": "quadratic", "A": [[4,0],[0,1]]}."""
    family = spec.get("family")
    if family == "euclidean":
        return euclidean_norm(int(spec.get("dim", 2)))
    if family == "quadratic":
        if "A" not in spec:
            raise ValidationError("quadratic norm spec requires 'A'")
        return quadratic_norm(spec["A"])
    if family == "quadratic_plus_euclidean":
        if "A" not in spec or "beta" not in spec:
            raise ValidationError("quadratic_plus_euclidean norm spec requires 'A' and 'beta'")
        return quadratic_plus_euclidean_norm(spec["A"], float(spec["beta"]))
    raise ValidationError(f"unknown norm family {family!r}")


# ---------------------------------------------------------------------- records
def eval_norm(norm: FinslerNorm, xi) -> NormEval:
    """Value, gradient and Hessian of F at a single nonzero point."""
    xi = np.asarray(xi, dtype=float)
    if np.linalg.norm(xi) < ZERO_EPS:
        raise ZeroVector("eval_norm at zero vector")
    return NormEval(value=float(norm.value(xi)),
                    gradient=norm.gradient(xi),
                    hessian=norm.hessian(xi))


def eval_dual(norm: FinslerNorm, x) -> DualEval:
    """Value and gradient of the dual norm (support function of {F < 1})."""
    x = np.asarray(x, dtype=float)
    if np.linalg.norm(x) < ZERO_EPS:
        raise ZeroVector("eval_dual at zero vector")
    v, g = norm.dual(x)
    return DualEval(value=float(v), gradient=g)


def check_identities(norm: FinslerNorm, samples: int = 1000, seed: int = 42) -> dict:
    """Max residuals of the seven structural identities at seeded random points.

    Keys (grouped by identity): triangle_inequality, gradient_bound,
    euler_primal, euler_dual, hessian_null, unit_primal_of_dual_gradient,
    unit_dual_of_gradient, sign_rule, inverse_duality.
    """
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    N = norm.dim
    x = rng.standard_normal((samples, N))
    y = rng.standard_normal((samples, N))
    xi = rng.standard_normal((samples, N))
    t = rng.uniform(0.1, 2.0, samples) * rng.choice([-1.0, 1.0], samples)

    Fx, Fy, Fxy = norm.value(x), norm.value(y), norm.value(x + y)
    gx = norm.gradient(x)
    gxi = norm.gradient(xi)
    dv, dg = norm.dual(x)
    Hxi = norm.hessian(xi)

    res = {}
    res["triangle_inequality"] = float(np.max(np.maximum(Fxy - Fx - Fy, 0.0)))
    res["gradient_bound"] = float(np.max(np.maximum(
        np.linalg.norm(gx, axis=-1) - norm.b_upper, 0.0)))
    res["euler_primal"] = float(np.max(np.abs(
        np.einsum("ki,ki->k", xi, gxi) - norm.value(xi))))
    res["euler_dual"] = float(np.max(np.abs(np.einsum("ki,ki->k", x, dg) - dv)))
    res["hessian_null"] = float(np.max(np.linalg.norm(
        np.einsum("kij,kj->ki", Hxi, xi), axis=-1)))
    res["unit_primal_of_dual_gradient"] = float(np.max(np.abs(norm.value(dg) - 1.0)))
    res["unit_dual_of_gradient"] = float(np.max(np.abs(norm.dual_value(gx) - 1.0)))
    gt = norm.gradient(t[:, None] * xi)
    res["sign_rule"] = float(np.max(np.abs(gt - np.sign(t)[:, None] * gxi)))
    res["inverse_duality"] = float(np.max(np.abs(dv[:, None] * norm.gradient(dg) - x)))
    return {"max_residuals": res}


def check_fk_condition(norm: FinslerNorm, samples: int = 1000, seed: int = 42,
                       tol: float = 1e-8) -> dict:
    """Residual of <F_xi(x), F0_xi(y)> = <x,y>/(F(x) F0(y)) at seeded pairs.

    Holds exactly for euclidean and quadratic families; for other families the
    residual is recorded without any expectation.
    """
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    N = norm.dim
    x = np.empty((samples, N))
    y = np.empty((samples, N))
    filled = 0
    while filled < samples:
        cx = rng.standard_normal((samples, N))
        cy = rng.standard_normal((samples, N))
        inner = np.einsum("ki,ki->k", cx, cy)
        good = np.abs(inner) > 1e-3 * np.linalg.norm(cx, axis=-1) * np.linalg.norm(cy, axis=-1)
        take = min(int(np.sum(good)), samples - filled)
        x[filled:filled + take] = cx[good][:take]
        y[filled:filled + take] = cy[good][:take]
        filled += take
    lhs = np.einsum("ki,ki->k", norm.gradient(x), norm.dual_gradient(y))
    rhs = np.einsum("ki,ki->k", x, y) / (norm.value(x) * norm.dual_value(y))
    residual = float(np.max(np.abs(lhs - rhs)))
    return {"max_residual": residual, "holds": residual <= tol}


def _orthonormal_complement(d: np.ndarray) -> np.ndarray:
    """Columns spanning d^perp (Householder frame of the unit vector d)."""
    N = d.size
    e = np.zeros(N)
    e[0] = 1.0
    v = d - e if d[0] >= 0 else d + e
    nv = np.linalg.norm(v)
    if nv < 1e-14:
        Q = np.eye(N) if d[0] >= 0 else -np.eye(N)
    else:
        v = v / nv
        Q = np.eye(N) - 2.0 * np.outer(v, v)
        if d[0] < 0:
            Q = -Q
    return Q[:, 1:]


def estimate_ellipticity(norm, samples: int = 1000, seed: int = 42,
                         degeneracy_tol: float = 1e-12) -> EllipticityEstimate:
    """Sample unit-sphere bounds a, b and the transverse Hessian bracket.

    Evaluates F(d)/|d| and the Rayleigh quotients of F_xixi(d) restricted to
    d^perp over seeded unit directions plus the coordinate axes (anisotropy
    extremes often sit on the axes).  Raises DegenerateHessian when the
    transverse quotient drops below ``degeneracy_tol``: the family violates
    the uniform-convexity assumption and is inadmissible.
    """
    if samples < 100:
        raise ValidationError("samples must be >= 100")
    rng = np.random.default_rng(seed)
    N = int(getattr(norm, "dim", 2))
    dirs = rng.standard_normal((samples, N))
    dirs = np.concatenate([dirs / np.linalg.norm(dirs, axis=-1, keepdims=True),
                           np.eye(N), -np.eye(N)])
    a = np.inf
    b = -np.inf
    lam = np.inf
    Lam = -np.inf
    for d in dirs:
        f = float(norm.value(d))
        a = min(a, f)
        b = max(b, f)
        H = np.asarray(norm.hessian(d), dtype=float)
        B = _orthonormal_complement(d)
        T = B.T @ H @ B
        ev = np.linalg.eigvalsh(0.5 * (T + T.T))
        if ev[0] < degeneracy_tol:
            raise DegenerateHessian(
                f"transverse Hessian eigenvalue {ev[0]:.3e} at direction {d} "
                f"below {degeneracy_tol:g}; family violates uniform ellipticity")
        lam = min(lam, float(ev[0]))
        Lam = max(Lam, float(ev[-1]))
    est = EllipticityEstimate(a_lower=a, b_upper=b, lambda_sq=lam, Lambda=Lam)
    if isinstance(norm, FinslerNorm):
        norm.ellipticity = est
    return est
