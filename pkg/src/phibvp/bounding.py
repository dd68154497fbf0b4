"""Bounding functions, bound-set geometry and sampled hypothesis checkers.

Every checker evaluates an analytic "for all" condition on a finite grid and
returns a :class:`~phibvp.reports.HypothesisReport`. Field callables follow
one convention throughout: ``f(t, x)`` or ``f(t, x, y)`` with ``t`` of shape
``(...)`` and ``x, y`` of shape ``(..., n)``, returning ``(..., n)``.
Homotopy fields take a trailing scalar ``lam``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import (BoundarySamplingError, GradientVanishedError, InputError,
                     NotOuterNormalError)
from .phi_ops import PhiMap, phi_apply
from .reports import HOLDS, INCONCLUSIVE, VIOLATED, HypothesisReport
from .sampling import time_grid, unit_directions

EPS = np.finfo(float).eps
EPS_STRICT = 1e-9


# ---------------------------------------------------------------------------
# bounding functions and fields


@dataclass(frozen=True)
class BoundingFn:
    """A C^2 function V with level c; D = [V <= c], G = [V < c].

    ``V`` maps ``(..., n) -> (...)``. Missing ``grad``/``hess`` callbacks are
    replaced by central finite differences.
    """

    V: Callable[[np.ndarray], np.ndarray]
    n: int
    level: float = 0.0
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "V"

    def value(self, x) -> np.ndarray:
        return np.asarray(self.V(np.asarray(x, dtype=float)), dtype=float)

    def excess(self, x) -> np.ndarray:
        """V(x) - c."""
        return self.value(x) - self.level

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        return fd_gradient(self.V, x)

    def hessian(self, x) -> np.ndarray:
        """Symmetrized Hessian at a single point x of shape (n,)."""
        x = np.asarray(x, dtype=float)
        if self.hess is not None:
            H = np.asarray(self.hess(x), dtype=float)
        elif self.grad is not None:
            H = _fd_jacobian_of(self.grad, x)
        else:
            H = fd_hessian(self.V, x)
        return 0.5 * (H + H.T)

    def scaled(self, alpha: float) -> "BoundingFn":
        """alpha*V at level alpha*c (same sublevel set for alpha > 0)."""
        g, h = self.grad, self.hess
        return BoundingFn(
            V=lambda x: alpha * self.V(x), n=self.n, level=alpha * self.level,
            grad=None if g is None else (lambda x: alpha * g(x)),
            hess=None if h is None else (lambda x: alpha * h(x)),
            name=f"{alpha:g}*{self.name}",
        )

    def at_level(self, c: float) -> "BoundingFn":
        return BoundingFn(self.V, self.n, float(c), self.grad, self.hess, self.name)


def fd_gradient(V, x: np.ndarray) -> np.ndarray:
    """Central differences with step eps^(1/3) (1 + ||x||), batched over leading axes."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    h = EPS ** (1.0 / 3.0) * (1.0 + np.linalg.norm(x, axis=-1))
    out = np.empty_like(x)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        step = h[..., None] * e
        out[..., i] = (np.asarray(V(x + step)) - np.asarray(V(x - step))) / (2.0 * h)
    return out


def fd_hessian(V, x: np.ndarray) -> np.ndarray:
    """Second differences of V with step eps^(1/4) (1 + ||x||) at a single point."""
    n = x.shape[-1]
    h = EPS ** 0.25 * (1.0 + np.linalg.norm(x))
    I = np.eye(n) * h
    H = np.empty((n, n))
    v0 = float(V(x))
    for i in range(n):
        H[i, i] = (float(V(x + I[i])) - 2.0 * v0 + float(V(x - I[i]))) / h ** 2
        for j in range(i + 1, n):
            H[i, j] = H[j, i] = (float(V(x + I[i] + I[j])) - float(V(x + I[i] - I[j]))
                                 - float(V(x - I[i] + I[j])) + float(V(x - I[i] - I[j]))) / (4.0 * h ** 2)
    return H


def _fd_jacobian_of(g, x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    h = EPS ** (1.0 / 3.0) * (1.0 + np.linalg.norm(x))
    J = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        J[:, i] = (np.asarray(g(x + e)) - np.asarray(g(x - e))) / (2.0 * h)
    return J


@dataclass(frozen=True)
class VectorField:
    """A T-periodic field f(t,x) or f(t,x,y), vectorized over leading axes."""

    f: Callable
    n: int
    T: float = 1.0
    depends_on_y: bool = False
    name: str = "f"

    def __call__(self, t, x, y=None) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        if self.depends_on_y:
            if y is None:
                y = np.zeros_like(x)
            return np.asarray(self.f(t, x, np.asarray(y, dtype=float)), dtype=float)
        return np.asarray(self.f(t, x), dtype=float)


# ---------------------------------------------------------------------------
# canned bounding functions


def ball_function(R: float, center=None, n: int = 2) -> BoundingFn:
    """V(x) = (||x - center||^2 - R^2)/2 at level 0."""
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    n = c.size
    return BoundingFn(
        V=lambda x: 0.5 * (np.sum((x - c) ** 2, axis=-1) - R * R),
        n=n, level=0.0, grad=lambda x: x - c, hess=lambda x: np.eye(n), name=f"ball(R={R:g})",
    )


def quadratic_function(Q, center=None, level: float = 1.0) -> BoundingFn:
    """V(x) = (x-center)^T Q (x-center) for symmetric Q."""
    Q = np.asarray(Q, dtype=float)
    Q = 0.5 * (Q + Q.T)
    n = Q.shape[0]
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    return BoundingFn(
        V=lambda x: np.einsum("...i,ij,...j->...", x - c, Q, x - c),
        n=n, level=float(level), grad=lambda x: 2.0 * (x - c) @ Q, hess=lambda x: 2.0 * Q,
        name="quadratic",
    )


def peanut_function(level: float = 0.1, a: float = 1.0) -> BoundingFn:
    """V(x) = x1^4/4 - x1^2 + a x2^2: a two-lobed sublevel family joined by a neck."""

    def V(x):
        return x[..., 0] ** 4 / 4.0 - x[..., 0] ** 2 + a * x[..., 1] ** 2

    def grad(x):
        return np.stack([x[..., 0] ** 3 - 2.0 * x[..., 0], 2.0 * a * x[..., 1]], axis=-1)

    def hess(x):
        return np.array([[3.0 * x[0] ** 2 - 2.0, 0.0], [0.0, 2.0 * a]])

    return BoundingFn(V=V, n=2, level=float(level), grad=grad, hess=hess, name="peanut")


def smooth_min_function(parts: Sequence[BoundingFn], sharpness: float = 8.0) -> BoundingFn:
    """-log(sum exp(-k V_i))/k: a smooth blend whose sublevel set is ~ the union."""
    k = float(sharpness)
    n = parts[0].n

    def V(x):
        vals = np.stack([p.value(x) for p in parts], axis=0)
        m = vals.min(axis=0)
        return m - np.log(np.sum(np.exp(-k * (vals - m)), axis=0)) / k

    return BoundingFn(V=V, n=n, level=0.0, name="smooth_min")


# ---------------------------------------------------------------------------
# bound-set descriptors


@dataclass(frozen=True)
class BallSet:
    R: float
    center: tuple = (0.0,)

    @property
    def n(self) -> int:
        return len(self.center)

    def margin(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.R - np.linalg.norm(x - np.asarray(self.center), axis=-1)

    def boundary_points(self, count: int, seed: int = 0):
        d = unit_directions(self.n, count, seed=seed)
        u = np.asarray(self.center) + self.R * d
        return u, u - np.asarray(self.center)

    def interior_point(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)

    def bounding_function(self) -> BoundingFn:
        return ball_function(self.R, self.center)

    def to_dict(self) -> dict:
        return {"ball": {"R": self.R, "center": list(self.center)}}


@dataclass(frozen=True)
class BoxSet:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or not all(a < b for a, b in zip(self.lo, self.hi)):
            raise InputError("box needs a_i < b_i in every coordinate")

    @property
    def n(self) -> int:
        return len(self.lo)

    def margin(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.minimum((x - np.asarray(self.lo)).min(axis=-1), (np.asarray(self.hi) - x).min(axis=-1))

    def interior_point(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lo) + np.asarray(self.hi))

    def face_points(self, face_samples: int):
        """Yield (i, side, points) with side -1 for x_i = a_i and +1 for x_i = b_i."""
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        n = self.n
        for i in range(n):
            others = [j for j in range(n) if j != i]
            if others:
                axes = [np.linspace(lo[j], hi[j], face_samples) for j in others]
                mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n - 1)
            else:
                mesh = np.zeros((1, 0))
            for side, val in ((-1, lo[i]), (1, hi[i])):
                pts = np.empty((mesh.shape[0], n))
                pts[:, others] = mesh
                pts[:, i] = val
                yield i, side, pts

    def boundary_points(self, face_samples: int = 17, seed: int = 0):
        us, nus = [], []
        for i, side, pts in self.face_points(face_samples):
            nu = np.zeros_like(pts)
            nu[:, i] = side
            us.append(pts)
            nus.append(nu)
        return np.concatenate(us), np.concatenate(nus)

    def to_dict(self) -> dict:
        return {"box": {"lo": list(self.lo), "hi": list(self.hi)}}


@dataclass(frozen=True)
class SublevelSet:
    V: BoundingFn
    center: tuple

    @property
    def n(self) -> int:
        return self.V.n

    def margin(self, x) -> np.ndarray:
        return -self.V.excess(x)

    def interior_point(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)

    def boundary_points(self, count: int, root_tol: float = 1e-10, seed: int = 0):
        s = sample_boundary(self.V, self.center, count, root_tol, seed=seed)
        return s.points, self.V.gradient(s.points)

    def to_dict(self) -> dict:
        return {"sublevel": {"V": self.V.name, "level": self.V.level, "center": list(self.center)}}


# ---------------------------------------------------------------------------
# boundary sampling


@dataclass
class BoundarySample:
    points: np.ndarray
    directions: np.ndarray
    radii: np.ndarray
    skipped: int

    def __len__(self):
        return len(self.points)


def _march_radii(r_max: float, step0: float, growth: float) -> np.ndarray:
    rs = [0.0]
    h = step0
    while rs[-1] < r_max:
        rs.append(rs[-1] + h)
        h *= growth
    return np.array(rs)


def sample_boundary(V: BoundingFn, P0, n_dirs: int, root_tol: float = 1e-10, *,
                    r_max: float = 1e3, step0: float = 1e-3, growth: float = 1.02,
                    seed: int = 0) -> BoundarySample:
    """Points of [V = c] along rays from the interior point P0.

    Each ray is marched on a geometrically growing radius grid until V - c
    changes sign, then the crossing is refined by Brent's method. Rays without
    a crossing are skipped and counted.
    """
    P0 = np.asarray(P0, dtype=float)
    if not V.excess(P0) < 0.0:
        raise InputError("P0 must satisfy V(P0) < c")
    dirs = unit_directions(V.n, n_dirs, seed=seed)
    rs = _march_radii(r_max, step0, growth)
    vals = V.excess(P0 + rs[None, :, None] * dirs[:, None, :])
    pts, used, radii = [], [], []
    skipped = 0
    for k, d in enumerate(dirs):
        hit = np.nonzero(vals[k] >= 0.0)[0]
        if hit.size == 0:
            skipped += 1
            continue
        j = hit[0]
        if vals[k, j] == 0.0:
            r = rs[j]
        else:
            def g(r, d=d):
                return float(V.excess(P0 + r * d))
            r = brentq(g, rs[j - 1], rs[j], xtol=1e-15, rtol=4 * EPS, maxiter=200)
            # polish until the level residual meets root_tol
            lo, hi = rs[j - 1], rs[j]
            while abs(g(r)) > root_tol and hi - lo > 4 * EPS * max(1.0, hi):
                if g(r) < 0:
                    lo = r
                else:
                    hi = r
                r = 0.5 * (lo + hi)
        pts.append(P0 + r * d)
        used.append(d)
        radii.append(r)
    if len(pts) < n_dirs / 2:
        raise BoundarySamplingError(
            f"only {len(pts)} of {len(dirs)} rays crossed the level set; "
            "the set may be unbounded or P0 misplaced")
    return BoundarySample(np.array(pts), np.array(used), np.array(radii), skipped)


# ---------------------------------------------------------------------------
# level-set regularity and condition (C)


def check_grad_nonvanishing(V: BoundingFn, boundary, tol: float = 1e-8) -> HypothesisReport:
    u = np.atleast_2d(np.asarray(boundary, dtype=float))
    if u.size == 0:
        raise InputError("empty boundary sample")
    norms = np.linalg.norm(V.gradient(u), axis=-1)
    k = int(np.argmin(norms))
    margin = float(norms[k])
    uk = u[k].copy()
    probe = lambda: float(np.linalg.norm(V.gradient(uk)))  # noqa: E731
    if margin >= tol:
        return HypothesisReport("cond_Vprime", HOLDS, margin=margin, probe=probe,
                                details={"samples": len(u), "tol": tol})
    return HypothesisReport("cond_Vprime", VIOLATED, witness={"u": uk.tolist()}, margin=margin,
                            probe=probe, details={"samples": len(u), "tol": tol})


def tangent_basis(g) -> np.ndarray:
    """Orthonormal basis (columns) of the hyperplane orthogonal to g.

    Built from the Householder reflector that maps e_1 onto -sign(g_1) g/||g||;
    its remaining columns span the orthogonal complement.
    """
    g = np.asarray(g, dtype=float)
    ng = np.linalg.norm(g)
    if not ng > 0.0:
        raise InputError("tangent basis requested for a zero vector")
    n = g.size
    w = g / ng
    v = w.copy()
    v[0] += 1.0 if w[0] >= 0.0 else -1.0
    H = np.eye(n) - 2.0 * np.outer(v, v) / (v @ v)
    return H[:, 1:]


def check_condition_C(V: BoundingFn, u, tol: float = 1e-9):
    """Smallest eigenvalue of V''(u) restricted to the tangent hyperplane.

    Returns ``(min_eig, report)``; the condition holds when min_eig >= -tol.
    In dimension one the tangent space is {0} and the condition is vacuous.
    """
    u = np.asarray(u, dtype=float)
    g = V.gradient(u)
    if not np.linalg.norm(g) > 0.0:
        raise GradientVanishedError(f"V'(u) = 0 at u={u.tolist()}")
    Q = tangent_basis(g)
    if Q.shape[1] == 0:
        return np.inf, HypothesisReport("cond_C", HOLDS, margin=np.inf, details={"vacuous": True})
    B = Q.T @ V.hessian(u) @ Q
    evals, evecs = np.linalg.eigh(0.5 * (B + B.T))
    lam = float(evals[0])
    ydir = Q @ evecs[:, 0]

    def probe():
        return float(ydir @ V.hessian(u) @ ydir)

    if lam >= -tol:
        return lam, HypothesisReport("cond_C", HOLDS, margin=lam, probe=probe)
    return lam, HypothesisReport("cond_C", VIOLATED, witness={"u": u.tolist(), "y": ydir.tolist()},
                                 margin=lam, probe=probe)


# ---------------------------------------------------------------------------
# the bounding-function condition


@dataclass(frozen=True)
class OuterNormalBounding:
    """Affine bounding functions V_u(x) = <x - u, nu_u>: gradient nu_u, zero Hessian."""

    normal: Callable[[np.ndarray], np.ndarray]
    n: int

    def gradient(self, u) -> np.ndarray:
        return np.asarray(self.normal(np.asarray(u, dtype=float)), dtype=float)

    def hessian(self, u) -> np.ndarray:
        return np.zeros((self.n, self.n))


def _tangent_directions(Q: np.ndarray, count: int, seed: int) -> np.ndarray:
    k = Q.shape[1]
    if k == 0:
        return np.zeros((0, Q.shape[0]))
    if k == 1:
        return np.stack([Q[:, 0], -Q[:, 0]])
    d = unit_directions(k, count, seed=seed)
    return d @ Q.T


def check_HV(V, family, phi: PhiMap, boundary, t_grid, lam_grid, y_max: float, *,
             n_dirs: int = 8, n_radii: int = 9, eps_strict: float = EPS_STRICT,
             seed: int = 0) -> HypothesisReport:
    """<V''(u) y, phi(y)> + <V'(u), F(t,u,y;lam)> > eps_strict on tangent y, ||y|| <= y_max.

    ``V`` is anything with ``gradient(u)`` and ``hessian(u)`` (a global
    :class:`BoundingFn` or per-point :class:`OuterNormalBounding`); ``family``
    any object with ``F(t, x, y, lam)``.
    """
    if not y_max > 0:
        raise InputError("y_max must be positive")
    u_all = np.atleast_2d(np.asarray(boundary, dtype=float))
    t = np.asarray(t_grid, dtype=float)
    lams = np.asarray(lam_grid, dtype=float)
    radii = np.linspace(0.0, y_max, n_radii)[1:]
    worst = (np.inf, None)
    for u in u_all:
        g = V.gradient(u)
        H = V.hessian(u)
        dirs = _tangent_directions(tangent_basis(g), n_dirs, seed)
        ys = np.concatenate([np.zeros((1, u.size)), (radii[:, None, None] * dirs[None]).reshape(-1, u.size)])
        curv = np.einsum("ki,ij,kj->k", ys, H, phi_apply(phi, ys))
        tt = np.repeat(t, len(ys))
        yy = np.tile(ys, (len(t), 1))
        uu = np.broadcast_to(u, yy.shape)
        for lam in lams:
            val = np.tile(curv, len(t)) + np.asarray(family.F(tt, uu, yy, float(lam))) @ g
            k = int(np.argmin(val))
            if val[k] < worst[0]:
                worst = (float(val[k]), (float(tt[k]), u.copy(), yy[k].copy(), float(lam)))
    margin, (tw, uw, yw, lw) = worst

    def probe():
        g = V.gradient(uw)
        return float(yw @ V.hessian(uw) @ phi_apply(phi, yw)
                     + np.asarray(family.F(np.array([tw]), uw[None], yw[None], lw))[0] @ g)

    details = {"samples": int(len(u_all) * len(t) * len(lams)), "y_max": float(y_max),
               "eps_strict": eps_strict}
    witness = {"t": tw, "u": uw.tolist(), "y": yw.tolist(), "lambda": lw}
    if margin > eps_strict:
        return HypothesisReport("H_V", HOLDS, margin=margin, probe=probe, details=details)
    return HypothesisReport("H_V", VIOLATED, witness=witness, margin=margin, probe=probe, details=details)


# ---------------------------------------------------------------------------
# frictionless-field conditions


def _pairing_report(cid, t, pts, f_vals, weights, extra=None, field_eval=None, strict=False):
    """Shared reduction for conditions of the form <f(t,u), w_u> >= 0."""
    vals = np.einsum("tki,ki->tk", f_vals, weights)
    it, ik = np.unravel_index(np.argmin(vals), vals.shape)
    margin = float(vals[it, ik])
    tw, uw, ww = float(t[it]), pts[ik].copy(), weights[ik].copy()
    probe = None
    if field_eval is not None:
        probe = lambda: float(field_eval(np.array([tw]), uw[None])[0] @ ww)  # noqa: E731
    ok = margin > 0.0 if strict else margin >= 0.0
    details = dict(extra or {})
    details["samples"] = int(vals.size)
    if ok:
        return HypothesisReport(cid, HOLDS, margin=margin, probe=probe, details=details)
    return HypothesisReport(cid, VIOLATED, witness={"t": tw, "x": uw.tolist(), "normal": ww.tolist()},
                            margin=margin, probe=probe, details=details)


def _eval_on(field: VectorField, t, pts) -> np.ndarray:
    tt = np.repeat(t, len(pts))
    xx = np.tile(pts, (len(t), 1))
    return field(tt, xx).reshape(len(t), len(pts), -1)


def check_hartman(f: VectorField, R: float, t_grid, sphere_dirs: int = 256, seed: int = 0) -> HypothesisReport:
    """Hartman's condition <f(t,x), x> >= 0 on the sphere ||x|| = R."""
    if not R > 0:
        raise InputError("R must be positive")
    t = np.asarray(t_grid, dtype=float)
    pts = R * unit_directions(f.n, sphere_dirs, seed=seed)
    return _pairing_report("hartman", t, pts, _eval_on(f, t, pts), pts, {"R": R}, field_eval=f)


def check_poincare_miranda(f: VectorField, box: BoxSet, t_grid, face_samples: int = 17) -> HypothesisReport:
    """f_i <= 0 on faces x_i = a_i and f_i >= 0 on faces x_i = b_i."""
    t = np.asarray(t_grid, dtype=float)
    u, nu = box.boundary_points(face_samples)
    return _pairing_report("poincare_miranda", t, u, _eval_on(f, t, u), nu,
                           {"box": box.to_dict()["box"]}, field_eval=f)


def check_outer_normal(f: VectorField, normals, t_grid, P=None) -> HypothesisReport:
    """<f(t,u), nu_u> >= 0 for a field of outer normals given as pairs (u, nu_u)."""
    if isinstance(normals, tuple) and len(normals) == 2 and np.ndim(normals[0]) == 2:
        U, NU = (np.asarray(a, dtype=float) for a in normals)
    else:
        U = np.array([np.asarray(u, dtype=float) for u, _ in normals])
        NU = np.array([np.asarray(v, dtype=float) for _, v in normals])
    if np.any(np.linalg.norm(NU, axis=-1) == 0.0):
        raise InputError("outer normals must be nonzero")
    if P is not None:
        support = np.einsum("ki,ki->k", U - np.asarray(P, dtype=float), NU)
        if np.any(support <= 0.0):
            k = int(np.argmin(support))
            raise NotOuterNormalError(f"<u - P, nu_u> = {support[k]:g} <= 0 at u={U[k].tolist()}")
    t = np.asarray(t_grid, dtype=float)
    return _pairing_report("outer_normal", t, U, _eval_on(f, t, U), NU, field_eval=f)


# ---------------------------------------------------------------------------
# Lienard-type sign conditions


@dataclass
class LienardSamples:
    """Sample points for the growth/sign conditions on h.

    Sphere shells (geometric radii, quasi-uniform directions) plus, for n <= 3,
    a Cartesian grid with geometric spacing per coordinate so that points with
    one large and one moderate coordinate are represented.
    """

    shells: np.ndarray          # (n_shells,)
    shell_points: np.ndarray    # (n_shells, n_dirs, n)
    grid_points: np.ndarray     # (m, n)
    t: np.ndarray

    @property
    def all_points(self) -> np.ndarray:
        return np.concatenate([self.shell_points.reshape(-1, self.shell_points.shape[-1]), self.grid_points])

    @classmethod
    def build(cls, n: int, r_max: float, T: float = 1.0, *, r_min: float = 0.1, n_shells: int = 19,
              n_dirs: int = 360, grid_per_decade: int = 8, n_time: int = 8, seed: int = 0):
        shells = np.geomspace(r_min, r_max, n_shells)
        dirs = unit_directions(n, n_dirs, seed=seed)
        shell_points = shells[:, None, None] * dirs[None]
        if n <= 3:
            decades = np.log10(r_max / r_min)
            pos = np.geomspace(r_min, r_max, int(np.ceil(decades * grid_per_decade)) + 1)
            axis = np.concatenate([-pos[::-1], [0.0], pos])
            grid = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
        else:
            grid = np.zeros((0, n))
        return cls(shells, shell_points, grid, time_grid(T, n_time))


def _h_eval(h: VectorField, t, x) -> np.ndarray:
    tt = np.repeat(t, len(x))
    xx = np.tile(x, (len(t), 1))
    return h(tt, xx).reshape(len(t), len(x), -1)


def check_lienard_conditions(h: VectorField, *, R: float = 1.0, d: float = 1.0,
                             rho_list: Sequence[float] = (0.5, 1.0, 2.0), i_threshold: float = 1.0,
                             samples: Optional[LienardSamples] = None) -> dict:
    """Sampled verdicts for (H_H), (H_H+), and the alternatives (i), (ii), (iii).

    Returns a dict keyed by condition id. The (H_H+) report carries the
    empirical ``K0``; (ii) carries the sampled ``R_rho`` per rho.
    """
    n = h.n
    if samples is None:
        samples = LienardSamples.build(n, 1e3 * max(R, d, 1.0), h.T)
    if samples.shells[-1] < 10 * max(R, d):
        raise InputError("Lienard samples must reach ||x|| >= 10 max(R, d)")
    t = samples.t
    pts = samples.all_points
    norms = np.linalg.norm(pts, axis=-1)
    hv = _h_eval(h, t, pts)
    pair = np.einsum("tki,ki->tk", hv, pts)
    out = {}

    def point_probe(kind, tw, xw, yw=None, i=None, offset=0.0):
        def probe():
            xx = xw if yw is None else xw + yw
            val = h(np.array([tw]), xx[None])[0]
            return float(val[i] * xw[i]) if kind == "comp" else float(val @ xw) - offset
        return probe

    # (H_H): <h, x> >= 0 for ||x|| >= R
    mask = norms >= R
    sub = np.where(mask[None, :], pair, np.inf)
    it, ik = np.unravel_index(np.argmin(sub), sub.shape)
    m = float(sub[it, ik])
    if m >= 0.0:
        out["H_H"] = HypothesisReport("H_H", HOLDS, margin=m, details={"R": R})
    else:
        out["H_H"] = HypothesisReport("H_H", VIOLATED, witness={"t": float(t[it]), "x": pts[ik].tolist()},
                                      margin=m, details={"R": R},
                                      probe=point_probe("pair", float(t[it]), pts[ik].copy()))

    # (H_H+): <h, x> bounded below; trend on the outer shells must not keep falling
    shell_pair = np.einsum("tski,ski->tsk", _h_eval(h, t, samples.shell_points.reshape(-1, n))
                           .reshape(len(t), *samples.shell_points.shape), samples.shell_points)
    shell_min = shell_pair.min(axis=(0, 2))
    K0 = float(max(0.0, -pair.min()))
    outer = shell_min[samples.shells >= samples.shells[-1] / 10.0]
    falling = bool(np.all(np.diff(outer) < 0.0)) and outer[-1] < -K0 * 0.5 and outer[-1] < 0
    out["H_H_plus"] = HypothesisReport("H_H_plus", INCONCLUSIVE if falling else HOLDS, margin=-K0,
                                       details={"K0": K0})

    # (i): sphere minima increasing on the outer half and above threshold at the top
    half = shell_min[len(shell_min) // 2:]
    scale = 1e-12 * max(1.0, np.abs(half).max())
    increasing = bool(np.all(np.diff(half) >= -scale))
    top = float(shell_min[-1])
    details = {"shell_radii": samples.shells.tolist(), "shell_minima": shell_min.tolist(),
               "threshold": i_threshold}
    if increasing and top > i_threshold:
        out["lienard_i"] = HypothesisReport("lienard_i", HOLDS, margin=top - i_threshold, details=details)
    else:
        s_pair = shell_pair[:, -1, :]
        it, ik = np.unravel_index(np.argmin(s_pair), s_pair.shape)
        xw = samples.shell_points[-1, ik].copy()
        out["lienard_i"] = HypothesisReport(
            "lienard_i", VIOLATED, witness={"t": float(t[it]), "x": xw.tolist()},
            margin=top - i_threshold, details=details,
            probe=point_probe("pair", float(t[it]), xw, offset=i_threshold))

    # (ii): for each rho the smallest sampled R_rho beyond which <h(x+y), x> >= 0
    r_cut = samples.shells[-1] / 10.0
    rho_info, worst = {}, None
    ydirs = unit_directions(n, 32 if n > 1 else 2)
    for rho in rho_list:
        ys = np.concatenate([np.zeros((1, n)), 0.5 * rho * ydirs, rho * ydirs])
        best = np.full(len(pts), np.inf)
        arg = [None] * len(pts)
        for y in ys:
            v = np.einsum("tki,ki->tk", _h_eval(h, t, pts + y), pts)
            vmin = v.min(axis=0)
            better = vmin < best
            for k in np.nonzero(better)[0]:
                arg[k] = (float(t[int(np.argmin(v[:, k]))]), y)
            best = np.minimum(best, vmin)
        bad = best < 0.0
        R_rho = float(norms[bad].max()) if bad.any() else 0.0
        rho_info[str(rho)] = R_rho
        if bad.any() and R_rho > r_cut:
            far = np.nonzero(bad)[0]
            k = far[np.argmin(np.where(norms[far] > r_cut, best[far], np.inf))]
            cand = (float(best[k]), rho, pts[k].copy(), arg[k])
            if worst is None or norms[k] > np.linalg.norm(worst[2]):
                worst = cand
    details = {"R_rho": rho_info, "r_cut": float(r_cut)}
    if worst is None:
        out["lienard_ii"] = HypothesisReport("lienard_ii", HOLDS, margin=0.0, details=details)
    else:
        val, rho, xw, (tw, yw) = worst
        out["lienard_ii"] = HypothesisReport(
            "lienard_ii", VIOLATED, witness={"t": tw, "x": xw.tolist(), "y": yw.tolist(), "rho": rho},
            margin=val, details=details, probe=point_probe("pair", tw, xw, yw.copy()))

    # (iii): h_i x_i >= 0 whenever |x_i| > d
    comp = hv * pts[None]
    active = np.abs(pts) > d
    sub = np.where(active[None], comp, np.inf)
    it, ik, ii = np.unravel_index(np.argmin(sub), sub.shape)
    m = float(sub[it, ik, ii])
    if m >= 0.0:
        out["lienard_iii"] = HypothesisReport("lienard_iii", HOLDS, margin=m if np.isfinite(m) else None,
                                              details={"d": d})
    else:
        out["lienard_iii"] = HypothesisReport(
            "lienard_iii", VIOLATED, witness={"t": float(t[it]), "x": pts[ik].tolist(), "component": int(ii)},
            margin=m, details={"d": d},
            probe=point_probe("comp", float(t[it]), pts[ik].copy(), i=int(ii)))
    return out


def villari_trial_paths(n: int, d: float, radii=(1.5, 3.0, 10.0, 100.0), count: int = 32):
    """Constant trial paths x(t) = x0 with some |x0_j| > d."""
    pts = []
    for r in radii:
        for u in unit_directions(n, count):
            x0 = r * d * u
            if np.abs(x0).max() > d:
                pts.append(x0)
    return pts


def check_villari(h: VectorField, d: float, T: float, trial_paths, quad_N: int = 64,
                  tol: float = 1e-10) -> HypothesisReport:
    """Some component of the time average of h along each trial path is nonzero.

    Trial paths are constant points ``x0`` or callables ``t -> x(t)`` (vectorized).
    """
    t = time_grid(T, quad_N)
    worst = (np.inf, None)
    for path in trial_paths:
        if callable(path):
            xt = np.asarray(path(t), dtype=float)
        else:
            xt = np.broadcast_to(np.asarray(path, dtype=float), (len(t), h.n))
        if not np.all(np.abs(xt).max(axis=-1) > d):
            raise InputError("trial paths must keep some |x_j| > d throughout")
        integral = (T / quad_N) * h(t, xt).sum(axis=0)
        score = float(np.abs(integral).max())
        if score < worst[0]:
            worst = (score, (path, integral))
    score, (path, integral) = worst

    def probe():
        xt = np.asarray(path(t)) if callable(path) else np.broadcast_to(np.asarray(path, float), (len(t), h.n))
        return float(np.abs((T / quad_N) * h(t, xt).sum(axis=0)).max())

    wpath = "callable" if callable(path) else np.asarray(path, dtype=float).tolist()
    details = {"paths": len(trial_paths), "d": d, "tol": tol}
    if score > tol:
        return HypothesisReport("villari", HOLDS, margin=score, details=details, probe=probe)
    return HypothesisReport("villari", VIOLATED, witness={"path": wpath, "integral": integral.tolist()},
                            margin=score, details=details, probe=probe)


# ---------------------------------------------------------------------------
# Rayleigh structure


def check_rayleigh_structure(g: Callable, potential, phi: PhiMap, samples=None, tol: float = 1e-9) -> dict:
    """Parallelism of g(y) with y and boundedness of g(y) - grad G(phi(y)).

    ``potential`` needs a ``grad`` callable. Returns reports keyed
    ``rayleigh_parallel`` and ``rayleigh_bounded``.
    """
    n = phi.dimension
    if samples is None:
        radii = np.geomspace(1e-3, 1e3, 13)
        samples = np.concatenate([np.zeros((1, n)),
                                  (radii[:, None, None] * unit_directions(n, 64)[None]).reshape(-1, n)])
    y = np.asarray(samples, dtype=float)
    gy = np.asarray(g(y), dtype=float)
    r = np.linalg.norm(y, axis=-1)
    nz = r > 0
    yhat = np.zeros_like(y)
    yhat[nz] = y[nz] / r[nz, None]
    perp = gy - np.einsum("ki,ki->k", gy, yhat)[:, None] * yhat
    excess = np.linalg.norm(perp, axis=-1) - tol * np.linalg.norm(gy, axis=-1)
    excess[~nz] = -np.inf
    k = int(np.argmax(excess))
    yk = y[k].copy()

    def par_probe():
        gv = np.asarray(g(yk[None]))[0]
        yh = yk / np.linalg.norm(yk)
        return float(np.linalg.norm(gv - (gv @ yh) * yh))

    reports = {}
    if excess[k] <= 0.0:
        reports["rayleigh_parallel"] = HypothesisReport("rayleigh_parallel", HOLDS, margin=float(-excess[k]))
    else:
        reports["rayleigh_parallel"] = HypothesisReport(
            "rayleigh_parallel", VIOLATED, witness={"y": yk.tolist()}, margin=float(-excess[k]), probe=par_probe)

    diff = np.linalg.norm(gy - np.asarray(potential.grad(phi_apply(phi, y)), dtype=float), axis=-1)
    L = float(diff.max())
    shells = np.unique(np.round(np.log10(r[nz]), 6))
    shell_max = np.array([diff[nz][np.isclose(np.log10(r[nz]), s)].max() for s in shells])
    top = shells >= shells[-1] - 1.0
    growing = bool(shell_max[top][-1] > 2.0 * shell_max[top][0] + 1e-9 and
                   np.all(np.diff(shell_max[top]) >= 0.0))
    details = {"L": L, "growth_trend": growing}
    if not growing:
        reports["rayleigh_bounded"] = HypothesisReport("rayleigh_bounded", HOLDS, margin=-L, details=details)
    else:
        kk = int(np.argmax(diff))
        reports["rayleigh_bounded"] = HypothesisReport("rayleigh_bounded", VIOLATED,
                                                       witness={"y": y[kk].tolist()}, margin=-L, details=details)
    return reports
