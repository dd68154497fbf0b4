"""A-priori bounds for periodic solutions and growth-condition checks.

Includes the projection-plus-L^p bound on the sup norm, the Nagumo-Hartman
growth conditions, the explicit blow-up example with bounded solutions, and
the constants used by the Lienard and Hartman recipes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, InputError
from .phi_ops import PhiMap, phi_apply, phi_invert
from .reports import HOLDS, INAPPLICABLE, VIOLATED, HypothesisReport
from .sampling import unit_directions

DECADE_RATIO = 0.5


def _exponent(p: float) -> float:
    if p == 1.0:
        return 0.0
    if math.isinf(p):
        return 1.0
    return (p - 1.0) / p


def sup_norm_bound(M0: float, M1: float, p: float, T: float) -> float:
    """K = M0 + T^((p-1)/p) M1, the exponent read as 0 at p=1 and 1 at p=inf."""
    if M0 < 0 or not M1 > 0 or not T > 0 or not (p >= 1.0):
        raise InputError("need M0 >= 0, M1 > 0, T > 0, p in [1, inf]")
    return float(M0 + T ** _exponent(float(p)) * M1)


lemma21_bound = sup_norm_bound


@dataclass(frozen=True)
class AprioriBound:
    M0: float
    M1: float
    p: float
    T: float

    @property
    def K(self) -> float:
        return sup_norm_bound(self.M0, self.M1, self.p, self.T)


def discrete_lp_norm(values, T: float, p: float) -> float:
    """L^p norm of nodal vector values on a uniform periodic mesh of [0, T)."""
    v = np.linalg.norm(np.asarray(values, dtype=float).reshape(len(values), -1), axis=-1)
    h = T / len(v)
    if math.isinf(p):
        return float(v.max())
    return float((h * np.sum(v ** p)) ** (1.0 / p))


def _unpack(z):
    if hasattr(z, "x") and hasattr(z, "dx"):
        return np.asarray(z.x, dtype=float), np.asarray(z.dx, dtype=float)
    x, dx = z
    return np.asarray(x, dtype=float), np.asarray(dx, dtype=float)


def _min_abs_projection(x: np.ndarray, omega: np.ndarray) -> float:
    """min over t of |<z(t), omega>| for the piecewise-linear periodic interpolant."""
    s = x @ omega
    nxt = np.roll(s, -1)
    if np.any(s * nxt <= 0.0):
        return 0.0
    return float(np.abs(s).min())


def verify_family_bound(family: Sequence, M0: float, p: float, M1: float, T: float,
                        omega_samples: int = 64, seed: int = 0) -> HypothesisReport:
    """Check both hypotheses of the sup-norm bound on each trajectory, then the bound.

    Trajectories are objects with ``x`` and ``dx`` arrays (N, n) on the mesh
    t_j = jT/N, or ``(x, dx)`` pairs. The direction set is the sampled sphere
    plus, per trajectory, the direction of its largest node.
    """
    K = sup_norm_bound(M0, M1, p, T)
    worst = np.inf
    for idx, z in enumerate(family):
        x, dx = _unpack(z)
        x = x.reshape(len(x), -1)
        n = x.shape[1]
        norms = np.linalg.norm(x, axis=-1)
        dirs = unit_directions(n, omega_samples, seed=seed)
        j = int(np.argmax(norms))
        if norms[j] > 0:
            dirs = np.vstack([dirs, x[j] / norms[j]])
        for om in dirs:
            m = _min_abs_projection(x, om)
            if m > M0:
                return HypothesisReport("sup_bound", INAPPLICABLE, witness={"trajectory": idx, "omega": om.tolist()},
                                        margin=M0 - m, details={"failed": "projection vanishing bound"})
        lp = discrete_lp_norm(dx, T, p)
        if lp > M1:
            return HypothesisReport("sup_bound", INAPPLICABLE, witness={"trajectory": idx}, margin=M1 - lp,
                                    details={"failed": "derivative L^p bound", "norm": lp})
        slack = K - float(norms.max())
        if slack < 0:
            return HypothesisReport("sup_bound", VIOLATED, witness={"trajectory": idx, "t_index": j},
                                    margin=slack, details={"K": K})
        worst = min(worst, slack)
    return HypothesisReport("sup_bound", HOLDS, margin=float(worst), details={"K": K, "trajectories": len(family)})


# ---------------------------------------------------------------------------
# growth conditions


def decade_partials(integrand: Callable[[float], float], lower: float, upper: float) -> tuple:
    """Partial integrals from ``lower`` to lower*10^k and the per-decade contributions."""
    if not upper > lower > 0:
        raise InputError("need 0 < lower < upper")
    edges = lower * 10.0 ** np.arange(0, int(math.ceil(math.log10(upper / lower))) + 1)
    contrib = []
    for a, b in zip(edges[:-1], edges[1:]):
        # integrate in log variable: ds = s d(log s)
        val, _ = quad(lambda u: integrand(math.exp(u)) * math.exp(u), math.log(a), math.log(b),
                      epsabs=0.0, epsrel=1e-10, limit=200)
        contrib.append(val)
    contrib = np.array(contrib)
    return edges, np.concatenate([[0.0], np.cumsum(contrib)]), contrib


def decade_ratio(contrib: np.ndarray) -> float:
    if len(contrib) < 2 or contrib[-2] == 0.0:
        return 0.0 if (len(contrib) and contrib[-1] == 0.0) else math.inf
    return float(contrib[-1] / contrib[-2])


def check_nh1(f, eta: Callable[[np.ndarray], np.ndarray], R: float, t_samples, x_samples, y_samples,
              xi_max: float = 1e8) -> HypothesisReport:
    """|f(t,x,y)| <= eta(|y|) at samples, and divergence of the integral of s/eta(s).

    ``f`` is called as ``f(t, x, y)``. Divergence is judged by the ratio of the
    last two decade contributions (>= 0.5 counts as divergent).
    """
    t = np.asarray(t_samples, dtype=float)
    X = np.atleast_2d(np.asarray(x_samples, dtype=float))
    Y = np.atleast_2d(np.asarray(y_samples, dtype=float))
    if np.any(np.linalg.norm(X, axis=-1) > R * (1 + 1e-12)):
        raise InputError("x samples must lie in the closed ball of radius R")
    T_, X_, Y_ = np.meshgrid(np.arange(len(t)), np.arange(len(X)), np.arange(len(Y)), indexing="ij")
    tt, xx, yy = t[T_.ravel()], X[X_.ravel()], Y[Y_.ravel()]
    fn = np.linalg.norm(np.asarray(f(tt, xx, yy), dtype=float), axis=-1)
    en = np.asarray(eta(np.linalg.norm(yy, axis=-1)), dtype=float)
    if np.any(en <= 0):
        raise InputError("eta must be positive on the sampled range")
    slack = en - fn
    k = int(np.argmin(slack))
    edges, partials, contrib = decade_partials(lambda s: s / float(eta(np.array(s))), 1.0, xi_max)
    ratio = decade_ratio(contrib)
    divergent = ratio >= DECADE_RATIO
    details = {"partials": partials.tolist(), "limits": edges.tolist(), "decade_ratio": ratio,
               "divergent": bool(divergent)}
    if slack[k] < 0:
        return HypothesisReport("NH1", VIOLATED, witness={"t": float(tt[k]), "x": xx[k].tolist(),
                                                         "y": yy[k].tolist()},
                                margin=float(slack[k]), details=details,
                                probe=lambda: float(eta(np.linalg.norm(yy[k])) -
                                                    np.linalg.norm(f(tt[k:k + 1], xx[k:k + 1], yy[k:k + 1])[0])))
    if not divergent:
        return HypothesisReport("NH1", VIOLATED, margin=float(slack[k]),
                                details=dict(details, reason="integral of s/eta(s) appears to converge"))
    return HypothesisReport("NH1", HOLDS, margin=float(slack[k]), details=details)


def check_nh2(f, alpha: float, beta: float, R: float, samples) -> HypothesisReport:
    """|f| <= 2 alpha (<x, f> + |y|^2) + beta on the product grid ``samples = (t, x, y)``.

    In dimension one the condition is not required and the report says so.
    """
    t, X, Y = (np.asarray(a, dtype=float) for a in samples)
    X, Y = np.atleast_2d(X), np.atleast_2d(Y)
    if X.shape[1] == 1:
        return HypothesisReport("NH2", INAPPLICABLE, details={"reason": "not required for n = 1"})
    if alpha < 0 or beta < 0:
        raise InputError("alpha and beta must be non-negative")
    T_, X_, Y_ = np.meshgrid(np.arange(len(t)), np.arange(len(X)), np.arange(len(Y)), indexing="ij")
    tt, xx, yy = t[T_.ravel()], X[X_.ravel()], Y[Y_.ravel()]
    fv = np.asarray(f(tt, xx, yy), dtype=float)
    rhs = 2.0 * alpha * (np.einsum("ki,ki->k", xx, fv) + np.sum(yy * yy, axis=-1)) + beta
    slack = rhs - np.linalg.norm(fv, axis=-1)
    k = int(np.argmin(slack))
    if slack[k] >= 0:
        return HypothesisReport("NH2", HOLDS, margin=float(slack[k]), details={"R": R})

    def probe():
        fv1 = np.asarray(f(tt[k:k + 1], xx[k:k + 1], yy[k:k + 1]))[0]
        return float(2 * alpha * (xx[k] @ fv1 + yy[k] @ yy[k]) + beta - np.linalg.norm(fv1))

    return HypothesisReport("NH2", VIOLATED, witness={"t": float(tt[k]), "x": xx[k].tolist(), "y": yy[k].tolist()},
                            margin=float(slack[k]), details={"R": R}, probe=probe)


# ---------------------------------------------------------------------------
# blow-up example


@dataclass(frozen=True)
class IntegrabilityVerdict:
    convergent: bool
    decade_ratio: float
    partials: tuple
    limits: tuple

    def to_dict(self) -> dict:
        return {"convergent": self.convergent, "decade_ratio": self.decade_ratio,
                "partials": list(self.partials), "limits": list(self.limits)}


def _scalar_phi_inv(phi: PhiMap, v: float) -> float:
    return float(phi_invert(phi, np.array([v]))[0])


def check_blowup_integrability(phi: PhiMap, gamma: float, xi_max: float = 1e12) -> IntegrabilityVerdict:
    """Heuristic convergence of the integral of phi^{-1}(xi) xi^{-(1+gamma)/gamma} on [1, inf)."""
    if not gamma > 0:
        raise InputError("gamma must be positive")
    if phi.dimension != 1:
        raise InputError("blow-up example is scalar")
    expo = (1.0 + gamma) / gamma
    edges, partials, contrib = decade_partials(lambda s: _scalar_phi_inv(phi, s) * s ** (-expo), 1.0, xi_max)
    ratio = decade_ratio(contrib)
    return IntegrabilityVerdict(bool(ratio < DECADE_RATIO), ratio, tuple(partials.tolist()), tuple(edges.tolist()))


@dataclass(frozen=True)
class BlowUpSpec:
    phi: PhiMap
    gamma: float
    tol: float = 1e-13

    def integrable(self) -> bool:
        return check_blowup_integrability(self.phi, self.gamma).convergent


def blowup_derivative(spec: BlowUpSpec, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t >= 1.0) or np.any(t < 0.0):
        raise DomainError("the blow-up solution lives on [0, 1)")
    forcing = (1.0 - t) ** (-spec.gamma)
    return phi_invert(spec.phi, forcing[..., None])[..., 0]


def _blowup_integral(spec: BlowUpSpec, t: float) -> float:
    # x(t) = int_{1-t}^{1} phi^{-1}(u^{-gamma}) du, split geometrically towards u -> 0
    a = 1.0 - t
    if a >= 1.0:
        return 0.0
    edges = [a]
    while edges[-1] * 10.0 < 1.0:
        edges.append(edges[-1] * 10.0)
    edges.append(1.0)

    def g(u):
        return _scalar_phi_inv(spec.phi, u ** (-spec.gamma))

    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = quad(g, lo, hi, epsabs=spec.tol * 1e-2, epsrel=spec.tol, limit=200)
        total += val
    return total


def blowup_solution(spec: BlowUpSpec, t):
    """(x(t), x'(t)) for the solution with x(0)=0 whose derivative blows up at t=1."""
    t_arr = np.asarray(t, dtype=float)
    dx = blowup_derivative(spec, t_arr)
    x = np.vectorize(lambda s: _blowup_integral(spec, float(s)), otypes=[float])(t_arr)
    if np.ndim(t) == 0:
        return float(x), float(dx)
    return x, dx


def blowup_forcing_residual(spec: BlowUpSpec, t, rel_step: float = 1e-6) -> np.ndarray:
    """Relative mismatch of (phi(x'))' against gamma phi(x')^((1+gamma)/gamma) by central differences."""
    t = np.asarray(t, dtype=float)
    h = rel_step * (1.0 - t)
    w = lambda s: phi_apply(spec.phi, blowup_derivative(spec, s)[..., None])[..., 0]  # noqa: E731
    lhs = (w(t + h) - w(t - h)) / (2.0 * h)
    rhs = spec.gamma * w(t) ** ((1.0 + spec.gamma) / spec.gamma)
    return np.abs(lhs - rhs) / np.abs(rhs)


# ---------------------------------------------------------------------------
# proof-formula constants


def nagumo_bounded_field(T: float, R2: float, phi: Optional[PhiMap] = None) -> dict:
    """Bounds when |(phi(x'))'| <= R2 on the closed bound set.

    ``K_phi = T R2`` bounds |phi(x')|; ``K`` bounds |x'| through phi^{-1} of a
    vector of that length (radial phi is direction-independent in norm).
    """
    K_phi = sup_norm_bound(0.0, R2, math.inf, T)
    K = K_phi
    if phi is not None:
        e = np.zeros(phi.dimension)
        e[0] = K_phi
        K = float(np.linalg.norm(phi_invert(phi, e)))
    return {"K_phi": K_phi, "K": K}


def lienard_k1(T: float, K0: float, M_eta: float, eta: float, P_inf: float = 0.0) -> float:
    """L^1 bound on x' from the energy identity: T (K0 + M_eta) / (eta - |P|_inf)."""
    if not eta > P_inf:
        raise InputError("eta must exceed the sup norm of the forcing antiderivative")
    return float(T * (K0 + M_eta) / (eta - P_inf))
