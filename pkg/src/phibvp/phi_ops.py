"""phi-Laplacian operators of radial form phi(xi) = A(xi) xi.

All evaluations are vectorized over leading axes: an input of shape
``(..., n)`` produces an output of the same shape.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import EvaluationError, InputError, InversionError
from .reports import HOLDS, INCONCLUSIVE, VIOLATED, HypothesisReport
from .sampling import unit_directions

P_LAPLACIAN = "p_laplacian"
RADIAL = "radial"
GENERAL = "general"

CLOSED_FORM = "closed_form"
RADIAL_ROOTFIND = "radial_scalar_rootfind"

ROUNDTRIP_TOL = 1e-10
_BRACKET_DOUBLINGS = 200


@dataclass(frozen=True)
class PhiMap:
    """The homeomorphism phi of R^n together with the data needed to invert it.

    Use the constructors :meth:`p_laplacian`, :meth:`radial` and
    :meth:`general` rather than the raw dataclass.
    """

    dimension: int
    kind: str
    p: Optional[float] = None
    A: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    forward: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    inverse: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    inverse_strategy: str = CLOSED_FORM
    tolerance: float = 1e-13

    @classmethod
    def p_laplacian(cls, n: int, p: float) -> "PhiMap":
        p = float(p)
        if not p > 1.0:
            raise InputError(f"p-Laplacian needs p > 1, got p={p}")
        return cls(dimension=_check_dim(n), kind=P_LAPLACIAN, p=p)

    @classmethod
    def identity(cls, n: int) -> "PhiMap":
        return cls.p_laplacian(n, 2.0)

    @classmethod
    def radial(cls, n: int, A: Callable[[np.ndarray], np.ndarray], tolerance: float = 1e-13) -> "PhiMap":
        """phi(xi) = A(xi) xi with A > 0 off the origin; inverted by scalar root finding."""
        return cls(dimension=_check_dim(n), kind=RADIAL, A=A,
                   inverse_strategy=RADIAL_ROOTFIND, tolerance=float(tolerance))

    @classmethod
    def general(cls, n: int, forward: Callable[[np.ndarray], np.ndarray],
                inverse: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> "PhiMap":
        return cls(dimension=_check_dim(n), kind=GENERAL, forward=forward, inverse=inverse)

    @property
    def conjugate_exponent(self) -> float:
        if self.kind != P_LAPLACIAN:
            raise InputError("conjugate exponent only defined for the p-Laplacian")
        return self.p / (self.p - 1.0)

    def amplitude(self, xi) -> np.ndarray:
        """A(xi) for radial kinds, evaluated where xi != 0 (NaN at the origin)."""
        xi = np.asarray(xi, dtype=float)
        if self.kind == P_LAPLACIAN:
            r = np.linalg.norm(xi, axis=-1)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(r > 0, r ** (self.p - 2.0), np.nan)
            return out
        if self.kind == RADIAL:
            r = np.linalg.norm(xi, axis=-1)
            a = np.asarray(self.A(xi), dtype=float)
            return np.where(r > 0, a, np.nan)
        raise InputError("amplitude A(xi) is only defined for radial kinds")

    def __call__(self, xi):
        return phi_apply(self, xi)

    def inv(self, eta):
        return phi_invert(self, eta)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "dimension": self.dimension}
        if self.p is not None:
            out["p"] = self.p
        if self.kind == RADIAL:
            out["tolerance"] = self.tolerance
        return out


def _check_dim(n) -> int:
    n = int(n)
    if n < 1:
        raise InputError(f"dimension must be positive, got {n}")
    return n


def _power_map(xi: np.ndarray, exponent: float) -> np.ndarray:
    # ||xi||^(exponent-2) xi, with the removable singularity at 0 set to 0
    r = np.linalg.norm(xi, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(r > 0, r ** (exponent - 2.0), 0.0)
    return scale * xi


def phi_apply(phi: PhiMap, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(xi)):
        raise EvaluationError("phi evaluated at a non-finite argument")
    if phi.kind == P_LAPLACIAN:
        out = xi.copy() if phi.p == 2.0 else _power_map(xi, phi.p)
    elif phi.kind == RADIAL:
        r = np.linalg.norm(xi, axis=-1, keepdims=True)
        safe = np.where(r > 0, xi, 1.0)
        a = np.asarray(phi.A(safe), dtype=float)[..., None]
        out = np.where(r > 0, a * xi, 0.0)
    else:
        out = np.asarray(phi.forward(xi), dtype=float)
    if not np.all(np.isfinite(out)):
        raise EvaluationError("phi produced a non-finite value")
    return out


def phi_invert(phi: PhiMap, eta) -> np.ndarray:
    eta = np.asarray(eta, dtype=float)
    if not np.all(np.isfinite(eta)):
        raise EvaluationError("phi^{-1} evaluated at a non-finite argument")
    if phi.kind == P_LAPLACIAN:
        if phi.p == 2.0:
            return eta.copy()
        return _power_map(eta, phi.conjugate_exponent)
    if phi.kind == RADIAL:
        return _radial_invert(phi, eta)
    if phi.inverse is None:
        raise InversionError("general phi given without an inverse")
    return np.asarray(phi.inverse(eta), dtype=float)


def _radial_invert(phi: PhiMap, eta: np.ndarray) -> np.ndarray:
    flat = eta.reshape(-1, eta.shape[-1])
    out = np.zeros_like(flat)
    for k, e in enumerate(flat):
        s = float(np.linalg.norm(e))
        if s == 0.0:
            continue
        d = e / s
        out[k] = _radial_scalar_root(phi, d, s) * d
    return out.reshape(eta.shape)


def _radial_scalar_root(phi: PhiMap, d: np.ndarray, s: float) -> float:
    """Solve r A(r d) = s for r > 0 by bracket doubling followed by Brent's method."""

    def g(r):
        return r * float(phi.A(r * d)) - s

    lo, hi = 0.0, 1.0
    for _ in range(_BRACKET_DOUBLINGS):
        if g(hi) >= 0.0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise InversionError(f"no root bracket for |eta|={s:g}; phi is not onto as given")
    if g(hi) == 0.0:
        return hi
    if lo == 0.0:
        # shrink towards 0 so the lower end has a well-defined negative value
        lo = hi
        for _ in range(_BRACKET_DOUBLINGS):
            lo *= 0.5
            if g(lo) < 0.0:
                break
        else:
            return lo
    return brentq(g, lo, hi, xtol=phi.tolerance * 1e-3, rtol=4 * np.finfo(float).eps, maxiter=500)


def roundtrip_error(phi: PhiMap, xi) -> np.ndarray:
    """||phi^{-1}(phi(xi)) - xi|| / (1 + ||xi||), per sample."""
    xi = np.asarray(xi, dtype=float)
    back = phi_invert(phi, phi_apply(phi, xi))
    return np.linalg.norm(back - xi, axis=-1) / (1.0 + np.linalg.norm(xi, axis=-1))


def check_h_phi(phi: PhiMap, eta: float, sample_radii, directions: int = 64, seed: int = 0):
    """Coercivity check <phi(xi), xi> >= eta ||xi|| - M_eta at sampled xi.

    Returns ``(M_eta_estimate, report)``. The verdict is ``holds_at_samples``
    when the deficit ``eta||xi|| - <phi(xi),xi>`` is non-increasing over the
    largest sampled decade; this is a trend heuristic, not a proof.
    """
    radii = np.sort(np.asarray(sample_radii, dtype=float))
    if radii.size < 2 or radii[0] <= 0 or radii[-1] / radii[0] < 1e3:
        raise InputError("sample radii must be positive and span at least three decades")
    dirs = unit_directions(phi.dimension, directions, seed=seed)
    xi = radii[:, None, None] * dirs[None, :, :]
    pairing = np.sum(phi_apply(phi, xi) * xi, axis=-1)
    deficit = eta * radii[:, None] - pairing

    k, j = np.unravel_index(np.argmin(pairing), pairing.shape)
    if pairing[k, j] <= 0.0:
        witness = {"xi": xi[k, j].tolist()}
        rep = HypothesisReport("H_phi", VIOLATED, witness=witness, margin=float(pairing[k, j]),
                               details={"reason": "<phi(xi),xi> <= 0"})
        return float(max(0.0, deficit.max())), rep

    m_eta = float(max(0.0, deficit.max()))
    worst = deficit.max(axis=1)
    top = radii >= radii[-1] / 10.0
    tail = worst[top]
    scale = 1e-12 * max(1.0, np.abs(tail).max())
    trend_ok = bool(np.all(np.diff(tail) <= scale))
    verdict = HOLDS if trend_ok else INCONCLUSIVE
    rep = HypothesisReport("H_phi", verdict, margin=float(pairing.min()),
                           details={"eta": float(eta), "M_eta": m_eta,
                                    "largest_decade_deficit": [float(v) for v in tail],
                                    "heuristic": "coercivity trend on the largest sampled decade"})
    return m_eta, rep


def p_laplacian_m_eta(p: float, eta: float) -> float:
    """Exact sup_r (eta r - r^p) for the p-Laplacian, attained at r = (eta/p)^{1/(p-1)}."""
    r = (eta / p) ** (1.0 / (p - 1.0))
    return float(max(0.0, eta * r - r ** p))


def phi_from_config(cfg: dict, n: int) -> PhiMap:
    """Build a PhiMap from the ``phi`` block of a run configuration."""
    kind = cfg.get("kind", P_LAPLACIAN)
    if kind in (P_LAPLACIAN, "identity"):
        return PhiMap.p_laplacian(n, cfg.get("p", 2.0))
    if kind == RADIAL:
        # a(r) = (1 + r^2)^{(p-2)/2}: a smooth radial map with p-growth
        p = float(cfg.get("p", 2.0))
        tol = float(cfg.get("tolerance", 1e-13))
        return PhiMap.radial(n, lambda x: (1.0 + np.sum(x * x, axis=-1)) ** ((p - 2.0) / 2.0), tolerance=tol)
    raise InputError(f"unknown phi kind {kind!r}")
