"""Brouwer degree evidence: exact in dimensions 1 and 2, homotopy certificates otherwise."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import AdmissibilityError, InputError

ADMISSIBILITY_TOL = 1e-8
SIGN_1D = "sign_1d"
WINDING_2D = "winding_2d"
BOUNDARY_HOMOTOPY = "boundary_homotopy"


@dataclass
class DegreeCertificate:
    method: str
    value: Union[int, str, None]
    boundary_samples: int
    min_field_norm: float
    witness: Optional[dict] = None
    details: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.value == "=1 certified" or self.value == 1

    def to_dict(self) -> dict:
        return {"method": self.method, "value": self.value, "boundary_samples": self.boundary_samples,
                "min_field_norm": self.min_field_norm, "witness": self.witness, "details": self.details}


def sign_degree_1d(F: Callable[[float], float], a: float, b: float) -> int:
    """Degree of a scalar map on (a, b) from the endpoint signs."""
    fa, fb = float(F(a)), float(F(b))
    if fa == 0.0 or fb == 0.0:
        raise AdmissibilityError(f"F vanishes at an endpoint (F(a)={fa:g}, F(b)={fb:g})")
    return int((np.sign(fb) - np.sign(fa)) // 2)


def _wrap(a):
    return (a + np.pi) % (2.0 * np.pi) - np.pi


def winding_number_2d(F: Callable[[np.ndarray], np.ndarray], boundary, refine_tol: float = np.pi / 2,
                      admissibility_tol: float = ADMISSIBILITY_TOL, max_depth: int = 40) -> int:
    """Winding number of F around 0 along a closed polyline (last vertex joins the first).

    Segments whose principal angle increment exceeds ``refine_tol`` are
    bisected until it does not, so a coarse polyline is safe as long as F is
    continuous and bounded away from zero.
    """
    P = np.asarray(boundary, dtype=float)
    if P.ndim != 2 or P.shape[1] != 2 or len(P) < 3:
        raise InputError("boundary must be a closed polyline of at least 3 points in R^2")
    vals = np.asarray(F(P), dtype=float)
    norms = np.linalg.norm(vals, axis=-1)
    if norms.min() < admissibility_tol:
        raise AdmissibilityError(f"|F| = {norms.min():.3e} on the boundary")
    total = 0.0
    m = len(P)
    for k in range(m):
        stack = [(P[k], P[(k + 1) % m], vals[k], vals[(k + 1) % m], 0)]
        while stack:
            a, b, fa, fb, depth = stack.pop()
            inc = _wrap(np.arctan2(fb[1], fb[0]) - np.arctan2(fa[1], fa[0]))
            if abs(inc) <= refine_tol:
                total += inc
                continue
            if depth >= max_depth:
                raise AdmissibilityError("angle increment did not resolve under refinement; F may vanish near the boundary")
            mid = 0.5 * (a + b)
            fm = np.asarray(F(mid[None]), dtype=float)[0]
            if np.linalg.norm(fm) < admissibility_tol:
                raise AdmissibilityError(f"|F| = {np.linalg.norm(fm):.3e} at {mid.tolist()}")
            stack.append((mid, b, fm, fb, depth + 1))
            stack.append((a, mid, fa, fm, depth + 1))
    w = total / (2.0 * np.pi)
    r = round(w)
    if abs(w - r) > 1e-3:
        raise AdmissibilityError(f"winding total {w:.6f} is not close to an integer")
    return int(r)


def degree_one_certificate(field_fn: Callable[[np.ndarray], np.ndarray], boundary, P0,
                           admissibility_tol: float = ADMISSIBILITY_TOL, n_lambda: int = 11) -> DegreeCertificate:
    """Certify degree 1 through the convex homotopy (1-l) field + l (Id - P0).

    Requires <field(u), u - P0> >= 0 and |field(u)| > tol at every sample, and
    additionally checks the homotopy itself stays away from 0 at sampled l.
    """
    U = np.atleast_2d(np.asarray(boundary, dtype=float))
    if U.size == 0:
        raise InputError("empty boundary sample")
    D = U - np.asarray(P0, dtype=float)
    if np.any(np.linalg.norm(D, axis=-1) == 0.0):
        raise InputError("boundary sample contains P0")
    Fv = np.asarray(field_fn(U), dtype=float)
    norms = np.linalg.norm(Fv, axis=-1)
    inner = np.einsum("ki,ki->k", Fv, D)
    lams = np.linspace(0.0, 1.0, n_lambda)
    hom = np.linalg.norm((1.0 - lams)[:, None, None] * Fv[None] + lams[:, None, None] * D[None], axis=-1)
    details = {"min_inner": float(inner.min()), "min_homotopy_norm": float(hom.min()),
               "lambda_samples": n_lambda}
    bad = (inner < 0.0) | (norms <= admissibility_tol) | (hom.min(axis=0) <= admissibility_tol)
    if bad.any():
        k = int(np.argmax(bad))
        details["failed_samples"] = int(bad.sum())
        return DegreeCertificate(BOUNDARY_HOMOTOPY, "not_certified", len(U), float(norms.min()),
                                 {"u": U[k].tolist(), "inner": float(inner[k])}, details)
    return DegreeCertificate(BOUNDARY_HOMOTOPY, "=1 certified", len(U), float(norms.min()), None, details)


def average_field(F: Callable, s, T: float = 1.0, quad_N: int = 64, lam: Optional[float] = None) -> np.ndarray:
    """(1/T) * integral over one period of F(t, s, 0), by the periodic rectangle rule.

    ``F`` is called as ``F(t, x, y)`` or, when ``lam`` is given, ``F(t, x, y, lam)``.
    ``s`` may carry leading batch axes.
    """
    if quad_N < 2:
        raise InputError("quad_N must be at least 2")
    s = np.asarray(s, dtype=float)
    t = np.arange(quad_N) * (T / quad_N)
    shape = (quad_N,) + s.shape
    x = np.broadcast_to(s, shape)
    tt = np.broadcast_to(t.reshape((quad_N,) + (1,) * (s.ndim - 1)), shape[:-1])
    y = np.zeros(shape)
    vals = F(tt, x, y) if lam is None else F(tt, x, y, lam)
    return np.asarray(vals, dtype=float).mean(axis=0)
