"""Convexity of sublevel sets: tangent-Hessian test, chord oracle, connectedness, charts.

The tangent-Hessian test is local and cheap; the chord oracle is global and
brute force. On connected sets with a regular boundary the two are expected
to agree, which is what the test-suite exercises.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .bounding import (BoundingFn, check_condition_C, check_grad_nonvanishing,
                       sample_boundary, tangent_basis)
from .errors import InputError, SamplingError

CONVEX = "convex_at_samples"
NONCONVEX = "nonconvex"
INCONCLUSIVE = "inconclusive"
INAPPLICABLE = "inapplicable"
CONNECTED = "connected_at_samples"
DISCONNECTED = "disconnected"

MIN_ACCEPTANCE = 1e-4


@dataclass
class Verdict:
    verdict: str
    witness: Optional[dict] = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "witness": self.witness, "details": self.details}


def convexity_via_condition_C(V: BoundingFn, P0, n_dirs: int = 256, tol: float = 1e-9,
                              root_tol: float = 1e-10, seed: int = 0) -> Verdict:
    """Check the tangent Hessian at sampled boundary points of [V <= c]."""
    sample = sample_boundary(V, P0, n_dirs, root_tol, seed=seed)
    reg = check_grad_nonvanishing(V, sample.points)
    if not reg.holds:
        return Verdict(INAPPLICABLE, reg.witness, {"precondition": reg.to_dict()})
    eigs = np.array([check_condition_C(V, u, tol)[0] for u in sample.points])
    k = int(np.argmin(eigs))
    details = {"boundary_points": len(sample), "skipped_rays": sample.skipped,
               "min_tangent_eig": float(eigs[k])}
    if eigs[k] >= -tol:
        return Verdict(CONVEX, None, details)
    return Verdict(NONCONVEX, {"u": sample.points[k].tolist()}, details)


class RejectionSampler:
    """Uniform points of [V <= c] by rejection from an axis-aligned box."""

    def __init__(self, V: BoundingFn, lo, hi, seed: int = 0, batch: int = 4096):
        self.V = V
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if self.lo.shape != (V.n,) or np.any(self.hi <= self.lo):
            raise InputError("sampler box must be a nondegenerate box in R^n")
        self.rng = np.random.default_rng(seed)
        self.batch = batch
        self.proposed = 0
        self.accepted = 0

    def draw(self, count: int) -> np.ndarray:
        out = []
        got = 0
        while got < count:
            x = self.rng.uniform(self.lo, self.hi, size=(self.batch, self.V.n))
            keep = x[self.V.excess(x) <= 0.0]
            self.proposed += self.batch
            self.accepted += len(keep)
            if self.proposed >= 1e5 and self.accepted / self.proposed < MIN_ACCEPTANCE:
                raise SamplingError(
                    f"acceptance rate {self.accepted / self.proposed:.2e} below {MIN_ACCEPTANCE:g}")
            out.append(keep)
            got += len(keep)
        return np.concatenate(out)[:count]


def bounding_box(V: BoundingFn, P0, n_dirs: int = 256, pad: float = 0.05):
    """A box enclosing the boundary points seen from P0, padded by a relative margin."""
    pts = sample_boundary(V, P0, n_dirs).points
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    w = np.maximum(hi - lo, 1e-12)
    return lo - pad * w, hi + pad * w


def convexity_oracle(V: BoundingFn, sampler: RejectionSampler, n_pairs: int = 10_000,
                     chord_points: int = 9, oracle_tol: float = 1e-12) -> Verdict:
    """Brute force: V(theta a + (1-theta) b) <= c along random chords of [V <= c]."""
    a = sampler.draw(n_pairs)
    b = sampler.draw(n_pairs)
    theta = np.linspace(0.0, 1.0, chord_points + 2)[1:-1]
    pts = theta[None, :, None] * a[:, None, :] + (1.0 - theta[None, :, None]) * b[:, None, :]
    ex = V.excess(pts)
    k, j = np.unravel_index(np.argmax(ex), ex.shape)
    details = {"pairs": int(n_pairs), "chord_points": int(chord_points), "max_excess": float(ex[k, j])}
    if ex[k, j] <= oracle_tol:
        return Verdict(CONVEX, None, details)
    return Verdict(NONCONVEX, {"a": a[k].tolist(), "b": b[k].tolist(), "theta": float(theta[j]),
                               "point": pts[k, j].tolist()}, details)


def connectedness_probe(V: BoundingFn, n_points: int, segment_checks: int,
                        sampler: RejectionSampler, min_component: int = 3) -> Verdict:
    """Graph on sampled points of D, edges where the joining segment stays in D.

    A component with fewer than ``min_component`` points means the sample is
    too sparse to say anything, and the verdict is inconclusive.
    """
    x = sampler.draw(n_points)
    s = np.linspace(0.0, 1.0, segment_checks)
    i, j = np.triu_indices(n_points, k=1)
    ok = np.ones(len(i), dtype=bool)
    for sk in s[1:-1]:
        ok &= V.excess((1.0 - sk) * x[i] + sk * x[j]) <= 0.0
    adj = csr_matrix((np.ones(ok.sum()), (i[ok], j[ok])), shape=(n_points, n_points))
    ncomp, labels = connected_components(adj, directed=False)
    sizes = np.bincount(labels)
    details = {"points": int(n_points), "components": int(ncomp), "sizes": sorted(sizes.tolist(), reverse=True)}
    if sizes.min() < min_component:
        return Verdict(INCONCLUSIVE, None, details)
    if ncomp == 1:
        return Verdict(CONNECTED, None, details)
    reps = [x[labels == c][0].tolist() for c in range(ncomp)]
    return Verdict(DISCONNECTED, {"representatives": reps}, details)


@dataclass
class ChartPoint:
    beta: float
    theta_fd: Optional[float]
    theta_formula: Optional[float]
    out_of_chart: bool = False


def _theta(V: BoundingFn, u0, w, v, beta: float, rho_max: float) -> Optional[float]:
    def g(a):
        return float(V.excess(u0 + a * w + beta * v))

    rho = 1e-8 + beta * beta
    while rho <= rho_max:
        lo, hi = g(-rho), g(rho)
        if lo == 0.0:
            return -rho
        if hi == 0.0:
            return rho
        if lo < 0.0 < hi:
            return brentq(g, -rho, rho, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
        rho *= 2.0
    return None


def implicit_graph_curvature(V: BoundingFn, u0, v, beta_grid: Sequence[float], fd_step: float = 1e-4,
                             rho_max: float = 1.0, max_shrinks: int = 8) -> list:
    """Second derivative of the level-set graph alpha = theta(beta) near u0.

    The level set near u0 is written as u0 + theta(beta) w + beta v with
    w = V'(u0)/|V'(u0)|. Returns one :class:`ChartPoint` per beta with a
    finite-difference value and the value implied by differentiating
    V(u0 + theta w + beta v) = c twice. If some root-solve fails, the grid
    is halved towards 0 and retried.
    """
    u0 = np.asarray(u0, dtype=float)
    v = np.asarray(v, dtype=float)
    g0 = V.gradient(u0)
    ng = np.linalg.norm(g0)
    if not ng > 0.0:
        raise InputError("V'(u0) vanishes")
    w = g0 / ng
    if abs(v @ w) > 1e-10 * np.linalg.norm(v):
        raise InputError("v must be tangent to the level set at u0")
    betas = np.asarray(beta_grid, dtype=float)
    h = fd_step
    for _ in range(max_shrinks + 1):
        pts = []
        for b in betas:
            th = [_theta(V, u0, w, v, b + s * h, rho_max) for s in (-1, 0, 1)]
            if any(x is None for x in th):
                pts.append(ChartPoint(float(b), None, None, True))
                continue
            fd = (th[0] - 2.0 * th[1] + th[2]) / h ** 2
            dth = (th[2] - th[0]) / (2.0 * h)
            u = u0 + th[1] * w + b * v
            y = dth * w + v
            formula = -float(y @ V.hessian(u) @ y) / float(V.gradient(u) @ w)
            pts.append(ChartPoint(float(b), float(fd), formula))
        if not any(p.out_of_chart for p in pts):
            return pts
        betas = betas * 0.5
    return pts


def chart_sign_agreement(V: BoundingFn, boundary, tol: float = 1e-9) -> dict:
    """Compare sign(theta'' at beta=0) with the tangent-Hessian verdict per section.

    Uses every tangent basis vector as a section direction, so n-1 sections
    per boundary point.
    """
    agree = disagree = 0
    for u in np.atleast_2d(boundary):
        eig, _ = check_condition_C(V, u, tol)
        Q = tangent_basis(V.gradient(u))
        for k in range(Q.shape[1]):
            cp = implicit_graph_curvature(V, u, Q[:, k], [0.0])[0]
            if cp.out_of_chart:
                continue
            # theta'' <= 0 in every section only if the tangent Hessian is PSD;
            # a single section can be concave while another is not
            sec = -float(Q[:, k] @ V.hessian(u) @ Q[:, k])
            if (cp.theta_formula <= tol) == (sec <= tol):
                agree += 1
            else:
                disagree += 1
    return {"sections": agree + disagree, "agree": agree, "disagree": disagree}
