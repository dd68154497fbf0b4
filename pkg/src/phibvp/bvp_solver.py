"""Periodic phi-Laplacian boundary value problems by trapezoidal collocation.

The problem (phi(x'))' = F(t, x, x'; lam), x(0)=x(T), x'(0)=x'(T) is written
as the first-order system x' = phi^{-1}(y), y' = F(t, x, phi^{-1}(y); lam)
and discretized on the uniform mesh t_j = jT/N with periodic wrap. Unknowns
are packed as z = [x.ravel(), y.ravel()] with x and y of shape (N, n).
"""
from __future__ import annotations

import csv
import io
import math
import os
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve
from scipy.linalg.lapack import dgecon
from scipy.optimize import root

from .degree import average_field
from .errors import (ContinuationStalled, EvaluationError, InputError, InversionError,
                     NoConvergence)
from .phi_ops import PhiMap, phi_invert

CONVEX = "convex_combination"
SCALAR = "scalar_multiplication"

NEWTON_TOL = 1e-10
MIN_LAMBDA_STEP = 1e-3
RCOND_MIN = 1e-15
SQRT_EPS = math.sqrt(np.finfo(float).eps)


@dataclass(frozen=True)
class HomotopyFamily:
    """F(t, x, y, lam), vectorized, with y the velocity x'.

    ``f0(x, y)`` is the autonomous field at lam=0 for the convex style;
    ``F1`` is the lam=1 field for the scalar style, where F = lam * F1.
    """

    n: int
    T: float
    F: Callable
    f0: Optional[Callable] = None
    style: str = CONVEX
    F1: Optional[Callable] = None
    name: str = "family"

    @classmethod
    def convex_combination(cls, n, T, f, f0, name="family"):
        """F = lam f(t,x,y) + (1-lam) f0(x,y)."""
        def F(t, x, y, lam):
            return lam * np.asarray(f(t, x, y)) + (1.0 - lam) * np.asarray(f0(x, y))
        return cls(n=n, T=T, F=F, f0=f0, style=CONVEX, name=name)

    @classmethod
    def scalar_multiplication(cls, n, T, F1, name="family"):
        def F(t, x, y, lam):
            return lam * np.asarray(F1(t, x, y))
        return cls(n=n, T=T, F=F, style=SCALAR, F1=F1, name=name)

    def target(self, t, x, y):
        return self.F(t, x, y, 1.0)

    def evaluate(self, t, x, y, lam) -> np.ndarray:
        out = np.asarray(self.F(t, x, y, lam), dtype=float)
        if out.shape != np.shape(x):
            out = np.broadcast_to(out, np.shape(x)).copy()
        return out


@dataclass
class DiscreteSolution:
    N: int
    T: float
    x: np.ndarray
    y: np.ndarray
    lam: float
    residual_norm: float
    phi: PhiMap
    iterations: int = 0

    @property
    def h(self) -> float:
        return self.T / self.N

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.N) * self.h

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def dx(self) -> np.ndarray:
        return phi_invert(self.phi, self.y)

    def state(self) -> np.ndarray:
        return pack(self.x, self.y)


def pack(x, y) -> np.ndarray:
    return np.concatenate([np.asarray(x, dtype=float).ravel(), np.asarray(y, dtype=float).ravel()])


def unpack(z: np.ndarray, N: int, n: int):
    return z[: N * n].reshape(N, n), z[N * n:].reshape(N, n)


def assemble_residual(problem: HomotopyFamily, phi: PhiMap, x, y, lam: float) -> np.ndarray:
    """Trapezoidal residual with indices mod N, packed like the state."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise EvaluationError("non-finite state")
    N = x.shape[0]
    h = problem.T / N
    t = np.arange(N) * h
    v = phi_invert(phi, y)
    Fv = problem.evaluate(t, x, v, lam)
    if not np.all(np.isfinite(Fv)):
        raise EvaluationError("field returned non-finite values")
    R1 = np.roll(x, -1, axis=0) - x - 0.5 * h * (v + np.roll(v, -1, axis=0))
    R2 = np.roll(y, -1, axis=0) - y - 0.5 * h * (Fv + np.roll(Fv, -1, axis=0))
    return pack(R1, R2)


def _node_colors(N: int) -> np.ndarray:
    # residual row j couples nodes j and j+1 only, so non-adjacent nodes may share a color
    colors = np.arange(N) % 2
    if N % 2 == 1 and N > 1:
        colors[-1] = 2
    return colors


def fd_jacobian(residual: Callable[[np.ndarray], np.ndarray], z: np.ndarray, r0: np.ndarray,
                N: int, n: int, mode: str = "colored") -> np.ndarray:
    """Forward-difference Jacobian with steps sqrt(eps)(1 + |z_k|).

    ``mode="colored"`` perturbs many columns per residual evaluation using the
    two-node coupling of the scheme; ``mode="dense"`` does one column at a time.
    """
    m = z.size
    J = np.zeros((m, m))
    steps = SQRT_EPS * (1.0 + np.abs(z))
    if mode == "dense":
        for k in range(m):
            zp = z.copy()
            zp[k] += steps[k]
            J[:, k] = (residual(zp) - r0) / (zp[k] - z[k])
        return J
    if mode != "colored":
        raise InputError(f"unknown Jacobian mode {mode!r}")
    colors = _node_colors(N)
    nodes = np.arange(N)
    # rows touched by node m: residual blocks j=m-1 and j=m, both R1 and R2
    for c in np.unique(colors):
        members = nodes[colors == c]
        for block in (0, 1):          # 0: x unknowns, 1: y unknowns
            for i in range(n):
                cols = block * N * n + members * n + i
                zp = z.copy()
                zp[cols] += steps[cols]
                dz = zp[cols] - z[cols]
                d = residual(zp) - r0
                for mem, col, s in zip(members, cols, dz):
                    for j in ((mem - 1) % N, mem):
                        for half in (0, 1):
                            rows = half * N * n + j * n + np.arange(n)
                            J[rows, col] = d[rows] / s
    return J


def newton_solve(problem: HomotopyFamily, phi: PhiMap, initial, lam: float, newton_tol: float = NEWTON_TOL,
                 max_iter: int = 50, damping: int = 30, jacobian: str = "colored") -> DiscreteSolution:
    """Damped Newton on the collocation residual starting from ``initial=(x, y)``."""
    x0, y0 = (np.array(a, dtype=float) for a in initial)
    if x0.ndim == 1:
        x0, y0 = x0[:, None], y0[:, None]
    N, n = x0.shape
    if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(y0))):
        raise InputError("initial state must be finite")

    def residual(z):
        x, y = unpack(z, N, n)
        return assemble_residual(problem, phi, x, y, lam)

    z = pack(x0, y0)
    r = residual(z)
    nr = float(np.abs(r).max())
    rcond = math.nan
    for it in range(max_iter + 1):
        if nr <= newton_tol:
            x, y = unpack(z, N, n)
            return DiscreteSolution(N, problem.T, x.copy(), y.copy(), float(lam), nr, phi, it)
        if it == max_iter:
            break
        J = fd_jacobian(residual, z, r, N, n, jacobian)
        anorm = float(np.abs(J).sum(axis=0).max())
        with warnings.catch_warnings():
            # exact singularity is reported through rcond below
            warnings.simplefilter("ignore", LinAlgWarning)
            lu, piv = lu_factor(J, check_finite=False)
        rcond = float(dgecon(lu, anorm, norm="1")[0]) if anorm > 0 else 0.0
        if not rcond > RCOND_MIN or not np.all(np.isfinite(lu)):
            raise NoConvergence(f"Jacobian numerically singular at lambda={lam:g}", nr, rcond, it)
        dz = lu_solve((lu, piv), -r, check_finite=False)
        l2 = float(np.linalg.norm(r))
        step = 1.0
        for _ in range(damping + 1):
            zn = z + step * dz
            try:
                rn = residual(zn)
            except (EvaluationError, InversionError, FloatingPointError):
                step *= 0.5
                continue
            if np.linalg.norm(rn) < l2 or float(np.abs(rn).max()) <= newton_tol:
                break
            step *= 0.5
        else:
            raise NoConvergence(f"line search failed at lambda={lam:g}", nr, rcond, it)
        z, r = zn, rn
        nr = float(np.abs(r).max())
    raise NoConvergence(f"no convergence in {max_iter} iterations at lambda={lam:g}", nr, rcond, max_iter)


def constant_state(N: int, s, phi: PhiMap):
    s = np.asarray(s, dtype=float).ravel()
    return np.tile(s, (N, 1)), np.zeros((N, s.size))


def find_equilibrium(problem: HomotopyFamily, guess=None, tol: float = 1e-13, quad_N: int = 64) -> np.ndarray:
    """Root of the lam=0 autonomous field (convex style) or of the averaged F1 (scalar style)."""
    n = problem.n
    s0 = np.zeros(n) if guess is None else np.asarray(guess, dtype=float).ravel()
    if problem.style == SCALAR:
        def g(s):
            return average_field(problem.F1, s, problem.T, quad_N)
    else:
        def g(s):
            return np.asarray(problem.evaluate(np.zeros(1), s[None], np.zeros((1, n)), 0.0))[0]
    sol = root(g, s0, method="hybr", tol=tol)
    if not sol.success or np.abs(g(sol.x)).max() > 1e-9:
        raise NoConvergence(f"no equilibrium of the lambda=0 field near {s0.tolist()}",
                            float(np.abs(g(sol.x)).max()), math.nan, int(sol.nfev))
    return sol.x


@dataclass
class ContinuationResult:
    solution: DiscreteSolution
    trace: List[DiscreteSolution]


def continuation_solve(problem: HomotopyFamily, phi: PhiMap, lambda_schedule: Optional[Sequence[float]] = None,
                       N: int = 128, initial=None, newton_tol: float = NEWTON_TOL,
                       min_step: float = MIN_LAMBDA_STEP, max_iter: int = 50, damping: int = 30,
                       equilibrium_guess=None, jacobian: str = "colored") -> ContinuationResult:
    """March lam along the schedule reusing each solution as the next initial guess.

    A failed step is halved until it succeeds or drops below ``min_step``.
    Without ``initial`` the run starts from the constant state at the
    equilibrium of the lam=0 problem.
    """
    sched = np.linspace(0.0, 1.0, 11) if lambda_schedule is None else np.asarray(lambda_schedule, dtype=float)
    if sched.ndim != 1 or len(sched) == 0 or np.any(np.diff(sched) <= 0) or sched[0] < 0 or sched[-1] > 1:
        raise InputError("lambda schedule must be strictly increasing in [0, 1]")
    kw = dict(newton_tol=newton_tol, max_iter=max_iter, damping=damping, jacobian=jacobian)
    if initial is None:
        s = find_equilibrium(problem, equilibrium_guess)
        initial = constant_state(N, s, phi)
    lam = float(sched[0])
    if problem.style == SCALAR and lam == 0.0:
        x, y = (np.array(a, dtype=float) for a in initial)
        r = assemble_residual(problem, phi, x, y, 0.0)
        sol = DiscreteSolution(len(x), problem.T, x, y, 0.0, float(np.abs(r).max()), phi, 0)
    else:
        try:
            sol = newton_solve(problem, phi, initial, lam, **kw)
        except NoConvergence as exc:
            raise ContinuationStalled(f"no solution at the first lambda={lam:g}: {exc}", None, []) from exc
    trace = [sol]
    for target in sched[1:]:
        step = target - lam
        while lam < target:
            nxt = min(lam + step, target)
            if target - nxt < 1e-12:
                nxt = float(target)
            try:
                new = newton_solve(problem, phi, (sol.x, sol.y), nxt, **kw)
            except NoConvergence:
                step *= 0.5
                if step < min_step:
                    raise ContinuationStalled(f"lambda step fell below {min_step:g} after lambda={lam:g}",
                                              lam, trace)
                continue
            sol, lam = new, nxt
            trace.append(sol)
            step = target - lam
    return ContinuationResult(sol, trace)


# ---------------------------------------------------------------------------
# conclusion checks


def verify_conclusion(sol: DiscreteSolution, bound_set, K: Optional[float] = None,
                      containment_tol: float = 1e-8, K_phi: Optional[float] = None) -> dict:
    """Containment of every node in the closed bound set, and the derivative bounds.

    ``bound_set`` is any descriptor with ``margin(x)`` (positive inside) or a
    bounding function with ``excess(x)`` (V - c).
    """
    if hasattr(bound_set, "margin"):
        margins = np.asarray(bound_set.margin(sol.x), dtype=float)
    else:
        margins = -np.asarray(bound_set.excess(sol.x), dtype=float)
    worst = float(margins.min())
    out = {"contained": bool(worst >= -containment_tol), "containment_margin": worst,
           "worst_node": int(np.argmin(margins)), "residual_norm": sol.residual_norm,
           "max_abs_x": float(np.linalg.norm(sol.x, axis=-1).max())}
    dxn = float(np.linalg.norm(sol.dx, axis=-1).max())
    out["max_dx"] = dxn
    if K is not None:
        out["K"] = float(K)
        out["nagumo_ok"] = bool(dxn <= K + containment_tol)
    if K_phi is not None:
        yn = float(np.linalg.norm(sol.y, axis=-1).max())
        out["K_phi"] = float(K_phi)
        out["max_phi_dx"] = yn
        out["nagumo_phi_ok"] = bool(yn <= K_phi + containment_tol)
    return out


def interpolate_state(sol: DiscreteSolution, N_new: int):
    """Periodic linear interpolation of (x, y) onto a mesh of N_new nodes."""
    t_old = sol.t
    t_new = np.arange(N_new) * (sol.T / N_new)
    x = np.stack([np.interp(t_new, t_old, sol.x[:, i], period=sol.T) for i in range(sol.n)], axis=1)
    y = np.stack([np.interp(t_new, t_old, sol.y[:, i], period=sol.T) for i in range(sol.n)], axis=1)
    return x, y


def self_convergence(problem: HomotopyFamily, phi: PhiMap, sol: DiscreteSolution, factor: int = 2,
                     newton_tol: float = NEWTON_TOL) -> dict:
    """Re-solve on a mesh ``factor`` times finer and compare at shared nodes."""
    fine = newton_solve(problem, phi, interpolate_state(sol, sol.N * factor), sol.lam, newton_tol=newton_tol)
    diff = float(np.abs(fine.x[::factor] - sol.x).max())
    return {"N": sol.N, "N_fine": fine.N, "discrepancy": diff, "fine": fine}


def convergence_order(problem: HomotopyFamily, phi: PhiMap, meshes: Sequence[int], lam: float = 1.0,
                      newton_tol: float = NEWTON_TOL, **cont_kw) -> dict:
    """Discrepancies e_N = |x_N - x_2N| for each N in ``meshes`` and log2 ratios of successive ones."""
    meshes = sorted(int(m) for m in meshes)
    res = continuation_solve(problem, phi, N=meshes[0], newton_tol=newton_tol,
                             lambda_schedule=cont_kw.pop("lambda_schedule", None), **cont_kw)
    sol = res.solution
    sols = {meshes[0]: sol}
    for m in meshes[1:]:
        sols[m] = newton_solve(problem, phi, interpolate_state(sols[max(k for k in sols if k < m)], m), lam,
                               newton_tol=newton_tol)
    errs = []
    for a, b in zip(meshes[:-1], meshes[1:]):
        f = b // a
        errs.append(float(np.abs(sols[b].x[::f] - sols[a].x).max()))
    orders = [math.log2(e0 / e1) if e1 > 0 else math.inf for e0, e1 in zip(errs[:-1], errs[1:])]
    return {"meshes": meshes, "errors": errs, "orders": orders, "solutions": sols}


# ---------------------------------------------------------------------------
# CSV export


def _fmt(v: float) -> str:
    return repr(float(v))


def solution_csv(sol: DiscreteSolution) -> str:
    n = sol.n
    header = ["t"] + [f"x_{i + 1}" for i in range(n)] + [f"dx_{i + 1}" for i in range(n)] + \
             [f"y_{i + 1}" for i in range(n)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    dx = sol.dx
    for j in range(sol.N):
        w.writerow([_fmt(sol.t[j])] + [_fmt(v) for v in sol.x[j]] + [_fmt(v) for v in dx[j]] +
                   [_fmt(v) for v in sol.y[j]])
    return buf.getvalue()


def write_solution_csv(sol: DiscreteSolution, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(solution_csv(sol))


def write_trace(trace: Sequence[DiscreteSolution], directory) -> str:
    """One CSV per lambda plus ``index.csv``; returns the index path."""
    os.makedirs(directory, exist_ok=True)
    rows = []
    for k, s in enumerate(trace):
        name = f"lambda_{k:03d}.csv"
        write_solution_csv(s, os.path.join(directory, name))
        rows.append([str(k), _fmt(s.lam), name, _fmt(s.residual_norm), str(s.iterations)])
    index = os.path.join(directory, "index.csv")
    with open(index, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "lambda", "file", "residual_norm", "iterations"])
        w.writerows(rows)
    return index
