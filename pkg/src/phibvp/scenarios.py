"""Ready-made systems: field, homotopy, bound set, Nagumo constants and expected verdicts.

Each builder returns a :class:`Scenario`. ``scenario.verify(sampling)`` runs
the checkers that apply to it and returns reports keyed by condition id;
``scenario.expected`` lists the verdicts those checkers should produce.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional

import numpy as np

from .apriori import (BlowUpSpec, check_blowup_integrability, discrete_lp_norm, sup_norm_bound,
                      lienard_k1, nagumo_bounded_field)
from .bounding import (BallSet, BoundingFn, BoxSet, LienardSamples, OuterNormalBounding, SublevelSet,
                       VectorField, ball_function, check_condition_C, check_grad_nonvanishing,
                       check_hartman, check_HV, check_lienard_conditions, check_outer_normal,
                       check_poincare_miranda, check_rayleigh_structure, check_villari,
                       fd_gradient, fd_hessian, sample_boundary, villari_trial_paths)
from .bvp_solver import DiscreteSolution, HomotopyFamily, verify_conclusion
from .degree import degree_one_certificate, sign_degree_1d
from .errors import BuildError, BuildWarning, InputError
from .phi_ops import P_LAPLACIAN, PhiMap, check_h_phi, p_laplacian_m_eta, phi_invert
from .reports import HOLDS, VIOLATED, HypothesisReport
from .sampling import SamplingConfig, lambda_grid, time_grid, unit_directions

PERIODIC = "periodic"
FIELD = "field"
BLOWUP = "blowup"

TWO_PI = 2.0 * np.pi


def circle_forcing(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return np.stack([np.cos(TWO_PI * t), np.sin(TWO_PI * t)], axis=-1)


@dataclass(frozen=True)
class FrictionPotential:
    """A C^2 potential with gradient and Hessian; missing derivatives use finite differences."""

    G: Callable[[np.ndarray], np.ndarray]
    n: int
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.asarray(self.grad(x), dtype=float) if self.grad else fd_gradient(self.G, x)

    def hessian(self, x) -> np.ndarray:
        """Symmetrized Hessian at one point."""
        x = np.asarray(x, dtype=float)
        H = np.asarray(self.hess(x), dtype=float) if self.hess else fd_hessian(self.G, x)
        return 0.5 * (H + H.T)

    def hess_times(self, x, y) -> np.ndarray:
        """Hess G(x) y batched over leading axes, i.e. d/dt grad G(x(t)) for x' = y."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.hess is not None:
            H = np.asarray(self.hess(x), dtype=float)
            H = np.broadcast_to(H, x.shape + (x.shape[-1],))
            return np.einsum("...ij,...j->...i", 0.5 * (H + np.swapaxes(H, -1, -2)), y)
        ny = np.linalg.norm(y, axis=-1, keepdims=True)
        d = np.where(ny > 0, y / np.where(ny > 0, ny, 1.0), 0.0)
        s = np.finfo(float).eps ** (1.0 / 3.0) * (1.0 + np.linalg.norm(x, axis=-1, keepdims=True))
        return ny * (self.gradient(x + s * d) - self.gradient(x - s * d)) / (2.0 * s)


def quadratic_potential(n: int, sign: float = 1.0) -> FrictionPotential:
    """sign * |x|^2 / 2."""
    return FrictionPotential(G=lambda x: sign * 0.5 * np.sum(x * x, axis=-1), n=n,
                             grad=lambda x: sign * np.asarray(x),
                             hess=lambda x: sign * np.broadcast_to(np.eye(n), np.shape(x) + (n,)))


@dataclass
class Scenario:
    name: str
    kind: str
    n: int
    T: float = 1.0
    phi: Optional[PhiMap] = None
    family: Optional[HomotopyFamily] = None
    bound_set: Any = None
    target_field: Optional[VectorField] = None
    expected: Dict[str, str] = field(default_factory=dict)
    constants: Dict[str, Any] = field(default_factory=dict)
    nagumo: Dict[str, float] = field(default_factory=dict)
    checks: Optional[Callable[[SamplingConfig], dict]] = None
    conclude_fn: Optional[Callable[[DiscreteSolution], dict]] = None
    blowup: Optional[BlowUpSpec] = None
    equilibrium_guess: Any = None

    @property
    def solvable(self) -> bool:
        return self.kind == PERIODIC

    def verify(self, sampling: Optional[SamplingConfig] = None) -> dict:
        return self.checks(sampling or SamplingConfig()) if self.checks else {}

    def conclude(self, sol: DiscreteSolution) -> dict:
        if self.conclude_fn is not None:
            return self.conclude_fn(sol)
        return verify_conclusion(sol, self.bound_set, self.nagumo.get("K"), K_phi=self.nagumo.get("K_phi"))


# ---------------------------------------------------------------------------
# helpers shared by the builders


def _degree_report(cert) -> HypothesisReport:
    verdict = HOLDS if cert.certified else VIOLATED
    return HypothesisReport("degree", verdict, witness=cert.witness, margin=cert.details.get("min_inner"),
                            details={"method": cert.method, "value": cert.value,
                                     "min_field_norm": cert.min_field_norm,
                                     "boundary_samples": cert.boundary_samples})


def _cond_C_report(V: BoundingFn, points, tol: float = 1e-9) -> HypothesisReport:
    results = [check_condition_C(V, u, tol) for u in points]
    k = int(np.argmin([r[0] for r in results]))
    rep = results[k][1]
    rep.details = dict(rep.details, samples=len(points))
    return rep


def _box_normal(box: BoxSet):
    lo, hi = np.asarray(box.lo, float), np.asarray(box.hi, float)

    def normal(u):
        u = np.asarray(u, dtype=float)
        nu = np.zeros_like(u)
        for i in range(u.size):
            if u[i] == lo[i]:
                nu[i] = -1.0
                return nu
            if u[i] == hi[i]:
                nu[i] = 1.0
                return nu
        raise InputError(f"{u.tolist()} is not on the box boundary")

    return normal


def _ball_interior(R: float, n: int, center=None, shells: int = 9, dirs: int = 64) -> np.ndarray:
    c = np.zeros(n) if center is None else np.asarray(center, float)
    radii = np.linspace(0.0, R, shells)
    return c + (radii[:, None, None] * unit_directions(n, dirs)[None]).reshape(-1, n)


def _max_norm(f, t, pts) -> float:
    tt = np.repeat(t, len(pts))
    xx = np.tile(pts, (len(t), 1))
    return float(np.linalg.norm(f(tt, xx), axis=-1).max())


def _phi_inverse_norm(phi: PhiMap, s: float) -> float:
    e = np.zeros(phi.dimension)
    e[0] = s
    return float(np.linalg.norm(phi_invert(phi, e)))


def _frictionless_family(f: VectorField, f0, name) -> HomotopyFamily:
    return HomotopyFamily.convex_combination(f.n, f.T, lambda t, x, y: f(t, x), lambda x, y: f0(x), name=name)


# ---------------------------------------------------------------------------
# frictionless fields


def build_hartman_knobloch(n: int = 2, p: float = 3.0, R: float = 2.0, c: Optional[Callable] = None,
                           T: float = 1.0, phi: Optional[PhiMap] = None) -> Scenario:
    """f(t,x) = x - c(t) on the ball of radius R, homotopy lam f + (1-lam) x."""
    if c is None:
        if n == 2:
            c = circle_forcing
        else:
            c = lambda t: np.zeros(np.shape(t) + (n,))  # noqa: E731
    phi = phi or PhiMap.p_laplacian(n, p)
    f = VectorField(lambda t, x: x - c(t), n, T, name="x - c(t)")
    c_max = float(np.linalg.norm(c(time_grid(T, 256)), axis=-1).max())
    margin = R * R - R * c_max
    if margin <= 0:
        warnings.warn(f"Hartman margin R^2 - R max|c| = {margin:g} is not positive", BuildWarning, stacklevel=2)
    P = np.zeros(n)
    family = _frictionless_family(f, lambda x: x - P, "hartman_knobloch")
    ball = BallSet(float(R), tuple(P))
    R2 = R + c_max
    nag = nagumo_bounded_field(T, R2, phi)

    def checks(s: SamplingConfig) -> dict:
        t = time_grid(T, s.n_time)
        u, _ = ball.boundary_points(s.boundary_dirs(n))
        return {
            "hartman": check_hartman(f, R, t, s.boundary_dirs(n)),
            "H_V": check_HV(ball_function(R, P), family, phi, u, t, lambda_grid(s.n_lambda), nag["K"],
                            n_dirs=s.n_tangent_dirs, n_radii=s.n_tangent_radii, eps_strict=s.eps_strict),
            "degree": _degree_report(degree_one_certificate(lambda x: x - P, u, P)),
        }

    return Scenario("hartman_knobloch", PERIODIC, n, T, phi, family, ball, f,
                    expected={"hartman": HOLDS, "H_V": HOLDS, "degree": HOLDS},
                    constants={"R": R, "c_max": c_max, "hartman_margin": margin, "R2": R2},
                    nagumo=nag, checks=checks, equilibrium_guess=P)


def build_poincare_miranda(box: Optional[BoxSet] = None, f: Optional[VectorField] = None, T: float = 1.0,
                           phi: Optional[PhiMap] = None) -> Scenario:
    """Face sign conditions on a box; homotopy lam f + (1-lam)(x - center)."""
    if box is None:
        box = BoxSet((-2.0,), (2.0,))
    n = box.n
    if f is None:
        if n != 1:
            raise InputError("the default field is scalar; pass f for n > 1")
        f = VectorField(lambda t, x: x ** 3 - np.cos(TWO_PI * t)[..., None], 1, T, name="x^3 - cos(2 pi t)")
    phi = phi or PhiMap.identity(n)
    center = box.interior_point()
    family = _frictionless_family(f, lambda x: x - center, "poincare_miranda")
    lo, hi = np.asarray(box.lo), np.asarray(box.hi)
    grid = np.stack(np.meshgrid(*[np.linspace(a, b, 17) for a, b in zip(lo, hi)], indexing="ij"),
                    axis=-1).reshape(-1, n)
    R2 = max(_max_norm(f, time_grid(T, 64), grid), float(np.linalg.norm(grid - center, axis=-1).max()))
    nag = nagumo_bounded_field(T, R2, phi)
    normal = _box_normal(box)

    def checks(s: SamplingConfig) -> dict:
        t = time_grid(T, s.n_time)
        u, nu = box.boundary_points(s.face_samples)
        out = {
            "poincare_miranda": check_poincare_miranda(f, box, t, s.face_samples),
            "outer_normal": check_outer_normal(f, (u, nu), t, P=center),
            "H_V": check_HV(OuterNormalBounding(normal, n), family, phi, u, t, lambda_grid(s.n_lambda),
                            nag["K"], n_dirs=s.n_tangent_dirs, n_radii=s.n_tangent_radii,
                            eps_strict=s.eps_strict),
        }
        cert = degree_one_certificate(lambda x: x - center, u, center)
        rep = _degree_report(cert)
        if n == 1:
            rep.details["sign_degree"] = sign_degree_1d(lambda x: x - center[0], lo[0], hi[0])
        out["degree"] = rep
        return out

    return Scenario("poincare_miranda", PERIODIC, n, T, phi, family, box, f,
                    expected={"poincare_miranda": HOLDS, "outer_normal": HOLDS, "H_V": HOLDS, "degree": HOLDS},
                    constants={"R2": R2, "center": center.tolist()}, nagumo=nag, checks=checks,
                    equilibrium_guess=center)


def build_sublevel(f: VectorField, V: BoundingFn, P0, phi: Optional[PhiMap] = None, name: str = "sublevel",
                   K: Optional[float] = None) -> Scenario:
    """Frictionless field on a convex sublevel set; homotopy lam f + (1-lam) V'."""
    n = V.n
    T = f.T
    phi = phi or PhiMap.identity(n)
    P0 = np.asarray(P0, dtype=float)
    family = HomotopyFamily.convex_combination(n, T, lambda t, x, y: f(t, x, y), lambda x, y: V.gradient(x),
                                               name=name)
    dset = SublevelSet(V, tuple(P0.tolist()))
    if K is None:
        if f.depends_on_y:
            raise InputError("a field depending on x' needs an explicit Nagumo bound K")
        pts = sample_boundary(V, P0, 64).points
        inner = np.concatenate([P0 + s * (pts - P0) for s in np.linspace(0, 1, 9)])
        R2 = max(_max_norm(f, time_grid(T, 64), inner), float(np.linalg.norm(V.gradient(inner), axis=-1).max()))
        nag = nagumo_bounded_field(T, R2, phi)
    else:
        nag = {"K": float(K)}

    def checks(s: SamplingConfig) -> dict:
        t = time_grid(T, s.n_time)
        u = sample_boundary(V, P0, s.boundary_dirs(n), s.root_tol, seed=s.seed).points
        out = {"cond_Vprime": check_grad_nonvanishing(V, u)}
        out["cond_C"] = _cond_C_report(V, u) if n > 1 else HypothesisReport("cond_C", HOLDS,
                                                                            details={"vacuous": True})
        out["outer_normal"] = check_outer_normal(f, (u, V.gradient(u)), t, P=P0)
        out["H_V"] = check_HV(V, family, phi, u, t, lambda_grid(s.n_lambda), nag["K"], n_dirs=s.n_tangent_dirs,
                              n_radii=s.n_tangent_radii, eps_strict=s.eps_strict)
        out["degree"] = _degree_report(degree_one_certificate(V.gradient, u, P0))
        return out

    return Scenario(name, PERIODIC, n, T, phi, family, dset, f,
                    expected={k: HOLDS for k in ("cond_Vprime", "cond_C", "outer_normal", "H_V", "degree")},
                    nagumo=nag, checks=checks, equilibrium_guess=P0)


# ---------------------------------------------------------------------------
# Rayleigh


def build_rayleigh(g: Optional[Callable] = None, potential: Optional[FrictionPotential] = None,
                   h: Optional[VectorField] = None, V: Optional[BoundingFn] = None, n: int = 2, R: float = 2.0,
                   T: float = 1.0, phi: Optional[PhiMap] = None, P0=None) -> Scenario:
    """(phi(x'))' = g(x') + h(t,x) on [V <= c]; homotopy g(y) + lam h + (1-lam) V'(x)."""
    phi = phi or PhiMap.identity(n)
    g = g or (lambda y: -np.asarray(y))
    potential = potential or quadratic_potential(n, -1.0)
    h = h or VectorField(lambda t, x: x - circle_forcing(t)[..., :n], n, T, name="x - c(t)")
    V = V or ball_function(R, np.zeros(n))
    P0 = np.zeros(n) if P0 is None else np.asarray(P0, float)
    structure = check_rayleigh_structure(g, potential, phi)
    bad = [k for k, r in structure.items() if not r.holds]
    if bad:
        raise BuildError(f"Rayleigh structure checks failed: {bad}")
    L = float(structure["rayleigh_bounded"].details["L"])
    pts = sample_boundary(V, P0, 64).points
    inner = np.concatenate([P0 + s * (pts - P0) for s in np.linspace(0, 1, 9)])
    R0 = max(_max_norm(h, time_grid(T, 64), inner), float(np.linalg.norm(V.gradient(inner), axis=-1).max()))
    K_phi = sup_norm_bound(0.0, (L + R0) * math.sqrt(T), 2.0, T)
    nag = {"K_phi": K_phi, "K": _phi_inverse_norm(phi, K_phi)}

    def F(t, x, y, lam):
        return np.asarray(g(y)) + lam * h(t, x) + (1.0 - lam) * V.gradient(x)

    family = HomotopyFamily(n=n, T=T, F=F, f0=lambda x, y: np.asarray(g(y)) + V.gradient(x), name="rayleigh")
    dset = SublevelSet(V, tuple(P0.tolist()))

    def checks(s: SamplingConfig) -> dict:
        t = time_grid(T, s.n_time)
        u = sample_boundary(V, P0, s.boundary_dirs(n), s.root_tol, seed=s.seed).points
        out = dict(structure)
        out["cond_Vprime"] = check_grad_nonvanishing(V, u)
        out["cond_C"] = _cond_C_report(V, u)
        out["outer_normal"] = check_outer_normal(h, (u, V.gradient(u)), t, P=P0)
        out["H_V"] = check_HV(V, family, phi, u, t, lambda_grid(s.n_lambda), nag["K"],
                              n_dirs=s.n_tangent_dirs, n_radii=s.n_tangent_radii, eps_strict=s.eps_strict)
        out["degree"] = _degree_report(degree_one_certificate(V.gradient, u, P0))
        return out

    expected = {k: HOLDS for k in ("rayleigh_parallel", "rayleigh_bounded", "cond_Vprime", "cond_C",
                                   "outer_normal", "H_V", "degree")}
    return Scenario("rayleigh", PERIODIC, n, T, phi, family, dset, h, expected=expected,
                    constants={"L": L, "R0": R0}, nagumo=nag, checks=checks, equilibrium_guess=P0)


# ---------------------------------------------------------------------------
# Lienard alternative fields and the Lienard scenarios


def q_decay(s):
    """q(s) = s exp(-|s|)."""
    s = np.asarray(s, dtype=float)
    return s * np.exp(-np.abs(s))


def alternative_field(k: int, eps: float = 0.1) -> VectorField:
    if k == 1:
        if not 0 < eps < 1 / np.pi:
            raise BuildError("epsilon must lie in (0, 1/pi)")

        def h(t, x):
            x1, x2 = x[..., 0], x[..., 1]
            return np.stack([x1 - 2 * x2 + eps * np.arctan(x1), x2 + eps * np.arctan(x2)], axis=-1)
    elif k == 2:
        def h(t, x):
            qn = q_decay(np.linalg.norm(x, axis=-1))
            return np.stack([(x[..., 0] - x[..., 1]) * qn, x[..., 1] * qn], axis=-1)
    elif k == 3:
        def h(t, x):
            return (x ** 3 - 3 * x) * q_decay(np.abs(x))
    else:
        raise InputError("example index must be 1, 2 or 3")
    return VectorField(h, 2, 1.0, name=f"remark33_{k}")


ALTERNATIVE_EXPECTED = {
    1: {"lienard_i": HOLDS, "lienard_ii": VIOLATED, "lienard_iii": VIOLATED, "H_H_plus": HOLDS},
    2: {"lienard_i": VIOLATED, "lienard_ii": HOLDS, "lienard_iii": VIOLATED, "H_H_plus": HOLDS},
    3: {"lienard_i": VIOLATED, "lienard_ii": VIOLATED, "lienard_iii": HOLDS, "H_H_plus": HOLDS},
}
ALTERNATIVE_D = math.sqrt(3.0)


def alternative_witness_value(eps: float = 0.1, x=(10.0, 10.0), y=(-1.0, 0.0)) -> float:
    """<h(x+y), x> for the first example."""
    h = alternative_field(1, eps)
    x = np.asarray(x, float)
    return float(h(np.zeros(1), (x + np.asarray(y, float))[None])[0] @ x)


def build_alternative_example(k: int, eps: float = 0.1) -> Scenario:
    h = alternative_field(k, eps)

    def checks(s: SamplingConfig) -> dict:
        return check_lienard_conditions(h, R=1.0, d=ALTERNATIVE_D)

    consts = {"d": ALTERNATIVE_D}
    if k == 1:
        consts.update(eps=eps, witness_value=alternative_witness_value(eps), bound=10.0 * (eps * np.pi - 1.0))
    return Scenario(f"remark33_{k}", FIELD, 2, 1.0, target_field=h, expected=dict(ALTERNATIVE_EXPECTED[k]),
                    constants=consts, checks=checks)


def villari_cutoff_field(radius: float = 5.0, k: int = 3) -> VectorField:
    """An alternative field times a smooth cutoff that vanishes for |x| >= radius."""
    base = alternative_field(k)

    def cut(r):
        s = np.clip(r / radius, 0.0, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(s < 1.0, np.exp(1.0 - 1.0 / np.maximum(1.0 - s * s, 1e-300)), 0.0)

    return VectorField(lambda t, x: base(t, x) * cut(np.linalg.norm(x, axis=-1))[..., None], 2, 1.0,
                       name="cutoff")


def forcing_antiderivative(p: Callable, n: int, T: float, nodes: int = 4096):
    """Check zero mean of p and return (P_sup, P_callable) with P' = p and zero mean."""
    t = time_grid(T, nodes)
    pv = np.asarray(p(t), dtype=float).reshape(nodes, n)
    mean = pv.mean(axis=0)
    if np.abs(mean).max() > 1e-10:
        raise BuildError(f"forcing must have zero mean, got {mean.tolist()}")
    h = T / nodes
    # cumulative trapezoid, periodic
    P = np.vstack([np.zeros(n), np.cumsum(0.5 * h * (pv + np.roll(pv, -1, axis=0)), axis=0)[:-1]])
    P -= P.mean(axis=0)
    P_sup = float(np.linalg.norm(P, axis=-1).max())

    def P_fn(s):
        s = np.mod(np.asarray(s, dtype=float), T)
        return np.stack([np.interp(s, t, P[:, i], period=T) for i in range(n)], axis=-1)

    return P_sup, P_fn


def _m_eta(phi: PhiMap, eta: float) -> float:
    if phi.kind == P_LAPLACIAN:
        return p_laplacian_m_eta(phi.p, eta)
    m, rep = check_h_phi(phi, eta, np.geomspace(1e-3, 1e3, 25))
    if rep.verdict == VIOLATED:
        raise BuildError("phi fails the coercivity condition needed for the L^1 bound")
    return m


def build_lienard(potential: Optional[FrictionPotential] = None, h: Optional[VectorField] = None,
                  p_forcing: Optional[Callable] = None, variant: str = "iii", n: Optional[int] = None,
                  phi: Optional[PhiMap] = None, T: float = 1.0, d: float = 1.0, R: float = 1.0,
                  eps: float = 0.1) -> Scenario:
    """(phi(x'))' = d/dt grad G(x) + h(t,x) + p(t) with the homotopy of the existence proof.

    F(t,x,y;lam) = lam Hess G(x) y + lam h + (1-lam) x + lam p(t). The
    constants K1 (L^1 bound on x') and R* (sup bound on x) follow the proof
    for the chosen variant; the bound set is the ball of radius R*.
    """
    variant = str(variant)
    if variant not in ("0", "i", "ii", "iii"):
        raise InputError("variant must be one of 0, i, ii, iii")
    defaults_h = h is None
    if n is None:
        n = h.n if h is not None else (1 if variant == "iii" else 2)
    if h is None:
        if variant == "iii":
            h = VectorField(lambda t, x: x ** 3, n, T, name="x^3")
        elif variant == "0":
            h = VectorField(lambda t, x: x - circle_forcing(t)[..., :n], n, T, name="x - c(t)")
        else:
            h = alternative_field(1 if variant == "i" else 2, eps)
            d = ALTERNATIVE_D
    if p_forcing is None and variant != "0":
        if n == 1:
            p_forcing = lambda t: np.cos(TWO_PI * np.asarray(t))[..., None]  # noqa: E731
        else:
            p_forcing = lambda t: 0.1 * circle_forcing(t)[..., :n]  # noqa: E731
    potential = potential or quadratic_potential(n)
    phi = phi or PhiMap.identity(n)

    if p_forcing is not None:
        P_sup = forcing_antiderivative(p_forcing, n, T)[0]
    else:
        P_sup = 0.0
    eta = 1.0 if variant == "0" else P_sup + 1.0
    M_eta = _m_eta(phi, eta)

    samples = LienardSamples.build(n, 1e3 * max(R, d, 1.0), T)
    reports = check_lienard_conditions(h, R=R, d=d, samples=samples)
    K0 = float(reports["H_H_plus"].details["K0"])
    K1 = lienard_k1(T, K0, M_eta, eta, P_sup)
    consts = {"K0": K0, "M_eta": M_eta, "eta": eta, "P_sup": P_sup, "K1": K1, "d": d, "R": R}
    sq = math.sqrt(n)
    if variant == "0":
        R_star = R + K1 * T
    elif variant == "i":
        gamma = P_sup * K1 / T + 1.0
        mins = np.asarray(reports["lienard_i"].details["shell_minima"])
        radii = np.asarray(reports["lienard_i"].details["shell_radii"])
        above = mins > gamma
        tail = np.nonzero(~above)[0]
        k = 0 if tail.size == 0 else tail[-1] + 1
        if k >= len(radii):
            raise BuildError("no sampled radius beyond which <h(x),x> exceeds gamma")
        consts.update(gamma=gamma, R_gamma=float(radii[k]))
        R_star = float(radii[k]) + K1 * T
    elif variant == "ii":
        rho = sq * K1
        rep = check_lienard_conditions(h, R=R, d=d, rho_list=(rho,), samples=samples)["lienard_ii"]
        R_rho = float(rep.details["R_rho"][str(rho)])
        step = float(samples.shells[1] / samples.shells[0])
        R_hat = max(R_rho * step, samples.shells[0])
        consts.update(rho=rho, R_rho=R_rho, R_hat=R_hat, R_hat_is_estimate=True)
        R_star = sq * (R_hat + K1)
    else:
        R_star = sq * (d + K1)
    consts["R_star"] = R_star
    ball = BallSet(R_star, tuple([0.0] * n))

    # bound on |(phi(x'))'|_{L^1}: |Hess G|_inf K1 + T |h_lam|_inf + |p|_{L^1}
    inner = _ball_interior(R_star, n)
    hess_sup = max(float(np.linalg.norm(potential.hessian(x), 2)) for x in inner)
    t64 = time_grid(T, 64)
    h_sup = max(_max_norm(h, t64, inner), R_star)
    p_l1 = discrete_lp_norm(p_forcing(t64), T, 1.0) if p_forcing is not None else 0.0
    K_phi = sup_norm_bound(0.0, hess_sup * K1 + T * h_sup + p_l1, 1.0, T)
    nag = {"K_phi": K_phi, "K": _phi_inverse_norm(phi, K_phi)}

    def F(t, x, y, lam):
        out = lam * potential.hess_times(x, y) + lam * h(t, x) + (1.0 - lam) * x
        if p_forcing is not None:
            out = out + lam * np.asarray(p_forcing(t), dtype=float).reshape(np.shape(x))
        return out

    family = HomotopyFamily(n=n, T=T, F=F, f0=lambda x, y: x, name=f"lienard_{variant}")

    expected = {"H_H_plus": HOLDS}
    if variant == "0":
        expected["H_H"] = HOLDS
    elif defaults_h and variant in ("i", "ii"):
        expected.update({k: v for k, v in ALTERNATIVE_EXPECTED[1 if variant == "i" else 2].items()})
    else:
        expected[f"lienard_{variant}"] = HOLDS
    if variant == "iii" and n == 1:
        expected.update(lienard_i=HOLDS, lienard_ii=HOLDS, villari=HOLDS)

    def checks(s: SamplingConfig) -> dict:
        out = {k: reports[k] for k in ("H_H", "H_H_plus", "lienard_i", "lienard_ii", "lienard_iii")}
        if variant == "iii":
            out["villari"] = check_villari(h, d, T, villari_trial_paths(n, d), quad_N=s.n_time)
        return out

    def conclude(sol: DiscreteSolution) -> dict:
        out = verify_conclusion(sol, ball, nag["K"], K_phi=nag["K_phi"])
        l1 = discrete_lp_norm(sol.dx, sol.T, 1.0)
        out.update(dx_L1=l1, K1=K1, l1_ok=bool(l1 <= K1), R_star=R_star,
                   sup_ok=bool(out["max_abs_x"] < R_star))
        return out

    return Scenario(f"lienard_{variant}", PERIODIC, n, T, phi, family, ball, h, expected=expected,
                    constants=consts, nagumo=nag, checks=checks, conclude_fn=conclude,
                    equilibrium_guess=np.zeros(n))


# ---------------------------------------------------------------------------
# blow-up


def build_blowup(gamma: float = 0.5, phi: Optional[PhiMap] = None) -> Scenario:
    phi = phi or PhiMap.identity(1)
    verdict = check_blowup_integrability(phi, gamma)
    if not verdict.convergent:
        raise BuildError(f"integrability heuristic reports divergence for gamma={gamma:g}")
    spec = BlowUpSpec(phi, float(gamma))

    def checks(s: SamplingConfig) -> dict:
        rep = HypothesisReport("blowup_integrability", HOLDS, margin=verdict.decade_ratio,
                               details=verdict.to_dict())
        return {"blowup_integrability": rep}

    return Scenario("blowup", BLOWUP, 1, 1.0, phi=phi, expected={"blowup_integrability": HOLDS},
                    constants={"gamma": gamma}, checks=checks, blowup=spec)


SCENARIOS: Dict[str, Callable[..., Scenario]] = {
    "hartman_knobloch": build_hartman_knobloch,
    "poincare_miranda": build_poincare_miranda,
    "rayleigh": build_rayleigh,
    "lienard_0": lambda **kw: build_lienard(variant="0", **kw),
    "lienard_i": lambda **kw: build_lienard(variant="i", **kw),
    "lienard_ii": lambda **kw: build_lienard(variant="ii", **kw),
    "lienard_iii": lambda **kw: build_lienard(variant="iii", **kw),
    "remark33_1": lambda **kw: build_alternative_example(1, **kw),
    "remark33_2": lambda **kw: build_alternative_example(2, **kw),
    "remark33_3": lambda **kw: build_alternative_example(3, **kw),
    "blowup": build_blowup,
}


def build_scenario(name: str, **params) -> Scenario:
    try:
        builder = SCENARIOS[name]
    except KeyError:
        raise InputError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}") from None
    return builder(**params)
