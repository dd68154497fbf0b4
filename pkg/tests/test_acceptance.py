"""End-to-end acceptance criteria; each test records one PASS/FAIL line in the terminal summary."""
import contextlib
import json
import math
import time

import numpy as np
import pytest

from phibvp.apriori import (BlowUpSpec, blowup_forcing_residual, blowup_solution, discrete_lp_norm,
                            lemma21_bound, verify_family_bound)
from phibvp.bounding import (BoxSet, VectorField, ball_function, peanut_function, quadratic_function,
                             sample_boundary)
from phibvp.bvp_solver import assemble_residual, continuation_solve, self_convergence
from phibvp.cli import main
from phibvp.convexity import (CONVEX, NONCONVEX, RejectionSampler, bounding_box, convexity_oracle,
                              convexity_via_condition_C, implicit_graph_curvature)
from phibvp.degree import degree_one_certificate, winding_number_2d
from phibvp.phi_ops import PhiMap
from phibvp.reports import HOLDS
from phibvp.sampling import SamplingConfig
from phibvp.scenarios import (SCENARIOS, build_hartman_knobloch, build_lienard, build_poincare_miranda,
                              build_scenario, alternative_witness_value)

from conftest import ACCEPTANCE_LINES, linear_exact, linear_family


@contextlib.contextmanager
def criterion(number, title):
    info = {}
    try:
        yield info
    except BaseException:
        ACCEPTANCE_LINES.append(f"criterion {number:2d} FAIL  {title} {_fmt(info)}")
        raise
    ACCEPTANCE_LINES.append(f"criterion {number:2d} PASS  {title} {_fmt(info)}")


def _fmt(info):
    return " ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in info.items())


def test_01_linear_oracle():
    with criterion(1, "linear oracle") as info:
        t0 = time.perf_counter()
        res = continuation_solve(linear_family(), PhiMap.identity(1), np.linspace(0, 1, 11), N=256)
        elapsed = time.perf_counter() - t0
        sol = res.solution
        err = float(np.abs(sol.x[:, 0] - linear_exact(sol.t)).max())
        info.update(error=err, residual=sol.residual_norm, seconds=elapsed)
        assert sol.lam == 1.0
        assert err <= 1e-4
        assert sol.residual_norm <= 1e-10
        assert elapsed < 10.0


def test_02_convergence_order():
    with criterion(2, "convergence order") as info:
        fam, phi = linear_family(), PhiMap.identity(1)
        d = []
        for N in (64, 128):
            sol = continuation_solve(fam, phi, N=N).solution
            d.append(self_convergence(fam, phi, sol)["discrepancy"])
        order = math.log2(d[0] / d[1])
        info.update(order=order)
        assert abs(order - 2.0) <= 0.2


def test_03_hartman_knobloch():
    with criterion(3, "Hartman-Knobloch end-to-end") as info:
        sc = build_hartman_knobloch(n=2, p=3.0, R=2.0)
        reps = sc.verify(SamplingConfig())
        info.update(hartman_margin=reps["hartman"].margin)
        assert reps["hartman"].verdict == HOLDS
        assert reps["hartman"].margin >= 2 - 1e-6
        res = continuation_solve(sc.family, sc.phi, N=256, equilibrium_guess=sc.equilibrium_guess)
        out = sc.conclude(res.solution)
        info.update(lam=res.solution.lam, max_norm=out["max_abs_x"], max_dx=out["max_dx"], K=out["K"])
        assert res.solution.lam == 1.0
        assert np.linalg.norm(res.solution.x, axis=-1).max() <= 2 + 1e-8
        assert sc.nagumo["K_phi"] == pytest.approx(1.0 * (2.0 + 1.0))
        assert out["nagumo_ok"] and out["nagumo_phi_ok"]


def test_04_blowup():
    with criterion(4, "blow-up example") as info:
        spec = BlowUpSpec(PhiMap.identity(1), 0.5)
        x75, _ = blowup_solution(spec, 0.75)
        _, dx_end = blowup_solution(spec, 1 - 1e-6)
        t = np.random.default_rng(0).uniform(0.0, 0.999, 100)
        ode = float(blowup_forcing_residual(spec, t).max())
        xs, _ = blowup_solution(spec, np.concatenate([np.linspace(0, 0.999, 200), 1 - np.geomspace(1e-4, 1e-12, 9)]))
        info.update(x075_err=abs(x75 - 1.0), dx_rel=abs(dx_end - 1e3) / 1e3, ode_rel=ode, sup=float(xs.max()))
        assert abs(x75 - 1.0) <= 1e-8
        assert abs(dx_end - 1e3) / 1e3 <= 1e-6
        assert ode <= 1e-4
        assert xs.max() <= 2.0


def _trig_family(rng, p, T=1.0, N=256, n=2, modes=5):
    t = np.arange(N) * T / N
    k = np.arange(1, modes + 1)
    fam, M0, M1 = [], 0.0, 0.0
    for _ in range(3):
        a, b = rng.normal(size=(2, modes, n)) / k[:, None] ** 1.5
        w = 2 * np.pi * k[:, None] / T
        c = rng.normal(size=n) * rng.uniform(0, 3)
        x = c + np.einsum("kt,ki->ti", np.cos(w * t), a) + np.einsum("kt,ki->ti", np.sin(w * t), b)
        dx = np.einsum("kt,ki->ti", -w * np.sin(w * t), a) + np.einsum("kt,ki->ti", w * np.cos(w * t), b)
        fam.append((x, dx))
        M0 = max(M0, float(np.linalg.norm(c)))  # each projection of the zero-mean part has a root
        M1 = max(M1, discrete_lp_norm(dx, T, p))
    return fam, M0 + 1e-12, M1 * (1 + 1e-9)


def test_05_sup_norm_bound():
    with criterion(5, "sup-norm bound formula and family property") as info:
        K = lemma21_bound(1, 3, 2, 2)
        info.update(formula_err=abs(K - (1 + 3 * math.sqrt(2))))
        assert K == 1 + 3 * math.sqrt(2)
        rng = np.random.default_rng(2024)
        verdicts = []
        for i in range(100):
            p = [1.0, 1.5, 2.0, 3.0, math.inf][i % 5]
            T = float(rng.uniform(0.5, 3.0))
            fam, M0, M1 = _trig_family(rng, p, T)
            verdicts.append(verify_family_bound(fam, M0, p, M1, T).verdict)
        info.update(holds=verdicts.count(HOLDS), families=len(verdicts))
        assert verdicts.count(HOLDS) == 100


def _convexity_instances():
    rng = np.random.default_rng(11)
    out = []
    for _ in range(10):
        A = rng.normal(size=(2, 2))
        c = rng.uniform(-2, 2, 2)
        out.append((quadratic_function(A @ A.T + 0.1 * np.eye(2), center=c, level=1.0), c, CONVEX))
    for a in np.linspace(0.5, 4.0, 10):
        out.append((peanut_function(0.1, a=float(a)), np.zeros(2), NONCONVEX))
    return out


def test_06_convexity_criterion():
    with criterion(6, "convexity criterion agreement and chart curvature") as info:
        agree = 0
        for k, (V, P0, expected) in enumerate(_convexity_instances()):
            via_C = convexity_via_condition_C(V, P0).verdict
            lo, hi = bounding_box(V, P0)
            oracle = convexity_oracle(V, RejectionSampler(V, lo, hi, seed=k), n_pairs=10_000).verdict
            agree += int(via_C == oracle == expected)
        curv = []
        for V, expected in ((ball_function(1.0), -1.0), (quadratic_function(np.diag([1.0, 0.25])), -0.25)):
            cp = implicit_graph_curvature(V, np.array([1.0, 0.0]), np.array([0.0, 1.0]), [0.0], fd_step=1e-4)[0]
            curv.append(max(abs(cp.theta_fd - cp.theta_formula), abs(cp.theta_formula - expected)))
        info.update(agree=f"{agree}/20", curvature_err=max(curv))
        assert agree == 20
        assert max(curv) <= 1e-4


def test_07_alternative_matrix():
    with criterion(7, "Lienard alternative verdict matrix") as info:
        rows = {}
        for k in (1, 2, 3):
            reps = build_scenario(f"remark33_{k}").verify(SamplingConfig())
            rows[k] = tuple(reps[f"lienard_{a}"].verdict == HOLDS for a in ("i", "ii", "iii"))
        w = alternative_witness_value(0.1, (10.0, 10.0), (-1.0, 0.0))
        bound = 10 * (0.1 * math.pi - 1)
        info.update(matrix="".join("".join("1" if b else "0" for b in rows[k]) + "|" for k in rows), witness=w)
        assert rows == {1: (True, False, False), 2: (False, True, False), 3: (False, False, True)}
        assert abs(w - (-7.069)) <= 1e-3
        assert w <= bound


def _circle(m, r=1.0, c=(0.0, 0.0)):
    a = np.linspace(0, 2 * np.pi, m, endpoint=False)
    return np.asarray(c) + r * np.stack([np.cos(a), np.sin(a)], -1)


def _refine(poly):
    mid = 0.5 * (poly + np.roll(poly, -1, axis=0))
    return np.stack([poly, mid], axis=1).reshape(-1, 2)


def test_08_degree():
    with criterion(8, "degree computations and certificates") as info:
        sq = lambda z: np.stack([z[..., 0] ** 2 - z[..., 1] ** 2, 2 * z[..., 0] * z[..., 1]], -1)  # noqa: E731
        const = lambda z: np.broadcast_to([0.3, -1.0], z.shape)  # noqa: E731
        ident = lambda z: z  # noqa: E731
        ellipse = quadratic_function(np.array([[2.0, 0.5], [0.5, 1.0]]), level=1.0)
        eb = sample_boundary(ellipse, np.zeros(2), 64).points
        circ = _circle(24, 1.5)
        cases = [(ident, circ, 1), (ellipse.gradient, eb, 1), (sq, circ, 2), (const, circ, 0), (ident, eb, 1)]
        weight = lambda z: (2.0 + np.sin(5 * z[..., 0]) * np.cos(z[..., 1]))[..., None]  # noqa: E731
        got = []
        for F, B, expected in cases:
            w = winding_number_2d(F, B)
            got.append(w)
            assert w == expected
            assert winding_number_2d(F, _refine(B)) == w
            assert winding_number_2d(lambda z, F=F: weight(z) * F(z), B) == w
        box_u = BoxSet((-1.0, -0.5), (2.0, 1.5)).boundary_points(9)[0]
        certs = [degree_one_certificate(lambda u, P=P: u - P, B, P).certified
                 for B, P in ((_circle(64, 2.0, (0.5, -0.5)), np.array([0.5, -0.5])),
                              (box_u, np.array([0.5, 0.5])), (eb, np.zeros(2)))]
        info.update(windings=got, certificates=certs)
        assert all(certs)


def test_09_lienard_iii():
    with criterion(9, "Lienard (iii) end-to-end") as info:
        sc = build_lienard(variant="iii", n=1)
        reps = sc.verify(SamplingConfig())
        for cid in ("lienard_iii", "H_H_plus", "villari"):
            assert reps[cid].verdict == HOLDS, cid
        res = continuation_solve(sc.family, sc.phi, N=128, equilibrium_guess=sc.equilibrium_guess)
        out = sc.conclude(res.solution)
        info.update(dx_L1=out["dx_L1"], K1=out["K1"], sup=out["max_abs_x"], R_star=out["R_star"],
                    residual=res.solution.residual_norm)
        assert res.solution.lam == 1.0
        assert out["dx_L1"] <= out["K1"]
        assert out["max_abs_x"] <= out["R_star"]
        assert res.solution.residual_norm <= 1e-8


def test_10_poincare_miranda():
    with criterion(10, "Poincare-Miranda box") as info:
        f = VectorField(lambda t, x: x ** 3 - np.cos(2 * np.pi * t)[..., None], 1)
        sc = build_poincare_miranda(BoxSet((-2.0,), (2.0,)), f)
        reps = sc.verify(SamplingConfig())
        assert reps["poincare_miranda"].verdict == HOLDS
        sol = continuation_solve(sc.family, sc.phi, N=128, equilibrium_guess=sc.equilibrium_guess).solution
        r = np.abs(assemble_residual(sc.family, sc.phi, sol.x, sol.y, 1.0)).max()
        info.update(min_x=float(sol.x.min()), max_x=float(sol.x.max()), residual=float(r))
        assert sol.lam == 1.0
        assert np.all((sol.x >= -2.0) & (sol.x <= 2.0))


@pytest.mark.slow
def test_11_determinism(tmp_path):
    with criterion(11, "byte-identical reruns") as info:
        checked = 0
        for name in sorted(SCENARIOS):
            files = []
            for run in range(2):
                d = tmp_path / f"{name}_{run}"
                solvable = build_scenario(name).solvable
                argv = ["solve" if solvable else "verify", "--scenario", name, "--seed", "7", "-o", str(d)]
                if solvable:
                    argv += ["--N", "64"]
                code = main(argv)
                assert code == 0, (name, code)
                files.append({p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.is_file()})
            assert files[0] == files[1], name
            assert any(k.endswith(".csv") for k in files[0]) or name.startswith("remark33"), name
            json.loads(files[0]["report.json"])
            checked += 1
        info.update(scenarios=checked)
