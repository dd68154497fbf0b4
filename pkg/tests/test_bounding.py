import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phibvp.bounding import (BallSet, BoxSet, VectorField, ball_function, check_condition_C,
                             check_grad_nonvanishing, check_hartman, check_outer_normal,
                             check_poincare_miranda, check_rayleigh_structure, check_villari,
                             fd_gradient, fd_hessian, peanut_function, quadratic_function,
                             sample_boundary, tangent_basis, villari_trial_paths)
from phibvp.errors import BoundarySamplingError, GradientVanishedError, NotOuterNormalError
from phibvp.phi_ops import PhiMap
from phibvp.reports import HOLDS, VIOLATED
from phibvp.sampling import time_grid

T_GRID = time_grid(1.0, 16)


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=6).filter(lambda g: np.linalg.norm(g) > 1e-6))
@settings(max_examples=200, deadline=None)
def test_tangent_basis_is_orthonormal_and_tangent(g):
    g = np.array(g)
    Q = tangent_basis(g)
    assert Q.shape == (g.size, g.size - 1)
    assert np.allclose(Q.T @ Q, np.eye(g.size - 1), atol=1e-12)
    assert np.all(np.abs(Q.T @ g) <= 1e-12 * np.linalg.norm(g))


@given(st.floats(1e-3, 1e3), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=80, deadline=None)
def test_condition_C_sign_invariant_under_rescaling(alpha, u1, u2):
    V = peanut_function(0.1)
    u = np.array([u1, u2])
    if np.linalg.norm(V.gradient(u)) < 1e-3:
        return
    lam, rep = check_condition_C(V, u)
    lam_s, rep_s = check_condition_C(V.scaled(alpha), u)
    assert np.sign(lam) == np.sign(lam_s) or abs(lam) < 1e-9
    if abs(lam) > 1e-6:
        assert rep.verdict == rep_s.verdict


@pytest.mark.parametrize("R", [1e-3, 0.5, 2.0, 37.0, 1e4])
def test_hartman_on_identity_is_radius_independent(R):
    f = VectorField(lambda t, x: x, 3)
    rep = check_hartman(f, R, T_GRID)
    assert rep.verdict == HOLDS
    assert rep.margin == pytest.approx(R * R, rel=1e-12)


def test_hartman_violation_witness_reproduces():
    f = VectorField(lambda t, x: x - np.stack([3 * np.cos(2 * np.pi * t), 0 * t], -1), 2)
    rep = check_hartman(f, 2.0, T_GRID)
    assert rep.verdict == VIOLATED
    assert rep.reproduce() == pytest.approx(rep.margin, rel=1e-12)
    assert rep.reproduce() < 0


def test_condition_C_on_ball_and_peanut_neck():
    lam, rep = check_condition_C(ball_function(2.0), np.array([2.0, 0.0]))
    assert rep.holds and lam == pytest.approx(1.0)
    V = peanut_function(0.1)
    # top of the neck: V(0, x2) = 0.1 needs x2 = sqrt(0.1); the set pinches inward there
    lam, rep = check_condition_C(V, np.array([0.0, np.sqrt(0.1)]))
    assert rep.verdict == VIOLATED
    assert rep.reproduce() == pytest.approx(lam, abs=1e-12)


def test_condition_C_rejects_critical_point():
    with pytest.raises(GradientVanishedError):
        check_condition_C(ball_function(1.0), np.zeros(2))


def test_fd_derivatives_match_analytic():
    V = quadratic_function(np.array([[2.0, 0.3], [0.3, 1.0]]))
    x = np.array([0.4, -1.2])
    assert np.allclose(fd_gradient(V.value, x), V.gradient(x), atol=1e-8)
    assert np.allclose(fd_hessian(V.value, x), V.hessian(x), atol=1e-5)


def test_boundary_samples_lie_on_level_set():
    V = quadratic_function(np.diag([1.0, 4.0]))
    s = sample_boundary(V, np.zeros(2), 64, root_tol=1e-12)
    assert len(s) == 64 and s.skipped == 0
    assert np.abs(V.excess(s.points)).max() <= 1e-12
    assert check_grad_nonvanishing(V, s.points).holds


def test_boundary_sampler_reports_unbounded_set():
    V = quadratic_function(np.diag([1.0, -1.0]))
    with pytest.raises(BoundarySamplingError):
        sample_boundary(V, np.zeros(2), 32, r_max=10.0)


def test_poincare_miranda_box():
    box = BoxSet((-2.0,), (2.0,))
    ok = VectorField(lambda t, x: x ** 3 - np.cos(2 * np.pi * t)[..., None], 1)
    assert check_poincare_miranda(ok, box, T_GRID).holds
    bad = VectorField(lambda t, x: -x, 1)
    rep = check_poincare_miranda(bad, box, T_GRID)
    assert rep.verdict == VIOLATED and rep.reproduce() < 0


def test_outer_normal_checks_support_property():
    U = np.array([[1.0, 0.0], [0.0, 1.0]])
    f = VectorField(lambda t, x: x, 2)
    assert check_outer_normal(f, (U, U), T_GRID, P=np.zeros(2)).holds
    with pytest.raises(NotOuterNormalError):
        check_outer_normal(f, (U, -U), T_GRID, P=np.zeros(2))


def test_ball_and_box_margins():
    assert BallSet(2.0, (0.0, 0.0)).margin(np.array([[1.0, 0.0]]))[0] > 0
    box = BoxSet((-1.0, -1.0), (1.0, 1.0))
    assert box.margin(np.array([[1.5, 0.0]]))[0] < 0
    u, nu = box.boundary_points(5)
    assert np.all(np.einsum("ki,ki->k", u, nu) > 0)


def test_villari_on_odd_field():
    h = VectorField(lambda t, x: x ** 3, 1)
    rep = check_villari(h, 1.0, 1.0, villari_trial_paths(1, 1.0))
    assert rep.holds and rep.margin > 1.0
    zero = VectorField(lambda t, x: np.sin(2 * np.pi * t)[..., None] * x, 1)
    rep = check_villari(zero, 1.0, 1.0, villari_trial_paths(1, 1.0))
    assert rep.verdict == VIOLATED
    assert rep.reproduce() == pytest.approx(rep.margin, abs=1e-15)


def test_rayleigh_structure_parallel_and_bounded():
    phi = PhiMap.identity(2)

    class Quad:
        grad = staticmethod(lambda x: x)

    reps = check_rayleigh_structure(lambda y: y + y / (1 + np.linalg.norm(y, axis=-1, keepdims=True)), Quad, phi)
    assert reps["rayleigh_parallel"].holds and reps["rayleigh_bounded"].holds
    rot = lambda y: y @ np.array([[0.0, -1.0], [1.0, 0.0]])  # noqa: E731
    reps = check_rayleigh_structure(rot, Quad, phi)
    assert reps["rayleigh_parallel"].verdict == VIOLATED
    assert reps["rayleigh_parallel"].reproduce() > 0
