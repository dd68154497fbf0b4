import numpy as np
import pytest

from phibvp.bounding import (ball_function, peanut_function, quadratic_function, sample_boundary,
                             smooth_min_function)
from phibvp.convexity import (CONNECTED, CONVEX, DISCONNECTED, NONCONVEX, RejectionSampler,
                              bounding_box, chart_sign_agreement, connectedness_probe,
                              convexity_oracle, convexity_via_condition_C, implicit_graph_curvature)
from phibvp.errors import SamplingError


def random_pd_quadratic(rng):
    A = rng.normal(size=(2, 2))
    return quadratic_function(A @ A.T + 0.2 * np.eye(2), center=rng.uniform(-1, 1, 2), level=1.0)


@pytest.mark.parametrize("seed", range(6))
def test_oracle_and_condition_C_agree_when_connected(seed):
    rng = np.random.default_rng(seed)
    instances = [(random_pd_quadratic(rng), None), (peanut_function(0.1, a=rng.uniform(0.5, 3)), np.zeros(2))]
    for V, P0 in instances:
        P0 = V_center(V) if P0 is None else P0
        lo, hi = bounding_box(V, P0)
        conn = connectedness_probe(V, 200, 9, RejectionSampler(V, lo, hi, seed=seed))
        if conn.verdict != CONNECTED:
            continue
        via_C = convexity_via_condition_C(V, P0, n_dirs=256)
        oracle = convexity_oracle(V, RejectionSampler(V, lo, hi, seed=seed), n_pairs=2000)
        assert (via_C.verdict == CONVEX) == (oracle.verdict == CONVEX)


def V_center(V):
    # the quadratic's minimizer: grad vanishes there, found by one Newton step from 0
    x = np.zeros(V.n)
    return x - np.linalg.solve(V.hessian(x), V.gradient(x))


@pytest.mark.parametrize("V,u0,v,expected", [
    (ball_function(1.0), [1.0, 0.0], [0.0, 1.0], -1.0),
    (quadratic_function(np.diag([1.0, 0.25])), [1.0, 0.0], [0.0, 1.0], -0.25),
])
def test_chart_curvature_identity(V, u0, v, expected):
    pts = implicit_graph_curvature(V, np.array(u0), np.array(v), [0.0, 0.05, -0.1])
    at0 = pts[0]
    assert abs(at0.theta_formula - expected) <= 1e-4
    for p in pts:
        assert not p.out_of_chart
        assert abs(p.theta_fd - p.theta_formula) <= 1e-4 * (1 + abs(p.theta_formula))


def test_chart_sign_matches_condition_C():
    for V, P0 in ((quadratic_function(np.diag([1.0, 3.0])), np.zeros(2)), (peanut_function(0.1), np.zeros(2))):
        pts = sample_boundary(V, P0, 32).points
        res = chart_sign_agreement(V, pts)
        assert res["disagree"] == 0 and res["agree"] > 0


def test_peanut_is_nonconvex_with_chord_witness():
    V = peanut_function(0.1)
    lo, hi = bounding_box(V, np.zeros(2))
    v = convexity_oracle(V, RejectionSampler(V, lo, hi, seed=1), n_pairs=5000)
    assert v.verdict == NONCONVEX
    assert V.excess(np.array(v.witness["point"])) > 0
    assert convexity_via_condition_C(V, np.zeros(2)).verdict != CONVEX


def test_two_separate_balls_are_disconnected():
    V = smooth_min_function([ball_function(1.0, [-3.0, 0.0]), ball_function(1.0, [3.0, 0.0])], sharpness=20)
    v = connectedness_probe(V, 300, 9, RejectionSampler(V, [-4.5, -1.5], [4.5, 1.5], seed=0))
    assert v.verdict == DISCONNECTED
    reps = np.array(v.witness["representatives"])
    assert np.all(V.excess(reps) <= 0)


def test_rejection_sampler_gives_up_on_tiny_sets():
    V = ball_function(1e-4)
    with pytest.raises(SamplingError):
        RejectionSampler(V, [-10.0, -10.0], [10.0, 10.0]).draw(10)


def test_condition_C_verdict_reports_samples():
    v = convexity_via_condition_C(ball_function(2.0), np.zeros(2), n_dirs=64)
    assert v.verdict == CONVEX
    assert v.details["boundary_points"] == 64
    assert v.details["min_tangent_eig"] == pytest.approx(1.0)
