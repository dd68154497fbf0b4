import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phibvp.apriori import (BlowUpSpec, blowup_forcing_residual, blowup_solution,
                            check_blowup_integrability, check_nh1, check_nh2, discrete_lp_norm,
                            lemma21_bound, lienard_k1, sup_norm_bound, nagumo_bounded_field, verify_family_bound)
from phibvp.errors import DomainError, InputError
from phibvp.phi_ops import PhiMap
from phibvp.reports import HOLDS, INAPPLICABLE, VIOLATED


def trig_trajectory(rng, N=256, n=2, modes=4, T=1.0):
    """Offset plus a zero-mean trig polynomial; every projection of the zero-mean part has a root."""
    t = np.arange(N) * T / N
    k = np.arange(1, modes + 1)
    a, b = rng.normal(size=(2, modes, n)) / k[:, None]
    w = 2 * np.pi * k[:, None] / T
    x = np.einsum("kt,ki->ti", np.cos(w * t), a) + np.einsum("kt,ki->ti", np.sin(w * t), b)
    dx = np.einsum("kt,ki->ti", -w * np.sin(w * t), a) + np.einsum("kt,ki->ti", w * np.cos(w * t), b)
    c = rng.normal(size=n) * rng.uniform(0, 2)
    return x + c, dx, float(np.linalg.norm(c))


def family_hypotheses(rng, count, p, T=1.0):
    fam, M0, M1 = [], 0.0, 0.0
    for _ in range(count):
        x, dx, off = trig_trajectory(rng, T=T)
        fam.append((x, dx))
        M0 = max(M0, off)
        M1 = max(M1, discrete_lp_norm(dx, T, p))
    return fam, M0, M1 * (1 + 1e-9)


def test_bound_formula():
    assert lemma21_bound is sup_norm_bound
    assert sup_norm_bound(1, 3, 2, 2) == pytest.approx(1 + 3 * math.sqrt(2), rel=1e-15)
    assert sup_norm_bound(1, 3, 1, 2) == 4.0
    assert sup_norm_bound(1, 3, math.inf, 2) == 7.0


@given(st.floats(0, 10), st.floats(0.01, 10), st.floats(1, 20), st.floats(0.01, 10), st.floats(0, 5))
@settings(max_examples=100, deadline=None)
def test_bound_is_monotone(M0, M1, p, T, bump):
    K = sup_norm_bound(M0, M1, p, T)
    assert sup_norm_bound(M0 + bump, M1, p, T) >= K
    assert sup_norm_bound(M0, M1 + bump, p, T) >= K
    assert sup_norm_bound(M0, M1, p, T + bump) >= K


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1.0, 1.5, 2.0, 4.0, math.inf]), st.floats(0.25, 4))
@settings(max_examples=60, deadline=None)
def test_family_bound_never_violated(seed, p, T):
    fam, M0, M1 = family_hypotheses(np.random.default_rng(seed), 3, p, T)
    rep = verify_family_bound(fam, M0 + 1e-12, p, M1, T)
    assert rep.verdict == HOLDS
    assert rep.margin >= 0


def test_family_bound_flags_unmet_hypotheses():
    rng = np.random.default_rng(0)
    x, dx, off = trig_trajectory(rng)
    rep = verify_family_bound([(x + 50.0, dx)], 1.0, 2.0, 1e6, 1.0)
    assert rep.verdict == INAPPLICABLE
    rep = verify_family_bound([(x, dx)], off + 1e-9, 2.0, 1e-3, 1.0)
    assert rep.verdict == INAPPLICABLE


def test_family_bound_detects_false_claim():
    # a bound with too small M1 but forged "hypotheses" is caught as a violation
    t = np.arange(64) / 64
    x = np.stack([np.sin(2 * np.pi * t), np.cos(2 * np.pi * t)], -1) * 10
    dx = np.zeros_like(x)  # inconsistent derivative: the L^p check passes, the bound must fail
    rep = verify_family_bound([(x, dx)], 5.0, 2.0, 1e-9, 1.0)
    assert rep.verdict == VIOLATED


def test_discrete_lp_norm():
    v = np.ones((100, 2)) * np.array([3.0, 4.0])
    assert discrete_lp_norm(v, 2.0, 1) == pytest.approx(10.0)
    assert discrete_lp_norm(v, 2.0, 2) == pytest.approx(5 * math.sqrt(2))
    assert discrete_lp_norm(v, 2.0, math.inf) == pytest.approx(5.0)


def test_nh1_growth_and_divergence():
    t, x = np.linspace(0, 1, 5), np.array([[0.5, 0.0], [0.0, -1.0]])
    y = np.geomspace(1e-2, 1e2, 9)[:, None] * np.array([[0.6, 0.8]])
    f = lambda t, x, y: x + y * np.linalg.norm(y, axis=-1, keepdims=True)  # noqa: E731
    rep = check_nh1(f, lambda s: 2.0 + s * s, 1.0, t, x, y)
    assert rep.verdict == HOLDS and rep.details["divergent"]
    rep = check_nh1(f, lambda s: 2.0 + s ** 3, 1.0, t, x, y)
    assert rep.verdict == VIOLATED and not rep.details["divergent"]


def test_nh2_inapplicable_in_one_dimension():
    samples = (np.zeros(1), np.zeros((1, 1)), np.zeros((1, 1)))
    assert check_nh2(lambda t, x, y: x, 1.0, 1.0, 1.0, samples).verdict == INAPPLICABLE


def test_nh2_witness():
    samples = (np.zeros(2), np.array([[1.0, 0.0]]), np.array([[0.0, 0.0], [0.0, 1.0]]))
    f = lambda t, x, y: -5 * x  # noqa: E731
    rep = check_nh2(f, 1.0, 0.0, 1.0, samples)
    assert rep.verdict == VIOLATED
    assert rep.reproduce() == pytest.approx(rep.margin)


@pytest.mark.parametrize("p,gamma,convergent", [
    (2.0, 0.5, True), (2.0, 1.0, False), (2.0, 2.0, False), (3.0, 0.5, True), (1.5, 0.2, True), (3.0, 2.0, False),
])
def test_blowup_integrability(p, gamma, convergent):
    assert check_blowup_integrability(PhiMap.p_laplacian(1, p), gamma).convergent is convergent


def test_blowup_solution_closed_form():
    spec = BlowUpSpec(PhiMap.identity(1), 0.5)
    t = np.array([0.0, 0.19, 0.75, 0.99])
    x, dx = blowup_solution(spec, t)
    assert np.allclose(x, 2 * (1 - np.sqrt(1 - t)), atol=1e-12)
    assert np.allclose(dx, (1 - t) ** -0.5, rtol=1e-14)
    assert blowup_forcing_residual(spec, np.linspace(0.05, 0.95, 7)).max() < 1e-6
    with pytest.raises(DomainError):
        blowup_solution(spec, 1.0)


def test_proof_constants():
    assert nagumo_bounded_field(1.0, 3.0, PhiMap.p_laplacian(2, 3.0))["K"] == pytest.approx(math.sqrt(3.0))
    assert nagumo_bounded_field(2.0, 1.5)["K_phi"] == 3.0
    assert lienard_k1(1.0, 0.0, 0.25, 1.5, 0.5) == pytest.approx(0.25)
    with pytest.raises(InputError):
        lienard_k1(1.0, 0.0, 0.25, 0.5, 0.5)
