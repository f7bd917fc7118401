import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fdivbandit.core import FDiv, chi2, fdiv, kl, make_rng, xlogx_generator
from fdivbandit.evaluation import objective
from fdivbandit.solvers import (DualSolveError, chi2_closed_form, chi2_water_level, f_dual_policy,
                                kl_softmax_policy, solve_policy)

from strategies import instances, stochastic, tables


def test_softmax_eta_zero_returns_reference():
    ref = np.array([[0.2, 0.8], [0.6, 0.4]])
    out = kl_softmax_policy(np.array([[5.0, -3.0], [1.0, 2.0]]), ref, 0.0)
    assert np.array_equal(out, ref)


def test_softmax_constant_reward_returns_reference():
    ref = np.array([[0.2, 0.3, 0.5]])
    assert np.allclose(kl_softmax_policy(np.full((1, 3), 0.4), ref, 7.0), ref, atol=1e-15)


def test_softmax_two_action_value():
    pi = kl_softmax_policy(np.array([[1.0, 0.0]]), np.array([[0.5, 0.5]]), 1.0)
    e = math.e
    assert np.allclose(pi, [[e / (e + 1), 1 / (e + 1)]], atol=1e-15)
    assert np.allclose(pi, [[0.73106, 0.26894]], atol=1e-5)


def test_softmax_is_overflow_safe_and_respects_support():
    pi = kl_softmax_policy(np.array([[1000.0, 999.0, 5000.0]]), np.array([[0.5, 0.5, 0.0]]), 50.0)
    assert np.all(np.isfinite(pi)) and pi[0, 2] == 0.0
    assert abs(pi.sum() - 1) <= 1e-12


def test_chi2_interior_example():
    g = np.array([[0.75, 0.25]])
    ref = np.array([[0.5, 0.5]])
    probs, (rep,) = f_dual_policy(g, ref, chi2(2.0, 1.0))
    assert np.allclose(probs, [[0.75, 0.25]], atol=1e-12)
    # water level of pi = pi_ref * (eta/alpha) (g - lam)_+ sits at 0
    assert abs(rep.cutoff) <= 1e-12
    assert float(chi2_water_level(g[0], ref[0], 2.0, 1.0)) == 0.0
    # KKT multiplier of pi = pi_ref * (f')^{-1}(eta (g - lam))
    assert rep.lam == pytest.approx(0.5, abs=1e-12)
    assert np.allclose(chi2_closed_form(g, ref, 2.0, 1.0), probs, atol=1e-10)


def test_constant_reward_dual_solution():
    ref = np.array([[0.1, 0.6, 0.3], [0.3, 0.3, 0.4]])
    g = np.array([[0.4] * 3, [0.9] * 3])
    for reg in (chi2(3.0, 2.0), fdiv(3.0, xlogx_generator())):
        probs, reps = f_dual_policy(g, ref, reg)
        assert np.allclose(probs, ref, atol=1e-12)
        fp1 = float(reg.fdiv.f_prime(1.0))
        for s, rep in enumerate(reps):
            assert rep.lam == pytest.approx(g[s, 0] - fp1 / reg.eta, abs=1e-12)


def _brute_active_set(g, ref, eta, alpha):
    """Try every support pattern; keep the one satisfying the KKT sign conditions."""
    A = g.size
    for mask in itertools.product([0, 1], repeat=A):
        m = np.array(mask, bool) & (ref > 0)
        if not m.any():
            continue
        lam = (np.sum(ref[m] * g[m]) - alpha / eta) / np.sum(ref[m])
        if np.all(g[m] > lam) and np.all(g[~m & (ref > 0)] <= lam):
            return int(m.sum())
    raise AssertionError("no consistent active set")


def test_support_shrinks_with_large_eta():
    rng = make_rng(3)
    for A in range(2, 9):
        g = rng.random(A)
        g[0] = 1.0
        ref = np.full(A, 1.0 / A)
        eta = 50.0
        pi = chi2_closed_form(g[None], ref[None], eta, 1.0)[0]
        assert int(np.sum(pi > 0)) == _brute_active_set(g, ref, eta, 1.0)
    pi = chi2_closed_form(np.array([[1.0, 0.2, 0.1]]), np.full((1, 3), 1 / 3), 100.0, 1.0)
    assert np.array_equal(pi > 0, [[True, False, False]])


def test_support_size_matches_brute_force_random():
    rng = make_rng(4)
    for _ in range(200):
        A = int(rng.integers(1, 9))
        g = rng.random(A)
        ref = rng.random(A) + 0.01
        ref /= ref.sum()
        eta, alpha = float(rng.uniform(0.1, 60)), float(rng.uniform(0.2, 3))
        pi = chi2_closed_form(g[None], ref[None], eta, alpha)[0]
        assert int(np.sum(pi > 0)) == _brute_active_set(g, ref, eta, alpha)
        assert abs(pi.sum() - 1) <= 1e-12


@given(st.data())
def test_dual_matches_softmax_and_water_filling(data):
    inst = data.draw(instances(max_s=3, max_a=5))
    S, A = inst.shape
    g = data.draw(tables(S, A, 0.0, 1.0))
    eta = data.draw(st.floats(0.05, 30.0))
    alpha = data.draw(st.floats(0.1, 4.0))
    ref = inst.ref_policy
    a = f_dual_policy(g, ref, fdiv(eta, xlogx_generator()))[0]
    assert np.allclose(a, kl_softmax_policy(g, ref, eta), atol=1e-8, rtol=0)
    c, reps = f_dual_policy(g, ref, chi2(eta, alpha))
    assert np.allclose(c, chi2_closed_form(g, ref, eta, alpha), atol=1e-8, rtol=0)
    assert all(r.normalization_residual <= 1e-9 for r in reps)
    assert all(r.kkt_residual <= 1e-6 for r in reps)


def test_numeric_inverse_matches_closed_inverse():
    rng = make_rng(9)
    for _ in range(30):
        g = rng.random((3, 4))
        ref = stochastic_rows(rng, 3, 4)
        eta = float(rng.uniform(0.2, 10))
        closed = f_dual_policy(g, ref, fdiv(eta, xlogx_generator()))[0]
        numeric = f_dual_policy(g, ref, fdiv(eta, xlogx_generator(with_inverse=False)))[0]
        assert np.allclose(closed, numeric, atol=1e-9)


def stochastic_rows(rng, S, A):
    m = rng.random((S, A)) + 0.01
    return m / m.sum(axis=1, keepdims=True)


@given(st.data())
def test_shift_invariance(data):
    inst = data.draw(instances(max_s=3, max_a=4))
    S, A = inst.shape
    g = data.draw(tables(S, A, 0.0, 1.0))
    b = data.draw(tables(S, 1, -2.0, 2.0))
    eta = data.draw(st.floats(0.1, 10.0))
    ref = inst.ref_policy
    assert np.allclose(kl_softmax_policy(g + b, ref, eta), kl_softmax_policy(g, ref, eta), atol=1e-12)
    p0, r0 = f_dual_policy(g, ref, chi2(eta, 1.0))
    p1, r1 = f_dual_policy(g + b, ref, chi2(eta, 1.0))
    assert np.allclose(p0, p1, atol=1e-9)
    for s in range(S):
        assert r1[s].lam - r0[s].lam == pytest.approx(float(b[s, 0]), abs=1e-9)


@given(st.data())
def test_solver_output_beats_random_policies(data):
    inst = data.draw(instances(max_s=3, max_a=4))
    eta = data.draw(st.floats(0.1, 10.0))
    rng = make_rng(data.draw(st.integers(0, 2**32)))
    for reg in (kl(eta), chi2(eta, 1.0), fdiv(eta, xlogx_generator())):
        best = objective(inst, reg, solve_policy(inst.mean_reward, inst.ref_policy, reg))
        for _ in range(20):
            pi = stochastic_rows(rng, *inst.shape)
            assert best >= objective(inst, reg, pi) - 1e-9


def test_zero_reference_mass_stays_zero():
    ref = np.array([[0.0, 0.5, 0.5]])
    g = np.array([[1.0, 0.3, 0.2]])
    for reg in (chi2(5.0), fdiv(5.0, xlogx_generator())):
        assert f_dual_policy(g, ref, reg)[0][0, 0] == 0.0


def test_error_paths():
    g = np.array([[1.0, 0.0]])
    ref = np.array([[0.5, 0.5]])
    with pytest.raises(ValueError):
        f_dual_policy(g, ref, kl(1.0))
    with pytest.raises(ValueError):
        f_dual_policy(g, ref, chi2(0.0))
    with pytest.raises(ValueError):
        kl_softmax_policy(g, ref, -1.0)
    stuck = FDiv(lambda x: x, lambda x: x, lambda x: 1 + 0 * x, 1.0, lambda y: 0.5 + 0 * np.asarray(y))
    with pytest.raises(DualSolveError, match="dual bracket not found"):
        f_dual_policy(g, ref, fdiv(1.0, stuck))
    wiggle = FDiv(lambda x: x, lambda x: np.asarray(x) - 1, lambda x: 1 + 0 * x, 1.0,
                  lambda y: 1 + np.sin(8 * np.asarray(y)) + 0.3 * np.asarray(y))
    with pytest.raises(DualSolveError, match="f not strictly convex on range"):
        f_dual_policy(g, ref, fdiv(1.0, wiggle))


def test_negative_rewards_are_not_clipped():
    g = np.array([[-0.4, -0.9]])
    ref = np.array([[0.5, 0.5]])
    a = kl_softmax_policy(g, ref, 2.0)
    b = kl_softmax_policy(np.clip(g, 0, 1), ref, 2.0)
    assert not np.allclose(a, b)
    assert np.allclose(a, kl_softmax_policy(g + 0.9, ref, 2.0))
