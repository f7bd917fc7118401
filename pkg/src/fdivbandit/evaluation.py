"""Exact regularised objectives and diagnostic quantities.

Everything here is a finite sum over states and actions; nothing is
sampled.  A policy that puts mass where the reference policy has none has
objective -inf under every supported divergence (KL and strongly convex f
both blow up there).
"""

from __future__ import annotations

import math

import numpy as np

from .core import BanditInstance, Regularizer
from .solvers import f_dual_policy, kl_softmax_policy

SUBOPT_FLOOR = 1e-12


def support_violations(pi, pi_ref) -> list[tuple[int, int]]:
    pi = np.asarray(pi, float)
    bad = np.argwhere((pi > 0) & (np.asarray(pi_ref, float) <= 0))
    return [(int(s), int(a)) for s, a in bad]


def _xlogy_ratio(p, q):
    """Entrywise p log(p / q) with 0 log 0 = 0; entries with q = 0 < p are left
    at 0 for the caller to flag."""
    pos = (p > 0) & (q > 0)
    out = np.zeros_like(p)
    out[pos] = p[pos] * (np.log(p[pos]) - np.log(q[pos]))
    return out


def state_divergence(reg: Regularizer, pi, pi_ref) -> np.ndarray:
    """D(pi(.|s) || pi_ref(.|s)) for every state; inf on support violations."""
    pi = np.asarray(pi, float)
    pi_ref = np.asarray(pi_ref, float)
    off = np.any((pi > 0) & (pi_ref <= 0), axis=1)
    if reg.is_kl:
        d = _xlogy_ratio(pi, pi_ref).sum(axis=1)
    else:
        f = reg.fdiv.f
        on = pi_ref > 0
        ratio = np.where(on, pi / np.where(on, pi_ref, 1.0), 1.0)
        d = np.where(on, pi_ref * np.asarray(f(ratio), float), 0.0).sum(axis=1)
    return np.where(off, np.inf, d)


def objective(inst: BanditInstance, reg: Regularizer, pi, reward=None) -> float:
    """E_{rho x pi}[r] - E_rho[D(pi || pi_ref)] / eta."""
    if not reg.eta > 0:
        raise ValueError("objective needs eta > 0")
    r = inst.mean_reward if reward is None else np.asarray(reward, float)
    pi = np.asarray(pi, float)
    rho = inst.context_dist
    div = state_divergence(reg, pi, inst.ref_policy)
    if np.any(np.isinf(div[rho > 0])):
        return -math.inf
    lin = np.sum(pi * r, axis=1)
    per_state = np.where(rho > 0, lin - div / reg.eta, 0.0)
    return float(np.dot(rho, per_state))


def optimal_policy(inst: BanditInstance, reg: Regularizer) -> np.ndarray:
    if reg.is_kl:
        return kl_softmax_policy(inst.mean_reward, inst.ref_policy, reg.eta)
    return f_dual_policy(inst.mean_reward, inst.ref_policy, reg)[0]


def _floor(v: float) -> float:
    return 0.0 if abs(v) <= SUBOPT_FLOOR else v


def suboptimality(inst: BanditInstance, reg: Regularizer, pi, pi_star=None) -> float:
    """J(pi*) - J(pi); values within 1e-12 of zero are reported as 0."""
    if pi_star is None:
        pi_star = optimal_policy(inst, reg)
    jp = objective(inst, reg, pi)
    if jp == -math.inf:
        return math.inf
    return _floor(objective(inst, reg, pi_star) - jp)


def state_suboptimality(inst: BanditInstance, reg: Regularizer, pi, pi_star=None) -> np.ndarray:
    """Per-state regularised gap (not weighted by rho)."""
    if pi_star is None:
        pi_star = optimal_policy(inst, reg)
    r = inst.mean_reward
    ref = inst.ref_policy

    def per_state(p):
        return np.sum(p * r, axis=1) - state_divergence(reg, p, ref) / reg.eta

    gap = per_state(np.asarray(pi_star, float)) - per_state(np.asarray(pi, float))
    return np.where(np.abs(gap) <= SUBOPT_FLOOR, 0.0, gap)


def log_partition(g, pi_ref, eta: float) -> np.ndarray:
    """log sum_a pi_ref(a|s) exp(eta g(s, a)) per state, computed stably."""
    g = np.asarray(g, float)
    pi_ref = np.asarray(pi_ref, float)
    on = pi_ref > 0
    top = np.max(np.where(on, eta * g, -np.inf), axis=1)
    w = np.where(on, pi_ref * np.exp(np.where(on, eta * g - top[:, None], 0.0)), 0.0)
    return top + np.log(w.sum(axis=1))


def kl_subopt_identity(inst: BanditInstance, eta: float, pi) -> float:
    """E_rho KL(pi || pi*) / eta, the closed form of the KL-regularised gap."""
    pi = np.asarray(pi, float)
    ref = inst.ref_policy
    if any(inst.context_dist[s] > 0 for s, _ in support_violations(pi, ref)):
        return math.inf
    logz = log_partition(inst.mean_reward, ref, eta)
    on = pi > 0
    log_star = np.where(on, np.log(np.where(on, ref, 1.0)) + eta * inst.mean_reward - logz[:, None], 0.0)
    kl = np.where(on, pi * (np.log(np.where(on, pi, 1.0)) - log_star), 0.0).sum(axis=1)
    return _floor(float(np.dot(inst.context_dist, kl)) / eta)


def g_curve(inst: BanditInstance, f_pess, eta: float, gamma_grid) -> list[float]:
    """G(gamma) = E_{rho x pi_gamma}[(f_pess - g*)^2] where pi_gamma is the
    softmax policy of gamma f_pess + (1 - gamma) g*."""
    f_pess = np.asarray(f_pess, float)
    g_star = inst.mean_reward
    sq = (f_pess - g_star) ** 2
    out = []
    for gamma in gamma_grid:
        pi = kl_softmax_policy(gamma * f_pess + (1.0 - gamma) * g_star, inst.ref_policy, eta)
        out.append(float(np.dot(inst.context_dist, np.sum(pi * sq, axis=1))))
    return out


def moment_check(values, weights) -> float:
    """E[X^3] - E[X^2] E[X] for a discrete law."""
    x = np.asarray(values, float)
    w = np.asarray(weights, float)
    if not abs(w.sum() - 1.0) <= 1e-9 or np.any(w < 0):
        raise ValueError("weights must form a probability vector")
    m1 = float(np.dot(w, x))
    m2 = float(np.dot(w, x * x))
    m3 = float(np.dot(w, x * x * x))
    return m3 - m2 * m1
