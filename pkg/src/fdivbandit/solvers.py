"""Per-state maximisers of <pi, g> - D(pi || pi_ref) / eta over the simplex.

* KL: closed-form softmax tilt of the reference policy.
* Strongly convex f: KKT stationarity gives
  pi(a) = pi_ref(a) * max(0, (f')^{-1}(eta (g(a) - lam))), and the total
  mass is non-increasing in lam, so lam is found by bisection.
* chi^2: the same solution by exact water-filling over the active set.

``lam`` in :class:`DualSolveReport` is the KKT multiplier above.  Actions
with g(a) <= lam + f'(0+)/eta receive no mass; that water level is
reported as ``cutoff`` (for f = alpha (x-1)^2 / 2 it is lam - alpha/eta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import Regularizer

NORM_TOL = 1e-10
MAX_ITER = 200
MAX_EXPAND = 64
_TINY = 1e-300


class DualSolveError(ArithmeticError):
    pass


def kl_softmax_policy(g, pi_ref, eta: float) -> np.ndarray:
    """pi(a|s) proportional to pi_ref(a|s) exp(eta g(s, a)), max-shifted per state."""
    g = np.asarray(g, float)
    pi_ref = np.asarray(pi_ref, float)
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    if eta == 0:
        return pi_ref.copy()
    on = pi_ref > 0
    top = np.max(np.where(on, g, -np.inf), axis=1, keepdims=True)
    z = np.where(on, eta * (g - top), 0.0)
    w = np.where(on, pi_ref * np.exp(z), 0.0)
    return w / w.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class DualSolveReport:
    lam: float
    cutoff: float
    iterations: int
    kkt_residual: float
    normalization_residual: float


def _inverse_fprime(fd):
    """Vectorised (f')^{-1} clamped at 0 (i.e. max{0, (f')^{-1}(y)})."""
    if fd.f_prime_inv is not None:
        inv = fd.f_prime_inv
        return lambda y: np.maximum(0.0, np.asarray(inv(y), float))

    fp = fd.f_prime

    def solve(y):
        y = np.atleast_1d(np.asarray(y, float))
        out = np.zeros_like(y)
        live = np.asarray(fp(np.full_like(y, _TINY)), float) < y
        if not np.any(live):
            return out
        yl = y[live]
        lo = np.full_like(yl, _TINY)
        hi = np.ones_like(yl)
        for _ in range(1100):
            short = np.asarray(fp(hi), float) < yl
            if not np.any(short):
                break
            lo = np.where(short, hi, lo)
            hi = np.where(short, hi * 2.0, hi)
        else:
            raise DualSolveError("f' is bounded above; cannot invert")
        for _ in range(MAX_ITER):
            mid = 0.5 * (lo + hi)
            done = (mid <= lo) | (mid >= hi)
            if np.all(done):
                break
            below = np.asarray(fp(mid), float) < yl
            lo = np.where(below & ~done, mid, lo)
            hi = np.where(~below & ~done, mid, hi)
        out[live] = 0.5 * (lo + hi)
        return out

    return solve


def f_dual_policy(g, pi_ref, reg: Regularizer) -> tuple[np.ndarray, list[DualSolveReport]]:
    """KKT dual solve for an f-divergence regularizer; one report per state.

    All states are bisected together.  The bracket
    [min g - f'(1)/eta, max g - f'(1)/eta] always contains the root, since
    lam = g(a) - f'(1)/eta puts action a exactly at pi = pi_ref.
    """
    if reg.is_kl:
        raise ValueError("f_dual_policy needs an f-divergence regularizer")
    if not reg.eta > 0:
        raise ValueError("eta must be positive for f-divergence regularization")
    g = np.asarray(g, float)
    pi_ref = np.asarray(pi_ref, float)
    fd = reg.fdiv
    eta = float(reg.eta)
    inv = _inverse_fprime(fd)
    fp1 = float(fd.f_prime(np.float64(1.0)))
    on = pi_ref > 0
    S, A = g.shape

    def mass(lam):
        y = eta * (g - lam[:, None])
        x = np.where(on, inv(np.where(on, y, 0.0).ravel()).reshape(S, A), 0.0)
        return x, np.sum(pi_ref * x, axis=1)

    gmin = np.min(np.where(on, g, np.inf), axis=1)
    gmax = np.max(np.where(on, g, -np.inf), axis=1)
    lo = gmin - fp1 / eta
    hi = gmax - fp1 / eta
    _, m_lo = mass(lo)
    _, m_hi = mass(hi)
    # the analytic bracket can only fail through rounding; widen a little
    for _ in range(MAX_EXPAND):
        bad_lo = m_lo < 1.0 - NORM_TOL
        bad_hi = m_hi > 1.0 + NORM_TOL
        if not (np.any(bad_lo) or np.any(bad_hi)):
            break
        width = np.maximum(hi - lo, 1e-12)
        lo = np.where(bad_lo, lo - width, lo)
        hi = np.where(bad_hi, hi + width, hi)
        _, m_lo = mass(lo)
        _, m_hi = mass(hi)
    else:
        raise DualSolveError("dual bracket not found")

    iters = np.zeros(S, dtype=int)
    for it in range(MAX_ITER):
        mid = 0.5 * (lo + hi)
        active = (mid > lo) & (mid < hi)
        if not np.any(active):
            break
        _, m_mid = mass(mid)
        slack = NORM_TOL
        if np.any(active & ((m_mid > m_lo + slack) | (m_mid < m_hi - slack))):
            raise DualSolveError("f not strictly convex on range")
        go_up = active & (m_mid > 1.0)
        go_dn = active & ~go_up
        lo = np.where(go_up, mid, lo)
        m_lo = np.where(go_up, m_mid, m_lo)
        hi = np.where(go_dn, mid, hi)
        m_hi = np.where(go_dn, m_mid, m_hi)
        iters += active

    # pick the endpoint whose mass is closer to 1, then renormalise
    lam = np.where(np.abs(m_lo - 1.0) <= np.abs(m_hi - 1.0), lo, hi)
    x, total = mass(lam)
    probs = pi_ref * x
    norm_res = np.abs(total - 1.0)
    probs = probs / total[:, None]

    fp0 = float(fd.f_prime(np.float64(_TINY)))
    reports = []
    for s in range(S):
        sup = on[s] & (x[s] > 0)
        if np.any(sup):
            stat = np.asarray(fd.f_prime(x[s][sup]), float) - eta * (g[s][sup] - lam[s])
            kkt = float(np.max(np.abs(stat)))
        else:
            kkt = math.inf
        reports.append(DualSolveReport(float(lam[s]), float(lam[s] + fp0 / eta), int(iters[s]),
                                       kkt, float(norm_res[s])))
    return probs, reports


def chi2_water_level(g_row, ref_row, eta: float, alpha: float) -> Fraction:
    """Exact lam with sum_a pi_ref(a) (eta/alpha) (g(a) - lam)_+ = 1, as a Fraction."""
    c = Fraction(eta) / Fraction(alpha)
    items = sorted(((Fraction(float(gv)), Fraction(float(p))) for gv, p in zip(g_row, ref_row) if p > 0),
                   key=lambda t: t[0], reverse=True)
    if not items:
        raise ValueError("reference row has no support")
    wsum = Fraction(0)
    gsum = Fraction(0)
    lam = None
    for k, (gv, p) in enumerate(items):
        wsum += p
        gsum += p * gv
        cand = (gsum - 1 / c) / wsum
        nxt = items[k + 1][0] if k + 1 < len(items) else None
        # active set = top k+1 actions iff every active g exceeds cand and the next does not
        if cand < gv and (nxt is None or nxt <= cand):
            lam = cand
            break
    assert lam is not None
    return lam


def chi2_closed_form(g, pi_ref, eta: float, alpha: float) -> np.ndarray:
    """Water-filling solution for f = alpha (x - 1)^2 / 2:
    pi = pi_ref * (eta/alpha) * (g - lam)_+ with lam solved exactly."""
    if not eta > 0 or not alpha > 0:
        raise ValueError("eta and alpha must be positive")
    g = np.asarray(g, float)
    pi_ref = np.asarray(pi_ref, float)
    c = Fraction(eta) / Fraction(alpha)
    out = np.zeros_like(g)
    for s in range(g.shape[0]):
        lam = chi2_water_level(g[s], pi_ref[s], eta, alpha)
        for a in range(g.shape[1]):
            if pi_ref[s, a] > 0:
                gv = Fraction(float(g[s, a]))
                if gv > lam:
                    out[s, a] = float(Fraction(float(pi_ref[s, a])) * c * (gv - lam))
    return out


def solve_policy(g, pi_ref, reg: Regularizer) -> np.ndarray:
    """Dispatch to the softmax or dual solver according to the regularizer kind."""
    if reg.is_kl:
        return kl_softmax_policy(g, pi_ref, reg.eta)
    return f_dual_policy(g, pi_ref, reg)[0]
