"""End-to-end offline learners built from estimation, bonuses, and solvers.

* ``run_kl_pcb``   least squares, pessimistic bonus, KL softmax
* ``run_f_cb``     least squares, f-divergence dual solve (no bonus)
* ``run_kl_pcdb``  Bradley-Terry MLE, dueling bonus, KL softmax
* ``run_f_cdb``    Bradley-Terry MLE, f-divergence dual solve
* ``run_ls_softmax`` the non-pessimistic baseline (least squares + softmax)
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .core import Dataset, Diagnostics, FunctionClass, PreferenceDataset, Regularizer
from .estimation import covering_number, fit_least_squares, fit_mle_bt
from .solvers import f_dual_policy, kl_softmax_policy
from .uncertainty import BANDIT, DUELING, beta_radius, bonus_table

DEFAULT_DELTA = 0.05


def _radius(F: FunctionClass, n: int, delta: float, eps_c: Optional[float]) -> tuple[float, int]:
    eps_c = 1.0 / n if eps_c is None else eps_c
    cover = covering_number(F, eps_c)
    return beta_radius(n, delta, eps_c, cover), cover


def _pessimistic(F, g_hat, pi_ref, rho, beta, variant):
    bonus = bonus_table(F, pi_ref, rho, beta, variant).values
    on = np.asarray(pi_ref) > 0
    if np.any(np.isinf(bonus) & on):
        raise ValueError("class not covered by reference policy")
    # off-support entries never receive mass; keep them finite for the solver
    f_pess = np.where(on, g_hat - np.where(on, bonus, 0.0), g_hat)
    return f_pess, bonus


def _truth(F: FunctionClass, g_star):
    if g_star is not None:
        return np.asarray(g_star, float)
    return F.truth


def run_kl_pcb(F: FunctionClass, data: Dataset, pi_ref, rho, eta: float,
               delta: float = DEFAULT_DELTA, *, pessimism: bool = True,
               eps_c: Optional[float] = None, g_star=None) -> tuple[np.ndarray, Diagnostics]:
    """Softmax policy of the pessimistic least-squares reward.

    ``pessimism=False`` zeroes the bonus, which reduces to the plain
    least-squares-plus-softmax baseline.
    """
    k, sse = fit_least_squares(F, data)
    g_hat = F.members[k]
    n = len(data)
    if pessimism:
        beta, cover = _radius(F, n, delta, eps_c)
    else:
        beta, cover = 0.0, None
    f_pess, bonus = _pessimistic(F, g_hat, pi_ref, rho, beta, BANDIT)
    pi = kl_softmax_policy(f_pess, pi_ref, eta)
    truth = _truth(F, g_star)
    event = None
    if truth is not None:
        event = bool(np.all(np.abs(g_hat - truth) <= bonus))
    diag = Diagnostics(k, beta, event, None, bonus,
                       {"sse": sse, "cover_n": cover, "f_pess": f_pess, "n": n})
    return pi, diag


def run_ls_softmax(F: FunctionClass, data: Dataset, pi_ref, rho, eta: float,
                   **kw) -> tuple[np.ndarray, Diagnostics]:
    return run_kl_pcb(F, data, pi_ref, rho, eta, pessimism=False, **kw)


def run_f_cb(F: FunctionClass, data: Dataset, pi_ref, rho, reg: Regularizer,
             *, g_star=None) -> tuple[np.ndarray, Diagnostics]:
    """Dual-solver policy of the least-squares reward; no bonus."""
    k, sse = fit_least_squares(F, data)
    g_hat = F.members[k]
    pi, reports = f_dual_policy(g_hat, pi_ref, reg)
    truth = _truth(F, g_star)
    hit = None if truth is None else bool(np.array_equal(g_hat, truth))
    return pi, Diagnostics(k, 0.0, None, None, None,
                           {"sse": sse, "reports": reports, "exact_fit": hit, "n": len(data)})


def dueling_bias(g_hat, g_star, bonus) -> tuple[bool, np.ndarray]:
    """Per-state b in [-1, 1] with |g_hat - g_star - b| <= bonus, if one exists.

    Feasible b form the interval [max(diff - bonus), min(diff + bonus)]
    intersected with [-1, 1]; the returned b is its clamped midpoint.
    """
    diff = np.asarray(g_hat, float) - np.asarray(g_star, float)
    bonus = np.asarray(bonus, float)
    lo = np.max(diff - bonus, axis=1)
    hi = np.min(diff + bonus, axis=1)
    lo_c = np.maximum(lo, -1.0)
    hi_c = np.minimum(hi, 1.0)
    ok = bool(np.all(lo_c <= hi_c))
    return ok, np.clip(0.5 * (lo_c + hi_c), -1.0, 1.0)


def run_kl_pcdb(F: FunctionClass, data: PreferenceDataset, pi_ref, rho, eta: float,
                delta: float = DEFAULT_DELTA, *, pessimism: bool = True,
                eps_c: Optional[float] = None, g_star=None) -> tuple[np.ndarray, Diagnostics]:
    """Softmax policy of the Bradley-Terry MLE minus the dueling bonus."""
    k, nll = fit_mle_bt(F, data)
    g_hat = F.members[k]
    n = len(data)
    if pessimism:
        beta, cover = _radius(F, n, delta, eps_c)
    else:
        beta, cover = 0.0, None
    f_pess, bonus = _pessimistic(F, g_hat, pi_ref, rho, beta, DUELING)
    pi = kl_softmax_policy(f_pess, pi_ref, eta)
    truth = _truth(F, g_star)
    event, bias = None, None
    if truth is not None:
        event, bias = dueling_bias(g_hat, truth, bonus)
    diag = Diagnostics(k, beta, event, bias, bonus,
                       {"nll": nll, "cover_n": cover, "f_pess": f_pess, "n": n})
    return pi, diag


def run_f_cdb(F: FunctionClass, data: PreferenceDataset, pi_ref, rho, reg: Regularizer,
              *, g_star=None) -> tuple[np.ndarray, Diagnostics]:
    """Dual-solver policy of the Bradley-Terry MLE; no bonus."""
    k, nll = fit_mle_bt(F, data)
    pi, reports = f_dual_policy(F.members[k], pi_ref, reg)
    return pi, Diagnostics(k, 0.0, None, None, None, {"nll": nll, "reports": reports, "n": len(data)})
