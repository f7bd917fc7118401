"""Named benchmark scenarios: an instance, a hypothesis class, and a regularizer.

Rate experiments need a finite class whose best member keeps moving as n
grows; a handful of well-separated tables is identified exactly after a
few hundred samples and the suboptimality drops to 0.  The scenarios here
therefore use *ladder* classes: the truth plus members g* + theta_k phi on
a geometric grid of theta.  For estimators with no bonus the grid is
anchored at the estimator's noise scale (see :func:`anchored_ladder`).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import BanditInstance, FunctionClass, Regularizer, chi2, kl

LADDER_RATIO = math.sqrt(2.0)
# Ladder offset (in units of the estimator's standard deviation) that keeps
# the median of the selected rung away from rung boundaries.
MEDIAN_PHASE = 1.25


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    instance: BanditInstance
    function_class: FunctionClass
    regularizer: Regularizer
    preference: bool = False
    note: str = ""


def ladder_class(base, direction, theta0: float, size: int = 16,
                 ratio: float = LADDER_RATIO) -> FunctionClass:
    """Truth (index 0) plus base + theta_k * direction, theta_k = theta0 (-1/ratio)^k.

    Alternating signs make the class symmetric under rescaling by ``ratio``:
    shrinking the noise by that factor maps the selection law onto itself
    with signs flipped.
    """
    base = np.asarray(base, float)
    direction = np.asarray(direction, float)
    thetas = [0.0] + [theta0 * (-1.0 / ratio) ** k for k in range(size - 1)]
    return FunctionClass(np.stack([base + t * direction for t in thetas]), 0)


def ls_noise_scale(inst: BanditInstance, direction) -> float:
    """sqrt(n) times the std of the least-squares coefficient along ``direction``."""
    p = inst.context_dist[:, None] * inst.ref_policy
    r = inst.mean_reward
    v = r * (1.0 - r) if inst.noise.kind == "bernoulli" else np.full_like(r, inst.noise.sigma ** 2)
    phi2 = np.asarray(direction, float) ** 2
    info = float(np.sum(p * phi2))
    return math.sqrt(float(np.sum(p * phi2 * v)) / info ** 2)


def bt_noise_scale(inst: BanditInstance, direction) -> float:
    """sqrt(n) times the asymptotic std of the Bradley-Terry MLE along ``direction``."""
    phi = np.asarray(direction, float)
    r = inst.mean_reward
    info = 0.0
    for s in range(inst.num_states):
        p = inst.ref_policy[s]
        d = r[s][:, None] - r[s][None, :]
        sig = 1.0 / (1.0 + np.exp(-d))
        dphi = phi[s][:, None] - phi[s][None, :]
        info += inst.context_dist[s] * float(np.sum(np.outer(p, p) * sig * (1 - sig) * dphi ** 2))
    return 1.0 / math.sqrt(info)


def anchored_ladder(inst: BanditInstance, direction, noise_scale: float, n_min: int,
                    rungs_above: int = 2, size: int = 16) -> FunctionClass:
    """Ladder whose rungs sit at MEDIAN_PHASE * noise_scale / sqrt(n) for n = n_min * 2^j."""
    theta0 = MEDIAN_PHASE * noise_scale / math.sqrt(n_min) * LADDER_RATIO ** rungs_above
    return ladder_class(inst.mean_reward, direction, theta0, size)


def _kl_rate() -> Scenario:
    base = np.array([[0.5, 0.6], [0.55, 0.45]])
    inst = BanditInstance([0.5, 0.5], base, np.full((2, 2), 0.5))
    F = ladder_class(base, [[1.0, 0.5], [0.5, 1.0]], 0.3)
    return Scenario("kl_rate", inst, F, kl(1.0),
                    note="bonus-dominated: Gamma differs across actions, so its shrinkage sets the rate")


def _chi2_skewed() -> Scenario:
    base = np.array([[0.4, 0.7], [0.6, 0.3]])
    ref = np.array([[0.95, 0.05], [0.05, 0.95]])
    inst = BanditInstance([0.5, 0.5], base, ref)
    phi = np.array([[1.0, -1.0], [1.0, -1.0]])
    F = anchored_ladder(inst, phi, ls_noise_scale(inst, phi), 128)
    return Scenario("chi2_skewed", inst, F, chi2(1.0, 1.0),
                    note="greedy policy has density ratio 20 against pi_ref")


def _dueling() -> Scenario:
    base = np.array([[0.3, 0.7], [0.6, 0.4]])
    ref = np.array([[0.7, 0.3], [0.3, 0.7]])
    inst = BanditInstance([0.5, 0.5], base, ref)
    phi = np.array([[1.0, -1.0], [-1.0, 1.0]])
    F = anchored_ladder(inst, phi, bt_noise_scale(inst, phi), 128)
    return Scenario("dueling", inst, F, kl(1.0), preference=True)


def _dueling_chi2() -> Scenario:
    sc = _dueling()
    return Scenario("dueling_chi2", sc.instance, sc.function_class, chi2(1.0, 1.0), preference=True)


def _pessimism() -> Scenario:
    # The best action in each state gets 1% of the reference mass; the class
    # disagrees about it by +-theta, which least squares cannot resolve from
    # ~20 samples per cell.
    q, S = 0.01, 2
    base = np.array([[0.5, 0.6]] * S)
    ref = np.array([[1 - q, q]] * S)
    inst = BanditInstance(np.full(S, 1.0 / S), base, ref)
    members = [base]
    for theta in (0.1, 0.2, 0.3, 0.4):
        for signs in itertools.product((1, -1), repeat=S):
            m = base.copy()
            m[:, 1] += theta * np.array(signs)
            members.append(m)
    F = FunctionClass(np.stack(members[:16]), 0)
    return Scenario("pessimism", inst, F, kl(20.0),
                    note="undercovered best action; large eta amplifies overestimates")


def _singleton() -> Scenario:
    base = np.array([[0.2, 0.8], [0.6, 0.4]])
    inst = BanditInstance([0.5, 0.5], base, np.full((2, 2), 0.5))
    return Scenario("singleton", inst, FunctionClass(base[None], 0), kl(1.0))


SCENARIOS: dict[str, Callable[[], Scenario]] = {
    "kl_rate": _kl_rate,
    "chi2_skewed": _chi2_skewed,
    "dueling": _dueling,
    "dueling_chi2": _dueling_chi2,
    "pessimism": _pessimism,
    "singleton": _singleton,
}


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]()
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
