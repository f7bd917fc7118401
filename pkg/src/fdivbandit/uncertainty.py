"""D^2 divergences, confidence radius, pessimism bonuses, concentrability.

D^2 tables are O(K^2 S A) to build and get reused across many calls with
the same (class, policy, context law), so they are cached by content hash.
"""

from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import FunctionClass

BANDIT = "bandit"
DUELING = "dueling"


def beta_radius(n: int, delta: float, eps_c: float, cover_n: int) -> float:
    """Confidence radius sqrt(128 log(2N/delta) / (3n) + 18 eps_c)."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if eps_c < 0 or cover_n < 1:
        raise ValueError("eps_c must be nonnegative and cover_n positive")
    return math.sqrt(128.0 * math.log(2.0 * cover_n / delta) / (3.0 * n) + 18.0 * eps_c)


class _D2Cache:
    def __init__(self, maxsize: int = 512):
        self._lock = threading.Lock()
        self._data: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        self.maxsize = maxsize
        self.hits = 0

    @staticmethod
    def key(F: FunctionClass, pi, rho) -> str:
        h = hashlib.sha1(F.digest().encode())
        h.update(np.ascontiguousarray(pi, dtype=np.float64).tobytes())
        h.update(np.ascontiguousarray(rho, dtype=np.float64).tobytes())
        return h.hexdigest()

    def get(self, F, pi, rho):
        k = self.key(F, pi, rho)
        with self._lock:
            hit = self._data.get(k)
            if hit is not None:
                self.hits += 1
                return hit
        tables = kernels.d2_tables(F.members, pi, rho)
        for t in tables:
            t.setflags(write=False)
        with self._lock:
            if len(self._data) >= self.maxsize:
                self._data.pop(next(iter(self._data)))
            self._data.setdefault(k, tables)
            return self._data[k]

    def clear(self) -> None:
        with self._lock:
            self._data.clear()
            self.hits = 0


D2_CACHE = _D2Cache()


def d2_table(F: FunctionClass, pi, rho, variant: str = BANDIT) -> np.ndarray:
    """D^2 value at every (s, a); ``inf`` where some pair differs only off-support."""
    pi = np.asarray(pi, float)
    rho = np.asarray(rho, float)
    if pi.shape != F.shape or rho.shape != (F.shape[0],):
        raise ValueError("policy / context shapes do not match the class")
    bandit, dueling = D2_CACHE.get(F, pi, rho)
    if variant == BANDIT:
        return bandit
    if variant == DUELING:
        return dueling
    raise ValueError(f"unknown D^2 variant {variant!r}")


def d2_bandit(F: FunctionClass, pi, rho, s: int, a: int) -> float:
    return float(d2_table(F, pi, rho, BANDIT)[s, a])


def d2_dueling(F: FunctionClass, pi, rho, s: int, a: int) -> float:
    """Dueling D^2: differences are centred by their pi-mean per state
    (clamped to [-1, 1]) and normalised by the expected pi-variance."""
    return float(d2_table(F, pi, rho, DUELING)[s, a])


@dataclass(frozen=True, eq=False)
class BonusTable:
    values: np.ndarray
    beta: float
    variant: str = BANDIT

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


def bonus_table(F: FunctionClass, pi_ref, rho, beta: float, variant: str = BANDIT) -> BonusTable:
    """Gamma(s, a) = beta * sqrt(D^2(s, a)) under the reference policy."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    d2 = d2_table(F, pi_ref, rho, variant)
    if beta == 0:
        vals = np.zeros_like(d2)
    else:
        vals = beta * np.sqrt(d2)
    vals.setflags(write=False)
    return BonusTable(vals, float(beta), variant)


def density_ratio_concentrability(pi, pi_ref) -> float:
    """max over (s, a) of pi / pi_ref with 0/0 = 0 and x/0 = inf."""
    pi = np.asarray(pi, float)
    pi_ref = np.asarray(pi_ref, float)
    if pi.shape != pi_ref.shape:
        raise ValueError("policy shapes differ")
    if np.any((pi > 0) & (pi_ref <= 0)):
        return math.inf
    pos = pi_ref > 0
    if not np.any(pos):
        return 0.0
    return float(np.max(pi[pos] / pi_ref[pos]))


def d2_concentrability(F: FunctionClass, pi_eval, pi_ref, rho, mode: str = "single",
                       variant: str = BANDIT) -> float:
    """D^2 coverage of the reference policy: sup over (s, a) for ``mode='all'``,
    expectation under rho x pi_eval for ``mode='single'``."""
    d2 = d2_table(F, pi_ref, rho, variant)
    if mode == "all":
        return float(np.max(d2))
    if mode != "single":
        raise ValueError(f"unknown mode {mode!r}")
    w = np.asarray(rho, float)[:, None] * np.asarray(pi_eval, float)
    hit = w > 0
    if np.any(np.isinf(d2[hit])):
        return math.inf
    return float(np.sum(w[hit] * d2[hit]))
