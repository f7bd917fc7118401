"""Exhaustive reward estimation over a finite hypothesis class.

Both estimators reduce the data to per-cell sufficient statistics first, so
scoring all K members costs O(K * S * A^2) regardless of n.
"""

from __future__ import annotations

import threading
from functools import lru_cache

import numpy as np

from . import kernels
from .core import Dataset, FunctionClass, PreferenceDataset

# two scores closer than this (relative) count as a tie -> lowest index
TIE_REL = 1e-12


def _argmin_lowest(scores: np.ndarray) -> int:
    best = float(np.min(scores))
    tol = TIE_REL * max(1.0, abs(best))
    return int(np.flatnonzero(scores <= best + tol)[0])


def _check(F: FunctionClass, data) -> None:
    if F is None or len(F) == 0:
        raise ValueError("empty hypothesis class")
    if data is None or len(data) == 0:
        raise ValueError("no data")
    S, A = F.shape
    problems = data.violations(S, A)
    if problems:
        raise ValueError("; ".join(problems))


def ls_scores(F: FunctionClass, data: Dataset) -> np.ndarray:
    """Sum of squared residuals for every member, shape (K,)."""
    _check(F, data)
    S, A = F.shape
    cell = data.s * A + data.a
    cnt = np.bincount(cell, minlength=S * A).astype(float)
    tot = np.bincount(cell, weights=data.r, minlength=S * A)
    g = F.members.reshape(len(F), -1)
    return g * g @ cnt - 2.0 * (g @ tot) + float(np.dot(data.r, data.r))


def fit_least_squares(F: FunctionClass, data: Dataset) -> tuple[int, float]:
    """Index of the least-squares member and its residual sum of squares."""
    k = _argmin_lowest(ls_scores(F, data))
    resid = F.members[k][data.s, data.a] - data.r
    return k, float(np.dot(resid, resid))


def bt_scores(F: FunctionClass, data: PreferenceDataset) -> np.ndarray:
    """Bradley-Terry negative log-likelihood for every member, shape (K,)."""
    _check(F, data)
    S, A = F.shape
    idx = (data.s * A + data.a1) * A + data.a2
    wins = np.bincount(idx, weights=data.y.astype(float), minlength=S * A * A)
    total = np.bincount(idx, minlength=S * A * A).astype(float)
    losses = total - wins
    used = np.flatnonzero(total)
    s, rem = np.divmod(used, A * A)
    a1, a2 = np.divmod(rem, A)
    m = F.members
    d = m[:, s, a1] - m[:, s, a2]
    # -log sigma(d) = log(1 + e^{-d})
    return np.logaddexp(0.0, -d) @ wins[used] + np.logaddexp(0.0, d) @ losses[used]


def fit_mle_bt(F: FunctionClass, data: PreferenceDataset) -> tuple[int, float]:
    """Index of the maximum-likelihood member and its negative log-likelihood."""
    nll = bt_scores(F, data)
    k = _argmin_lowest(nll)
    return k, float(nll[k])


def sup_distances(F: FunctionClass) -> np.ndarray:
    g = F.members.reshape(len(F), -1)
    return np.max(np.abs(g[:, None, :] - g[None, :, :]), axis=2)


_cover_lock = threading.Lock()


@lru_cache(maxsize=256)
def _cover_cached(digest: str, eps: float, members_bytes: bytes, shape: tuple) -> int:
    members = np.frombuffer(members_bytes, dtype=np.float64).reshape(shape)
    return _cover(members, eps)


def _cover(members: np.ndarray, eps: float) -> int:
    K = members.shape[0]
    if K == 1:
        return 1
    g = members.reshape(K, -1)
    dist = np.max(np.abs(g[:, None, :] - g[None, :, :]), axis=2)
    # Greedy is not monotone in eps on its own; a cover found at any
    # smaller radius is still a cover at eps, so take the best over all
    # radii where the ball structure changes.
    radii = np.unique(dist[dist <= eps])
    best = K
    for t in radii[::-1]:
        best = min(best, kernels.greedy_cover(dist, float(t)))
        if best == 1:
            break
    return int(best)


def covering_number(F: FunctionClass, eps: float) -> int:
    """Size of a greedy sup-norm eps-cover of F (an upper bound on the minimum).

    Balls are closed and centred on members.  The value is non-increasing
    in eps and equals |F| once eps is below the smallest pairwise distance.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    with _cover_lock:
        return _cover_cached(F.digest(), float(eps), F.members.tobytes(), F.members.shape)
