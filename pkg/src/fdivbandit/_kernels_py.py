"""Pure-Python/numpy implementations of the hot kernels.

Mirrors ``_kernels.pyx`` function for function; used when the compiled
extension is unavailable or ``FDIVBANDIT_PURE_PYTHON=1`` is set.
"""

import numpy as np

# Differences smaller than ZERO_REL * max|g - h| are treated as exact zeros
# so that rounding noise does not turn 0/0 pairs into O(1) ratios.
ZERO_REL = 1e-12

_PAIR_CHUNK = 4096


def _pairs(K):
    i, j = np.triu_indices(K, k=1)
    return i, j


def d2_tables(members, pi, rho):
    """Bandit and dueling D^2 tables, each (S, A); ``inf`` marks x/0 pairs."""
    members = np.ascontiguousarray(members, dtype=np.float64)
    pi = np.asarray(pi, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    K, S, A = members.shape
    out_b = np.zeros((S, A))
    out_d = np.zeros((S, A))
    if K < 2:
        return out_b, out_d
    ii, jj = _pairs(K)
    w = rho[:, None] * pi
    for lo in range(0, ii.size, _PAIR_CHUNK):
        d = members[ii[lo:lo + _PAIR_CHUNK]] - members[jj[lo:lo + _PAIR_CHUNK]]
        scale = np.abs(d).reshape(d.shape[0], -1).max(axis=1)
        keep = scale > 0
        if not np.any(keep):
            continue
        d, scale = d[keep], scale[keep]
        tol = ZERO_REL * scale[:, None, None]

        db = np.where(np.abs(d) <= tol, 0.0, d)
        num_b = db * db
        den_b = np.einsum("psa,sa->p", num_b, w)
        out_b = np.maximum(out_b, _ratio_max(num_b, den_b))

        mean = np.einsum("psa,sa->ps", d, pi)
        e = d - mean[:, :, None]
        e = np.where(np.abs(e) <= tol, 0.0, e)
        den_d = np.einsum("psa,sa->p", e * e, w)
        c = d - np.clip(mean, -1.0, 1.0)[:, :, None]
        c = np.where(np.abs(c) <= tol, 0.0, c)
        out_d = np.maximum(out_d, _ratio_max(c * c, den_d))
    return out_b, out_d


def _ratio_max(num, den):
    pos = den > 0
    r = np.zeros_like(num)
    r[pos] = num[pos] / den[pos][:, None, None]
    zero = ~pos
    if np.any(zero):
        r[zero] = np.where(num[zero] > 0, np.inf, 0.0)
    return r.max(axis=0)


def greedy_cover(dist, eps):
    """Greedy set cover of members by sup-norm eps-balls centred on members."""
    dist = np.asarray(dist, dtype=np.float64)
    cover = dist <= eps
    uncovered = np.ones(dist.shape[0], dtype=bool)
    count = 0
    while uncovered.any():
        gain = (cover & uncovered[None, :]).sum(axis=1)
        j = int(np.argmax(gain))
        uncovered &= ~cover[j]
        count += 1
    return count


def lexicode(n, d, limit):
    """Lexicographic greedy binary code of length ``n`` and distance ``d``.

    Returns codewords as Python ints (bit n-1 is the first coordinate) in
    the order the greedy scan keeps them.  Every integer below the last
    kept word is already ruled out, so each step searches for the smallest
    x above it at distance >= d from all kept words: a depth-first search
    over bits from the most significant, pruning prefixes that can no
    longer reach distance d from some kept word.  Stops early once
    ``limit`` words are kept.
    """
    code = [0]
    while len(code) < limit:
        nxt = _next_word(n, d, code, code[-1] + 1)
        if nxt is None:
            break
        code.append(nxt)
    return code


def _next_word(n, d, words, lo):
    if lo >> n:
        return None
    bits = np.array([[(c >> (n - 1 - k)) & 1 for k in range(n)] for c in words], dtype=np.int64)

    def search(k, dist, tight):
        if np.any(dist + (n - k) < d):
            return None
        if k == n:
            return 0
        lob = (lo >> (n - 1 - k)) & 1
        for b in ((lob, 1) if tight and lob == 0 else (1,) if tight else (0, 1)):
            tail = search(k + 1, dist + (bits[:, k] != b), tight and b == lob)
            if tail is not None:
                return (b << (n - 1 - k)) | tail
        return None

    return search(0, np.zeros(len(words), dtype=np.int64), True)
