"""Benchmark instances, hard families for minimax floors, codes, samplers.

Binary actions in the hard families use labels {-1, +1} stored at indices
{0, 1} (``-1 -> 0``).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels
from .core import (BERNOULLI, BanditInstance, Dataset, FunctionClass, PreferenceDataset,
                   make_rng, validate_instance)

MIN_REF_PROB = 1e-4


def random_instance(S: int, A: int, seed, ref_skew: float = 0.0) -> BanditInstance:
    """Uniform contexts, U[0,1] mean rewards, and a reference policy mixing
    uniform (skew 0) with a near-deterministic random row (skew 1)."""
    if S < 1 or A < 1:
        raise ValueError("S and A must be positive")
    if not 0.0 <= ref_skew <= 1.0:
        raise ValueError("ref_skew must lie in [0, 1]")
    rng = make_rng(seed)
    reward = rng.random((S, A))
    favourite = np.minimum((rng.random(S) * A).astype(int), A - 1)
    peaked = np.full((S, A), MIN_REF_PROB)
    peaked[np.arange(S), favourite] = 1.0 - (A - 1) * MIN_REF_PROB
    ref = (1.0 - ref_skew) / A + ref_skew * peaked
    ref /= ref.sum(axis=1, keepdims=True)
    return BanditInstance(np.full(S, 1.0 / S), reward, ref, BERNOULLI)


# ---------------------------------------------------------------------------
# codes
# ---------------------------------------------------------------------------

def _word_to_signs(w: int, S: int) -> np.ndarray:
    bits = [(w >> (S - 1 - k)) & 1 for k in range(S)]
    return np.array([-1 if b else 1 for b in bits], dtype=np.int8)


def gv_code(S: int, q: int = 2, seed=None) -> np.ndarray:
    """Greedy binary code in {+1,-1}^S with pairwise Hamming distance >= S/2.

    Candidates are scanned lexicographically with +1 before -1, so the
    all-(+1) word comes first.  With ``seed`` the lexicographic code is
    mapped through a seeded coordinate permutation and sign flip, which
    preserves every pairwise distance.  Returns a (|V|, S) int8 array.
    """
    if q != 2:
        raise ValueError("only binary codes are supported")
    if S < 8:
        raise ValueError("gv_code needs S >= 8")
    d = math.ceil(S / 2)
    # Plotkin: a binary code with d >= S/2 has at most 2S words, and the
    # greedy scan cannot add words past that bound.
    words = kernels.lexicode(S, d, 2 * S)
    need = math.ceil(math.exp(S / 8))
    assert len(words) >= need, f"greedy code has {len(words)} < {need} words"
    code = np.stack([_word_to_signs(w, S) for w in words])
    if seed is not None:
        rng = make_rng(seed, 0xC0DE)
        perm = np.argsort(rng.random(S), kind="stable")
        flip = np.where(rng.random(S) < 0.5, -1, 1).astype(np.int8)
        code = code[:, perm] * flip
    return code


def hamming_matrix(code: np.ndarray) -> np.ndarray:
    c = np.asarray(code)
    return (c[:, None, :] != c[None, :, :]).sum(axis=2)


# ---------------------------------------------------------------------------
# hard families
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class HardFamily:
    """Instances sharing (rho, pi_ref) that differ only in their mean rewards.

    ``index[i]`` is the sign vector (tau or codeword) of ``instances[i]``.
    ``params`` records the construction constants; ``params['delta']`` is the
    reward gap.
    """

    kind: str
    instances: list
    index: np.ndarray
    params: dict
    preference: bool = False
    shared_function_class: Optional[FunctionClass] = field(default=None)

    def __post_init__(self):
        if self.shared_function_class is None:
            self.shared_function_class = FunctionClass(np.stack([i.mean_reward for i in self.instances]))

    def __len__(self):
        return len(self.instances)

    def neighbours(self, s: int) -> list[tuple[int, int]]:
        """Pairs (i, j) whose sign vectors differ exactly at coordinate s."""
        pos = {tuple(v): i for i, v in enumerate(self.index.tolist())}
        out = []
        for i, v in enumerate(self.index.tolist()):
            if v[s] == 1:
                w = list(v)
                w[s] = -1
                j = pos.get(tuple(w))
                if j is not None:
                    out.append((i, j))
        return out

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        names = []
        for i, inst in enumerate(self.instances):
            name = f"instance_{i:05d}.json"
            inst.save(d / name)
            names.append(name)
        manifest = {
            "kind": self.kind,
            "preference": self.preference,
            "params": self.params,
            "instances": [{"file": nm, "index": v} for nm, v in zip(names, self.index.tolist())],
        }
        (d / "family.json").write_text(json.dumps(manifest, indent=2) + "\n")

    @classmethod
    def load(cls, directory) -> "HardFamily":
        d = Path(directory)
        manifest = json.loads((d / "family.json").read_text())
        insts = [BanditInstance.load(d / e["file"]) for e in manifest["instances"]]
        index = np.array([e["index"] for e in manifest["instances"]], dtype=np.int8)
        return cls(manifest["kind"], insts, index, manifest["params"], manifest["preference"])


def _check_tables(tables, what: str) -> None:
    t = np.asarray(tables)
    if np.any(t < 0) or np.any(t > 1):
        raise ValueError(f"{what}: mean rewards leave [0, 1]; increase n_target")


def _build(kind, taus, reward_fn, rho, ref, params, preference=False) -> HardFamily:
    insts = []
    for tau in taus:
        inst = BanditInstance(rho, reward_fn(np.asarray(tau)), ref, BERNOULLI)
        problems = validate_instance(inst)
        if problems:
            raise ValueError(f"{kind}: " + "; ".join(problems))
        insts.append(inst)
    return HardFamily(kind, insts, np.asarray(taus, dtype=np.int8), params, preference)


def _sign_vectors(S: int) -> np.ndarray:
    return np.array(list(itertools.product((1, -1), repeat=S)), dtype=np.int8)


def kl_hard_family(S: int, C_star: float, eta: float, n_target: int) -> HardFamily:
    """2^S instances r(s,-1) = 1/2 + tau_s delta, r(s,+1) = 1/2 - alpha with
    pi_ref(-1|s) = 1/C, C - 1 = exp(eta alpha) and delta = sqrt(S C / n)."""
    if S < 1:
        raise ValueError("S must be at least 1")
    if not eta > 4 * math.log(2):
        raise ValueError(f"eta must exceed 4 log 2 = {4 * math.log(2):.6f}")
    if not 2 < C_star <= math.exp(eta / 4):
        raise ValueError(f"C_star must lie in (2, exp(eta/4)] = (2, {math.exp(eta / 4):.6g}]")
    if n_target < 16 * S * C_star:
        raise ValueError(f"n_target must be at least 16 S C_star = {16 * S * C_star:g}")
    C = float(C_star)
    alpha = math.log(C - 1.0) / eta
    delta = math.sqrt(S * C / n_target)
    rho = np.full(S, 1.0 / S)
    ref = np.tile([1.0 / C, 1.0 - 1.0 / C], (S, 1))

    def reward(tau):
        return np.stack([0.5 + tau * delta, np.full(S, 0.5 - alpha)], axis=1)

    params = {"C_star": C, "eta": float(eta), "alpha": alpha, "delta": delta, "n_target": int(n_target)}
    return _build("kl", _sign_vectors(S), reward, rho, ref, params)


def kl_family_optimal(fam: HardFamily) -> np.ndarray:
    """Closed-form optimal policies of the KL family, shape (|family|, S, 2)."""
    eta, alpha, delta = fam.params["eta"], fam.params["alpha"], fam.params["delta"]
    C = fam.params["C_star"]
    e = np.exp(eta * (alpha + fam.index.astype(float) * delta))
    p = e / (e + C - 1.0)
    return np.stack([p, 1.0 - p], axis=2)


def kl_pair_floor(eta: float, delta: float) -> float:
    return min(eta * delta * delta / 8.0, 3.0 * delta / 10.0)


def chi2_hard_family(S: int, alpha: float, eta: float, n_target: int, seed=None) -> HardFamily:
    """Codeword-indexed instances r(s,-1) = 1/2 + v_s delta, r(s,+1) = 1/2 - v_s delta,
    uniform pi_ref, delta = 16 sqrt(alpha / (eta n))."""
    if S < 32 * math.log(2):
        raise ValueError(f"S must be at least 32 log 2 = {32 * math.log(2):.3f}")
    if not alpha > 0 or not eta > 0:
        raise ValueError("alpha and eta must be positive")
    if n_target < S * max(16.0, eta * eta / (alpha * alpha)):
        raise ValueError("n_target must be at least S * max(16, eta^2 / alpha^2)")
    delta = 16.0 * math.sqrt(alpha / (eta * n_target))
    if delta > 0.5:
        raise ValueError(f"delta = {delta:.4g} > 1/2 puts mean rewards outside [0, 1]; increase n_target")
    if delta > alpha / eta:
        raise ValueError(f"delta = {delta:.4g} exceeds alpha/eta = {alpha / eta:.4g}; "
                         "the optimal policies would leave the interior")
    code = gv_code(S, seed=seed)
    rho = np.full(S, 1.0 / S)
    ref = np.full((S, 2), 0.5)

    def reward(v):
        return np.stack([0.5 + v * delta, 0.5 - v * delta], axis=1)

    params = {"C_star": None, "eta": float(eta), "alpha": float(alpha), "delta": delta, "n_target": int(n_target)}
    return _build("chi2", code, reward, rho, ref, params)


def chi2_pair_floor(eta: float, alpha: float, delta: float) -> float:
    return eta * delta * delta / alpha


def dueling_hard_family(S: int, C_star: Optional[float], eta: float, n_target: int,
                        kind: str = "kl", alpha: Optional[float] = None) -> HardFamily:
    """Preference-feedback versions of the hard families.

    ``kind='kl'`` reuses :func:`kl_hard_family` tables.  ``kind='chi2'`` has
    r(s, a) = 1/2 + a tau_s sqrt(S / n) over all sign vectors tau with
    uniform pi_ref.
    """
    if kind == "kl":
        fam = kl_hard_family(S, C_star, eta, n_target)
        fam.kind = "dueling_kl"
        fam.preference = True
        return fam
    if kind != "chi2":
        raise ValueError(f"unknown family kind {kind!r}")
    if alpha is None or not alpha > 0 or not eta > 0:
        raise ValueError("chi2 kind needs positive alpha and eta")
    if n_target < S * max(16.0, eta * eta / (alpha * alpha)):
        raise ValueError("n_target must be at least S * max(16, eta^2 / alpha^2)")
    delta = math.sqrt(S / n_target)
    if delta > 0.25:
        raise ValueError("delta = sqrt(S / n_target) must not exceed 0.25")
    rho = np.full(S, 1.0 / S)
    ref = np.full((S, 2), 0.5)

    def reward(tau):
        return np.stack([0.5 - tau * delta, 0.5 + tau * delta], axis=1)

    params = {"C_star": C_star, "eta": float(eta), "alpha": float(alpha), "delta": delta,
              "n_target": int(n_target)}
    return _build("dueling_chi2", _sign_vectors(S), reward, rho, ref, params, preference=True)


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def _categorical(u: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Inverse-CDF draws; ``probs`` is (k,) or one row per draw."""
    cdf = np.cumsum(probs, axis=-1)
    if cdf.ndim == 1:
        idx = np.searchsorted(cdf, u, side="right")
        last = int(np.flatnonzero(probs > 0)[-1])
        return np.minimum(idx, last)
    idx = (u[:, None] >= cdf).sum(axis=1)
    last = probs.shape[1] - 1 - np.argmax((probs > 0)[:, ::-1], axis=1)
    return np.minimum(idx, last)


def sample_bandit_data(inst: BanditInstance, n: int, seed) -> Dataset:
    """n i.i.d. rows: s ~ rho, a ~ pi_ref(.|s), reward per the noise model."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = make_rng(seed)
    s = _categorical(rng.random(n), inst.context_dist)
    a = _categorical(rng.random(n), inst.ref_policy[s])
    mean = inst.mean_reward[s, a]
    if inst.noise.kind == "bernoulli":
        r = (rng.random(n) < mean).astype(float)
    else:
        r = mean + inst.noise.sigma * rng.standard_normal(n)
    return Dataset(s, a, r)


def sample_preference_data(inst: BanditInstance, n: int, seed) -> PreferenceDataset:
    """n i.i.d. comparisons with a1, a2 ~ pi_ref and Bradley-Terry labels."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = make_rng(seed)
    s = _categorical(rng.random(n), inst.context_dist)
    a1 = _categorical(rng.random(n), inst.ref_policy[s])
    a2 = _categorical(rng.random(n), inst.ref_policy[s])
    diff = inst.mean_reward[s, a1] - inst.mean_reward[s, a2]
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-diff))).astype(np.int64)
    return PreferenceDataset(s, a1, a2, y)
