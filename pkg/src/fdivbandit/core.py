"""Domain types shared by every module: instances, regularizers, hypothesis
classes, policies, datasets, and seeded randomness.

All arrays are float64 and treated as read-only after construction.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

INPUT_TOL = 1e-12
POLICY_TOL = 1e-10


def _frozen(x, dtype=np.float64) -> np.ndarray:
    arr = np.array(x, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# randomness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RngSeed:
    """64-bit seed for numpy's PCG64 bit generator.

    Streams are derived with ``numpy.random.SeedSequence`` so that each
    task gets an independent stream from ``(seed, *task)``.  PCG64 output is
    bit-stable across platforms; samplers in this package only consume
    ``Generator.random`` (uniform doubles) and ``standard_normal`` so the
    drawn values do not depend on higher-level numpy sampling algorithms.
    """

    seed: int

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def generator(self, *task: int) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=tuple(int(t) for t in task))
        return np.random.Generator(np.random.PCG64(ss))


def make_rng(seed, *task: int) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, RngSeed):
        seed = RngSeed(int(seed))
    return seed.generator(*task)


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Noise:
    kind: str = "bernoulli"
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("bernoulli", "gaussian"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("noise sigma must be nonnegative")

    def to_dict(self) -> dict:
        if self.kind == "gaussian":
            return {"kind": "gaussian", "sigma": self.sigma}
        return {"kind": "bernoulli"}


BERNOULLI = Noise()


def gaussian(sigma: float) -> Noise:
    return Noise("gaussian", float(sigma))


@dataclass(frozen=True, eq=False)
class BanditInstance:
    """Finite contextual bandit: context law, mean rewards, reference policy.

    Construction does not validate; call :func:`validate_instance` (or
    :meth:`check`) to get the list of violated invariants.
    """

    context_dist: np.ndarray
    mean_reward: np.ndarray
    ref_policy: np.ndarray
    noise: Noise = BERNOULLI

    def __post_init__(self):
        object.__setattr__(self, "context_dist", _frozen(self.context_dist))
        object.__setattr__(self, "mean_reward", _frozen(self.mean_reward))
        object.__setattr__(self, "ref_policy", _frozen(self.ref_policy))
        if self.mean_reward.ndim != 2:
            raise ValueError("mean_reward must be an S x A matrix")
        if self.ref_policy.shape != self.mean_reward.shape:
            raise ValueError("ref_policy and mean_reward shapes differ")
        if self.context_dist.shape != (self.mean_reward.shape[0],):
            raise ValueError("context_dist length must equal num_states")

    @property
    def num_states(self) -> int:
        return self.mean_reward.shape[0]

    @property
    def num_actions(self) -> int:
        return self.mean_reward.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.mean_reward.shape

    def check(self) -> "BanditInstance":
        problems = validate_instance(self)
        if problems:
            raise ValueError("invalid instance: " + "; ".join(problems))
        return self

    def with_reward(self, mean_reward) -> "BanditInstance":
        return BanditInstance(self.context_dist, mean_reward, self.ref_policy, self.noise)

    def to_dict(self) -> dict:
        return {
            "num_states": self.num_states,
            "num_actions": self.num_actions,
            "context_dist": self.context_dist.tolist(),
            "mean_reward": self.mean_reward.tolist(),
            "ref_policy": self.ref_policy.tolist(),
            "noise": self.noise.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BanditInstance":
        noise = d.get("noise", {"kind": "bernoulli"})
        inst = cls(
            np.asarray(d["context_dist"], dtype=float),
            np.asarray(d["mean_reward"], dtype=float).reshape(d["num_states"], d["num_actions"]),
            np.asarray(d["ref_policy"], dtype=float).reshape(d["num_states"], d["num_actions"]),
            Noise(noise.get("kind", "bernoulli"), float(noise.get("sigma", 0.0))),
        )
        return inst

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "BanditInstance":
        return cls.from_dict(json.loads(Path(path).read_text()))


def validate_instance(inst: BanditInstance) -> list[str]:
    """Return every violated instance invariant as a readable message."""
    out = []
    S, A = inst.shape
    if S < 1:
        out.append("num_states must be positive")
    if A < 1:
        out.append("num_actions must be positive")
    rho = inst.context_dist
    if np.any(~np.isfinite(rho)) or np.any(rho < 0):
        bad = [int(s) for s in np.flatnonzero(~(rho >= 0))]
        out.append(f"context_dist has negative or non-finite entries at states {bad}")
    total = float(np.sum(rho))
    if not abs(total - 1.0) <= INPUT_TOL:
        out.append(f"context_dist sums to {total:.12g}")
    ref = inst.ref_policy
    for s in range(S):
        row = ref[s]
        if np.any(~(row >= 0)):
            out.append(f"ref_policy row {s} has negative or non-finite entries")
        rs = float(np.sum(row))
        if not abs(rs - 1.0) <= INPUT_TOL:
            out.append(f"ref_policy row {s} sums to {rs:.12g}")
    r = inst.mean_reward
    for s, a in zip(*np.nonzero(~((r >= 0) & (r <= 1)))):
        out.append(f"mean_reward[{s},{a}] = {float(r[s, a])!r} outside [0, 1]")
    if inst.noise.kind == "bernoulli" and inst.noise.sigma != 0:
        out.append("bernoulli noise takes no sigma")
    return out


# ---------------------------------------------------------------------------
# regularizers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FDiv:
    """Generator ``f`` of an f-divergence with its first two derivatives.

    ``f_prime_inv`` is optional; when omitted the dual solver inverts
    ``f_prime`` numerically.  ``alpha`` is the claimed strong-convexity
    modulus, checked on a grid by :meth:`Regularizer.violations`.
    """

    f: Callable
    f_prime: Callable
    f_second: Callable
    alpha: float
    f_prime_inv: Optional[Callable] = None
    name: str = "f"


@dataclass(frozen=True)
class Regularizer:
    eta: float
    kind: str = "kl"  # "kl" or "fdiv"
    fdiv: Optional[FDiv] = None

    def __post_init__(self):
        if self.kind not in ("kl", "fdiv"):
            raise ValueError(f"unknown regularizer kind {self.kind!r}")
        if self.kind == "fdiv" and self.fdiv is None:
            raise ValueError("fdiv regularizer needs an FDiv generator")
        if not self.eta >= 0:
            raise ValueError("eta must be nonnegative")

    @property
    def is_kl(self) -> bool:
        return self.kind == "kl"

    @property
    def alpha(self) -> Optional[float]:
        return None if self.fdiv is None else self.fdiv.alpha

    @property
    def label(self) -> str:
        return "kl" if self.is_kl else self.fdiv.name

    def violations(self, grid: Optional[Sequence[float]] = None) -> list[str]:
        out = []
        if not self.eta > 0:
            out.append("eta must be positive")
        if self.kind == "fdiv":
            fd = self.fdiv
            if not fd.alpha > 0:
                out.append("alpha must be positive")
            f1 = float(fd.f(np.float64(1.0)))
            if abs(f1) > INPUT_TOL:
                out.append(f"f(1) = {f1!r}, expected 0")
            xs = np.linspace(0.01, 10.0, 1000) if grid is None else np.asarray(grid, float)
            curv = np.asarray(fd.f_second(xs), dtype=float) * np.ones_like(xs)
            bad = xs[curv < fd.alpha]
            if bad.size:
                out.append(f"f'' < alpha={fd.alpha} at x={bad[0]:.4g} (and {bad.size - 1} more grid points)")
        return out


def kl(eta: float) -> Regularizer:
    return Regularizer(float(eta), "kl")


def chi2_generator(alpha: float = 1.0, with_inverse: bool = True) -> FDiv:
    """``f(x) = alpha (x - 1)^2 / 2``; alpha-strongly convex everywhere."""
    a = float(alpha)
    return FDiv(
        f=lambda x: 0.5 * a * (np.asarray(x, float) - 1.0) ** 2,
        f_prime=lambda x: a * (np.asarray(x, float) - 1.0),
        f_second=lambda x: a + 0.0 * np.asarray(x, float),
        alpha=a,
        f_prime_inv=(lambda y: 1.0 + np.asarray(y, float) / a) if with_inverse else None,
        name="chi2",
    )


def xlogx_generator(with_inverse: bool = True) -> FDiv:
    """``f(x) = x log x`` (reverse KL as an f-divergence).

    f'' = 1/x, so the declared modulus 0.1 holds only for density ratios up
    to 10; the default grid check covers exactly that range.
    """

    def f(x):
        x = np.asarray(x, float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)

    return FDiv(
        f=f,
        f_prime=lambda x: np.log(np.asarray(x, float)) + 1.0,
        f_second=lambda x: 1.0 / np.asarray(x, float),
        alpha=0.1,
        f_prime_inv=(lambda y: np.exp(np.asarray(y, float) - 1.0)) if with_inverse else None,
        name="xlogx",
    )


def chi2(eta: float, alpha: float = 1.0) -> Regularizer:
    return Regularizer(float(eta), "fdiv", chi2_generator(alpha))


def fdiv(eta: float, gen: FDiv) -> Regularizer:
    return Regularizer(float(eta), "fdiv", gen)


# ---------------------------------------------------------------------------
# hypothesis classes, policies, data
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FunctionClass:
    """Ordered finite set of S x A reward tables, stored as a (K, S, A) array."""

    members: np.ndarray
    realizable_index: Optional[int] = None

    def __post_init__(self):
        m = _frozen(self.members)
        if m.ndim != 3:
            raise ValueError("members must have shape (K, S, A)")
        if m.shape[0] == 0:
            raise ValueError("empty hypothesis class")
        if np.any(~((m >= 0) & (m <= 1))):
            raise ValueError("function class entries must lie in [0, 1]")
        object.__setattr__(self, "members", m)
        if self.realizable_index is not None and not 0 <= self.realizable_index < m.shape[0]:
            raise ValueError("realizable_index out of range")

    def __len__(self) -> int:
        return self.members.shape[0]

    def __getitem__(self, i) -> np.ndarray:
        return self.members[i]

    @property
    def shape(self) -> tuple[int, int]:
        return self.members.shape[1:]

    @property
    def truth(self) -> Optional[np.ndarray]:
        if self.realizable_index is None:
            return None
        return self.members[self.realizable_index]

    def digest(self) -> str:
        return hashlib.sha1(self.members.tobytes() + str(self.members.shape).encode()).hexdigest()

    def violations(self, inst: BanditInstance) -> list[str]:
        out = []
        if self.shape != inst.shape:
            out.append(f"class tables have shape {self.shape}, instance is {inst.shape}")
        elif self.realizable_index is not None and not np.array_equal(self.truth, inst.mean_reward):
            out.append(f"member {self.realizable_index} is not the instance's mean reward")
        return out

    def shifted(self, shift) -> "FunctionClass":
        """Add a per-state constant ``shift[s]`` (or an (K, S) array) to members.

        Only for analysis: shifted tables may leave [0, 1], so the range
        check is bypassed.
        """
        shift = np.asarray(shift, float)
        if shift.ndim == 1:
            shift = np.broadcast_to(shift, (len(self), shift.size))
        fc = object.__new__(FunctionClass)
        object.__setattr__(fc, "members", _frozen(self.members + shift[:, :, None]))
        object.__setattr__(fc, "realizable_index", self.realizable_index)
        return fc

    def to_dict(self) -> dict:
        return {"members": self.members.tolist(), "realizable_index": self.realizable_index}

    @classmethod
    def from_dict(cls, d: dict) -> "FunctionClass":
        return cls(np.asarray(d["members"], float), d.get("realizable_index"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path) -> "FunctionClass":
        return cls.from_dict(json.loads(Path(path).read_text()))


def policy_violations(probs, ref_policy=None, tol: float = POLICY_TOL) -> list[str]:
    p = np.asarray(probs, float)
    out = []
    if p.ndim != 2:
        return ["policy must be an S x A matrix"]
    if np.any(~(p >= 0)):
        out.append("policy has negative or non-finite entries")
    for s, tot in enumerate(p.sum(axis=1)):
        if not abs(tot - 1.0) <= tol:
            out.append(f"policy row {s} sums to {tot:.12g}")
    if ref_policy is not None:
        bad = np.argwhere((p > 0) & (np.asarray(ref_policy) <= 0))
        for s, a in bad:
            out.append(f"policy puts mass on ({s},{a}) outside reference support")
    return out


def uniform_policy(S: int, A: int) -> np.ndarray:
    return np.full((S, A), 1.0 / A)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Offline absolute-feedback samples, column-stored."""

    s: np.ndarray
    a: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "s", _frozen(self.s, np.int64))
        object.__setattr__(self, "a", _frozen(self.a, np.int64))
        object.__setattr__(self, "r", _frozen(self.r))
        if not (self.s.shape == self.a.shape == self.r.shape) or self.s.ndim != 1:
            raise ValueError("dataset columns must be equal-length vectors")
        if not np.all(np.isfinite(self.r)):
            raise ValueError("rewards must be finite")

    def __len__(self) -> int:
        return self.s.size

    @property
    def rows(self) -> list[tuple[int, int, float]]:
        return list(zip(self.s.tolist(), self.a.tolist(), self.r.tolist()))

    def violations(self, S: int, A: int) -> list[str]:
        out = []
        if self.s.size and (self.s.min() < 0 or self.s.max() >= S):
            out.append("state index out of range")
        if self.a.size and (self.a.min() < 0 or self.a.max() >= A):
            out.append("action index out of range")
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", "a", "r"])
            for s, a, r in self.rows:
                w.writerow([s, a, repr(float(r))])

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            header = next(rd)
            if header != ["s", "a", "r"]:
                raise ValueError(f"expected header s,a,r, got {','.join(header)}")
            rows = [(int(s), int(a), float(r)) for s, a, r in rd]
        if not rows:
            return cls(np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0))
        s, a, r = zip(*rows)
        return cls(np.array(s), np.array(a), np.array(r))


@dataclass(frozen=True, eq=False)
class PreferenceDataset:
    """Pairwise comparisons; ``y = 1`` means ``a1`` was preferred."""

    s: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        for name in ("s", "a1", "a2", "y"):
            object.__setattr__(self, name, _frozen(getattr(self, name), np.int64))
        if not (self.s.shape == self.a1.shape == self.a2.shape == self.y.shape) or self.s.ndim != 1:
            raise ValueError("dataset columns must be equal-length vectors")
        if np.any((self.y != 0) & (self.y != 1)):
            raise ValueError("labels must be 0 or 1")

    def __len__(self) -> int:
        return self.s.size

    @property
    def rows(self) -> list[tuple[int, int, int, int]]:
        return list(zip(self.s.tolist(), self.a1.tolist(), self.a2.tolist(), self.y.tolist()))

    def violations(self, S: int, A: int) -> list[str]:
        out = []
        if self.s.size and (self.s.min() < 0 or self.s.max() >= S):
            out.append("state index out of range")
        for col in (self.a1, self.a2):
            if col.size and (col.min() < 0 or col.max() >= A):
                out.append("action index out of range")
                break
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", "a1", "a2", "y"])
            w.writerows(self.rows)

    @classmethod
    def from_csv(cls, path) -> "PreferenceDataset":
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            header = next(rd)
            if header != ["s", "a1", "a2", "y"]:
                raise ValueError(f"expected header s,a1,a2,y, got {','.join(header)}")
            rows = [tuple(int(v) for v in row) for row in rd]
        cols = list(zip(*rows)) if rows else [(), (), (), ()]
        return cls(*(np.array(c, dtype=np.int64) for c in cols))


def load_dataset(path):
    """Read either CSV dataset flavour, dispatching on the header."""
    with open(path, newline="") as fh:
        header = fh.readline().strip()
    if header == "s,a,r":
        return Dataset.from_csv(path)
    if header == "s,a1,a2,y":
        return PreferenceDataset.from_csv(path)
    raise ValueError(f"unrecognised dataset header {header!r}")


@dataclass
class Diagnostics:
    estimator_index: int
    beta: float = 0.0
    event_e: Optional[bool] = None
    bias: Optional[np.ndarray] = None
    bonus: Optional[np.ndarray] = None
    extras: dict = field(default_factory=dict)
