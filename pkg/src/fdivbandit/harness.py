"""Experiment driver: (n, seed) sweeps, rate fits, and verification suites.

Every cell draws its data from the stream ``make_rng(base_seed, n, seed)``,
so a cell can be re-run in isolation and rows never depend on worker
scheduling.  Output rows are emitted in (n, seed) order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import algorithms as alg
from .core import BanditInstance, FunctionClass, Regularizer, chi2, fdiv, kl, make_rng, xlogx_generator
from .evaluation import optimal_policy, suboptimality
from .instances import sample_bandit_data, sample_preference_data
from .scenarios import get_scenario
from .uncertainty import BANDIT, DUELING, d2_concentrability, density_ratio_concentrability

CSV_HEADER = ["algo", "eta", "alpha", "n", "seed", "subopt", "event_e", "c_pistar", "d2_single",
              "runtime_ms", "status"]
ALGORITHMS = ("kl_pcb", "f_cb", "kl_pcdb", "f_cdb", "ls_softmax_baseline")
PREFERENCE_ALGOS = ("kl_pcdb", "f_cdb")
DEFAULT_N_GRID = (128, 256, 512, 1024, 2048, 4096, 8192, 16384)


class ConfigError(ValueError):
    pass


@dataclass
class SweepConfig:
    algo: str = "kl_pcb"
    scenario: Optional[str] = "kl_rate"
    instance_path: Optional[str] = None
    class_path: Optional[str] = None
    eta: Optional[float] = None
    alpha: Optional[float] = None
    divergence: str = "chi2"  # generator for f-divergence algorithms: chi2 or xlogx
    n_grid: Sequence[int] = DEFAULT_N_GRID
    seeds: int = 100
    delta: float = alg.DEFAULT_DELTA
    base_seed: int = 0
    out: Optional[str] = None
    workers: int = 1
    record_timing: bool = False

    def __post_init__(self):
        self.n_grid = tuple(int(n) for n in self.n_grid)
        if self.algo not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algo!r}; choose from {', '.join(ALGORITHMS)}")
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ConfigError("n_grid must be a non-empty list of positive integers")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid must be strictly increasing")
        if self.seeds < 1:
            raise ConfigError("seeds must be at least 1")
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")
        if self.scenario is None and (self.instance_path is None or self.class_path is None):
            raise ConfigError("give either a scenario or both instance_path and class_path")
        if self.divergence not in ("chi2", "xlogx"):
            raise ConfigError("divergence must be chi2 or xlogx")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
        d = dict(d)
        if d.get("instance_path") and "scenario" not in d:
            d["scenario"] = None
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "SweepConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class SweepRow:
    algo: str
    eta: float
    alpha: Optional[float]
    n: int
    seed: int
    subopt: float
    event_e: Optional[bool]
    c_pistar: float
    d2_single: float
    runtime_ms: int
    status: str = "ok"

    def csv_fields(self) -> list[str]:
        def num(x):
            return "" if x is None else repr(float(x))
        ev = "" if self.event_e is None else str(bool(self.event_e)).lower()
        return [self.algo, num(self.eta), num(self.alpha), str(self.n), str(self.seed), num(self.subopt),
                ev, num(self.c_pistar), num(self.d2_single), str(self.runtime_ms), self.status]

    @classmethod
    def from_csv(cls, rec: dict) -> "SweepRow":
        def num(x):
            return None if x in ("", None) else float(x)
        ev = rec.get("event_e", "")
        return cls(rec["algo"], num(rec["eta"]), num(rec["alpha"]), int(rec["n"]), int(rec["seed"]),
                   num(rec["subopt"]), None if ev == "" else ev == "true", num(rec["c_pistar"]),
                   num(rec["d2_single"]), int(rec["runtime_ms"]), rec["status"])


# ---------------------------------------------------------------------------
# problem assembly
# ---------------------------------------------------------------------------

@dataclass
class Problem:
    instance: BanditInstance
    function_class: FunctionClass
    regularizer: Regularizer
    c_pistar: float = math.nan
    d2_single: float = math.nan
    pi_star: Optional[np.ndarray] = field(default=None, repr=False)


def build_regularizer(cfg: SweepConfig, default: Optional[Regularizer] = None) -> Regularizer:
    wants_f = cfg.algo in ("f_cb", "f_cdb")
    eta = cfg.eta if cfg.eta is not None else (default.eta if default is not None else 1.0)
    if not wants_f:
        return kl(eta)
    if cfg.divergence == "xlogx":
        return fdiv(eta, xlogx_generator())
    if cfg.alpha is not None:
        alpha = cfg.alpha
    elif default is not None and default.alpha is not None:
        alpha = default.alpha
    else:
        alpha = 1.0
    return chi2(eta, alpha)


def build_problem(cfg: SweepConfig) -> Problem:
    if cfg.scenario is not None:
        sc = get_scenario(cfg.scenario)
        inst, F, default = sc.instance, sc.function_class, sc.regularizer
    else:
        inst = BanditInstance.load(cfg.instance_path).check()
        F = FunctionClass.load(cfg.class_path)
        problems = F.violations(inst)
        if problems:
            raise ConfigError("; ".join(problems))
        default = None
    reg = build_regularizer(cfg, default)
    pi_star = optimal_policy(inst, reg)
    variant = DUELING if cfg.algo in PREFERENCE_ALGOS else BANDIT
    c = density_ratio_concentrability(pi_star, inst.ref_policy)
    d2 = d2_concentrability(F, pi_star, inst.ref_policy, inst.context_dist, "single", variant)
    return Problem(inst, F, reg, c, d2, pi_star)


def run_algorithm(algo: str, prob: Problem, data, delta: float):
    inst, F, reg = prob.instance, prob.function_class, prob.regularizer
    ref, rho = inst.ref_policy, inst.context_dist
    g_star = inst.mean_reward
    if algo == "kl_pcb":
        return alg.run_kl_pcb(F, data, ref, rho, reg.eta, delta, g_star=g_star)
    if algo == "ls_softmax_baseline":
        return alg.run_ls_softmax(F, data, ref, rho, reg.eta, g_star=g_star)
    if algo == "f_cb":
        return alg.run_f_cb(F, data, ref, rho, reg, g_star=g_star)
    if algo == "kl_pcdb":
        return alg.run_kl_pcdb(F, data, ref, rho, reg.eta, delta, g_star=g_star)
    if algo == "f_cdb":
        return alg.run_f_cdb(F, data, ref, rho, reg, g_star=g_star)
    raise ConfigError(f"unknown algorithm {algo!r}")


def run_cell(cfg: SweepConfig, prob: Problem, n: int, seed: int) -> SweepRow:
    t0 = time.perf_counter()
    reg = prob.regularizer
    alpha = None if reg.is_kl else reg.alpha
    try:
        rng = make_rng(cfg.base_seed, n, seed)
        if cfg.algo in PREFERENCE_ALGOS:
            data = sample_preference_data(prob.instance, n, rng)
        else:
            data = sample_bandit_data(prob.instance, n, rng)
        pi, diag = run_algorithm(cfg.algo, prob, data, cfg.delta)
        sub = suboptimality(prob.instance, reg, pi, prob.pi_star)
        event, status = diag.event_e, "ok"
    except Exception as exc:  # recorded per row; the sweep keeps going
        sub, event, status = math.nan, None, f"error: {exc}"
    ms = int(round((time.perf_counter() - t0) * 1000)) if cfg.record_timing else 0
    return SweepRow(cfg.algo, reg.eta, alpha, n, seed, sub, event, prob.c_pistar, prob.d2_single, ms, status)


def _cells(cfg: SweepConfig):
    return [(n, s) for n in cfg.n_grid for s in range(cfg.seeds)]


def _run_chunk(args):
    cfg, cells = args
    prob = build_problem(cfg)
    return [run_cell(cfg, prob, n, s) for n, s in cells]


def iter_sweep(cfg: SweepConfig) -> Iterable[SweepRow]:
    """Rows in (n, seed) order; parallel chunks are consumed in order."""
    cells = _cells(cfg)
    if cfg.workers == 1:
        prob = build_problem(cfg)
        for n, s in cells:
            yield run_cell(cfg, prob, n, s)
        return
    size = max(1, math.ceil(len(cells) / (4 * cfg.workers)))
    chunks = [(cfg, cells[i:i + size]) for i in range(0, len(cells), size)]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        for rows in pool.map(_run_chunk, chunks):
            yield from rows


def write_rows(rows: Iterable[SweepRow], fh) -> list[SweepRow]:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    out = []
    for row in rows:
        w.writerow(row.csv_fields())
        fh.flush()
        out.append(row)
    return out


def run_sweep(cfg: SweepConfig) -> list[SweepRow]:
    """Run every (n, seed) cell; writes CSV to ``cfg.out`` as rows arrive."""
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            return write_rows(iter_sweep(cfg), fh)
    return list(iter_sweep(cfg))


def rows_to_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    write_rows(rows, buf)
    return buf.getvalue()


def read_rows(path) -> list[SweepRow]:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if rd.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected sweep header {rd.fieldnames}")
        return [SweepRow.from_csv(r) for r in rd]


# ---------------------------------------------------------------------------
# rates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float
    ns: tuple
    stats: tuple


def rate_fit(rows: Sequence[SweepRow], statistic: str = "median") -> RateFit:
    """OLS of log(statistic of subopt) on log(n)."""
    if statistic not in ("median", "mean"):
        raise ValueError("statistic must be median or mean")
    by_n: dict[int, list[float]] = {}
    for r in rows:
        if r.status == "ok" and r.subopt is not None and not math.isnan(r.subopt):
            by_n.setdefault(int(r.n), []).append(float(r.subopt))
    ns = sorted(by_n)
    if len(ns) < 3:
        raise ValueError("rate fit needs at least 3 distinct n values")
    reduce = np.median if statistic == "median" else np.mean
    stats = np.array([reduce(by_n[n]) for n in ns])
    if np.any(~(stats > 0)):
        raise ValueError("degenerate rate fit (exact optimum reached)")
    x = np.log(np.array(ns, float))
    y = np.log(stats)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), r2, tuple(ns), tuple(float(s) for s in stats))


# ---------------------------------------------------------------------------
# verification suites
# ---------------------------------------------------------------------------

@dataclass
class Check:
    suite: str
    name: str
    passed: bool
    value: float
    limit: float
    detail: str = ""

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.passed))
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "limit", float(self.limit))

    def as_dict(self) -> dict:
        d = asdict(self)
        for k in ("value", "limit"):
            if isinstance(d[k], float) and not math.isfinite(d[k]):
                d[k] = str(d[k])
        return d


SUITES = ("solvers", "uncertainty", "evaluation", "lemmas", "lower_bounds")


def verify(suite: str = "all", seed: int = 0, quick: bool = False) -> list[Check]:
    from . import checks

    names = SUITES if suite == "all" else (suite,)
    out = []
    for name in names:
        fn = getattr(checks, f"suite_{name}", None)
        if fn is None:
            raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
        out.extend(fn(seed=seed, quick=quick))
    return out
