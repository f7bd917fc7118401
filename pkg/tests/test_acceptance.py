"""Acceptance criteria, each at its stated tolerance and runtime budget.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary lists one
PASS/FAIL line per criterion.
"""

import math
import time

import numpy as np
import pytest

from fdivbandit.algorithms import run_kl_pcb
from fdivbandit.core import chi2, fdiv, kl, make_rng, xlogx_generator
from fdivbandit.evaluation import (g_curve, kl_subopt_identity, moment_check, objective, optimal_policy,
                                   state_suboptimality, suboptimality)
from fdivbandit.harness import SweepConfig, rate_fit, run_sweep
from fdivbandit.instances import (chi2_pair_floor, dueling_hard_family, gv_code, hamming_matrix,
                                  kl_family_optimal, kl_hard_family, kl_pair_floor, random_instance,
                                  sample_bandit_data)
from fdivbandit.scenarios import get_scenario
from fdivbandit.solvers import chi2_closed_form, f_dual_policy, kl_softmax_policy
from fdivbandit.uncertainty import density_ratio_concentrability

RATE_GRID = [2 ** k for k in range(7, 15)]


def random_problem(rng, max_S=6, max_A=6):
    S, A = int(rng.integers(1, max_S + 1)), int(rng.integers(1, max_A + 1))
    inst = random_instance(S, A, int(rng.integers(2**63)), float(rng.random()))
    return inst, rng.random((S, A))


def random_policies(rng, count, S, A):
    p = rng.random((count, S, A)) ** 3
    return p / p.sum(axis=2, keepdims=True)


def wilson_lower(k, n, z=2.5758293035489):
    p = k / n
    centre = p + z * z / (2 * n)
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return (centre - half) / (1 + z * z / n)


def test_c01_solver_agreement(record):
    t0 = time.perf_counter()
    rng = make_rng(101)
    err_kl = err_chi = 0.0
    for _ in range(200):
        inst, g = random_problem(rng)
        ref = inst.ref_policy
        eta = float(rng.uniform(0.05, 20))
        alpha = float(rng.uniform(0.1, 4))
        a = f_dual_policy(g, ref, fdiv(eta, xlogx_generator()))[0]
        err_kl = max(err_kl, float(np.max(np.abs(a - kl_softmax_policy(g, ref, eta)))))
        c = f_dual_policy(g, ref, chi2(eta, alpha))[0]
        err_chi = max(err_chi, float(np.max(np.abs(c - chi2_closed_form(g, ref, eta, alpha)))))
    dt = time.perf_counter() - t0
    ok = err_kl <= 1e-8 and err_chi <= 1e-8 and dt < 10
    record(1, "solver agreement", ok, f"max err xlogx {err_kl:.2e}, chi2 {err_chi:.2e}, {dt:.2f}s")
    assert ok


def test_c02_optimality(record):
    t0 = time.perf_counter()
    rng = make_rng(102)
    worst = math.inf
    for _ in range(20):
        inst, _ = random_problem(rng)
        eta = float(rng.uniform(0.1, 10))
        pols = random_policies(rng, 1000, *inst.shape)
        for reg in (kl(eta), chi2(eta, float(rng.uniform(0.2, 3))), fdiv(eta, xlogx_generator())):
            best = objective(inst, reg, optimal_policy(inst, reg))
            worst = min(worst, min(best - objective(inst, reg, p) for p in pols))
    dt = time.perf_counter() - t0
    ok = worst >= -1e-9 and dt < 30
    record(2, "optimality property", ok, f"min J(pi*) - J(pi') = {worst:.3e}, {dt:.2f}s")
    assert ok


def test_c03_kl_identity(record):
    t0 = time.perf_counter()
    rng = make_rng(103)
    worst = 0.0
    for _ in range(500):
        inst, _ = random_problem(rng)
        eta = float(rng.uniform(0.1, 10))
        pi = random_policies(rng, 1, *inst.shape)[0]
        worst = max(worst, abs(suboptimality(inst, kl(eta), pi) - kl_subopt_identity(inst, eta, pi)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 10
    record(3, "KL suboptimality identity", ok, f"max gap {worst:.2e}, {dt:.2f}s")
    assert ok


def test_c04_moment_fuzz(record):
    t0 = time.perf_counter()
    rng = make_rng(104)
    worst = -math.inf
    for _ in range(10_000):
        k = int(rng.integers(1, 12))
        w = rng.random(k)
        worst = max(worst, moment_check(-rng.random(k), w / w.sum()))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 5
    record(4, "third-moment inequality fuzz", ok, f"max value {worst:.3e} over 1e4 laws, {dt:.2f}s")
    assert ok


def test_c05_g_curve_monotone(record):
    t0 = time.perf_counter()
    sc = get_scenario("kl_rate")
    inst, F, eta = sc.instance, sc.function_class, sc.regularizer.eta
    grid = np.linspace(0.0, 1.0, 21)
    held, tried, worst = 0, 0, -math.inf
    while held < 200 and tried < 1000:
        n = 2 ** (7 + tried % 8)
        data = sample_bandit_data(inst, n, make_rng(105, tried))
        tried += 1
        _, diag = run_kl_pcb(F, data, inst.ref_policy, inst.context_dist, eta)
        if not diag.event_e:
            continue
        held += 1
        worst = max(worst, float(np.max(np.diff(g_curve(inst, diag.extras["f_pess"], eta, grid)))))
    dt = time.perf_counter() - t0
    ok = held == 200 and worst <= 1e-12 and dt < 60
    record(5, "G(gamma) non-increasing under pessimism", ok,
           f"{held} runs with event E ({tried} tried), max rise {worst:.3e}, {dt:.2f}s")
    assert ok


def test_c06_event_frequency(record):
    t0 = time.perf_counter()
    sc = get_scenario("kl_rate")
    inst, F = sc.instance, sc.function_class
    assert len(F) == 16
    hits = 0
    for i in range(500):
        data = sample_bandit_data(inst, 1024, make_rng(106, i))
        hits += bool(run_kl_pcb(F, data, inst.ref_policy, inst.context_dist, 1.0, 0.1)[1].event_e)
    dt = time.perf_counter() - t0
    freq = hits / 500
    lower = wilson_lower(hits, 500)
    ok = (freq >= 0.9 or lower >= 0.86) and dt < 120
    record(6, "confidence event frequency", ok, f"{hits}/500 = {freq:.3f} (99% lower {lower:.3f}), {dt:.2f}s")
    assert ok


def sweep(algo, scenario):
    t0 = time.perf_counter()
    rows = run_sweep(SweepConfig(algo=algo, scenario=scenario, n_grid=RATE_GRID, seeds=100))
    return rows, rate_fit(rows, "median"), time.perf_counter() - t0


def test_c07_kl_pcb_rate(record):
    rows, fit, dt = sweep("kl_pcb", "kl_rate")
    assert len(rows) == 800 and all(r.status == "ok" for r in rows)
    decreasing = all(b < a for a, b in zip(fit.stats, fit.stats[1:]))
    ok = -1.25 <= fit.slope <= -0.80 and fit.r2 >= 0.95 and dt < 300
    record(7, "KL-PCB rate", ok, f"slope {fit.slope:.3f}, r2 {fit.r2:.4f}, {dt:.1f}s")
    assert ok
    assert decreasing, fit.stats


def test_c08_f_cb_coverage_free_rate(record):
    sc = get_scenario("chi2_skewed")
    inst = sc.instance
    greedy = np.zeros(inst.shape)
    greedy[np.arange(inst.num_states), np.argmax(inst.mean_reward, axis=1)] = 1.0
    conc = density_ratio_concentrability(greedy, inst.ref_policy)
    rows, fit, dt = sweep("f_cb", "chi2_skewed")
    ok = conc > 10 and -1.25 <= fit.slope <= -0.80 and dt < 300
    record(8, "f-CB chi2 rate on skewed reference", ok,
           f"greedy concentrability {conc:.1f}, slope {fit.slope:.3f}, r2 {fit.r2:.4f}, {dt:.1f}s")
    assert ok


def test_c09_dueling_rates(record):
    t0 = time.perf_counter()
    _, fit_kl, _ = sweep("kl_pcdb", "dueling")
    _, fit_f, _ = sweep("f_cdb", "dueling_chi2")
    dt = time.perf_counter() - t0
    conc = density_ratio_concentrability(
        optimal_policy(get_scenario("dueling").instance, kl(1.0)), get_scenario("dueling").instance.ref_policy)
    ok = (-1.25 <= fit_kl.slope <= -0.75 and -1.25 <= fit_f.slope <= -0.75 and dt < 600)
    record(9, "dueling rates", ok, f"KL-PCDB slope {fit_kl.slope:.3f} (r2 {fit_kl.r2:.3f}), "
           f"f-CDB slope {fit_f.slope:.3f} (r2 {fit_f.r2:.3f}), C(pi*) {conc:.2f}, {dt:.1f}s")
    assert ok


def pairwise_margin(fam, reg, floor, pols):
    stars = [optimal_policy(i, reg) for i in fam.instances]
    S = fam.instances[0].num_states
    worst = math.inf
    for pi in pols:
        subs = [state_suboptimality(i, reg, pi, p) for i, p in zip(fam.instances, stars)]
        for s in range(S):
            for i, j in fam.neighbours(s):
                worst = min(worst, subs[i][s] + subs[j][s] - floor)
    return worst


def test_c10_lower_bound_floors(record):
    t0 = time.perf_counter()
    rng = make_rng(110)
    fam = kl_hard_family(2, 4.0, 8.0, 512)
    p = fam.params
    a = pairwise_margin(fam, kl(p["eta"]), kl_pair_floor(p["eta"], p["delta"]), random_policies(rng, 1000, 2, 2))
    dfam = dueling_hard_family(3, None, 1.0, 256, "chi2", alpha=1.0)
    q = dfam.params
    b = pairwise_margin(dfam, chi2(q["eta"], q["alpha"]), chi2_pair_floor(q["eta"], q["alpha"], q["delta"]),
                        random_policies(rng, 1000, 3, 2))
    dt = time.perf_counter() - t0
    ok = a >= -1e-9 and b >= -1e-9 and dt < 120
    record(10, "lower-bound pairwise floors", ok, f"KL margin {a:.3e}, chi2 dueling margin {b:.3e}, {dt:.2f}s")
    assert ok


def test_c11_gv_codes(record):
    t0 = time.perf_counter()
    parts, ok = [], True
    for S in (8, 16, 32):
        code = gv_code(S)
        H = hamming_matrix(code)
        np.fill_diagonal(H, S)
        need = math.ceil(math.exp(S / 8))
        ok &= len(code) >= need and H.min() >= S / 2
        parts.append(f"S={S}: {len(code)} >= {need}, dmin {H.min()}")
    dt = time.perf_counter() - t0
    ok = ok and dt < 10
    record(11, "GV code guarantees", ok, "; ".join(parts) + f", {dt:.2f}s")
    assert ok


def test_c12_construction_identities(record):
    t0 = time.perf_counter()
    err, worst_ratio, ok_c = 0.0, 0.0, True
    for S, C, eta, n in [(1, 4.0, 8.0, 64), (2, 4.0, 8.0, 512), (3, 3.0, 6.0, 400), (5, 7.5, 9.0, 1000),
                         (6, 2.2, 3.5, 300)]:
        fam = kl_hard_family(S, C, eta, n)
        closed = kl_family_optimal(fam)
        for inst, cf in zip(fam.instances, closed):
            star = optimal_policy(inst, kl(eta))
            err = max(err, float(np.max(np.abs(star - cf))))
            ratio = density_ratio_concentrability(star, inst.ref_policy)
            worst_ratio = max(worst_ratio, ratio / C)
            ok_c &= ratio <= C
    dt = time.perf_counter() - t0
    ok = err <= 1e-12 and ok_c and dt < 10
    record(12, "KL family construction identities", ok,
           f"closed-form gap {err:.2e}, max C(pi*)/C* {worst_ratio:.3f}, {dt:.2f}s")
    assert ok


def test_c13_pessimism_benefit(record):
    t0 = time.perf_counter()
    common = dict(scenario="pessimism", n_grid=[4096], seeds=100)
    pess = run_sweep(SweepConfig(algo="kl_pcb", **common))
    base = run_sweep(SweepConfig(algo="ls_softmax_baseline", **common))
    m_p = float(np.median([r.subopt for r in pess]))
    m_b = float(np.median([r.subopt for r in base]))
    dt = time.perf_counter() - t0
    ok = m_p <= m_b and dt < 120
    record(13, "pessimism benefit on undercovered instance", ok,
           f"median KL-PCB {m_p:.5f} vs baseline {m_b:.5f}, {dt:.2f}s")
    assert ok
