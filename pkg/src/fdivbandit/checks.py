"""Verification suites run by ``fdivbandit verify``.

Each suite returns a list of :class:`~fdivbandit.harness.Check` records with
the measured value and the limit it was held to.
"""

from __future__ import annotations

import math

import numpy as np

from .algorithms import run_kl_pcb
from .core import FunctionClass, chi2, fdiv, kl, make_rng, xlogx_generator
from .evaluation import (g_curve, kl_subopt_identity, moment_check, objective, optimal_policy,
                         state_suboptimality, suboptimality)
from .harness import Check
from .instances import (chi2_pair_floor, dueling_hard_family, gv_code, hamming_matrix,
                        kl_family_optimal, kl_hard_family, kl_pair_floor, random_instance,
                        sample_bandit_data)
from .scenarios import get_scenario
from .solvers import chi2_closed_form, f_dual_policy, kl_softmax_policy
from .uncertainty import (bonus_table, d2_concentrability, d2_table, density_ratio_concentrability)


def random_problem(rng, max_S=6, max_A=6):
    S = int(rng.integers(1, max_S + 1))
    A = int(rng.integers(1, max_A + 1))
    inst = random_instance(S, A, int(rng.integers(2**63)), float(rng.random()))
    g = rng.random((S, A))
    return inst, g


def random_policy(rng, S, A, sparsity=0.0):
    p = rng.random((S, A)) ** 3
    if sparsity:
        p[rng.random((S, A)) < sparsity] = 0.0
        p[np.arange(S), rng.integers(0, A, S)] += 0.1
    return p / p.sum(axis=1, keepdims=True)


def random_class(rng, S, A, K, truth=None):
    m = rng.random((K, S, A))
    if truth is not None:
        m[0] = truth
    return FunctionClass(m, 0 if truth is not None else None)


def suite_solvers(seed=0, quick=False):
    rng = make_rng(seed, 1)
    trials = 40 if quick else 200
    err_kl = err_chi = err_shift = 0.0
    worst_gap = math.inf
    for _ in range(trials):
        inst, g = random_problem(rng)
        ref = inst.ref_policy
        eta = float(rng.uniform(0.1, 20))
        alpha = float(rng.uniform(0.2, 3))
        a = f_dual_policy(g, ref, fdiv(eta, xlogx_generator()))[0]
        err_kl = max(err_kl, float(np.max(np.abs(a - kl_softmax_policy(g, ref, eta)))))
        c = f_dual_policy(g, ref, chi2(eta, alpha))[0]
        err_chi = max(err_chi, float(np.max(np.abs(c - chi2_closed_form(g, ref, eta, alpha)))))
        b = rng.normal(size=(g.shape[0], 1))
        err_shift = max(err_shift, float(np.max(np.abs(kl_softmax_policy(g + b, ref, eta)
                                                        - kl_softmax_policy(g, ref, eta)))),
                        float(np.max(np.abs(f_dual_policy(g + b, ref, chi2(eta, alpha))[0] - c))))
        for reg in (kl(eta), chi2(eta, alpha)):
            inst_g = inst.with_reward(g)
            best = objective(inst_g, reg, optimal_policy(inst_g, reg))
            for _ in range(5):
                pi = random_policy(rng, *g.shape)
                worst_gap = min(worst_gap, best - objective(inst_g, reg, pi))
    return [
        Check("solvers", "xlogx dual matches softmax", err_kl <= 1e-8, err_kl, 1e-8),
        Check("solvers", "chi2 dual matches water-filling", err_chi <= 1e-8, err_chi, 1e-8),
        Check("solvers", "per-state shift invariance", err_shift <= 1e-8, err_shift, 1e-8),
        Check("solvers", "solver beats random policies", worst_gap >= -1e-9, worst_gap, -1e-9),
    ]


def suite_uncertainty(seed=0, quick=False):
    rng = make_rng(seed, 2)
    out = []
    worst_order = -math.inf
    worst_bonus = 0.0
    for _ in range(10 if quick else 40):
        S, A = (int(x) for x in rng.integers(1, 4, 2))
        inst = random_instance(S, A, int(rng.integers(2**63)), float(rng.random()))
        F = random_class(rng, S, A, 16)
        pi = random_policy(rng, S, A)
        for variant in ("bandit", "dueling"):
            single = d2_concentrability(F, pi, inst.ref_policy, inst.context_dist, "single", variant)
            every = d2_concentrability(F, pi, inst.ref_policy, inst.context_dist, "all", variant)
            worst_order = max(worst_order, single - every)
        beta = float(rng.random())
        bt = bonus_table(F, inst.ref_policy, inst.context_dist, beta).values
        ref = beta * np.sqrt(d2_table(F, inst.ref_policy, inst.context_dist))
        worst_bonus = max(worst_bonus, float(np.max(np.abs(bt - ref))))
    out.append(Check("uncertainty", "single <= all concentrability", worst_order <= 1e-12, worst_order, 1e-12))
    out.append(Check("uncertainty", "bonus = beta sqrt(D2)", worst_bonus <= 1e-12, worst_bonus, 1e-12))
    # hand values: (g - h) = (d, 0) on one state, uniform pi
    F = FunctionClass(np.array([[[0.9, 0.2]], [[0.3, 0.2]]]))
    pi = np.array([[0.5, 0.5]])
    b = float(d2_table(F, pi, [1.0], "bandit")[0, 0])
    d = float(d2_table(F, pi, [1.0], "dueling")[0, 0])
    out.append(Check("uncertainty", "bandit D2 of indicator pair", abs(b - 2.0) <= 1e-12, b, 2.0))
    out.append(Check("uncertainty", "dueling D2 of indicator pair", abs(d - 1.0) <= 1e-12, d, 1.0))
    return out


def suite_evaluation(seed=0, quick=False):
    rng = make_rng(seed, 3)
    worst_id = 0.0
    worst_neg = 0.0
    for _ in range(100 if quick else 500):
        inst, _ = random_problem(rng)
        eta = float(rng.uniform(0.1, 10))
        pi = random_policy(rng, *inst.shape)
        sub = suboptimality(inst, kl(eta), pi)
        worst_id = max(worst_id, abs(sub - kl_subopt_identity(inst, eta, pi)))
        worst_neg = min(worst_neg, sub, suboptimality(inst, chi2(eta, 1.0), pi))
    return [
        Check("evaluation", "KL suboptimality identity", worst_id <= 1e-10, worst_id, 1e-10),
        Check("evaluation", "suboptimality nonnegative", worst_neg >= 0.0, worst_neg, 0.0),
    ]


def suite_lemmas(seed=0, quick=False):
    rng = make_rng(seed, 4)
    worst = -math.inf
    for _ in range(1000 if quick else 10000):
        k = int(rng.integers(1, 10))
        x = -rng.random(k)
        w = rng.random(k)
        worst = max(worst, moment_check(x, w / w.sum()))
    out = [Check("lemmas", "third-moment inequality on [-1, 0]", worst <= 1e-12, worst, 1e-12)]

    sc = get_scenario("kl_rate")
    inst, F, eta = sc.instance, sc.function_class, sc.regularizer.eta
    grid = np.linspace(0, 1, 21)
    worst_rise, held, runs = -math.inf, 0, 40 if quick else 200
    for i in range(runs):
        n = int(2 ** (7 + i % 6))
        data = sample_bandit_data(inst, n, make_rng(seed, 40, i))
        _, diag = run_kl_pcb(F, data, inst.ref_policy, inst.context_dist, eta, 0.05)
        if not diag.event_e:
            continue
        held += 1
        G = np.array(g_curve(inst, diag.extras["f_pess"], eta, grid))
        worst_rise = max(worst_rise, float(np.max(np.diff(G))))
    out.append(Check("lemmas", f"G(gamma) non-increasing ({held} runs with event E)",
                     held > 0 and worst_rise <= 1e-12, worst_rise, 1e-12))

    runs = 100 if quick else 500
    hits = 0
    for i in range(runs):
        data = sample_bandit_data(inst, 1024, make_rng(seed, 41, i))
        hits += bool(run_kl_pcb(F, data, inst.ref_policy, inst.context_dist, eta, 0.1)[1].event_e)
    freq = hits / runs
    out.append(Check("lemmas", "confidence event frequency (delta=0.1)", freq >= 0.9, freq, 0.9))
    return out


def suite_lower_bounds(seed=0, quick=False):
    rng = make_rng(seed, 5)
    out = []
    pols = 200 if quick else 1000

    fam = kl_hard_family(2, 4.0, 8.0, 512)
    eta, delta = fam.params["eta"], fam.params["delta"]
    reg = kl(eta)
    floor = kl_pair_floor(eta, delta)
    stars = [optimal_policy(i, reg) for i in fam.instances]
    worst = math.inf
    for _ in range(pols):
        pi = random_policy(rng, 2, 2)
        subs = [state_suboptimality(i, reg, pi, p) for i, p in zip(fam.instances, stars)]
        for s in range(2):
            for i, j in fam.neighbours(s):
                worst = min(worst, subs[i][s] + subs[j][s] - floor)
    out.append(Check("lower_bounds", "KL family pairwise floor", worst >= -1e-9, worst, -1e-9))

    closed = kl_family_optimal(fam)
    err = max(float(np.max(np.abs(p - c))) for p, c in zip(stars, closed))
    out.append(Check("lower_bounds", "KL family optimal policy closed form", err <= 1e-12, err, 1e-12))
    conc = max(density_ratio_concentrability(p, fam.instances[0].ref_policy) for p in stars)
    out.append(Check("lower_bounds", "KL family C^pi* <= C*", conc <= fam.params["C_star"], conc,
                     fam.params["C_star"]))

    dfam = dueling_hard_family(3, None, 1.0, 256, kind="chi2", alpha=1.0)
    creg = chi2(dfam.params["eta"], dfam.params["alpha"])
    cfloor = chi2_pair_floor(dfam.params["eta"], dfam.params["alpha"], dfam.params["delta"])
    cstars = [optimal_policy(i, creg) for i in dfam.instances]
    worst = math.inf
    for _ in range(pols):
        pi = random_policy(rng, 3, 2)
        subs = [state_suboptimality(i, creg, pi, p) for i, p in zip(dfam.instances, cstars)]
        for s in range(3):
            for i, j in dfam.neighbours(s):
                worst = min(worst, subs[i][s] + subs[j][s] - cfloor)
    out.append(Check("lower_bounds", "chi2 dueling family pairwise floor", worst >= -1e-9, worst, -1e-9))

    for S in (8, 16) if quick else (8, 16, 32):
        code = gv_code(S)
        H = hamming_matrix(code)
        np.fill_diagonal(H, S)
        need = math.ceil(math.exp(S / 8))
        ok = len(code) >= need and int(H.min()) >= S / 2
        out.append(Check("lower_bounds", f"GV code S={S} (size {len(code)}, min distance {int(H.min())})",
                         ok, float(len(code)), float(need)))
    return out
