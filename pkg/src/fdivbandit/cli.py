"""Command-line entry point: ``fdivbandit <subcommand> ...``.

Exit codes: 0 success, 1 a check failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import kernels
from .core import BanditInstance, load_dataset
from .harness import (ALGORITHMS, SUITES, ConfigError, SweepConfig, build_problem, read_rows,
                      rate_fit, run_algorithm, run_sweep)
from .instances import (chi2_hard_family, dueling_hard_family, kl_hard_family, random_instance,
                        sample_bandit_data, sample_preference_data)
from .scenarios import SCENARIOS, get_scenario
from .uncertainty import bonus_table, d2_table


class UsageError(Exception):
    pass


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def cmd_gen_instance(args) -> int:
    if args.family:
        if args.family == "kl":
            fam = kl_hard_family(args.S, args.c_star, args.eta, args.n_target)
        elif args.family == "chi2":
            fam = chi2_hard_family(args.S, args.alpha, args.eta, args.n_target)
        else:
            kind = args.family.split("_", 1)[1]
            fam = dueling_hard_family(args.S, args.c_star, args.eta, args.n_target, kind, args.alpha)
        fam.save(args.out)
        fam.shared_function_class.save(Path(args.out) / "function_class.json")
        print(f"wrote {len(fam)} instances to {args.out}")
        return 0
    if args.scenario:
        sc = get_scenario(args.scenario)
        sc.instance.save(args.out)
        if args.class_out:
            sc.function_class.save(args.class_out)
    else:
        random_instance(args.S, args.A, args.seed, args.skew).save(args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_sample(args) -> int:
    inst = BanditInstance.load(args.instance).check()
    if args.preference:
        data = sample_preference_data(inst, args.n, args.seed)
    else:
        data = sample_bandit_data(inst, args.n, args.seed)
    data.to_csv(args.out)
    print(f"wrote {len(data)} rows to {args.out}")
    return 0


def _config_from_args(args) -> SweepConfig:
    if args.config:
        base = json.loads(Path(args.config).read_text())
    else:
        base = {}
    flags = {
        "algo": args.algo, "eta": args.eta, "alpha": args.alpha, "n_grid": args.n_grid,
        "seeds": args.seeds, "delta": args.delta, "out": args.out, "workers": args.workers,
        "scenario": args.scenario, "base_seed": args.base_seed,
        "instance_path": args.instance, "class_path": args.function_class,
    }
    for k, v in flags.items():
        if v is not None:
            base[k] = v
    if args.instance and not args.scenario:
        base.pop("scenario", None)
    if getattr(args, "timing", False):
        base["record_timing"] = True
    return SweepConfig.from_dict(base)


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    prob = build_problem(cfg)
    data = load_dataset(args.data)
    pi, diag = run_algorithm(cfg.algo, prob, data, cfg.delta)
    from .evaluation import suboptimality

    report = {
        "algo": cfg.algo,
        "policy": pi.tolist(),
        "estimator_index": diag.estimator_index,
        "beta": diag.beta,
        "event_e": diag.event_e,
        "subopt": suboptimality(prob.instance, prob.regularizer, pi, prob.pi_star),
    }
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    if cfg.out is None:
        from .harness import iter_sweep, write_rows
        write_rows(iter_sweep(cfg), sys.stdout)
        return 0
    rows = run_sweep(cfg)
    bad = sum(r.status != "ok" for r in rows)
    print(f"wrote {len(rows)} rows to {cfg.out} ({bad} with errors)")
    return 0


def cmd_rate_fit(args) -> int:
    rows = read_rows(args.csv)
    fit = rate_fit(rows, args.statistic)
    print(json.dumps({"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2,
                      "n": list(fit.ns), args.statistic: list(fit.stats)}, indent=2))
    if args.slope_range:
        lo, hi = args.slope_range
        if not lo <= fit.slope <= hi:
            print(f"slope {fit.slope:.4f} outside [{lo}, {hi}]", file=sys.stderr)
            return 1
    if args.min_r2 is not None and fit.r2 < args.min_r2:
        print(f"r2 {fit.r2:.4f} below {args.min_r2}", file=sys.stderr)
        return 1
    return 0


def cmd_verify(args) -> int:
    if args.tables:
        sc = get_scenario(args.tables)
        inst, F = sc.instance, sc.function_class
        db = d2_table(F, inst.ref_policy, inst.context_dist, "bandit")
        dd = d2_table(F, inst.ref_policy, inst.context_dist, "dueling")
        bonus = bonus_table(F, inst.ref_policy, inst.context_dist, args.beta).values
        print("s,a,d2_bandit,d2_dueling,bonus")
        for s in range(inst.num_states):
            for a in range(inst.num_actions):
                print(f"{s},{a},{float(db[s, a])!r},{float(dd[s, a])!r},{float(bonus[s, a])!r}")
        return 0
    from .harness import verify

    checks = verify(args.suite, seed=args.seed, quick=args.quick)
    failed = 0
    for c in checks:
        failed += not c.passed
        print(json.dumps(c.as_dict()))
    print(f"{len(checks) - failed}/{len(checks)} checks passed (kernels: {kernels.BACKEND})", file=sys.stderr)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fdivbandit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-instance", help="write a random instance, scenario, or hard family")
    g.add_argument("--out", required=True)
    g.add_argument("--S", type=int, default=2)
    g.add_argument("--A", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--skew", type=float, default=0.0)
    g.add_argument("--scenario", choices=sorted(SCENARIOS))
    g.add_argument("--class-out", help="with --scenario: also write the function class JSON")
    g.add_argument("--family", choices=["kl", "chi2", "dueling_kl", "dueling_chi2"],
                   help="write a hard family directory instead")
    g.add_argument("--c-star", type=float, default=4.0)
    g.add_argument("--eta", type=float, default=8.0)
    g.add_argument("--alpha", type=float, default=1.0)
    g.add_argument("--n-target", type=int, default=512)
    g.set_defaults(fn=cmd_gen_instance)

    s = sub.add_parser("sample", help="draw an offline dataset as CSV")
    s.add_argument("--instance", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--preference", action="store_true", help="Bradley-Terry comparisons")
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_sample)

    def experiment_flags(q):
        q.add_argument("--config", help="JSON file with SweepConfig fields")
        q.add_argument("--algo", choices=ALGORITHMS)
        q.add_argument("--scenario", choices=sorted(SCENARIOS))
        q.add_argument("--instance", help="instance JSON (instead of a scenario)")
        q.add_argument("--function-class", help="function class JSON (with --instance)")
        q.add_argument("--eta", type=float)
        q.add_argument("--alpha", type=float)
        q.add_argument("--delta", type=float)
        q.add_argument("--n-grid", type=_ints)
        q.add_argument("--seeds", type=int)
        q.add_argument("--base-seed", type=int)
        q.add_argument("--workers", type=int)
        q.add_argument("--out")

    r = sub.add_parser("run", help="run one algorithm on a dataset CSV")
    experiment_flags(r)
    r.add_argument("--data", required=True)
    r.set_defaults(fn=cmd_run)

    w = sub.add_parser("sweep", help="Monte-Carlo sweep over n and seeds, CSV output")
    experiment_flags(w)
    w.add_argument("--timing", action="store_true", help="record wall time per cell (breaks byte-identical output)")
    w.set_defaults(fn=cmd_sweep)

    f = sub.add_parser("rate-fit", help="log-log slope of a sweep CSV")
    f.add_argument("csv")
    f.add_argument("--statistic", choices=["median", "mean"], default="median")
    f.add_argument("--slope-range", type=float, nargs=2, metavar=("LO", "HI"))
    f.add_argument("--min-r2", type=float)
    f.set_defaults(fn=cmd_rate_fit)

    v = sub.add_parser("verify", help="run invariant and lemma checks")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--quick", action="store_true", help="smaller sample counts")
    v.add_argument("--tables", choices=sorted(SCENARIOS), help="print D2 / bonus tables for a scenario")
    v.add_argument("--beta", type=float, default=1.0)
    v.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.fn(args)
    except (ConfigError, UsageError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
