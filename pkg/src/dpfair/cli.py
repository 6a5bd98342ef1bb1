"""
Command-line front end.

Subcommands: mech, budget, bounds, sweep, attack-demo, casestudy. Every
random draw comes from a generator seeded by ``--seed`` (default 42, or
the ``DPFAIR_SEED`` environment variable), and the seed is echoed in the
output. Floats are written with 10 significant digits.

Exit status: 0 on success, 1 on a domain error (the message starts with the
error's class name), 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import accountant, attack, casestudy, frontier, mechanisms
from .errors import DPFairError
from .fairness import LabeledDataset

DEFAULT_SEED = 42
SEED_ENV = "DPFAIR_SEED"
FLOAT_DIGITS = 10


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"{SEED_ENV} must be an integer, got {raw!r}")


def _round_floats(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(format(obj, f".{FLOAT_DIGITS}g"))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, np.generic):
        return _round_floats(obj.item())
    return obj


def _dumps(obj) -> str:
    return json.dumps(_round_floats(obj), indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _positive(kind):
    def parse(raw):
        value = kind(raw)
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {raw}")
        return value
    return parse


def _group_eps(raw: str):
    name, sep, eps = raw.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME=EPSILON, got {raw!r}")
    try:
        return name, float(eps)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad epsilon in {raw!r}")


# -- subcommands -------------------------------------------------------------

def cmd_mech(args, rng) -> int:
    data = LabeledDataset.from_csv(args.input)
    columns = [f"f{i + 1}" for i in range(data.dim)] + ["label", "group"]
    if args.column not in columns:
        raise DPFairError(f"column {args.column!r} not in CSV (have {', '.join(columns)})")
    j = columns.index(args.column)
    table = np.column_stack([data.features, data.labels, data.groups])
    values = table[:, j]
    n = len(values)

    if args.query == "count":
        answer, sens = float(np.sum(values != 0)), 1.0
    else:
        if args.lo is None or args.hi is None or not args.lo < args.hi:
            raise DPFairError("mean query needs --lo < --hi to bound each record")
        clipped = np.clip(values, args.lo, args.hi)
        answer, sens = float(clipped.mean()), (args.hi - args.lo) / n

    if args.mechanism == "laplace":
        noisy = mechanisms.laplace_mechanism(answer, sens, args.epsilon, rng)
    elif args.mechanism == "gaussian":
        budget = mechanisms.PrivacyBudget(args.epsilon, args.delta)
        noisy = mechanisms.gaussian_mechanism(answer, sens, budget, rng)
    else:
        if args.query != "mean":
            raise DPFairError("sample-aggregate supports only the mean query")
        noisy = mechanisms.sample_and_aggregate(
            values, args.blocks, lambda block: float(np.mean(block)), (args.lo, args.hi), args.epsilon, rng
        )
    out = noisy.to_dict()
    out.update(seed=args.seed, query=args.query, column=args.column, records=n)
    _emit(_dumps(out), args.out)
    return 0


def cmd_budget(args, rng) -> int:
    path = Path(args.ledger) if args.ledger else None
    if args.group is not None:
        policy = accountant.GroupBudgetPolicy(dict(args.policy or []))
        cap = accountant.group_epsilon(policy, args.group)
        ledger = accountant.BudgetLedger.with_cap(cap, args.cap_delta)
    elif path is not None and path.exists():
        ledger = accountant.BudgetLedger.from_json(path.read_text(encoding="utf-8"))
    else:
        if args.cap_epsilon is None:
            raise DPFairError("no ledger file to load; give --cap-epsilon to start one")
        ledger = accountant.BudgetLedger.with_cap(args.cap_epsilon, args.cap_delta)

    status, error = 0, None
    for eps in args.charge or []:
        label = f"{args.label}#{len(ledger.entries) + 1}" if args.label else f"charge#{len(ledger.entries) + 1}"
        try:
            ledger = ledger.charge(eps, args.delta, label)
        except ValueError as exc:
            status, error = 1, exc
            break

    summary = ledger.to_dict()
    summary.update(spent_epsilon=ledger.spent_epsilon, spent_delta=ledger.spent_delta, seed=args.seed)
    if args.group is not None:
        summary["group"] = args.group
    if path is not None:
        path.write_text(ledger.to_json(indent=2, sort_keys=True) + "\n", encoding="utf-8")
    sys.stdout.write(_dumps(summary))
    if error is not None:
        sys.stderr.write(f"{type(error).__name__}: {error}\n")
    return status


def _feasibility_spec(args) -> frontier.FeasibilitySpec:
    return frontier.FeasibilitySpec(u0=args.u0, f_target=args.f_target, d=args.d, p=args.p,
                                    u_threshold=args.u_threshold)


def cmd_bounds(args, rng) -> int:
    spec = _feasibility_spec(args)
    consts = frontier.BoundConstants(args.c_utility, args.c_fairness)
    out = {"n_star": frontier.critical_sample_size(spec, args.epsilon, consts), "seed": args.seed}
    if args.n is not None:
        out.update(
            n=args.n,
            feasible=frontier.feasible(spec, args.epsilon, args.n, consts),
            utility_bound=frontier.utility_bound(spec.u0, spec.d, args.epsilon, args.n, consts),
            fairness_bound=frontier.fairness_bound(args.epsilon, args.n, spec.p, consts),
        )
    _emit(_dumps(out), args.out)
    return 0


def cmd_sweep(args, rng) -> int:
    grid = json.loads(Path(args.grid).read_text(encoding="utf-8"))
    try:
        epsilons, ns = grid["epsilon"], grid["n"]
    except (KeyError, TypeError):
        raise DPFairError('grid file must look like {"epsilon": [...], "n": [...]}')
    spec = _feasibility_spec(args)
    consts = frontier.BoundConstants(args.c_utility, args.c_fairness)
    if args.evaluator == "analytic":
        evaluator = "analytic"
    else:
        evaluator = casestudy.EmpiricalEvaluator(p=spec.p, seeds=args.seeds, master_seed=args.seed,
                                                 spec=casestudy.SyntheticSpec(d=spec.d))
    points = frontier.sweep(epsilons, ns, spec, evaluator, consts)
    _emit(frontier.sweep_csv(points), args.out)
    return 0


def cmd_attack(args, rng) -> int:
    base = attack.Scenario.strongly_separating() if args.scenario == "separating" else attack.Scenario()
    overrides = {k: v for k, v in (
        ("marker_smoking_rate", args.marker_rate),
        ("background_smoking_rate", args.background_rate),
        ("database_size", args.database_size),
        ("population_size", args.population_size),
        ("target_in_database_prior", args.prior),
    ) if v is not None}
    scenario = replace(base, **overrides)
    if args.release == "laplace" and args.epsilon is None:
        raise DPFairError("laplace release needs --epsilon")
    report = attack.smoking_demo(scenario, args.release, args.epsilon, rng, args.trials, args.resamples)
    out = report.to_dict()
    out.update(seed=args.seed, scenario=scenario.__dict__)
    _emit(_dumps(out), args.out)
    return 0


def cmd_casestudy(args, rng) -> int:
    variant = args.variant.replace("-", "_")
    config = casestudy.TrainConfig(seed=args.seed, target_delta=args.delta)
    spec = casestudy.SyntheticSpec()
    if args.sweep_out:
        rows = casestudy.seed_sweep(spec, config, range(args.seed, args.seed + args.seeds),
                                    casestudy.VARIANTS, args.epsilon, args.fairness_lambda)
        Path(args.sweep_out).write_text(casestudy.seed_sweep_csv(rows), encoding="utf-8")
    if args.data:
        train = test = LabeledDataset.from_csv(args.data)
    else:
        train_rng, test_rng = (np.random.default_rng(s) for s in np.random.SeedSequence([args.seed, 0]).spawn(2))
        train, test = casestudy.generate_synthetic(spec, train_rng), casestudy.generate_synthetic(spec, test_rng)
    model, report = casestudy.run_variant(variant, train, test, config, args.epsilon, args.fairness_lambda)
    if args.postprocess:
        thresholds = casestudy.threshold_postprocess(model.scores(test.features), test, args.postprocess)
        report = replace(casestudy.evaluate(model, test, thresholds=thresholds), epsilon_spent=report.epsilon_spent)
    out = report.to_dict()
    out.update(seed=args.seed, variant=variant, weights=model.weights.tolist())
    _emit(_dumps(out), args.out)
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpfair", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--seed", type=int, default=_default_seed(),
                       help=f"random seed (default {DEFAULT_SEED}, or ${SEED_ENV})")
        p.set_defaults(func=func)
        return p

    p = add("mech", cmd_mech, "Release a noisy count or mean of one CSV column.")
    p.add_argument("--input", required=True, help="CSV with header f1,...,fd,label,group")
    p.add_argument("--column", default="label")
    p.add_argument("--query", choices=("count", "mean"), default="count")
    p.add_argument("--mechanism", choices=("laplace", "gaussian", "sample-aggregate"), default="laplace")
    p.add_argument("--epsilon", type=_positive(float), required=True)
    p.add_argument("--delta", type=float, default=1e-5, help="gaussian only")
    p.add_argument("--lo", type=float, help="lower clamp for mean queries")
    p.add_argument("--hi", type=float, help="upper clamp for mean queries")
    p.add_argument("--blocks", type=_positive(int), default=10, help="sample-aggregate block count")
    p.add_argument("--out")

    p = add("budget", cmd_budget, "Load, charge and save a privacy ledger (basic composition).")
    p.add_argument("--ledger", help="ledger JSON file; loaded if present, written after charging")
    p.add_argument("--cap-epsilon", type=_positive(float))
    p.add_argument("--cap-delta", type=float, default=0.0)
    p.add_argument("--charge", type=float, action="append", metavar="EPSILON")
    p.add_argument("--delta", type=float, default=0.0, help="delta charged alongside each --charge")
    p.add_argument("--label", default="")
    p.add_argument("--policy", type=_group_eps, action="append", metavar="GROUP=EPSILON",
                   help="per-group epsilon; with --group, charges go to an independent ledger for that group")
    p.add_argument("--group")

    def feas_flags(p):
        p.add_argument("--d", type=_positive(int), required=True)
        p.add_argument("--p", type=float, required=True, help="minority share of the sample")
        p.add_argument("--f-target", type=_positive(float), required=True)
        p.add_argument("--u0", type=float, required=True)
        p.add_argument("--u-threshold", type=float, default=0.5)
        p.add_argument("--c-utility", type=_positive(float), default=1.0)
        p.add_argument("--c-fairness", type=_positive(float), default=1.0)

    p = add("bounds", cmd_bounds, "Critical sample size and feasibility for a target.")
    feas_flags(p)
    p.add_argument("--epsilon", type=_positive(float), required=True)
    p.add_argument("--n", type=_positive(float), help="also report feasibility at this sample size")
    p.add_argument("--out")

    p = add("sweep", cmd_sweep, "Evaluate an (epsilon, n) grid and write the frontier CSV.")
    feas_flags(p)
    p.add_argument("--grid", required=True, help='JSON file {"epsilon": [...], "n": [...]}')
    p.add_argument("--evaluator", choices=("analytic", "empirical"), default="analytic")
    p.add_argument("--seeds", type=_positive(int), default=3, help="seeds per cell (empirical)")
    p.add_argument("--out")

    p = add("attack-demo", cmd_attack, "Membership inference against a smoking-rate release.")
    p.add_argument("--release", choices=("deterministic", "laplace"), default="deterministic")
    p.add_argument("--epsilon", type=_positive(float))
    p.add_argument("--scenario", choices=("default", "separating"), default="default")
    p.add_argument("--marker-rate", type=float)
    p.add_argument("--background-rate", type=float)
    p.add_argument("--database-size", type=_positive(int))
    p.add_argument("--population-size", type=_positive(int))
    p.add_argument("--prior", type=float)
    p.add_argument("--trials", type=_positive(int), default=10_000)
    p.add_argument("--resamples", type=_positive(int), default=20_000)
    p.add_argument("--out")

    p = add("casestudy", cmd_casestudy, "Train one pipeline variant on synthetic (or CSV) data and report.")
    p.add_argument("--variant", choices=("plain", "fair", "dp", "dp-fair"), default="dp")
    p.add_argument("--epsilon", type=_positive(float), default=1.0)
    p.add_argument("--delta", type=float, default=1e-5)
    p.add_argument("--fairness-lambda", type=float, default=10.0)
    p.add_argument("--data", help="train and evaluate on this CSV instead of synthetic data")
    p.add_argument("--postprocess", choices=("demographic_parity", "equalized_odds"),
                   help="fit per-group thresholds on the evaluation scores")
    p.add_argument("--seeds", type=_positive(int), default=20)
    p.add_argument("--sweep-out", help="also write a seed-sweep CSV over all variants")
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    try:
        return args.func(args, rng)
    except (ValueError, OSError) as exc:
        # DPFairError and JSONDecodeError are both ValueErrors
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
