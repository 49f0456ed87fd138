"""Command-line front end for the experiment harness.

Subcommands: synthesize, audit, utility, attack, learn, stage-moments.
Grid commands run their independent cells on a process pool (``--workers``,
overridden by the ``RANKDP_THREADS`` env var) and emit rows in grid order,
so outputs are byte-identical for any worker count.  Every run writes a
``<output>.manifest.json`` with the cell seeds needed to reproduce any
single row in isolation.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, learn
from .attack import AttackCell, EpsilonSchedule, attack_cell
from .audit import EMPIRICAL_CAP, empirical_epsilon, exact_epsilon
from .core import Ranking
from .errors import RankDPError
from .learn import RankingDataset
from .mechanisms import (
    LaplaceMechanism,
    MallowsMechanism,
    expected_concordance_laplace,
    expected_concordance_mallows,
    expected_stage_position,
    induced_ranking_many,
    laplace_perturb_many,
    sample_stage_positions,
    synthesize_many,
)
from .seeding import derive_seed, spawn_generator
from ._kernels import concordance_counts


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(x: float) -> str:
    """Reals with 17 significant digits, '.' decimal, no locale."""
    return format(float(x), ".17g")


def _workers(args) -> int:
    env = os.environ.get("RANKDP_THREADS")
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise UsageError(f"RANKDP_THREADS must be an integer, got {env!r}")
        if value < 1:
            raise UsageError("RANKDP_THREADS must be >= 1")
        return value
    return getattr(args, "workers", 1)


def _pool_map(fn, tasks, workers: int):
    """Order-preserving map; pool only when workers > 1."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_manifest(path, command: str, parameters: dict, cells, started: float) -> None:
    doc = {
        "command": command,
        "version": __version__,
        "parameters": parameters,
        "wall_clock_seconds": time.time() - started,
        "cells": cells,
    }
    with open(f"{path}.manifest.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated numbers, got {text!r}")
    if not values:
        raise UsageError(f"{flag} must be nonempty")
    return values


def _parse_ints(text: str, flag: str) -> list[int]:
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated integers, got {text!r}")
    if not values:
        raise UsageError(f"{flag} must be nonempty")
    return values


# ---------------------------------------------------------------- synthesize


def _cmd_synthesize(args) -> int:
    started = time.time()
    dataset = learn.read_ranking_csv(args.input)
    n, m = dataset.rankings.shape
    if dataset.epsilons is None and args.epsilon is None:
        raise UsageError("--epsilon required when the input has no epsilon column")
    out = np.empty_like(dataset.rankings)
    cells = []
    for row in range(n):
        eps = float(dataset.epsilons[row]) if dataset.epsilons is not None else args.epsilon
        rng = spawn_generator(args.seed, "synthesize", row)
        ranking = Ranking(tuple(int(v) for v in dataset.rankings[row]))
        if args.mechanism == "mallows":
            out[row] = synthesize_many(MallowsMechanism(eps, m), ranking, 1, rng)[0]
        else:
            noisy = laplace_perturb_many(LaplaceMechanism(eps, m), ranking, 1, rng)
            out[row] = induced_ranking_many(noisy)[0]
        cells.append({"row": row, "epsilon": eps, "seed": derive_seed(args.seed, "synthesize", row)})
    learn.write_ranking_csv(
        args.output,
        RankingDataset(dataset.user_ids, dataset.item_ids, out, dataset.epsilons),
    )
    _write_manifest(
        args.output,
        "synthesize",
        {"input": args.input, "mechanism": args.mechanism, "epsilon": args.epsilon, "seed": args.seed},
        cells,
        started,
    )
    return 0


# --------------------------------------------------------------------- audit


def _cmd_audit(args) -> int:
    started = time.time()
    mech = MallowsMechanism(args.epsilon, args.m)
    base = Ranking(tuple(range(1, args.m + 1)))
    if args.mode == "exact":
        report = exact_epsilon(mech, base)
    else:
        if args.samples is None or args.samples < 1:
            raise UsageError("--samples >= 1 required in empirical mode")
        report = empirical_epsilon(
            mech, base, args.samples, seed=args.seed, workers=_workers(args), cap=EMPIRICAL_CAP
        )
    text = report.to_json()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        _write_manifest(
            args.output,
            "audit",
            {"m": args.m, "epsilon": args.epsilon, "mode": args.mode,
             "samples": args.samples, "seed": args.seed},
            [{"seed": args.seed}],
            started,
        )
    else:
        sys.stdout.write(text)
    return 0


# ------------------------------------------------------------------- utility


def _utility_cell(task) -> tuple:
    m, eps, reps, base_seed = task
    identity = Ranking(tuple(range(1, m + 1)))
    seed = derive_seed(base_seed, "utility", m, float(eps))
    rng = spawn_generator(base_seed, "utility", m, float(eps))
    draws = synthesize_many(MallowsMechanism(eps, m), identity, reps, rng)
    mallows_mc = float(concordance_counts(identity.to_array(), draws).mean())
    noisy = laplace_perturb_many(LaplaceMechanism(eps, m), identity, reps, rng)
    lap_ranks = induced_ranking_many(noisy)
    laplace_mc = float(concordance_counts(identity.to_array(), lap_ranks).mean())
    return (
        m,
        eps,
        mallows_mc,
        expected_concordance_mallows(m, eps),
        laplace_mc,
        expected_concordance_laplace(m, eps),
        reps,
        seed,
    )


def _cmd_utility(args) -> int:
    started = time.time()
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    m_list = _parse_ints(args.m_list, "--m-list")
    if args.epsilon_grid:
        grid = _parse_floats(args.epsilon_grid, "--epsilon-grid")
    else:
        lo, hi, k = args.epsilon_logspace
        if lo <= 0 or hi <= lo or int(k) < 2:
            raise UsageError("--epsilon-logspace needs 0 < LO < HI and K >= 2")
        grid = [float(v) for v in np.logspace(math.log10(lo), math.log10(hi), int(k))]
    tasks = [(m, eps, args.reps, args.seed) for m in m_list for eps in grid]
    results = _pool_map(_utility_cell, tasks, _workers(args))
    rows = [
        [r[0], _fmt(r[1]), _fmt(r[2]), _fmt(r[3]), _fmt(r[4]), _fmt(r[5]), r[6], r[7]]
        for r in results
    ]
    _write_csv(
        args.output,
        ["m", "epsilon", "mallows_mc", "mallows_cf", "laplace_mc", "laplace_cf", "reps", "seed"],
        rows,
    )
    _write_manifest(
        args.output,
        "utility",
        {"m_list": m_list, "epsilon_grid": grid, "reps": args.reps, "seed": args.seed},
        [{"m": r[0], "epsilon": r[1], "seed": r[7]} for r in results],
        started,
    )
    return 0


# -------------------------------------------------------------------- attack


def _attack_cell_task(task) -> AttackCell:
    m, kind, c, n, reps, base_seed = task
    return attack_cell(m, EpsilonSchedule(kind, c), n, reps, base_seed)


def _cmd_attack(args) -> int:
    started = time.time()
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    m_list = _parse_ints(args.m_list, "--m-list")
    n_grid = sorted(set(_parse_ints(args.n_grid, "--n-grid")))
    if n_grid[0] < 1:
        raise UsageError("--n-grid entries must be >= 1")
    if args.c <= 0:
        raise UsageError("--c must be > 0")
    tasks = [(m, args.schedule, args.c, n, args.reps, args.seed) for m in m_list for n in n_grid]
    cells = _pool_map(_attack_cell_task, tasks, _workers(args))
    rows = [
        [c.m, c.n, _fmt(c.epsilon), c.schedule, c.replications, c.errors,
         _fmt(c.error_rate), _fmt(c.stderr), c.seed]
        for c in cells
    ]
    _write_csv(
        args.output,
        ["m", "N", "epsilon", "schedule", "replications", "errors", "error_rate", "stderr", "seed"],
        rows,
    )
    _write_manifest(
        args.output,
        "attack",
        {"m_list": m_list, "schedule": args.schedule, "c": args.c,
         "n_grid": n_grid, "reps": args.reps, "seed": args.seed},
        [{"m": c.m, "N": c.n, "seed": c.seed} for c in cells],
        started,
    )
    return 0


# --------------------------------------------------------------------- learn


_LEARN_DEFAULTS = {
    "seed": 0,
    "replications": 10,
    "epsilons": [1.0, 4.0],
    "mechanisms": ["mallows", "laplace"],
    "data": {"n_train": 300, "n_val": 100, "n_test": 1000, "m": 15, "p": 4, "q": 4,
             "coeff_scale": 1.0},
    "model": {"kind": "mlp", "hidden": [10, 10], "embedding": 10},
    "train": {"learning_rate": 0.2, "batch_pairs": 4096, "max_epochs": 400,
              "patience": 40, "ridge": 0.0},
}


def load_learn_config(path) -> dict:
    """Read a TOML or JSON config and fill in defaults."""
    text = open(path, "rb").read()
    if str(path).endswith(".toml"):
        try:
            import tomllib as toml_loader  # py311+
        except ModuleNotFoundError:
            import tomli as toml_loader
        raw = toml_loader.loads(text.decode("utf-8"))
    else:
        raw = json.loads(text.decode("utf-8"))
    config = json.loads(json.dumps(_LEARN_DEFAULTS))
    for key, value in raw.items():
        if isinstance(value, dict) and isinstance(config.get(key), dict):
            config[key].update(value)
        else:
            config[key] = value
    return config


def _learn_run(task) -> tuple:
    config_json, rep, mechanism, eps = task
    config = json.loads(config_json)
    seed = config["seed"]
    d = config["data"]
    # The generator coefficients and the item universe are fixed for the
    # whole experiment; replications redraw users and privatization noise.
    gen = spawn_generator(seed, "learn-generator")
    alpha = gen.uniform(-1.0, 1.0, d["p"]) * d["coeff_scale"]
    beta = gen.uniform(-1.0, 1.0, d["q"]) * d["coeff_scale"]
    items = gen.uniform(-3.0, 3.0, (d["m"], d["q"]))
    g = spawn_generator(seed, "learn-data", rep)
    n_fit = d["n_train"] + d["n_val"]
    data = learn.generate_dataset(
        n_fit, d["m"], alpha, beta, g, p=d["p"], q=d["q"], item_features=items
    )
    x_test = g.uniform(-3.0, 3.0, (d["n_test"], d["p"]))
    true_test = (x_test @ alpha)[:, None] + (data.item_features @ beta)[None, :]

    data = data.with_epsilons(np.full(n_fit, eps))
    synth = learn.privatize_dataset(
        data, mechanism, derive_seed(seed, "privatize", rep, mechanism, float(eps))
    )
    cfg = learn.TrainConfig(
        learning_rate=config["train"]["learning_rate"],
        batch_pairs=config["train"]["batch_pairs"],
        max_epochs=config["train"]["max_epochs"],
        patience=config["train"]["patience"],
        ridge=config["train"]["ridge"],
        val_fraction=d["n_val"] / n_fit,
        seed=derive_seed(seed, "train", rep, float(eps)),
        model=config["model"]["kind"],
        hidden=tuple(config["model"]["hidden"]),
        embedding=config["model"]["embedding"],
    )
    result = learn.train(data.user_features, data.item_features, synth, cfg)
    acc = learn.pairwise_accuracy(result.model, x_test, data.item_features, true_test)
    run_seed = derive_seed(seed, "learn-cell", rep, mechanism, float(eps))
    return (rep, mechanism, eps, d["n_train"], d["m"], run_seed,
            result.train_accuracy, result.val_accuracy, acc.symmetric)


def _cmd_learn(args) -> int:
    started = time.time()
    config = load_learn_config(args.config)
    if config["replications"] < 1:
        raise UsageError("replications must be >= 1")
    for kind in config["mechanisms"]:
        if kind not in learn.MECHANISM_KINDS:
            raise UsageError(f"unknown mechanism {kind!r}")
    config_json = json.dumps(config, sort_keys=True)
    tasks = [
        (config_json, rep, mechanism, float(eps))
        for rep in range(config["replications"])
        for mechanism in config["mechanisms"]
        for eps in config["epsilons"]
    ]
    results = _pool_map(_learn_run, tasks, _workers(args))
    rows = [
        [r[0], r[1], _fmt(r[2]), r[3], r[4], r[5], _fmt(r[6]), _fmt(r[7]), _fmt(r[8])]
        for r in results
    ]
    _write_csv(
        args.output,
        ["run", "mechanism", "epsilon", "n", "m", "seed", "train_acc", "val_acc", "test_acc_sym"],
        rows,
    )

    summary_rows = []
    for mechanism in config["mechanisms"]:
        for eps in config["epsilons"]:
            accs = [r[8] for r in results if r[1] == mechanism and r[2] == float(eps)]
            mean = sum(accs) / len(accs)
            if len(accs) > 1:
                var = sum((a - mean) ** 2 for a in accs) / (len(accs) - 1)
                stderr = math.sqrt(var / len(accs))
            else:
                stderr = math.nan
            summary_rows.append(
                [mechanism, _fmt(eps), config["data"]["n_train"], config["data"]["m"],
                 len(accs), _fmt(mean), _fmt(stderr)]
            )
    _write_csv(
        f"{args.output}.summary.csv",
        ["mechanism", "epsilon", "n", "m", "runs", "mean_test_acc_sym", "stderr"],
        summary_rows,
    )
    _write_manifest(
        args.output,
        "learn",
        config,
        [{"run": r[0], "mechanism": r[1], "epsilon": r[2], "seed": r[5]} for r in results],
        started,
    )
    return 0


# ------------------------------------------------------------- stage moments


def _cmd_stage_moments(args) -> int:
    started = time.time()
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    mech = MallowsMechanism(args.epsilon, args.m)
    stages = []
    for t in range(2, args.m + 1):
        rng = spawn_generator(args.seed, "stage-moments", args.m, float(args.epsilon), t)
        draws = sample_stage_positions(mech, t, args.samples, rng)
        mean_cf, var_cf = expected_stage_position(mech, t)
        stages.append(
            {
                "t": t,
                "mean_mc": float(draws.mean()),
                "var_mc": float(draws.var(ddof=1)) if args.samples > 1 else math.nan,
                "mean_cf": mean_cf,
                "var_cf": var_cf,
                "se_mean": float(draws.std(ddof=1) / math.sqrt(args.samples))
                if args.samples > 1
                else math.nan,
            }
        )
    doc = {
        "m": args.m,
        "epsilon": args.epsilon,
        "samples": args.samples,
        "seed": args.seed,
        "stages": stages,
    }
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        _write_manifest(args.output, "stage-moments", doc | {"stages": None}, [], started)
    else:
        sys.stdout.write(text)
    return 0


# --------------------------------------------------------------------- main


def build_parser() -> _Parser:
    parser = _Parser(prog="rankdp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rankdp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synthesize", help="privatize a ranking CSV row by row")
    p.add_argument("--input", required=True)
    p.add_argument("--epsilon", type=float, default=None,
                   help="budget for rows without an epsilon column")
    p.add_argument("--mechanism", choices=("mallows", "laplace"), default="mallows")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_synthesize)

    p = sub.add_parser("audit", help="measure the privacy guarantee")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--mode", choices=("exact", "empirical"), default="exact")
    p.add_argument("--samples", type=int, default=None, help="draws per arm (empirical)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None, help="report JSON path (default stdout)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("utility", help="expected concordance: Monte Carlo vs closed form")
    p.add_argument("--m-list", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--epsilon-grid", help="comma-separated budgets")
    group.add_argument("--epsilon-logspace", nargs=3, type=float, metavar=("LO", "HI", "K"))
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_utility)

    p = sub.add_parser("attack", help="central-ranking recovery error rates")
    p.add_argument("--m-list", required=True)
    p.add_argument("--schedule", choices=("fixed", "sqrt", "logsqrt"), required=True)
    p.add_argument("--c", type=float, default=1.0, help="schedule scale constant")
    p.add_argument("--n-grid", required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("learn", help="train rankers on privatized data, compare mechanisms")
    p.add_argument("--config", required=True, help="TOML or JSON experiment config")
    p.add_argument("--output", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_learn)

    p = sub.add_parser("stage-moments", help="stage position: empirical vs closed form")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_stage_moments)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (RankDPError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
