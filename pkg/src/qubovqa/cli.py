"""Command-line entry point: ``qubovqa <subcommand> ...``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness as h
from .data import PrepConfig, prepare
from .qubo import make_grid, point_groups, read_qubo, write_qubo
from .sampler import AnnealSchedule, brute_force, one_hot_violations, simulated_anneal
from .search import build_model, training_targets


def _floats(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


def _ints(text):
    return tuple(int(t) for t in text.split(",") if t.strip())


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="experiment config file")
    g = p.add_argument_group("run")
    g.add_argument("--method", choices=h.METHODS)
    g.add_argument("--repeats", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--label")
    g.add_argument("--output", help="output directory")
    g = p.add_argument_group("dataset")
    g.add_argument("--dataset", help="dataset name (iris is bundled)")
    g.add_argument("--data-path")
    g.add_argument("--label-column")
    g.add_argument("--positives", help="comma-separated raw labels mapped to class 1")
    g.add_argument("--keep", help="comma-separated raw labels to keep")
    g.add_argument("--subsample", type=int)
    g.add_argument("--balance", choices=("oversample", "undersample"))
    g = p.add_argument_group("circuit")
    g.add_argument("--qubits", type=int)
    g.add_argument("--ansatz", choices=("twolocal", "example"))
    g.add_argument("--reps", type=int)
    g.add_argument("--readout", choices=("single_qubit", "all_qubits"))
    g.add_argument("--readout-index", type=int)
    g = p.add_argument_group("adiabatic search")
    g.add_argument("--levels", type=int)
    g.add_argument("--parts", type=int)
    g.add_argument("--points", type=int)
    g.add_argument("--tau", type=float)
    g.add_argument("--rescale", type=float)
    g.add_argument("--angle-range", type=_floats)
    g.add_argument("--lam", type=float)
    g.add_argument("--solver", choices=("anneal", "exact"))
    g.add_argument("--noise", type=float)
    _add_schedule_flags(p)
    g = p.add_argument_group("baselines")
    g.add_argument("--iterations", type=int, help="SPSA iterations")
    g.add_argument("--generations", type=int, help="memetic generations")
    g.add_argument("--population", type=int)


def _add_schedule_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("sampler")
    g.add_argument("--sweeps", type=int)
    g.add_argument("--reads", type=int)
    g.add_argument("--beta-start", type=float)
    g.add_argument("--beta-end", type=float)
    g.add_argument("--sampler-seed", type=int)


def _pick(args, **names):
    return {field: getattr(args, attr) for field, attr in names.items() if getattr(args, attr) is not None}


def config_from_args(args) -> h.ExperimentConfig:
    cfg = h.ExperimentConfig.from_ini(args.config) if args.config else h.ExperimentConfig()
    ds = _pick(args, name="dataset", path="data_path", label_column="label_column", subsample="subsample", balance="balance")
    if args.positives:
        ds["positives"] = h._csv_tuple(args.positives, h._scalar)
    if args.keep:
        ds["keep"] = h._csv_tuple(args.keep, h._scalar)
    circ = _pick(args, q="qubits", ansatz="ansatz", reps="reps", readout="readout", readout_index="readout_index")
    sched = _pick(args, sweeps="sweeps", reads="reads", beta_start="beta_start", beta_end="beta_end", seed="sampler_seed")
    search = _pick(args, L="levels", d="parts", w="points", tau="tau", rescale="rescale",
                   angle_range="angle_range", lam="lam", solver="solver")
    search["schedule"] = replace(cfg.search.schedule, **sched)
    top = _pick(args, method="method", repeats="repeats", seed="seed", label="label", output="output", noise="noise")
    return replace(
        cfg,
        dataset=replace(cfg.dataset, **ds),
        circuit=replace(cfg.circuit, **circ),
        search=replace(cfg.search, **search),
        spsa=replace(cfg.spsa, **_pick(args, iterations="iterations")),
        memetic=replace(cfg.memetic, **_pick(args, generations="generations", population="population")),
        **top,
    )


def _outdir(cfg: h.ExperimentConfig) -> Path:
    return Path(cfg.output or "results")


def _print_rows(rows) -> None:
    print(",".join(h.ROW_FIELDS))
    for r in rows:
        print(",".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in r.as_dict().values()))


def cmd_train(args) -> int:
    cfg = config_from_args(args)
    res = h.run_experiment(cfg)
    out = _outdir(cfg)
    h.write_rows(res.rows + [res.mean], out / "results.csv")
    h.write_json(res.manifest(), out / "manifest.json")
    _print_rows(res.rows + [res.mean])
    return 1 if res.failed_executions else 0


def cmd_sweep(args) -> int:
    cfg = config_from_args(args)
    cells = h.sweep_configs(cfg, args.grid_levels or (), args.grid_parts or (), args.grid_points or (), args.grid_noise or ())
    rows, manifests, failed = [], [], 0
    for cell in cells:
        res = h.run_experiment(cell)
        rows.extend(res.rows if args.all_rows else [])
        rows.append(res.mean)
        manifests.append(res.manifest())
        failed += res.failed_executions
    out = _outdir(cfg)
    h.write_rows(rows, out / "sweep.csv")
    h.write_json({"cells": manifests}, out / "sweep_manifest.json")
    _print_rows(rows)
    return 1 if failed else 0


def cmd_pareto(args) -> int:
    front = h.pareto_front(h.read_rows(args.input))
    if args.out:
        h.write_rows(front, args.out)
    _print_rows(front)
    return 0


def cmd_noise(args) -> int:
    cfg = config_from_args(args)
    summaries = h.noise_sweep(cfg, args.noise_levels)
    out = _outdir(cfg)
    table = [s.as_dict() for s in summaries]
    h.write_json({"config": cfg.to_dict(), "levels": table,
                  "accuracies": {str(s.level): list(s.accuracies) for s in summaries}}, out / "noise_manifest.json")
    keys = list(table[0])
    with open(out / "noise.csv", "w", encoding="utf-8") as fh:
        fh.write(",".join(keys) + "\n")
        for t in table:
            fh.write(",".join(str(t[k]) for k in keys) + "\n")
    for t in table:
        print(t)
    return 0


def cmd_export_qubo(args) -> int:
    cfg = config_from_args(args)
    circuit = cfg.circuit.build()
    readout = cfg.circuit.readout_spec()
    prep_seed, _ = h.repeat_seeds(cfg.seed, args.repeat)
    bundle = prepare(cfg.dataset.load(),
                     PrepConfig(circuit.q, cfg.dataset.balance, cfg.dataset.components, subsample=cfg.dataset.subsample),
                     prep_seed)
    s = cfg.search
    grid = make_grid(np.tile(np.asarray(s.angle_range, dtype=float), (circuit.a, 1)), s.d, s.w, s.point_offsets)
    groups = point_groups(circuit.a, s.w)
    if not 0 <= args.point < len(groups):
        raise SystemExit(f"point group must be in [0, {len(groups)})")
    train = bundle.train
    model = build_model(circuit, s, grid, groups[args.point], train.states(circuit.q),
                        training_targets(train.labels, circuit.q, readout))
    write_qubo(model, args.out)
    print(f"wrote {args.out}: {model.n_vars} variables ({model.n_primary} primary), "
          f"{len(model.quadratic)} couplings")
    return 0


def cmd_sample(args) -> int:
    model = read_qubo(args.qubo)
    if args.exact:
        samples = [brute_force(model)]
    else:
        sched = AnnealSchedule(**_pick(args, sweeps="sweeps", reads="reads", beta_start="beta_start",
                                       beta_end="beta_end", seed="sampler_seed"))
        samples = simulated_anneal(model, sched)
    for s in samples[: args.show]:
        bits = "".join(map(str, s.assignment))
        note = ""
        if args.one_hot:
            a, d = args.one_hot
            bad = one_hot_violations(s.assignment, a, d)
            note = " feasible" if not bad else f" violates {list(bad)}"
        print(f"{s.energy:.12g} {bits}{note}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qubovqa", description="QUBO-based training of variational circuits")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run one configuration with repeats")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="grid over levels, partitions, points and noise")
    _add_config_flags(p)
    p.add_argument("--grid-levels", type=_ints)
    p.add_argument("--grid-parts", type=_ints)
    p.add_argument("--grid-points", type=_ints)
    p.add_argument("--grid-noise", type=_floats)
    p.add_argument("--all-rows", action="store_true", help="also write per-repeat rows")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("pareto", help="non-dominated rows of a results CSV")
    p.add_argument("input")
    p.add_argument("--out")
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("noise", help="accuracy spread under coefficient noise")
    _add_config_flags(p)
    p.add_argument("--noise-levels", type=_floats, default=(0.0, 0.1, 0.2))
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("export-qubo", help="write the first-level QUBO of one point group")
    _add_config_flags(p)
    p.add_argument("--point", type=int, default=0, help="point-group index")
    p.add_argument("--repeat", type=int, default=0, help="repeat whose data split is used")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_qubo)

    p = sub.add_parser("sample", help="solve a coordinate-format QUBO file")
    p.add_argument("qubo")
    _add_schedule_flags(p)
    p.add_argument("--exact", action="store_true", help="exhaustive search instead of annealing")
    p.add_argument("--show", type=int, default=5)
    p.add_argument("--one-hot", type=int, nargs=2, metavar=("A", "D"), help="report one-hot feasibility")
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
