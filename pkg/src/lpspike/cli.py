"""Command-line entry point: ``lpspike {train-xor,train-iris,eval,oracle,trace,audit}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .codec import Genome
from .config import ConfigError, ExperimentConfig, load_config, parse_seeds
from .datasets import load_iris, make_fold_plan
from .encoders import encode_iris_sample, encode_xor
from .harness import (
    audit,
    emit_traces,
    enumerate_oracle,
    eval_genome,
    iris_patterns,
    iris_targets,
    run_iris,
    run_xor,
    xor_task,
)
from .srm import SimParams, StructureError

log = logging.getLogger("lpspike")


def _load(args, task: str | None = None) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig(task=task or "xor")
    if task and cfg.task != task:
        raise ConfigError([f"config describes a {cfg.task} experiment, command expects {task}"])
    if getattr(args, "seed", None):
        cfg.seeds = parse_seeds(args.seed)
    if getattr(args, "out", None):
        cfg.output_dir = Path(args.out)
    cfg.validate()
    return cfg


def _pick_sim(cfg: ExperimentConfig, genome: Genome, dt: float | None) -> SimParams:
    for scheme, sim in cfg.cells():
        if scheme is genome.scheme and (dt is None or sim.dt == dt):
            return sim
    raise ConfigError([f"config has no cell for scheme {genome.scheme} dt={dt}"])


def cmd_train_xor(args) -> int:
    cfg = _load(args, "xor")
    report = run_xor(cfg, progress=print)
    print(f"best MSE {report.best_mse:g}; results in {cfg.output_dir}")
    return 0


def cmd_train_iris(args) -> int:
    cfg = _load(args, "iris")
    report = run_iris(cfg, progress=print)
    for row in report.table:
        print(f"{row['training_set']} {row['scheme']}: accuracy {float(row['accuracy']):.4f} "
              f"(best seed {float(row['best_seed_accuracy']):.4f})")
    return 0


def cmd_eval(args) -> int:
    cfg = _load(args)
    genome = Genome.load(args.genome)
    if genome.topology != cfg.architecture:
        raise StructureError(f"genome topology {genome.topology} != config {cfg.architecture}")
    sim = _pick_sim(cfg, genome, args.dt)
    if cfg.task == "xor":
        task = xor_task(genome.topology, genome.scheme, sim, cfg.coding)
        res = eval_genome(genome, task.patterns, sim)
        for p, t in zip(task.patterns, res.first_spikes):
            print(f"inputs {[tr.times for tr in p.inputs]} target {p.target} first spike {t:g}")
        print(f"MSE {res.mse!r}")
    else:
        samples = load_iris()
        plan = make_fold_plan(samples, cfg.cv.train_size_per_class, cfg.cv.plan_seed)
        train_idx, val_idx = plan.folds[args.fold]
        idx = val_idx if args.split == "val" else train_idx
        targets = iris_targets()
        res = eval_genome(genome, iris_patterns(samples, idx, cfg, sim, targets), sim, targets,
                          [samples[i].label for i in idx])
        print(f"MSE {res.mse!r}")
        print(f"accuracy {res.accuracy!r}")
    return 0


def cmd_oracle(args) -> int:
    cfg = _load(args, "xor")
    for res in enumerate_oracle(cfg):
        line = (f"{cfg.architecture} {res.scheme.value} dt={res.sim.dt:g} theta={res.sim.threshold:g}: "
                f"optimum MSE {res.mse!r} genome {res.chromosome}")
        if res.published_mse is not None:
            line += f" (published {res.published_mse:g})"
        if res.ga_best_mse is not None:
            line += f"; GA best {res.ga_best_mse!r}"
        print(line)
    return 0


def cmd_trace(args) -> int:
    cfg = _load(args)
    genome = Genome.load(args.genome)
    sim = _pick_sim(cfg, genome, args.dt)
    if cfg.task == "xor":
        b1, b2 = (int(c) for c in args.pattern)
        inputs = encode_xor(b1, b2, cfg.coding).input_trains()
    else:
        sample = load_iris()[int(args.pattern)]
        inputs = encode_iris_sample(sample.features, cfg.grf, sim.dt)
    n = emit_traces(genome, inputs, sim, args.csv, args.svg)
    print(f"wrote {n} rows to {args.csv}")
    return 0


def cmd_audit(args) -> int:
    cfg = _load(args)
    problems = audit(cfg)
    for p in problems:
        print(p)
    print("audit ok" if not problems else f"{len(problems)} mismatches")
    return 0 if not problems else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpspike",
        description="Train limited-precision spiking networks with a genetic algorithm.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", help="experiment config file (INI)")
        p.add_argument("--out", help="override output_dir")
        if seed:
            p.add_argument("--seed", help="override seeds, e.g. 3 or 0-9")

    p = sub.add_parser("train-xor", help="train XOR networks for every seed")
    common(p)
    p.set_defaults(func=cmd_train_xor)

    p = sub.add_parser("train-iris", help="train iris networks over the fold plan")
    common(p)
    p.set_defaults(func=cmd_train_iris)

    p = sub.add_parser("eval", help="evaluate a stored genome")
    common(p, seed=False)
    p.add_argument("--genome", required=True)
    p.add_argument("--dt", type=float)
    p.add_argument("--fold", type=int, default=0)
    p.add_argument("--split", choices=("train", "val"), default="val")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oracle", help="exhaustive search over small genomes")
    common(p, seed=False)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("trace", help="dump membrane potentials for one pattern")
    common(p, seed=False)
    p.add_argument("--genome", required=True)
    p.add_argument("--pattern", required=True,
                   help="XOR input bits such as 01, or an iris sample index")
    p.add_argument("--dt", type=float)
    p.add_argument("--csv", required=True)
    p.add_argument("--svg")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("audit", help="re-evaluate stored genomes against result tables")
    common(p, seed=False)
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, StructureError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
