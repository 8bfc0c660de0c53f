"""Experiment drivers: XOR and iris training runs, genome evaluation, brute-force
oracle, membrane traces and the result audit.

Every run writes a directory per (cell, seed) holding ``genome.txt`` and
``train_log.csv``.  ``results.csv`` lists every run; ``xor_summary.csv`` /
``iris_summary.csv`` aggregate them.  All numbers are written with ``repr`` so they
round-trip exactly, which is what :func:`audit` relies on.
"""

from __future__ import annotations

import csv
import logging
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .codec import Chromosome, Genome, WeightScheme
from .config import ExperimentConfig
from .datasets import CLASSES, IrisSample, load_iris, make_fold_plan
from .encoders import (
    ClassTargets,
    XorCoding,
    decode_output_class,
    encode_iris_sample,
    xor_patterns,
)
from .ga import EXHAUSTIVE_MAX_BITS, FitnessTask, GaParams, Pattern, exhaustive_search, train
from .srm import SimParams, SpikeTrain, Topology, simulate_network, simulate_with_potentials

log = logging.getLogger(__name__)

# published numbers, reported next to ours for comparison only
PUBLISHED_XOR_MSE = {
    "3-5-1": {("HalfStep", 0.01): 0.09505, ("HalfStep", 1.0): 0.0,
              ("Integer", 0.01): 0.07135, ("Integer", 1.0): 0.0},
    "3-2-1": {("HalfStep", 0.01): 0.2501, ("HalfStep", 1.0): 0.25,
              ("Integer", 0.01): 0.112625, ("Integer", 1.0): 0.0},
    "3-1": {("HalfStep", 1.0): 0.5, ("Integer", 1.0): 1.0},
}
PUBLISHED_IRIS_METHODS = ("SpikeProp", "QuickProp", "RProp", "LP_HalfStep", "LP_Integer")
PUBLISHED_IRIS_ACCURACY = {
    "30": (92.7, 85.2, 90.3, 91.46, 91.6),
    "60 A": (91.9, 91.0, 94.8, 96.89, 95.56),
    "60 B": (91.9, 91.0, 94.8, 97.0, 95.66),
    "75": (85.2, 92.3, 93.2, 96.0, 95.0),
    "90": (86.2, 91.7, 93.5, 96.66, 97.0),
}


# ---------------------------------------------------------------------------
# pattern sets
# ---------------------------------------------------------------------------


def xor_task(
    topology: Topology, scheme: WeightScheme, sim: SimParams, coding: XorCoding
) -> FitnessTask:
    patterns = [Pattern(p.input_trains(), p.target_time) for p in xor_patterns(coding)]
    return FitnessTask(topology, scheme, sim, patterns)


def iris_patterns(
    samples: Sequence[IrisSample], indices: Sequence[int], config: ExperimentConfig,
    sim: SimParams, targets: ClassTargets,
) -> list[Pattern]:
    return [
        Pattern(
            tuple(encode_iris_sample(samples[i].features, config.grf, sim.dt)),
            targets.target(samples[i].label),
        )
        for i in indices
    ]


def iris_targets() -> ClassTargets:
    return ClassTargets(dict(zip(CLASSES, (15.0, 20.0, 25.0))), 2.0)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


@dataclass
class EvalResult:
    trains: list[list[SpikeTrain]]  # per pattern: every non-input neuron
    first_spikes: np.ndarray  # ms, NaN when the output is silent
    mse: float
    predictions: list | None = None
    accuracy: float | None = None


def eval_genome(
    genome: Genome,
    patterns: Sequence[Pattern],
    sim: SimParams,
    targets: ClassTargets | None = None,
    labels: Sequence | None = None,
) -> EvalResult:
    """Pure inference of a stored genome on a pattern set."""
    task = FitnessTask(genome.topology, genome.scheme, sim, patterns)
    first = task.first_spike_times(genome.chromosome.bits)[0]
    mse = float(task.mse_from_times(first[None, :])[0])
    synapses = genome.synapses()
    trains = [simulate_network(genome.topology, synapses, p.inputs, sim) for p in patterns]
    result = EvalResult(trains, first, mse)
    if targets is not None:
        preds = [decode_output_class(() if np.isnan(t) else (t,), targets) for t in first]
        result.predictions = preds
        if labels is not None:
            result.accuracy = float(np.mean([p == y for p, y in zip(preds, labels)]))
    return result


def validation_accuracy(genome: Genome, patterns, sim, targets, labels) -> float:
    return eval_genome(genome, patterns, sim, targets, labels).accuracy


# ---------------------------------------------------------------------------
# io helpers
# ---------------------------------------------------------------------------


def _num(x) -> str:
    return "" if x is None else repr(float(x))


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(header), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: row.get(k, "") for k in header})


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _dt_tag(dt: float) -> str:
    return f"{dt:g}"


def _map(fn: Callable, jobs: list, workers: int) -> list:
    """Run jobs, keeping submission order in the result regardless of completion order."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


def _train_job(task: FitnessTask, ga: GaParams):
    return train(ga, task)


def _store_run(run_dir: Path, task: FitnessTask, report) -> Genome:
    run_dir.mkdir(parents=True, exist_ok=True)
    genome = Genome(task.scheme, task.topology, report.best.chromosome)
    genome.save(run_dir / "genome.txt")
    (run_dir / "train_log.csv").write_text(report.log_csv(), encoding="ascii", newline="\n")
    return genome


@dataclass
class ResultsReport:
    kind: str
    rows: list[dict] = field(default_factory=list)
    table: list[dict] = field(default_factory=list)
    table_header: list[str] = field(default_factory=list)
    output_dir: Path | None = None

    @property
    def best_mse(self) -> float:
        return min(float(r["best_mse"]) for r in self.rows)


RESULT_HEADER_XOR = [
    "architecture", "scheme", "dt", "seed", "best_mse", "generations", "converged", "genome",
]
RESULT_HEADER_IRIS = [
    "training_set", "scheme", "dt", "fold", "seed", "train_mse", "generations", "converged",
    "val_accuracy", "genome",
]


# ---------------------------------------------------------------------------
# XOR
# ---------------------------------------------------------------------------


def run_xor(config: ExperimentConfig, progress: Callable[[str], None] | None = None) -> ResultsReport:
    config.validate()
    out = Path(config.output_dir)
    arch = str(config.architecture)
    rows = []
    for scheme, sim in config.cells():
        task = xor_task(config.architecture, scheme, sim, config.coding)
        jobs = [(task, config.ga.replace(rng_seed=s)) for s in config.seeds]
        reports = _map(_train_job, jobs, config.workers)
        for seed, report in zip(config.seeds, reports):
            run_dir = out / f"xor_{arch}_{scheme.value}_dt{_dt_tag(sim.dt)}" / f"seed_{seed}"
            _store_run(run_dir, task, report)
            rows.append({
                "architecture": arch,
                "scheme": scheme.value,
                "dt": _num(sim.dt),
                "seed": seed,
                "best_mse": _num(report.best.mse),
                "generations": report.generations_run,
                "converged": int(report.converged),
                "genome": str((run_dir / "genome.txt").relative_to(out)),
            })
            msg = (f"xor {arch} {scheme.value} dt={sim.dt:g} seed={seed}: "
                   f"mse={report.best.mse:g} after {report.generations_run} generations")
            log.info(msg)
            if progress:
                progress(msg)
    report = ResultsReport("xor", rows, output_dir=out)
    report.table_header, report.table = xor_summary(rows)
    _write_csv(out / "results.csv", RESULT_HEADER_XOR, rows)
    _write_csv(out / "xor_summary.csv", report.table_header, report.table)
    return report


def xor_summary(rows: Sequence[dict]) -> tuple[list[str], list[dict]]:
    """Best and median MSE over seeds per architecture and (scheme, dt) cell."""
    cells: dict[tuple, list[float]] = {}
    for r in rows:
        cells.setdefault((r["architecture"], r["scheme"], float(r["dt"])), []).append(
            float(r["best_mse"])
        )
    columns = sorted({(s, dt) for _, s, dt in cells})
    header = ["architecture"]
    for s, dt in columns:
        tag = f"{s}_dt{_dt_tag(dt)}"
        header += [f"{tag}_best", f"{tag}_median", f"{tag}_published"]
    table = []
    for arch in sorted({a for a, _, _ in cells}, key=lambda a: -len(a)):
        row = {"architecture": arch}
        for s, dt in columns:
            tag = f"{s}_dt{_dt_tag(dt)}"
            values = cells.get((arch, s, dt))
            if values:
                row[f"{tag}_best"] = _num(min(values))
                row[f"{tag}_median"] = _num(statistics.median(values))
            published = PUBLISHED_XOR_MSE.get(arch, {}).get((s, dt))
            row[f"{tag}_published"] = "" if published is None else repr(published)
        table.append(row)
    return header, table


# ---------------------------------------------------------------------------
# iris
# ---------------------------------------------------------------------------


def training_set_label(size: int, plan_seed: int) -> str:
    label = str(3 * size)
    if size == 20:
        label += " A" if plan_seed % 2 == 0 else " B"
    return label


def run_iris(config: ExperimentConfig, progress: Callable[[str], None] | None = None) -> ResultsReport:
    config.validate()
    out = Path(config.output_dir)
    samples = load_iris()
    plan = make_fold_plan(samples, config.cv.train_size_per_class, config.cv.plan_seed)
    folds = plan.folds[: config.cv.max_folds] if config.cv.max_folds else plan.folds
    (out).mkdir(parents=True, exist_ok=True)
    (out / "fold_plan.csv").write_text(plan.to_csv(), encoding="ascii", newline="\n")
    targets = iris_targets()
    label = training_set_label(plan.train_size_per_class, plan.seed)
    rows = []
    for scheme, sim in config.cells():
        for k, (train_idx, val_idx) in enumerate(folds):
            task = FitnessTask(
                config.architecture, scheme, sim,
                iris_patterns(samples, train_idx, config, sim, targets),
            )
            val_patterns = iris_patterns(samples, val_idx, config, sim, targets)
            val_labels = [samples[i].label for i in val_idx]
            jobs = [(task, config.ga.replace(rng_seed=s)) for s in config.seeds]
            reports = _map(_train_job, jobs, config.workers)
            for seed, report in zip(config.seeds, reports):
                run_dir = (out / f"iris_{plan.train_size_per_class * 3}_{scheme.value}"
                           f"_dt{_dt_tag(sim.dt)}" / f"fold_{k}" / f"seed_{seed}")
                genome = _store_run(run_dir, task, report)
                acc = validation_accuracy(genome, val_patterns, sim, targets, val_labels)
                rows.append({
                    "training_set": label,
                    "scheme": scheme.value,
                    "dt": _num(sim.dt),
                    "fold": k,
                    "seed": seed,
                    "train_mse": _num(report.best.mse),
                    "generations": report.generations_run,
                    "converged": int(report.converged),
                    "val_accuracy": _num(acc),
                    "genome": str((run_dir / "genome.txt").relative_to(out)),
                })
                msg = (f"iris {label} {scheme.value} fold {k} seed {seed}: "
                       f"train mse={report.best.mse:g}, val accuracy={acc:.4f}")
                log.info(msg)
                if progress:
                    progress(msg)
    report = ResultsReport("iris", rows, output_dir=out)
    report.table_header, report.table = iris_summary(rows)
    _write_csv(out / "results.csv", RESULT_HEADER_IRIS, rows)
    _write_csv(out / "iris_summary.csv", report.table_header, report.table)
    return report


def iris_summary(rows: Sequence[dict]) -> tuple[list[str], list[dict]]:
    """Mean validation accuracy over folds per training set and scheme.

    ``accuracy`` takes, per fold, the seed with the lowest training MSE (ties
    to the earliest row); ``best_seed_accuracy`` takes the best validation
    accuracy per fold.
    """
    groups: dict[tuple, dict[int, list[dict]]] = {}
    for r in rows:
        key = (r["training_set"], r["scheme"], float(r["dt"]))
        groups.setdefault(key, {}).setdefault(int(r["fold"]), []).append(r)
    header = ["training_set", "scheme", "dt", "folds", "accuracy", "best_seed_accuracy",
              *PUBLISHED_IRIS_METHODS]
    table = []
    for (label, scheme, dt), folds in groups.items():
        chosen, best = [], []
        for k in sorted(folds):
            runs = folds[k]
            pick = min(runs, key=lambda r: float(r["train_mse"]))
            chosen.append(float(pick["val_accuracy"]))
            best.append(max(float(r["val_accuracy"]) for r in runs))
        row = {
            "training_set": label,
            "scheme": scheme,
            "dt": _num(dt),
            "folds": len(folds),
            "accuracy": _num(float(np.mean(chosen))),
            "best_seed_accuracy": _num(float(np.mean(best))),
        }
        for name, value in zip(PUBLISHED_IRIS_METHODS, PUBLISHED_IRIS_ACCURACY.get(label, ("",) * 5)):
            row[name] = value
        table.append(row)
    return header, table


# ---------------------------------------------------------------------------
# oracle, traces, audit
# ---------------------------------------------------------------------------


@dataclass
class OracleResult:
    scheme: WeightScheme
    sim: SimParams
    chromosome: Chromosome
    mse: float
    published_mse: float | None
    ga_best_mse: float | None = None


def enumerate_oracle(config: ExperimentConfig) -> list[OracleResult]:
    """Exhaustive optimum for every cell of a small-genome XOR config.

    When the output directory already holds GA results for the same cells,
    their best MSE is attached for comparison.
    """
    config.validate()
    if config.task != "xor":
        raise ValueError("the oracle enumerates XOR tasks only")
    bits = 6 * config.architecture.synapse_count
    if bits > EXHAUSTIVE_MAX_BITS:
        raise ValueError(f"genome of {bits} bits is too large for exhaustive search")
    out = Path(config.output_dir)
    stored = _read_csv(out / "results.csv") if (out / "results.csv").exists() else []
    arch = str(config.architecture)
    results = []
    rows = []
    for scheme, sim in config.cells():
        task = xor_task(config.architecture, scheme, sim, config.coding)
        chrom, mse = exhaustive_search(task)
        ga_runs = [float(r["best_mse"]) for r in stored
                   if r["architecture"] == arch and r["scheme"] == scheme.value
                   and float(r["dt"]) == sim.dt]
        res = OracleResult(
            scheme, sim, chrom, mse, PUBLISHED_XOR_MSE.get(arch, {}).get((scheme.value, sim.dt)),
            min(ga_runs) if ga_runs else None,
        )
        results.append(res)
        path = out / f"oracle_{arch}_{scheme.value}_dt{_dt_tag(sim.dt)}.genome.txt"
        path.parent.mkdir(parents=True, exist_ok=True)
        Genome(scheme, config.architecture, chrom).save(path)
        rows.append({
            "architecture": arch, "scheme": scheme.value, "dt": _num(sim.dt),
            "threshold": _num(sim.threshold), "oracle_mse": _num(mse),
            "published_mse": _num(res.published_mse), "ga_best_mse": _num(res.ga_best_mse),
            "genome": path.name,
        })
    _write_csv(out / "oracle.csv", ["architecture", "scheme", "dt", "threshold", "oracle_mse",
                                    "published_mse", "ga_best_mse", "genome"], rows)
    return results


def emit_traces(
    genome: Genome, inputs: Sequence[SpikeTrain], sim: SimParams, path: str | Path,
    svg_path: str | Path | None = None,
) -> int:
    """Write ``t_ms,neuron_id,u,spiked`` rows for every non-input neuron; returns the row count."""
    trace = simulate_with_potentials(genome.topology, genome.synapses(), inputs, sim)
    spiked = trace.spiked_mask(sim.dt)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_ms", "neuron_id", "u", "spiked"])
        for j, nid in enumerate(trace.neuron_ids):
            for k, t in enumerate(trace.t_ms):
                w.writerow([repr(float(t)), nid, repr(float(trace.potentials[j, k])),
                            int(spiked[j, k])])
                n += 1
    if svg_path is not None:
        Path(svg_path).write_text(trace_svg(trace, sim.threshold), encoding="utf-8")
    return n


def trace_svg(trace, threshold: float, width: int = 640, height: int = 360) -> str:
    """Minimal line plot: one polyline per neuron plus a dashed threshold line."""
    pad = 40
    t = trace.t_ms
    u = trace.potentials
    lo = min(float(u.min()) if u.size else 0.0, 0.0)
    hi = max(float(u.max()) if u.size else 0.0, threshold) * 1.05 + 1e-9
    t_max = float(t[-1]) if t.size else 1.0

    def x(v):
        return pad + (width - 2 * pad) * v / t_max

    def y(v):
        return height - pad - (height - 2 * pad) * (v - lo) / (hi - lo)

    colours = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
               "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
    ]
    for tick in np.linspace(0, t_max, 6):
        parts.append(f'<text x="{x(tick):.1f}" y="{height - pad + 15}" font-size="10" '
                     f'text-anchor="middle">{tick:g}</text>')
    for tick in np.linspace(lo, hi, 5):
        parts.append(f'<text x="{pad - 4}" y="{y(tick):.1f}" font-size="10" '
                     f'text-anchor="end">{tick:.2f}</text>')
    parts.append(f'<line x1="{pad}" y1="{y(threshold):.1f}" x2="{width - pad}" '
                 f'y2="{y(threshold):.1f}" stroke="gray" stroke-dasharray="4,3"/>')
    for j, nid in enumerate(trace.neuron_ids):
        pts = " ".join(f"{x(tv):.1f},{y(uv):.1f}" for tv, uv in zip(t, u[j]))
        parts.append(f'<polyline fill="none" stroke="{colours[j % len(colours)]}" '
                     f'points="{pts}"><title>{nid}</title></polyline>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def audit(config: ExperimentConfig) -> list[str]:
    """Re-evaluate every stored genome and check the result and table files.

    Returns a list of mismatch descriptions (empty when everything reproduces).
    """
    out = Path(config.output_dir)
    rows = _read_csv(out / "results.csv")
    problems = []
    cells = {(s.value, sim.dt): sim for s, sim in config.cells()}
    if config.task == "xor":
        recomputed = []
        for r in rows:
            sim = cells[(r["scheme"], float(r["dt"]))]
            genome = Genome.load(out / r["genome"])
            task = xor_task(genome.topology, genome.scheme, sim, config.coding)
            mse = eval_genome(genome, task.patterns, sim).mse
            if _num(mse) != r["best_mse"]:
                problems.append(f"{r['genome']}: stored mse {r['best_mse']}, re-evaluated {_num(mse)}")
            recomputed.append({**r, "best_mse": _num(mse)})
        _, table = xor_summary(recomputed)
        stored = _read_csv(out / "xor_summary.csv")
    else:
        samples = load_iris()
        plan = make_fold_plan(samples, config.cv.train_size_per_class, config.cv.plan_seed)
        targets = iris_targets()
        recomputed = []
        for r in rows:
            sim = cells[(r["scheme"], float(r["dt"]))]
            train_idx, val_idx = plan.folds[int(r["fold"])]
            genome = Genome.load(out / r["genome"])
            train_eval = eval_genome(genome, iris_patterns(samples, train_idx, config, sim, targets), sim)
            acc = validation_accuracy(
                genome, iris_patterns(samples, val_idx, config, sim, targets), sim, targets,
                [samples[i].label for i in val_idx],
            )
            if _num(train_eval.mse) != r["train_mse"]:
                problems.append(f"{r['genome']}: train mse {r['train_mse']} vs {_num(train_eval.mse)}")
            if _num(acc) != r["val_accuracy"]:
                problems.append(f"{r['genome']}: accuracy {r['val_accuracy']} vs {_num(acc)}")
            recomputed.append({**r, "train_mse": _num(train_eval.mse), "val_accuracy": _num(acc)})
        _, table = iris_summary(recomputed)
        stored = _read_csv(out / "iris_summary.csv")
    fresh = [{k: str(v) for k, v in row.items()} for row in table]
    for old, new in zip(stored, fresh):
        for key, value in new.items():
            if old.get(key, "") != value:
                problems.append(f"table cell {key} of {old.get('architecture') or old.get('training_set')}: "
                                f"stored {old.get(key)!r}, recomputed {value!r}")
    if len(stored) != len(fresh):
        problems.append(f"table has {len(stored)} rows, recomputed {len(fresh)}")
    return problems


__all__ = [
    "EvalResult", "OracleResult", "ResultsReport",
    "audit", "emit_traces", "enumerate_oracle", "eval_genome", "run_iris", "run_xor",
    "xor_summary", "iris_summary", "trace_svg", "xor_task", "iris_patterns", "iris_targets",
]
