"""Experiment configuration files.

INI-style, one section per parameter group::

    [experiment]
    task = xor                  ; xor | iris
    architecture = 3-5-1
    scheme = Integer            ; comma list allowed: HalfStep, Integer
    coding = hidden-layer       ; xor only: hidden-layer | binary
    seeds = 0-9                 ; ranges and comma lists
    output_dir = runs/xor
    workers = 1

    [sim]
    sim_time_ms = 50
    dt = 1                      ; comma list allowed: 0.01, 1
    tau = 3
    tau_r = 20
    ; threshold defaults to the per-experiment value, see standard_threshold()

    [ga]
    population_size = 200
    ...

    [grf]      ; iris only
    [cv]       ; iris only: train_size_per_class, plan_seed, max_folds

Missing keys take the shipped defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

from .codec import WeightScheme
from .encoders import GrfParams, XorCoding
from .ga import GaParams
from .srm import SimParams, Topology


class ConfigError(ValueError):
    """Collects every validation problem found in a config."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(problems))


def standard_threshold(task: str, topology: Topology, scheme: WeightScheme) -> float:
    """Firing threshold used for each published experiment."""
    if task == "iris":
        return 3.0 if scheme is WeightScheme.HALF_STEP else 6.0
    if len(topology.layer_sizes) == 2:
        return 3.0
    return 1.5


def parse_seeds(text: str) -> tuple[int, ...]:
    seeds: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part.lstrip("-"):
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return tuple(seeds)


def _list(text: str) -> list[str]:
    return [p.strip() for p in str(text).split(",") if p.strip()]


@dataclass(frozen=True)
class CvParams:
    train_size_per_class: int = 30
    plan_seed: int = 0
    max_folds: int | None = None


@dataclass
class ExperimentConfig:
    task: str = "xor"
    architecture: Topology = field(default_factory=lambda: Topology((3, 5, 1)))
    schemes: tuple[WeightScheme, ...] = (WeightScheme.INTEGER,)
    dts: tuple[float, ...] = (1.0,)
    sim: SimParams = field(default_factory=SimParams)
    threshold: float | None = None
    threshold_override: bool = False
    ga: GaParams = field(default_factory=GaParams)
    grf: GrfParams = field(default_factory=GrfParams)
    cv: CvParams = field(default_factory=CvParams)
    coding: XorCoding = XorCoding.HIDDEN_LAYER
    seeds: tuple[int, ...] = (0,)
    output_dir: Path = Path("runs")
    workers: int = 1

    @property
    def scheme(self) -> WeightScheme:
        return self.schemes[0]

    def cells(self) -> list[tuple[WeightScheme, SimParams]]:
        """Every (scheme, simulation settings) combination the config asks for."""
        out = []
        for scheme in self.schemes:
            theta = self.threshold
            if theta is None:
                theta = standard_threshold(self.task, self.architecture, scheme)
            for dt in self.dts:
                out.append((scheme, self.sim.replace(dt=dt, threshold=theta)))
        return out

    def validate(self) -> None:
        problems = []
        if self.task not in ("xor", "iris"):
            problems.append(f"task must be xor or iris, got {self.task!r}")
        expected_inputs = {"xor": 3, "iris": 33}.get(self.task)
        if expected_inputs and self.architecture.n_inputs != expected_inputs:
            problems.append(
                f"{self.task} needs {expected_inputs} input neurons, architecture is "
                f"{self.architecture}"
            )
        if self.architecture.n_outputs != 1:
            problems.append("architecture must end in a single output neuron")
        if self.threshold is not None and not self.threshold_override:
            for scheme in self.schemes:
                rule = standard_threshold(self.task, self.architecture, scheme)
                if self.threshold != rule:
                    problems.append(
                        f"threshold {self.threshold} differs from {rule} for {self.task} "
                        f"{self.architecture} {scheme}; set threshold_override = true to allow"
                    )
        if not self.seeds:
            problems.append("at least one seed is required")
        if self.workers < 1:
            problems.append("workers must be >= 1")
        if self.task == "iris":
            size = self.cv.train_size_per_class
            if size not in (10, 20, 25, 30):
                problems.append(f"train_size_per_class must be 10, 20, 25 or 30, got {size}")
            elif 150 - 3 * size <= 0:
                problems.append("fold plan leaves no validation samples")
        for dt in self.dts:
            try:
                self.sim.replace(dt=dt)
            except ValueError as exc:
                problems.append(f"dt={dt}: {exc}")
        if problems:
            raise ConfigError(problems)


_SIM_KEYS = ("sim_time_ms", "tau", "tau_r")
_GA_INT = ("population_size", "elite_count", "max_generations")
_GA_FLOAT = ("crossover_rate", "mutation_rate", "selective_pressure", "target_mse")
_GRF_KEYS = {f.name: f.type for f in fields(GrfParams)}


def default_ga(task: str) -> GaParams:
    if task == "iris":
        return GaParams(population_size=600, max_generations=600, target_mse=0.25)
    return GaParams()


def default_architecture(task: str) -> Topology:
    return Topology((33, 8, 1)) if task == "iris" else Topology((3, 5, 1))


def config_from_parser(cp: configparser.ConfigParser) -> ExperimentConfig:
    problems: list[str] = []

    def get(section, key, conv, default):
        if not cp.has_option(section, key):
            return default
        raw = cp.get(section, key)
        try:
            return conv(raw)
        except (TypeError, ValueError) as exc:
            problems.append(f"[{section}] {key} = {raw!r}: {exc}")
            return default

    task = get("experiment", "task", lambda s: s.strip().lower(), "xor")
    cfg = ExperimentConfig(task=task)
    cfg.architecture = get("experiment", "architecture", Topology.parse, default_architecture(task))
    cfg.schemes = get(
        "experiment", "scheme", lambda s: tuple(WeightScheme.parse(x) for x in _list(s)), cfg.schemes
    )
    cfg.coding = get("experiment", "coding", XorCoding.parse, cfg.coding)
    if task == "xor" and not cp.has_option("experiment", "coding") and len(cfg.architecture.layer_sizes) == 2:
        cfg.coding = XorCoding.BINARY
    cfg.seeds = get("experiment", "seeds", parse_seeds, cfg.seeds)
    cfg.output_dir = get("experiment", "output_dir", Path, Path("runs") / task)
    cfg.workers = get("experiment", "workers", int, 1)

    sim_kwargs = {k: get("sim", k, float, getattr(SimParams(), k)) for k in _SIM_KEYS}
    cfg.dts = get("sim", "dt", lambda s: tuple(float(x) for x in _list(s)), (1.0,))
    cfg.threshold = get("sim", "threshold", float, None)
    cfg.threshold_override = get(
        "sim", "threshold_override", lambda s: cp.BOOLEAN_STATES[s.strip().lower()], False
    )
    try:
        cfg.sim = SimParams(dt=min(cfg.dts), **sim_kwargs)
    except ValueError as exc:
        problems.append(f"[sim] {exc}")

    ga = default_ga(task)
    changes = {k: get("ga", k, int, getattr(ga, k)) for k in _GA_INT}
    changes.update({k: get("ga", k, float, getattr(ga, k)) for k in _GA_FLOAT})
    try:
        cfg.ga = ga.replace(**changes)
    except ValueError as exc:
        problems.append(f"[ga] {exc}")

    grf_kwargs = {}
    for key in _GRF_KEYS:
        conv = int if key == "m" else float
        grf_kwargs[key] = get("grf", key, conv, getattr(GrfParams(), key))
    try:
        cfg.grf = GrfParams(**grf_kwargs)
    except ValueError as exc:
        problems.append(f"[grf] {exc}")

    max_folds = get("cv", "max_folds", int, None)
    cfg.cv = CvParams(
        get("cv", "train_size_per_class", int, 30), get("cv", "plan_seed", int, 0), max_folds
    )

    if problems:
        raise ConfigError(problems)
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if not cp.read(path):
        raise ConfigError([f"cannot read config file {path}"])
    return config_from_parser(cp)


def loads_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.read_string(text)
    return config_from_parser(cp)
