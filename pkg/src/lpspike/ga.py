"""Binary genetic algorithm over limited-precision network chromosomes.

One generation: rank the population by MSE, copy the elite unchanged, fill
the remaining slots with offspring produced by linear-ranking roulette
selection, uniform crossover and per-bit mutation, then evaluate the new
individuals.  All randomness flows through a single seeded
:class:`numpy.random.Generator`; fitness evaluation draws no random numbers.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .codec import Chromosome, WeightScheme, decode_arrays
from .srm import (
    SimParams,
    SpikeTrain,
    StructureError,
    Topology,
    _batch_first_spikes,
    kernel_tables,
    pack_inputs,
)

log = logging.getLogger(__name__)

__all__ = [
    "GaParams",
    "Individual",
    "TrainReport",
    "FitnessTask",
    "Pattern",
    "evaluate_mse",
    "baker_probabilities",
    "select_parent",
    "uniform_crossover",
    "mutate",
    "step_generation",
    "train",
    "exhaustive_search",
]

EXHAUSTIVE_MAX_BITS = 24


@dataclass(frozen=True)
class GaParams:
    """GA settings; defaults are the XOR values (pop 200, crossover 0.6, mutation 0.01, SP 1.5, 8 elites)."""

    population_size: int = 200
    crossover_rate: float = 0.6
    mutation_rate: float = 0.01
    selective_pressure: float = 1.5
    elite_count: int = 8
    max_generations: int = 200
    target_mse: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 <= self.crossover_rate <= 1:
            raise ValueError("crossover_rate must lie in [0, 1]")
        if not 0 <= self.mutation_rate <= 1:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if not 1 < self.selective_pressure <= 2:
            raise ValueError("selective_pressure must lie in (1, 2]")
        if self.population_size < 2 or self.population_size % 2:
            raise ValueError("population_size must be even and >= 2")
        if not 0 <= self.elite_count < self.population_size:
            raise ValueError("elite_count must lie in [0, population_size)")
        if self.max_generations < 0:
            raise ValueError("max_generations must be >= 0")

    def replace(self, **changes) -> "GaParams":
        values = dict(self.__dict__)
        values.update(changes)
        return GaParams(**values)


@dataclass(frozen=True)
class Pattern:
    """Input spike trains and the desired output time (``None`` = no output spike)."""

    inputs: tuple[SpikeTrain, ...]
    target: float | None

    def __post_init__(self):
        object.__setattr__(
            self,
            "inputs",
            tuple(t if isinstance(t, SpikeTrain) else SpikeTrain(tuple(t)) for t in self.inputs),
        )


class FitnessTask:
    """Everything needed to score a chromosome: network, codebook, simulator and data.

    Input patterns are packed into grid arrays once so that repeated
    evaluation only pays for the simulation.
    """

    def __init__(
        self,
        topology: Topology,
        scheme: WeightScheme | str,
        sim: SimParams,
        patterns: Sequence[Pattern],
    ):
        if not patterns:
            raise ValueError("a fitness task needs at least one pattern")
        if topology.n_outputs != 1:
            raise StructureError("the MSE objective reads a single output neuron")
        self.topology = topology
        self.scheme = WeightScheme.parse(scheme)
        self.sim = sim
        self.patterns = tuple(patterns)
        for p in self.patterns:
            if len(p.inputs) != topology.n_inputs:
                raise StructureError(
                    f"pattern has {len(p.inputs)} inputs, topology {topology} expects "
                    f"{topology.n_inputs}"
                )
        self._steps, self._counts = pack_inputs([p.inputs for p in self.patterns], sim)
        self._eps, self._rho = kernel_tables(sim)
        self._layers = np.array(topology.layer_sizes, dtype=np.int64)
        self.desired = np.array(
            [sim.sim_time_ms if p.target is None else float(p.target) for p in self.patterns]
        )

    @property
    def chromosome_length(self) -> int:
        return 6 * self.topology.synapse_count

    def first_spike_times(self, bits: np.ndarray) -> np.ndarray:
        """Output first-spike time (ms) per chromosome row and pattern; NaN when silent."""
        bits = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
        if bits.shape[1] != self.chromosome_length:
            raise StructureError(
                f"chromosome has {bits.shape[1]} bits, task expects {self.chromosome_length}"
            )
        w, d = decode_arrays(bits, self.scheme)
        steps = _batch_first_spikes(
            np.ascontiguousarray(w), np.ascontiguousarray(d / self.sim.dt), self._layers,
            self._steps, self._counts, self.sim.dt, self.sim.tau, self.sim.threshold,
            self._eps, self._rho,
        )
        return np.where(steps >= 0, steps * self.sim.dt, np.nan)

    def mse_from_times(self, first: np.ndarray) -> np.ndarray:
        actual = np.where(np.isnan(first), self.sim.sim_time_ms, first)
        return np.mean((actual - self.desired) ** 2, axis=-1)

    def evaluate_many(self, bits: np.ndarray) -> np.ndarray:
        return self.mse_from_times(self.first_spike_times(bits))


def evaluate_mse(c: Chromosome | np.ndarray, task: FitnessTask) -> float:
    """Mean squared difference between first output spike and target over all patterns.

    A silent output counts as firing at ``sim_time_ms``; a no-spike target is
    the time ``sim_time_ms``.
    """
    bits = c.bits if isinstance(c, Chromosome) else np.asarray(c)
    return float(task.evaluate_many(bits[None, :])[0])


@dataclass
class Individual:
    chromosome: Chromosome
    mse: float | None = None


@dataclass
class TrainReport:
    best: Individual
    generations_run: int
    mse_history: list[float]
    converged: bool
    log_rows: list[tuple[int, float, float, int]] = field(default_factory=list)

    def log_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["generation", "best_mse", "mean_mse", "evaluations_total"])
        for gen, best, mean, evals in self.log_rows:
            writer.writerow([gen, repr(best), repr(mean), evals])
        return buf.getvalue()


def baker_probabilities(ranked_count: int, selective_pressure: float) -> np.ndarray:
    """Linear ranking selection probabilities, best rank first."""
    n = int(ranked_count)
    if n < 2:
        raise ValueError("linear ranking needs at least 2 individuals")
    sp = float(selective_pressure)
    r = np.arange(n)
    return (sp - 2.0 * (sp - 1.0) * r / (n - 1)) / n


def select_parent(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Roulette-wheel draw of one index."""
    cum = np.cumsum(probs)
    idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return min(idx, len(cum) - 1)


def _select_many(cum: np.ndarray, rng: np.random.Generator, n: int) -> np.ndarray:
    idx = np.searchsorted(cum, rng.random(n) * cum[-1], side="right")
    return np.minimum(idx, len(cum) - 1)


def crossover_with_mask(a: np.ndarray, b: np.ndarray, mask: np.ndarray):
    """Child 1 takes ``a`` where the mask is 0 and ``b`` where it is 1; child 2 the reverse."""
    mask = np.asarray(mask, dtype=bool)
    return np.where(mask, b, a), np.where(mask, a, b)


def uniform_crossover(a, b, rng: np.random.Generator, rate: float = 1.0):
    """Uniform crossover applied with probability ``rate``; otherwise parents are copied.

    Accepts :class:`Chromosome` or bit arrays and returns the same kind.
    """
    wrap = isinstance(a, Chromosome)
    x = a.bits if wrap else np.asarray(a)
    y = b.bits if isinstance(b, Chromosome) else np.asarray(b)
    if x.shape != y.shape:
        raise StructureError("crossover parents must have equal length")
    if rate >= 1.0 or rng.random() < rate:
        c1, c2 = crossover_with_mask(x, y, rng.integers(0, 2, x.shape[-1]))
    else:
        c1, c2 = x.copy(), y.copy()
    if wrap:
        return Chromosome(c1), Chromosome(c2)
    return c1, c2


def mutate(c, rate: float, rng: np.random.Generator):
    """Flip every bit independently with probability ``rate``."""
    wrap = isinstance(c, Chromosome)
    x = c.bits if wrap else np.asarray(c, dtype=np.uint8)
    flips = rng.random(x.shape) < rate
    out = (x ^ flips).astype(np.uint8)
    return Chromosome(out) if wrap else out


class Population:
    """Array-backed population: ``bits`` is ``(P, L)`` uint8, ``mse`` is ``(P,)``."""

    def __init__(self, bits: np.ndarray, mse: np.ndarray | None = None):
        self.bits = np.asarray(bits, dtype=np.uint8)
        self.mse = None if mse is None else np.asarray(mse, dtype=float)

    def __len__(self) -> int:
        return self.bits.shape[0]

    @classmethod
    def random(cls, size: int, length: int, rng: np.random.Generator) -> "Population":
        return cls(rng.integers(0, 2, (size, length), dtype=np.uint8))

    def ranked(self) -> np.ndarray:
        return np.argsort(self.mse, kind="stable")

    def best(self) -> Individual:
        i = int(self.ranked()[0])
        return Individual(Chromosome(self.bits[i]), float(self.mse[i]))

    def individuals(self) -> list[Individual]:
        return [Individual(Chromosome(b), float(m)) for b, m in zip(self.bits, self.mse)]


class _Evaluator:
    """Memoises MSE by chromosome bytes; duplicates are common once the GA converges."""

    def __init__(self, task: FitnessTask):
        self.task = task
        self.cache: dict[bytes, float] = {}
        self.requested = 0

    def __call__(self, bits: np.ndarray) -> np.ndarray:
        self.requested += len(bits)
        keys = [row.tobytes() for row in bits]
        todo = {}
        for i, k in enumerate(keys):
            if k not in self.cache and k not in todo:
                todo[k] = i
        if todo:
            rows = np.array(list(todo.values()))
            for k, v in zip(todo, self.task.evaluate_many(bits[rows])):
                self.cache[k] = float(v)
        return np.array([self.cache[k] for k in keys])


def step_generation(
    pop: Population,
    params: GaParams,
    task: FitnessTask,
    rng: np.random.Generator,
    evaluate=None,
) -> Population:
    """Produce the next generation from an evaluated population."""
    if pop.mse is None:
        raise ValueError("population must be evaluated before stepping")
    evaluate = evaluate or task.evaluate_many
    order = pop.ranked()
    ranked_bits = pop.bits[order]
    n = len(pop)
    n_elite = params.elite_count
    n_off = n - n_elite
    cum = np.cumsum(baker_probabilities(n, params.selective_pressure))
    length = pop.bits.shape[1]

    n_pairs = (n_off + 1) // 2
    children = np.empty((2 * n_pairs, length), dtype=np.uint8)
    for k in range(n_pairs):
        pa, pb = _select_many(cum, rng, 2)
        a, b = ranked_bits[pa], ranked_bits[pb]
        if rng.random() < params.crossover_rate:
            mask = rng.integers(0, 2, length).astype(bool)
            a, b = np.where(mask, b, a), np.where(mask, a, b)
        children[2 * k] = a
        children[2 * k + 1] = b
    children = children[:n_off]
    children ^= (rng.random(children.shape) < params.mutation_rate).astype(np.uint8)

    new_bits = np.concatenate([ranked_bits[:n_elite], children])
    new_mse = np.concatenate([pop.mse[order][:n_elite], evaluate(children)])
    return Population(new_bits, new_mse)


def train(params: GaParams, task: FitnessTask, progress=None) -> TrainReport:
    """Run the GA until the best MSE reaches ``target_mse`` or the generation cap.

    ``progress``, if given, is called as ``progress(generation, best_mse)``.
    """
    rng = np.random.default_rng(params.rng_seed)
    evaluate = _Evaluator(task)
    pop = Population.random(params.population_size, task.chromosome_length, rng)
    pop.mse = evaluate(pop.bits)

    def record(gen: int):
        best = float(pop.mse.min())
        history.append(best)
        rows.append((gen, best, float(pop.mse.mean()), evaluate.requested))
        if progress is not None:
            progress(gen, best)
        return best

    history: list[float] = []
    rows: list[tuple[int, float, float, int]] = []
    best = record(0)
    gen = 0
    while best > params.target_mse and gen < params.max_generations:
        pop = step_generation(pop, params, task, rng, evaluate)
        gen += 1
        best = record(gen)
    log.debug("GA stopped after %d generations, best MSE %g", gen, best)
    return TrainReport(pop.best(), gen, history, best <= params.target_mse, rows)


def exhaustive_search(task: FitnessTask, chunk: int = 1 << 15) -> tuple[Chromosome, float]:
    """Global minimum-MSE chromosome by enumerating every bit string.

    Ties go to the lowest bit-string value (MSB first).  Refuses genomes
    longer than 24 bits.
    """
    n_bits = task.chromosome_length
    if n_bits > EXHAUSTIVE_MAX_BITS:
        raise ValueError(
            f"exhaustive search is limited to {EXHAUSTIVE_MAX_BITS} bits, task has {n_bits}"
        )
    shifts = np.arange(n_bits - 1, -1, -1, dtype=np.int64)
    best_val, best_mse = -1, math.inf
    total = 1 << n_bits
    for lo in range(0, total, chunk):
        values = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        bits = ((values[:, None] >> shifts) & 1).astype(np.uint8)
        mse = task.evaluate_many(bits)
        i = int(np.argmin(mse))
        if mse[i] < best_mse:
            best_val, best_mse = int(values[i]), float(mse[i])
    bits = ((best_val >> shifts) & 1).astype(np.uint8)
    return Chromosome(bits), best_mse

