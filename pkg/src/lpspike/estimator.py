"""scikit-learn compatible wrappers around the GA-trained spiking network.

Inputs are dense matrices of spike times, one column per input neuron and at
most one spike per neuron; ``NaN`` means the neuron stays silent.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .codec import Genome, WeightScheme
from .encoders import ClassTargets, GrfParams, decode_output_class, encode_features
from .ga import FitnessTask, GaParams, Pattern, train
from .srm import SimParams, SpikeTrain, Topology


def _rows_to_trains(X: np.ndarray) -> list[list[SpikeTrain]]:
    return [[SpikeTrain(() if np.isnan(t) else (float(t),)) for t in row] for row in X]


class GRFEncoder(TransformerMixin, BaseEstimator):
    """Gaussian receptive-field population coding of real features into spike times.

    Output has ``m * n_features + 1`` columns: the fields of feature 0, then
    feature 1, ..., and a reference neuron at 1 ms last (if ``reference``).
    """

    def __init__(
        self,
        m=8,
        i_min=0.0,
        i_max=50.0,
        gamma=1.5,
        fire_threshold=0.1,
        encode_window=10.0,
        dt=1.0,
        reference=True,
    ):
        self.m = m
        self.i_min = i_min
        self.i_max = i_max
        self.gamma = gamma
        self.fire_threshold = fire_threshold
        self.encode_window = encode_window
        self.dt = dt
        self.reference = reference

    def _params(self) -> GrfParams:
        return GrfParams(
            self.m, self.i_min, self.i_max, self.gamma, self.fire_threshold, self.encode_window
        )

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        self._params()
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        p = self._params()
        out = []
        for row in X:
            trains = encode_features(row, p, self.dt, reference=self.reference)
            out.append([t.first if t.times else np.nan for t in trains])
        return np.array(out, dtype=float)


class SpikeTimeRegressor(RegressorMixin, BaseEstimator):
    """Predicts the first output spike time of a limited-precision network trained by the GA.

    ``y`` holds target times in ms; ``NaN`` asks for no output spike.
    Prediction is ``NaN`` for a silent output.  ``score`` is the negated MSE
    with silent outputs counted at ``sim_time_ms``.
    """

    def __init__(
        self,
        hidden_layer_sizes=(5,),
        scheme="Integer",
        sim_time_ms=50.0,
        dt=1.0,
        tau=3.0,
        tau_r=20.0,
        threshold=1.5,
        population_size=200,
        crossover_rate=0.6,
        mutation_rate=0.01,
        selective_pressure=1.5,
        elite_count=8,
        max_generations=200,
        target_mse=0.0,
        random_state=0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.scheme = scheme
        self.sim_time_ms = sim_time_ms
        self.dt = dt
        self.tau = tau
        self.tau_r = tau_r
        self.threshold = threshold
        self.population_size = population_size
        self.crossover_rate = crossover_rate
        self.mutation_rate = mutation_rate
        self.selective_pressure = selective_pressure
        self.elite_count = elite_count
        self.max_generations = max_generations
        self.target_mse = target_mse
        self.random_state = random_state

    def _sim(self) -> SimParams:
        return SimParams(self.sim_time_ms, self.dt, self.tau, self.tau_r, self.threshold)

    def _ga(self) -> GaParams:
        return GaParams(
            population_size=self.population_size,
            crossover_rate=self.crossover_rate,
            mutation_rate=self.mutation_rate,
            selective_pressure=self.selective_pressure,
            elite_count=self.elite_count,
            max_generations=self.max_generations,
            target_mse=self.target_mse,
            rng_seed=0 if self.random_state is None else int(self.random_state),
        )

    def _task(self, X, targets) -> FitnessTask:
        topology = Topology((X.shape[1], *tuple(self.hidden_layer_sizes), 1))
        patterns = [
            Pattern(tuple(trains), None if np.isnan(t) else float(t))
            for trains, t in zip(_rows_to_trains(X), targets)
        ]
        return FitnessTask(topology, WeightScheme.parse(self.scheme), self._sim(), patterns)

    def _fit_times(self, X, targets):
        X = check_array(X, dtype=float, ensure_all_finite="allow-nan")
        targets = np.asarray(targets, dtype=float)
        if targets.shape != (X.shape[0],):
            raise ValueError("y must have one target per sample")
        task = self._task(X, targets)
        self.train_report_ = train(self._ga(), task)
        self.genome_ = Genome(task.scheme, task.topology, self.train_report_.best.chromosome)
        self.n_features_in_ = X.shape[1]
        self.train_mse_ = self.train_report_.best.mse
        return self

    def fit(self, X, y):
        return self._fit_times(X, y)

    def first_spike_times(self, X) -> np.ndarray:
        check_is_fitted(self, "genome_")
        X = check_array(X, dtype=float, ensure_all_finite="allow-nan")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} input neurons, got {X.shape[1]}")
        task = self._task(X, np.full(X.shape[0], np.nan))
        return task.first_spike_times(self.genome_.chromosome.bits)[0]

    def predict(self, X):
        return self.first_spike_times(X)

    def score(self, X, y, sample_weight=None):
        first = self.first_spike_times(X)
        horizon = self.sim_time_ms
        actual = np.where(np.isnan(first), horizon, first)
        desired = np.where(np.isnan(np.asarray(y, dtype=float)), horizon, y)
        return -float(np.average((actual - desired) ** 2, weights=sample_weight))


class SpikeTimeClassifier(ClassifierMixin, SpikeTimeRegressor):
    """Single-output-neuron classifier: each class owns a target firing time.

    ``class_times`` are assigned to the sorted class labels.  A sample is
    predicted as the class whose target is within ``tolerance_ms`` of the
    first output spike, otherwise ``"misclassified"``.
    """

    def __init__(
        self,
        hidden_layer_sizes=(8,),
        scheme="Integer",
        sim_time_ms=50.0,
        dt=1.0,
        tau=3.0,
        tau_r=20.0,
        threshold=6.0,
        population_size=600,
        crossover_rate=0.6,
        mutation_rate=0.01,
        selective_pressure=1.5,
        elite_count=8,
        max_generations=600,
        target_mse=0.25,
        random_state=0,
        class_times=(15.0, 20.0, 25.0),
        tolerance_ms=2.0,
    ):
        super().__init__(
            hidden_layer_sizes=hidden_layer_sizes,
            scheme=scheme,
            sim_time_ms=sim_time_ms,
            dt=dt,
            tau=tau,
            tau_r=tau_r,
            threshold=threshold,
            population_size=population_size,
            crossover_rate=crossover_rate,
            mutation_rate=mutation_rate,
            selective_pressure=selective_pressure,
            elite_count=elite_count,
            max_generations=max_generations,
            target_mse=target_mse,
            random_state=random_state,
        )
        self.class_times = class_times
        self.tolerance_ms = tolerance_ms

    def fit(self, X, y):
        y = np.asarray(y)
        self.classes_ = np.unique(y)
        if len(self.classes_) > len(self.class_times):
            raise ValueError(
                f"{len(self.classes_)} classes but only {len(self.class_times)} target times"
            )
        self.targets_ = ClassTargets(
            {c: float(t) for c, t in zip(self.classes_.tolist(), self.class_times)},
            self.tolerance_ms,
        )
        return self._fit_times(X, np.array([self.targets_.target(c) for c in y.tolist()]))

    def predict(self, X):
        first = self.first_spike_times(X)
        out = np.empty(len(first), dtype=object)
        for i, t in enumerate(first):
            out[i] = decode_output_class(() if np.isnan(t) else (t,), self.targets_)
        return out

    def score(self, X, y, sample_weight=None):
        pred = self.predict(X)
        hit = np.array([p == t for p, t in zip(pred, np.asarray(y).tolist())], dtype=float)
        return float(np.average(hit, weights=sample_weight))
