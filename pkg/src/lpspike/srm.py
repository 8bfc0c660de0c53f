"""Spike Response Model neurons and grid simulation of feed-forward networks.

Every connection between adjacent layers carries exactly one synapse with a
weight and an axonal delay.  The membrane potential of a neuron is the sum of
delayed, weighted PSP kernels plus a refractory kernel anchored at the neuron's
most recent own spike.  Simulation runs on the uniform grid
``{0, dt, ..., sim_time_ms}``; a neuron fires at grid time ``t`` when
``u(t) >= threshold`` and ``u(t) > u(t - dt)``.

Synapses are laid out in canonical order: connection layer first, then
postsynaptic index, then presynaptic index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numba
import numpy as np

__all__ = [
    "ParameterError",
    "StructureError",
    "SimParams",
    "Topology",
    "SpikeTrain",
    "SynapseValue",
    "psp_kernel",
    "refractory_kernel",
    "membrane_potential",
    "simulate_network",
    "simulate_with_potentials",
    "Trace",
]

# spike arrivals closer than this (in grid steps) to a grid point use the tables
_GRID_SNAP = 1e-6


class ParameterError(ValueError):
    """Raised for out-of-range model parameters."""


class StructureError(ValueError):
    """Raised when array lengths disagree with the network topology."""


@dataclass(frozen=True)
class SimParams:
    """Simulation constants. Defaults are the XOR settings (50 ms, tau 3, tau_r 20, theta 1.5)."""

    sim_time_ms: float = 50.0
    dt: float = 1.0
    tau: float = 3.0
    tau_r: float = 20.0
    threshold: float = 1.5

    def __post_init__(self):
        if not self.sim_time_ms > 0 or not self.dt > 0:
            raise ParameterError("sim_time_ms and dt must be positive")
        if self.dt > self.sim_time_ms:
            raise ParameterError("dt must not exceed sim_time_ms")
        if not (self.tau > 0 and self.tau_r > 0 and self.threshold > 0):
            raise ParameterError("tau, tau_r and threshold must be positive")
        ratio = self.sim_time_ms / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ParameterError(
                f"sim_time_ms={self.sim_time_ms} is not a multiple of dt={self.dt}"
            )

    @property
    def n_steps(self) -> int:
        """Index of the last grid point; the grid has ``n_steps + 1`` points."""
        return int(round(self.sim_time_ms / self.dt))

    def grid(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def replace(self, **changes) -> "SimParams":
        values = {k: getattr(self, k) for k in ("sim_time_ms", "dt", "tau", "tau_r", "threshold")}
        values.update(changes)
        return SimParams(**values)


@dataclass(frozen=True)
class Topology:
    layer_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2:
            raise StructureError("a topology needs at least an input and an output layer")
        if any(s < 1 for s in sizes):
            raise StructureError(f"layer sizes must be >= 1, got {sizes}")
        object.__setattr__(self, "layer_sizes", sizes)

    @classmethod
    def parse(cls, text: str) -> "Topology":
        """Parse the dash-separated form, e.g. ``"3-5-1"``."""
        try:
            return cls(tuple(int(part) for part in text.strip().split("-")))
        except ValueError as exc:
            raise StructureError(f"cannot parse topology {text!r}") from exc

    def __str__(self) -> str:
        return "-".join(str(s) for s in self.layer_sizes)

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    @property
    def n_neurons(self) -> int:
        return sum(self.layer_sizes)

    @property
    def synapse_count(self) -> int:
        s = self.layer_sizes
        return sum(s[i] * s[i + 1] for i in range(len(s) - 1))

    def synapse_index(self) -> list[tuple[int, int, int]]:
        """``(layer, post, pre)`` for every synapse in canonical order.

        ``layer`` is the index of the postsynaptic layer (1-based w.r.t. the input).
        """
        out = []
        for layer in range(1, len(self.layer_sizes)):
            for post in range(self.layer_sizes[layer]):
                for pre in range(self.layer_sizes[layer - 1]):
                    out.append((layer, post, pre))
        return out


@dataclass(frozen=True)
class SpikeTrain:
    times: tuple[float, ...] = ()

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if any(not math.isfinite(t) or t < 0 for t in times):
            raise ParameterError(f"spike times must be finite and non-negative: {times}")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ParameterError(f"spike times must be strictly increasing: {times}")
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self):
        return iter(self.times)

    @property
    def first(self) -> float | None:
        return self.times[0] if self.times else None

    def check_window(self, params: SimParams) -> None:
        if self.times and self.times[-1] > params.sim_time_ms + 1e-9:
            raise ParameterError(
                f"spike at {self.times[-1]} ms lies beyond sim_time_ms={params.sim_time_ms}"
            )


@dataclass(frozen=True)
class SynapseValue:
    weight: float
    delay: float


def psp_kernel(t_e, tau: float):
    """Unweighted postsynaptic potential ``(t/tau) exp(-t/tau)`` for ``t > 0``, else 0.

    Accepts scalars or arrays.
    """
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    t = np.asarray(t_e, dtype=float)
    pos = t > 0
    s = np.where(pos, t, 0.0) / tau
    out = np.where(pos, s * np.exp(-s), 0.0)
    return float(out) if out.ndim == 0 else out


def refractory_kernel(t_p, threshold: float, tau_r: float):
    """Spike-after potential ``-4 theta exp(-t/tau_r)`` for ``t > 0``, else 0."""
    if not (threshold > 0 and tau_r > 0):
        raise ParameterError("threshold and tau_r must be positive")
    t = np.asarray(t_p, dtype=float)
    pos = t > 0
    out = np.where(pos, -4.0 * threshold * np.exp(-np.where(pos, t, 0.0) / tau_r), 0.0)
    return float(out) if out.ndim == 0 else out


def _as_train(train) -> SpikeTrain:
    return train if isinstance(train, SpikeTrain) else SpikeTrain(tuple(train))


def membrane_potential(
    t: float,
    inputs: Iterable[tuple[SynapseValue, SpikeTrain | Sequence[float]]],
    own_last_spike: float | None,
    params: SimParams,
) -> float:
    """Evaluate the membrane potential of one neuron at time ``t``.

    ``inputs`` pairs each incoming synapse with the spike train of its
    presynaptic neuron.  Without an own spike the refractory term is 0.
    """
    u = 0.0
    for syn, train in inputs:
        times = np.asarray(_as_train(train).times, dtype=float)
        if times.size and syn.weight != 0:
            u += syn.weight * float(np.sum(psp_kernel(t - times - syn.delay, params.tau)))
    if own_last_spike is not None:
        u += refractory_kernel(t - own_last_spike, params.threshold, params.tau_r)
    return float(u)


# ---------------------------------------------------------------------------
# compiled core
# ---------------------------------------------------------------------------


def kernel_tables(params: SimParams) -> tuple[np.ndarray, np.ndarray]:
    """PSP and refractory kernels sampled at ``k * dt`` for ``k = 0..n_steps``."""
    lags = np.arange(params.n_steps + 1) * params.dt
    eps = psp_kernel(lags, params.tau)
    rho = refractory_kernel(lags, params.threshold, params.tau_r)
    return np.ascontiguousarray(eps, dtype=np.float64), np.ascontiguousarray(rho, dtype=np.float64)


@numba.njit(cache=True)
def _accumulate(psp, w, arrival, dt, tau, eps_tab):
    """Add ``w * eps(k*dt - arrival*dt)`` to ``psp[k]`` for all grid points after the arrival."""
    n = psp.shape[0]
    r = np.floor(arrival + 0.5)
    if r >= 0 and abs(arrival - r) < _GRID_SNAP:
        start = int(r)
        for k in range(start + 1, n):
            psp[k] += w * eps_tab[k - start]
    else:
        k0 = int(np.floor(arrival)) + 1
        if k0 < 0:
            k0 = 0
        for k in range(k0, n):
            s = (k - arrival) * dt / tau
            psp[k] += w * s * np.exp(-s)


@numba.njit(cache=True)
def _simulate_core(
    weights,
    delay_steps,
    layer_sizes,
    in_steps,
    in_counts,
    dt,
    tau,
    threshold,
    eps_tab,
    rho_tab,
    first_output_only,
    record,
    potentials,
):
    """Simulate one network on one input pattern.

    Spike times are carried in grid units.  Input spikes may sit off-grid
    (``in_steps`` is float); emitted spikes are always integer grid indices.
    Returns ``(spike_steps, spike_counts)`` indexed by global neuron id, where
    input neurons come first.  ``potentials`` is filled for non-input neurons
    when ``record`` is set.
    """
    n_layers = layer_sizes.shape[0]
    n_total = 0
    for i in range(n_layers):
        n_total += layer_sizes[i]
    n_pts = eps_tab.shape[0]
    max_sp = max(n_pts, in_steps.shape[1])
    spikes = np.full((n_total, max_sp), -1.0)
    counts = np.zeros(n_total, dtype=np.int64)
    n_in = layer_sizes[0]
    for i in range(n_in):
        counts[i] = in_counts[i]
        for g in range(in_counts[i]):
            spikes[i, g] = in_steps[i, g]

    psp = np.empty(n_pts)
    pre_off = 0
    syn = 0
    for layer in range(1, n_layers):
        n_pre = layer_sizes[layer - 1]
        post_off = pre_off + n_pre
        last_layer = layer == n_layers - 1
        for j in range(layer_sizes[layer]):
            nid = post_off + j
            psp[:] = 0.0
            for i in range(n_pre):
                w = weights[syn]
                d = delay_steps[syn]
                syn += 1
                if w == 0.0:
                    continue
                pid = pre_off + i
                for g in range(counts[pid]):
                    _accumulate(psp, w, spikes[pid, g] + d, dt, tau, eps_tab)
            last = -1
            prev_u = 0.0
            for k in range(n_pts):
                u = psp[k]
                if last >= 0:
                    u += rho_tab[k - last]
                if record:
                    potentials[nid - n_in, k] = u
                if k > 0 and u >= threshold and u > prev_u:
                    spikes[nid, counts[nid]] = k
                    counts[nid] += 1
                    last = k
                    if first_output_only and last_layer and not record:
                        break
                prev_u = u
        pre_off = post_off
    return spikes, counts


@numba.njit(cache=True)
def _batch_first_spikes(
    weights,
    delay_steps,
    layer_sizes,
    in_steps,
    in_counts,
    dt,
    tau,
    threshold,
    eps_tab,
    rho_tab,
):
    """First spike step of output neuron 0 for every (network, pattern); -1 when silent.

    ``weights``/``delay_steps`` are ``(P, S)``; ``in_steps`` is ``(N, n_in, G)``.
    """
    n_net = weights.shape[0]
    n_pat = in_steps.shape[0]
    out_id = 0
    for i in range(layer_sizes.shape[0] - 1):
        out_id += layer_sizes[i]
    dummy = np.zeros((1, 1))
    result = np.full((n_net, n_pat), -1, dtype=np.int64)
    for p in range(n_net):
        for m in range(n_pat):
            spikes, counts = _simulate_core(
                weights[p], delay_steps[p], layer_sizes, in_steps[m], in_counts[m],
                dt, tau, threshold, eps_tab, rho_tab, True, False, dummy,
            )
            if counts[out_id] > 0:
                result[p, m] = int(spikes[out_id, 0])
    return result


def pack_inputs(
    patterns: Sequence[Sequence[SpikeTrain | Sequence[float]]], params: SimParams
) -> tuple[np.ndarray, np.ndarray]:
    """Convert input spike trains of ``N`` patterns to padded grid-unit arrays."""
    trains = [[_as_train(t) for t in pat] for pat in patterns]
    n_pat = len(trains)
    n_in = len(trains[0]) if n_pat else 0
    if any(len(pat) != n_in for pat in trains):
        raise StructureError("all patterns must have the same number of input trains")
    width = max([1] + [len(t) for pat in trains for t in pat])
    steps = np.full((n_pat, n_in, width), -1.0)
    counts = np.zeros((n_pat, n_in), dtype=np.int64)
    for m, pat in enumerate(trains):
        for i, train in enumerate(pat):
            train.check_window(params)
            counts[m, i] = len(train)
            for g, t in enumerate(train.times):
                steps[m, i, g] = t / params.dt
    return steps, counts


def _synapse_arrays(topology: Topology, synapses: Sequence[SynapseValue], params: SimParams):
    if len(synapses) != topology.synapse_count:
        raise StructureError(
            f"topology {topology} needs {topology.synapse_count} synapses, got {len(synapses)}"
        )
    w = np.array([s.weight for s in synapses], dtype=np.float64)
    d = np.array([s.delay for s in synapses], dtype=np.float64) / params.dt
    return w, d


def _check_inputs(topology: Topology, input_trains) -> list[SpikeTrain]:
    trains = [_as_train(t) for t in input_trains]
    if len(trains) != topology.n_inputs:
        raise StructureError(
            f"topology {topology} has {topology.n_inputs} inputs, got {len(trains)} trains"
        )
    return trains


def _run(topology, synapses, input_trains, params, record):
    trains = _check_inputs(topology, input_trains)
    w, d = _synapse_arrays(topology, synapses, params)
    steps, counts = pack_inputs([trains], params)
    eps, rho = kernel_tables(params)
    n_hidden_out = topology.n_neurons - topology.n_inputs
    pots = np.zeros((n_hidden_out, params.n_steps + 1)) if record else np.zeros((1, 1))
    spikes, cnt = _simulate_core(
        w, d, np.array(topology.layer_sizes, dtype=np.int64), steps[0], counts[0],
        params.dt, params.tau, params.threshold, eps, rho, False, record, pots,
    )
    out = []
    for nid in range(topology.n_inputs, topology.n_neurons):
        out.append(SpikeTrain(tuple(float(k) * params.dt for k in spikes[nid, : cnt[nid]])))
    return out, pots


def simulate_network(
    topology: Topology,
    synapses: Sequence[SynapseValue],
    input_trains: Sequence[SpikeTrain | Sequence[float]],
    params: SimParams,
) -> list[SpikeTrain]:
    """Spike trains of every non-input neuron, hidden layers first, output last."""
    trains, _ = _run(topology, synapses, input_trains, params, record=False)
    return trains


@dataclass
class Trace:
    """Membrane potentials on the simulation grid for all non-input neurons."""

    t_ms: np.ndarray
    neuron_ids: list[str]
    potentials: np.ndarray  # (neurons, grid points)
    spikes: list[SpikeTrain] = field(default_factory=list)

    def spiked_mask(self, dt: float) -> np.ndarray:
        mask = np.zeros(self.potentials.shape, dtype=bool)
        for n, train in enumerate(self.spikes):
            for t in train.times:
                mask[n, int(round(t / dt))] = True
        return mask


def neuron_labels(topology: Topology) -> list[str]:
    """Ids ``L<layer>N<index>`` for non-input neurons in simulation order."""
    return [
        f"L{layer}N{j}"
        for layer in range(1, len(topology.layer_sizes))
        for j in range(topology.layer_sizes[layer])
    ]


def simulate_with_potentials(
    topology: Topology,
    synapses: Sequence[SynapseValue],
    input_trains: Sequence[SpikeTrain | Sequence[float]],
    params: SimParams,
) -> Trace:
    trains, pots = _run(topology, synapses, input_trains, params, record=True)
    return Trace(params.grid(), neuron_labels(topology), pots, trains)
