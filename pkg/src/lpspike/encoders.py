"""Spike-time coding of task data and decoding of output spikes.

XOR inputs use latency coding (logic 0 at 1 ms, logic 1 at 7 ms) plus a
reference neuron firing at 1 ms.  Real-valued features are encoded by a bank
of Gaussian receptive fields: a strong response fires early, a response below
the fire line does not fire at all.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np

from .srm import SpikeTrain

REFERENCE_TIME_MS = 1.0
XOR_INPUT_TIMES = {0: 1.0, 1: 7.0}
XOR_TARGETS = {0: 17.0, 1: 10.0}
BINARY_ONE_TARGET = 10.0


class XorCoding(str, enum.Enum):
    HIDDEN_LAYER = "hidden-layer"
    BINARY = "binary"

    @classmethod
    def parse(cls, text: "str | XorCoding") -> "XorCoding":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower().replace("_", "-")
        for c in cls:
            if c.value == key:
                return c
        raise ValueError(f"unknown XOR coding {text!r}; expected hidden-layer or binary")


@dataclass(frozen=True)
class XorPattern:
    bits: tuple[int, int]
    input_times: tuple[float, float, float]
    target_time: float | None

    def input_trains(self) -> tuple[SpikeTrain, ...]:
        return tuple(SpikeTrain((t,)) for t in self.input_times)

    @property
    def label(self) -> int:
        return self.bits[0] ^ self.bits[1]


def encode_xor(b1: int, b2: int, coding: XorCoding | str = XorCoding.HIDDEN_LAYER) -> XorPattern:
    """Encode one XOR row as (reference, input 1, input 2) spike times and a target.

    With binary coding a logic-zero output is "no spike" (``target_time=None``).
    """
    if b1 not in (0, 1) or b2 not in (0, 1):
        raise ValueError("XOR inputs must be 0 or 1")
    coding = XorCoding.parse(coding)
    out = b1 ^ b2
    if coding is XorCoding.HIDDEN_LAYER:
        target = XOR_TARGETS[out]
    else:
        target = BINARY_ONE_TARGET if out else None
    return XorPattern(
        (b1, b2), (REFERENCE_TIME_MS, XOR_INPUT_TIMES[b1], XOR_INPUT_TIMES[b2]), target
    )


def xor_patterns(coding: XorCoding | str = XorCoding.HIDDEN_LAYER) -> list[XorPattern]:
    return [encode_xor(a, b, coding) for a in (0, 1) for b in (0, 1)]


@dataclass(frozen=True)
class GrfParams:
    """Receptive-field bank settings. Defaults: 8 fields over [0, 50], gamma 1.5, fire line 0.1, 10 ms window."""

    m: int = 8
    i_min: float = 0.0
    i_max: float = 50.0
    gamma: float = 1.5
    fire_threshold: float = 0.1
    encode_window: float = 10.0

    def __post_init__(self):
        if self.m < 3:
            raise ValueError("at least 3 receptive fields are required")
        if not self.i_max > self.i_min:
            raise ValueError("i_max must exceed i_min")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not 0 < self.fire_threshold < 1:
            raise ValueError("fire_threshold must lie in (0, 1)")
        if not self.encode_window > 0:
            raise ValueError("encode_window must be positive")


def grf_centers_widths(p: GrfParams) -> list[tuple[float, float]]:
    spacing = (p.i_max - p.i_min) / (p.m - 2)
    sigma = spacing / p.gamma
    return [(p.i_min + (2 * i - 3) / 2 * spacing, sigma) for i in range(1, p.m + 1)]


def grf_responses(x: float, p: GrfParams) -> np.ndarray:
    cw = np.array(grf_centers_widths(p))
    return np.exp(-((x - cw[:, 0]) ** 2) / (2 * cw[:, 1] ** 2))


def round_to_grid(t: float, dt: float) -> float:
    """Round half up to the nearest multiple of ``dt``."""
    return math.floor(t / dt + 0.5 + 1e-12) * dt


def grf_spike_times(x: float, p: GrfParams, sim_dt: float) -> list[float | None]:
    """Spike time per receptive field; ``None`` where the response is below the fire line."""
    out: list[float | None] = []
    for phi in grf_responses(float(x), p):
        if phi < p.fire_threshold:
            out.append(None)
        else:
            out.append(round_to_grid((1.0 - phi) * p.encode_window, sim_dt))
    return out


def encode_features(
    features: Sequence[float], p: GrfParams, sim_dt: float, reference: bool = True
) -> list[SpikeTrain]:
    """Concatenate the receptive-field trains of every feature, reference neuron last."""
    trains = []
    for x in features:
        trains.extend(SpikeTrain(() if t is None else (t,)) for t in grf_spike_times(x, p, sim_dt))
    if reference:
        trains.append(SpikeTrain((REFERENCE_TIME_MS,)))
    return trains


def encode_iris_sample(features: Sequence[float], p: GrfParams, sim_dt: float) -> list[SpikeTrain]:
    """33 input trains for one iris sample (4 features x 8 fields + reference)."""
    if len(features) != 4:
        raise ValueError(f"an iris sample has 4 features, got {len(features)}")
    return encode_features(features, p, sim_dt)


MISCLASSIFIED = "misclassified"


@dataclass(frozen=True)
class ClassTargets:
    times: Mapping[Hashable, float] = field(
        default_factory=lambda: {"Setosa": 15.0, "Versicolor": 20.0, "Virginica": 25.0}
    )
    tolerance_ms: float = 2.0

    def __post_init__(self):
        if not self.tolerance_ms >= 0:
            raise ValueError("tolerance_ms must be non-negative")
        spans = sorted((t - self.tolerance_ms, t + self.tolerance_ms) for t in self.times.values())
        for (_, hi), (lo, _) in zip(spans, spans[1:]):
            if lo <= hi:
                raise ValueError(f"class windows overlap: {dict(self.times)}")

    def target(self, label) -> float:
        return float(self.times[label])


def decode_output_class(train: SpikeTrain | Sequence[float], targets: ClassTargets):
    """Class whose target lies within the tolerance of the first spike, else ``MISCLASSIFIED``."""
    times = train.times if isinstance(train, SpikeTrain) else tuple(train)
    if not times:
        return MISCLASSIFIED
    t = times[0]
    hits = [c for c, tc in targets.times.items() if abs(t - tc) <= targets.tolerance_ms + 1e-9]
    return hits[0] if len(hits) == 1 else MISCLASSIFIED
