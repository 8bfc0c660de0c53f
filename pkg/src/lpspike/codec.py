"""Limited-precision synapse codebooks and the binary chromosome layout.

A synapse gene is 6 bits ``[w2 w1 w0 d2 d1 d0]``, MSB first: three bits index
the weight codebook and three index the delay codebook (1..8 ms).  Codebook
index equals the rank of the value in ascending order.  A chromosome is the
concatenation of all genes in canonical synapse order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .srm import StructureError, SynapseValue, Topology

GENE_BITS = 6
FIELD_BITS = 3

_WEIGHTS = {
    "HalfStep": (-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0),
    "Integer": (-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0),
}
_DELAYS = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0)


class CodebookError(ValueError):
    """A weight or delay is not representable in the active codebook."""


class WeightScheme(str, enum.Enum):
    HALF_STEP = "HalfStep"
    INTEGER = "Integer"

    @classmethod
    def parse(cls, text: "str | WeightScheme") -> "WeightScheme":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower().replace("-", "").replace("_", "")
        for scheme in cls:
            if scheme.value.lower() == key:
                return scheme
        raise ValueError(f"unknown weight scheme {text!r}; expected HalfStep or Integer")

    def __str__(self) -> str:
        return self.value


def weight_codebook(scheme: WeightScheme | str) -> np.ndarray:
    return np.array(_WEIGHTS[WeightScheme.parse(scheme).value])


def delay_codebook() -> np.ndarray:
    return np.array(_DELAYS)


@dataclass(frozen=True)
class SynapseGene:
    weight_idx: int
    delay_idx: int

    def __post_init__(self):
        for name in ("weight_idx", "delay_idx"):
            v = getattr(self, name)
            if not 0 <= v < 8:
                raise CodebookError(f"{name}={v} does not fit in 3 bits")

    def to_bits(self) -> str:
        return f"{self.weight_idx:03b}{self.delay_idx:03b}"

    @classmethod
    def from_bits(cls, bits) -> "SynapseGene":
        text = bits_to_str(bits)
        if len(text) != GENE_BITS:
            raise StructureError(f"a gene has {GENE_BITS} bits, got {len(text)}")
        return cls(int(text[:3], 2), int(text[3:], 2))


def bits_to_str(bits) -> str:
    if isinstance(bits, str):
        if set(bits) - {"0", "1"}:
            raise StructureError(f"bit string may only contain 0 and 1: {bits!r}")
        return bits
    return "".join("1" if b else "0" for b in np.asarray(bits).ravel())


def decode_gene(bits6, scheme: WeightScheme | str) -> SynapseValue:
    gene = SynapseGene.from_bits(bits6)
    return SynapseValue(
        float(weight_codebook(scheme)[gene.weight_idx]), float(_DELAYS[gene.delay_idx])
    )


def _index_of(value: float, book: Sequence[float], what: str) -> int:
    for i, v in enumerate(book):
        if v == value:
            return i
    raise CodebookError(f"{what} {value} is not in codebook {list(book)}")


def encode_gene(value: SynapseValue, scheme: WeightScheme | str) -> str:
    w = _index_of(value.weight, _WEIGHTS[WeightScheme.parse(scheme).value], "weight")
    d = _index_of(value.delay, _DELAYS, "delay")
    return SynapseGene(w, d).to_bits()


class Chromosome:
    """Immutable bit string backed by a ``uint8`` array of 0/1 values."""

    __slots__ = ("_bits",)

    def __init__(self, bits):
        if isinstance(bits, str):
            bits_to_str(bits)
            arr = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
        else:
            arr = np.asarray(bits, dtype=np.uint8).ravel()
            if arr.size and arr.max() > 1:
                raise StructureError("chromosome bits must be 0 or 1")
        arr = arr.copy()
        arr.setflags(write=False)
        self._bits = arr

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    def __len__(self) -> int:
        return self._bits.size

    def __eq__(self, other) -> bool:
        return isinstance(other, Chromosome) and np.array_equal(self._bits, other._bits)

    def __hash__(self) -> int:
        return hash(self._bits.tobytes())

    def __str__(self) -> str:
        return bits_to_str(self._bits)

    def __repr__(self) -> str:
        text = str(self)
        return f"Chromosome({text[:24] + '...' if len(text) > 24 else text!r})"

    def genes(self) -> np.ndarray:
        return self._bits.reshape(-1, GENE_BITS)

    @classmethod
    def from_synapses(
        cls, synapses: Sequence[SynapseValue], scheme: WeightScheme | str
    ) -> "Chromosome":
        return cls("".join(encode_gene(s, scheme) for s in synapses))


def _check_length(n_bits: int, topology: Topology) -> None:
    expected = GENE_BITS * topology.synapse_count
    if n_bits != expected:
        raise StructureError(
            f"topology {topology} needs {expected} bits, chromosome has {n_bits}"
        )


def gene_indices(bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Weight and delay indices for a ``(..., 6*S)`` bit array, shape ``(..., S)``."""
    b = np.asarray(bits, dtype=np.int64)
    g = b.reshape(b.shape[:-1] + (-1, GENE_BITS))
    w = g[..., 0] * 4 + g[..., 1] * 2 + g[..., 2]
    d = g[..., 3] * 4 + g[..., 4] * 2 + g[..., 5]
    return w, d


def decode_arrays(
    bits: np.ndarray, scheme: WeightScheme | str
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised decode of one or many chromosomes to weight and delay (ms) arrays."""
    w, d = gene_indices(bits)
    return weight_codebook(scheme)[w], delay_codebook()[d]


def decode_chromosome(
    c: Chromosome, topology: Topology, scheme: WeightScheme | str
) -> list[SynapseValue]:
    _check_length(len(c), topology)
    weights, delays = decode_arrays(c.bits, scheme)
    return [SynapseValue(float(w), float(d)) for w, d in zip(weights, delays)]


@dataclass(frozen=True)
class Genome:
    """A chromosome bound to the topology and scheme needed to decode it."""

    scheme: WeightScheme
    topology: Topology
    chromosome: Chromosome

    def __post_init__(self):
        object.__setattr__(self, "scheme", WeightScheme.parse(self.scheme))
        _check_length(len(self.chromosome), self.topology)

    def synapses(self) -> list[SynapseValue]:
        return decode_chromosome(self.chromosome, self.topology, self.scheme)

    def dumps(self) -> str:
        return f"{self.scheme.value}\n{self.topology}\n{self.chromosome}\n"

    @classmethod
    def loads(cls, text: str) -> "Genome":
        lines = [ln.strip() for ln in text.strip().splitlines()]
        if len(lines) != 3:
            raise StructureError(f"genome file needs 3 lines, found {len(lines)}")
        return cls(WeightScheme.parse(lines[0]), Topology.parse(lines[1]), Chromosome(lines[2]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="ascii", newline="\n")

    @classmethod
    def load(cls, path: str | Path) -> "Genome":
        return cls.loads(Path(path).read_text(encoding="ascii"))
