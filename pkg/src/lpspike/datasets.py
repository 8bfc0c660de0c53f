"""Fisher iris loading and stratified block cross-validation plans."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from typing import IO, Sequence

import numpy as np

CLASSES = ("Setosa", "Versicolor", "Virginica")
_LABELS = {
    "iris-setosa": "Setosa",
    "setosa": "Setosa",
    "iris-versicolor": "Versicolor",
    "versicolor": "Versicolor",
    "iris-virginica": "Virginica",
    "virginica": "Virginica",
}
TRAIN_SIZES = (10, 20, 25, 30)
PER_CLASS = 50


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class IrisSample:
    features: tuple[float, float, float, float]
    label: str


def load_iris(source: IO[str] | IO[bytes] | str | None = None) -> list[IrisSample]:
    """Parse UCI-format iris CSV (``f1,f2,f3,f4,label``).

    ``source`` may be a text or binary stream, or raw CSV text.  With no
    argument the bundled copy is read.
    """
    if source is None:
        text = resources.files("lpspike.data").joinpath("iris.data").read_text("ascii")
    elif isinstance(source, str):
        text = source
    else:
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw

    samples = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 5:
            raise DatasetError(f"line {lineno}: expected 5 fields, got {len(row)}")
        try:
            feats = tuple(float(v) for v in row[:4])
        except ValueError as exc:
            raise DatasetError(f"line {lineno}: {exc}") from None
        if not all(math.isfinite(v) and v > 0 for v in feats):
            raise DatasetError(f"line {lineno}: features must be finite and positive")
        label = _LABELS.get(row[4].strip().lower())
        if label is None:
            raise DatasetError(f"line {lineno}: unknown label {row[4].strip()!r}")
        samples.append(IrisSample(feats, label))

    if not samples:
        raise DatasetError("no samples")
    counts = {c: sum(s.label == c for s in samples) for c in CLASSES}
    if len(samples) != 3 * PER_CLASS or any(n != PER_CLASS for n in counts.values()):
        raise DatasetError(f"expected 150 samples with 50 per class, got {counts}")
    return samples


@dataclass(frozen=True)
class FoldPlan:
    train_size_per_class: int
    folds: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    seed: int = 0

    @property
    def k(self) -> int:
        return len(self.folds)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["fold_id", "role", "sample_index"])
        for k, (train, val) in enumerate(self.folds):
            w.writerows((k, "train", i) for i in train)
            w.writerows((k, "val", i) for i in val)
        return buf.getvalue()


def make_fold_plan(samples: Sequence[IrisSample], train_size_per_class: int, seed: int = 0) -> FoldPlan:
    """Stratified block folds.

    Each class's sample indices are shuffled once with ``seed`` and cut into
    ``floor(50 / size)`` consecutive blocks.  Fold ``k`` trains on block ``k``
    of every class and validates on everything else.
    """
    size = int(train_size_per_class)
    if size not in TRAIN_SIZES:
        raise DatasetError(f"train size per class must be one of {TRAIN_SIZES}, got {size}")
    by_class = {c: [i for i, s in enumerate(samples) if s.label == c] for c in CLASSES}
    if any(len(ix) != PER_CLASS for ix in by_class.values()):
        raise DatasetError("fold plans need the full 50-per-class dataset")
    rng = np.random.default_rng(seed)
    shuffled = {c: [by_class[c][j] for j in rng.permutation(PER_CLASS)] for c in CLASSES}
    n_folds = PER_CLASS // size
    everything = set(range(len(samples)))
    folds = []
    for k in range(n_folds):
        train = [i for c in CLASSES for i in shuffled[c][k * size : (k + 1) * size]]
        val = sorted(everything - set(train))
        folds.append((tuple(train), tuple(val)))
    return FoldPlan(size, tuple(folds), seed)


def mean_validation_error(per_fold_errors: Sequence[float]) -> float:
    errors = list(per_fold_errors)
    if not errors:
        raise ValueError("mean_validation_error needs at least one fold")
    return sum(errors) / len(errors)
