"""Confusion-matrix metrics and distance-arithmetic operation counting."""
import csv
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from .errors import ContractError
from .utils import atomic_write, format_fraction

CSV_COLUMNS = [
    'filter', 'parameters', 'tp', 'fp', 'tn', 'fn',
    'accuracy', 'error', 'precision', 'recall', 'f1',
    'additions', 'multiplications', 'wall_ms', 'note',
]


@dataclass
class OpCounts:
    """Additions and multiplications spent on distance computations in one run."""

    additions: int = 0
    multiplications: int = 0

    def add(self, additions: int, multiplications: int) -> None:
        self.additions += int(additions)
        self.multiplications += int(multiplications)

    def add_distances(self, dim: int, pairs: int) -> None:
        """Charge ``pairs`` squared-distance evaluations in ``dim`` dimensions."""
        additions, multiplications = squared_distance_cost(dim)
        self.add(additions * pairs, multiplications * pairs)

    def merge(self, other: "OpCounts") -> None:
        self.add(other.additions, other.multiplications)


def squared_distance_cost(dim: int) -> Tuple[int, int]:
    """(additions, multiplications) of one squared distance: d subtractions, d-1 adds, d products."""
    return 2 * dim - 1, dim


def op_counted_run(filter_fn: Callable[..., Any], *args, **kwargs) -> Tuple[Any, OpCounts]:
    """Call ``filter_fn(..., counter=tally)`` with a fresh tally and return both."""
    tally = OpCounts()
    result = filter_fn(*args, counter=tally, **kwargs)
    return result, tally


@dataclass(frozen=True)
class ConfusionCounts:
    """Noise is the positive class: a removed point is a positive prediction."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ContractError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(truth: Iterable, predicted: Iterable) -> ConfusionCounts:
    """
    Count TP/FP/TN/FN.

    Args:
        truth: NoiseLabel codes (any nonzero code is noise) or booleans
        predicted: booleans or 0/1 codes, True/1 meaning removed as noise
    """
    truth_noise = np.asarray(truth).astype(np.int64) != 0
    predicted_noise = np.asarray(predicted).astype(np.int64) != 0
    if truth_noise.shape != predicted_noise.shape:
        raise ContractError(
            f"label length mismatch: {truth_noise.size} truth vs {predicted_noise.size} predicted")
    return ConfusionCounts(
        tp=int(np.count_nonzero(truth_noise & predicted_noise)),
        fp=int(np.count_nonzero(~truth_noise & predicted_noise)),
        tn=int(np.count_nonzero(~truth_noise & ~predicted_noise)),
        fn=int(np.count_nonzero(truth_noise & ~predicted_noise)),
    )


def accuracy(c: ConfusionCounts) -> Optional[float]:
    if c.total == 0:
        return None
    return (c.tp + c.tn) / c.total


def error(c: ConfusionCounts) -> Optional[float]:
    acc = accuracy(c)
    if acc is None:
        return None
    # complement keeps accuracy + error == 1 exactly
    return 1.0 - acc


def precision(c: ConfusionCounts) -> Optional[float]:
    if c.tp + c.fp == 0:
        return None
    return c.tp / (c.tp + c.fp)


def recall(c: ConfusionCounts) -> Optional[float]:
    if c.tp + c.fn == 0:
        return None
    return c.tp / (c.tp + c.fn)


def f1_from(p: Optional[float], r: Optional[float]) -> Optional[float]:
    """Harmonic mean of precision and recall; undefined when either is."""
    if p is None or r is None or p + r == 0:
        return None
    return 2 * p * r / (p + r)


def f1(c: ConfusionCounts) -> Optional[float]:
    return f1_from(precision(c), recall(c))


@dataclass
class MetricsRow:
    """One CSV row of a filter evaluation."""

    filter: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    counts: Optional[ConfusionCounts] = None
    ops: Optional[OpCounts] = None
    wall_ms: Optional[float] = None
    note: str = ""

    @property
    def f1(self) -> Optional[float]:
        return None if self.counts is None else f1(self.counts)

    def as_record(self) -> Dict[str, str]:
        c = self.counts
        record = {
            'filter': self.filter,
            'parameters': format_parameters(self.parameters),
            'tp': '' if c is None else str(c.tp),
            'fp': '' if c is None else str(c.fp),
            'tn': '' if c is None else str(c.tn),
            'fn': '' if c is None else str(c.fn),
            'accuracy': format_fraction(None if c is None else accuracy(c)),
            'error': format_fraction(None if c is None else error(c)),
            'precision': format_fraction(None if c is None else precision(c)),
            'recall': format_fraction(None if c is None else recall(c)),
            'f1': format_fraction(self.f1),
            'additions': 'n/a' if self.ops is None else str(self.ops.additions),
            'multiplications': 'n/a' if self.ops is None else str(self.ops.multiplications),
            'wall_ms': '' if self.wall_ms is None else f"{self.wall_ms:.3f}",
            'note': self.note,
        }
        return record


def format_parameters(parameters: Dict[str, Any]) -> str:
    """``k=v`` pairs joined by ';' in key order, for the parameters column."""
    return ';'.join(f"{key}={parameters[key]}" for key in sorted(parameters))


def write_csv(rows: List[Dict[str, str]], path: Union[str, Path], columns: List[str]) -> None:
    with atomic_write(path) as tmp:
        with open(tmp, 'w', encoding='utf-8', newline='') as f:
            writer = csv.DictWriter(f, fieldnames=columns, lineterminator='\n')
            writer.writeheader()
            writer.writerows(rows)


def write_metrics_csv(rows: List[MetricsRow], path: Union[str, Path]) -> None:
    write_csv([row.as_record() for row in rows], path, CSV_COLUMNS)


class Stopwatch:
    """Wall-clock timer for the wall_ms column."""

    def __enter__(self) -> "Stopwatch":
        self._start = time.perf_counter()
        self.elapsed_ms = 0.0
        return self

    def __exit__(self, *exc) -> None:
        self.elapsed_ms = (time.perf_counter() - self._start) * 1000.0
