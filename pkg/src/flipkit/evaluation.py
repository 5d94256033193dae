"""Retrieval accuracy: patch-to-scan / whole-scan / total accuracy and leave-one-out."""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .errors import EvaluationError, InvalidInputError
from .index import DescriptorIndex, IndexConfig
from .metrics import MetricKind


class Outcome(NamedTuple):
    truth: str
    predicted: str

    @property
    def correct(self) -> bool:
        return self.truth == self.predicted


class ClassTally(NamedTuple):
    label: str
    correct: int
    total: int


@dataclass
class EtaReport:
    """Patch-to-scan accuracy ``eta_p``, class-averaged accuracy ``eta_w`` and their product."""

    eta_p: float
    eta_w: float
    eta_total: float
    per_class: list
    n_test: int
    config: Optional[dict] = None
    metric: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "metric": self.metric,
            "n_test": self.n_test,
            "eta_p": self.eta_p,
            "eta_w": self.eta_w,
            "eta_total": self.eta_total,
            "per_class": [t._asdict() for t in self.per_class],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def format_table(self) -> str:
        width = max([5] + [len(t.label) for t in self.per_class])
        lines = [f"{'class':<{width}}  correct  total  accuracy"]
        for t in self.per_class:
            lines.append(f"{t.label:<{width}}  {t.correct:>7}  {t.total:>5}  {t.correct / t.total:8.4f}")
        lines.append(f"eta_p={self.eta_p:.4f}  eta_w={self.eta_w:.4f}  "
                     f"eta_total={self.eta_total:.4f}  (n_test={self.n_test})")
        return "\n".join(lines)


def eta_metrics(outcomes, classes=None) -> EtaReport:
    """Compute ``eta_p``, ``eta_w`` and ``eta_total`` from rank-1 outcomes.

    Args:
        outcomes: iterable of :class:`Outcome` (or ``(truth, predicted)`` pairs).
        classes: the class set S. Defaults to the set of truth labels. Every
            class needs at least one outcome, since ``eta_w`` averages per-class
            accuracy over all of S.

    Raises:
        EvaluationError: no outcomes, a truth label outside S, or a class in S
            without any outcome.
    """
    outcomes = [Outcome(*o) for o in outcomes]
    if not outcomes:
        raise EvaluationError("no outcomes to evaluate")
    classes = sorted({o.truth for o in outcomes} if classes is None else set(classes))
    correct = {c: 0 for c in classes}
    total = {c: 0 for c in classes}
    for o in outcomes:
        if o.truth not in total:
            raise EvaluationError(f"truth label {o.truth!r} is not in the class set")
        total[o.truth] += 1
        correct[o.truth] += o.correct
    empty = [c for c in classes if total[c] == 0]
    if empty:
        raise EvaluationError(f"class {empty[0]!r} has no test outcomes")

    eta_p = sum(correct.values()) / len(outcomes)
    eta_w = sum(correct[c] / total[c] for c in classes) / len(classes)
    return EtaReport(
        eta_p=eta_p,
        eta_w=eta_w,
        eta_total=eta_p * eta_w,
        per_class=[ClassTally(c, correct[c], total[c]) for c in classes],
        n_test=len(outcomes),
    )


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class LooResult:
    accuracy: float
    outcomes: list = field(repr=False)

    @property
    def n_correct(self) -> int:
        return sum(o.correct for o in self.outcomes)


def leave_one_out(records, kind=MetricKind.CHI_SQUARE, config: IndexConfig = None,
                  workers: int = 1) -> LooResult:
    """Classify every record by its nearest neighbour among all the other records.

    ``records`` is a :class:`DescriptorIndex` or a sequence of records (built
    into an index with ``config``).
    """
    kind = MetricKind.parse(kind)
    if isinstance(records, DescriptorIndex):
        index = records
    else:
        index = DescriptorIndex(records, config or IndexConfig())
    if len(index) < 2:
        raise InvalidInputError(f"leave-one-out needs at least 2 records, got {len(index)}")

    def one(rec):
        return Outcome(rec.label, index.classify_nn(rec.flat, kind, exclude=(rec.id,)))

    outcomes = _map(one, index.records, workers)
    accuracy = sum(o.correct for o in outcomes) / len(outcomes)
    return LooResult(accuracy=accuracy, outcomes=outcomes)


def evaluate_patch_to_scan(index: DescriptorIndex, queries, kind=MetricKind.CHI_SQUARE,
                           classes=None, workers: int = 1) -> EtaReport:
    """Rank-1 retrieval of each ``(descriptor, truth_label)`` query, scored by :func:`eta_metrics`."""
    kind = MetricKind.parse(kind)
    queries = list(queries)

    def one(item):
        desc, truth = item
        return Outcome(str(truth), index.classify_nn(desc, kind))

    report = eta_metrics(_map(one, queries, workers), classes)
    report.config = index.config.to_dict()
    report.metric = str(kind)
    return report
