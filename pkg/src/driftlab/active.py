"""Streaming drift detection with entropy-gated label queries.

The detection loop feeds an error trace through a sliding window view,
classifies every emitted meta-sample, raises typed alarms on non-normal
predictions, and requests a label whenever the prediction entropy
clears a threshold and budget remains. Answered queries fold back into
the detector's prototypes (optionally after a few gradient steps), so
the detector keeps improving while the stream runs. With the budget at
zero the loop degenerates to a frozen detector.

Oracles answer queries either synchronously (ground truth from known
drift schedules) or not at all, in which case answers arrive through
the shared queue, typically from the label service, and unanswered
queries expire after a configurable number of emissions.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .features import StreamingView, WindowSpec
from .nets import Adam
from .proto import MetaDetector
from .streams import DriftKind, DriftSpec

log = logging.getLogger(__name__)

NORMAL = DriftKind.NORMAL.value

PROTOTYPE_MEAN = "prototype-mean"
PROTOTYPE_MEAN_PLUS_SGD = "prototype-mean-plus-sgd"
UPDATE_MODES = (PROTOTYPE_MEAN, PROTOTYPE_MEAN_PLUS_SGD)

PENDING = "pending"
ANSWERED = "answered"
EXPIRED = "expired"


def entropy(p: Sequence[float]) -> float:
    """Shannon entropy in nats, with 0 * ln 0 := 0."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("entropy expects a probability vector")
    if np.any(p < 0.0) or abs(float(p.sum()) - 1.0) > 1e-8:
        raise ValueError("entropy expects a normalized probability vector")
    nz = p[p > 0.0]
    return float(-(nz * np.log(nz)).sum())


def should_query(probabilities: Sequence[float], threshold: float,
                 spent: int, budget: int) -> bool:
    """Query iff the prediction is uncertain enough and budget remains."""
    return spent < budget and entropy(probabilities) >= threshold


@dataclass
class ActiveConfig:
    """Knobs for the query-and-update side of the loop.

    ``entropy_threshold`` of None resolves to half the entropy range,
    0.5 * ln K, once the detector (and so K) is known.
    """

    entropy_threshold: float | None = None
    label_budget: int = 20
    update_mode: str = PROTOTYPE_MEAN
    sgd_steps: int = 1
    sgd_lr: float = 1e-3
    expire_after: int = 10
    alarm_classes: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.label_budget < 0:
            raise ValueError("label_budget must be >= 0")
        if self.update_mode not in UPDATE_MODES:
            raise ValueError(f"update_mode must be one of {UPDATE_MODES}")
        if self.sgd_steps < 0:
            raise ValueError("sgd_steps must be >= 0")
        if self.expire_after < 1:
            raise ValueError("expire_after must be >= 1")

    def resolved_threshold(self, n_classes: int) -> float:
        top = math.log(n_classes)
        theta = 0.5 * top if self.entropy_threshold is None else self.entropy_threshold
        if not 0.0 <= theta <= top + 1e-12:
            raise ValueError(f"entropy_threshold must lie in [0, ln {n_classes}]")
        return theta


@dataclass
class LabelQuery:
    """One request for a human (or oracle) drift-type label."""

    id: int
    gaps: np.ndarray
    window_means: np.ndarray
    probabilities: np.ndarray
    predicted: str
    entropy: float
    issued_at: int
    issued_emission: int
    status: str = PENDING
    answer: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "gaps": [float(g) for g in self.gaps],
            "window_means": [float(m) for m in self.window_means],
            "probabilities": [float(p) for p in self.probabilities],
            "predicted": self.predicted,
            "entropy": self.entropy,
            "issued_at": self.issued_at,
            "issued_emission": self.issued_emission,
            "status": self.status,
            "answer": self.answer,
        }


class UnknownQueryError(KeyError):
    """No query with that id."""


class QueryStateError(RuntimeError):
    """Query exists but is not pending."""


class LabelQueue:
    """Thread-safe mailbox between the detection loop and label writers.

    The loop is the only party that creates, expires, and consumes
    queries; HTTP handlers (or a synchronous oracle) only transition
    pending queries to answered. All access is serialized by one lock.
    """

    def __init__(self, classes: Sequence[str]):
        self._lock = threading.Lock()
        self._classes = tuple(classes)
        self._queries: dict[int, LabelQuery] = {}
        self._order: list[int] = []
        self._unapplied: list[int] = []
        self._next_id = 1

    @property
    def classes(self) -> tuple[str, ...]:
        return self._classes

    def create(self, **fields) -> LabelQuery:
        with self._lock:
            query = LabelQuery(id=self._next_id, **fields)
            self._next_id += 1
            self._queries[query.id] = query
            self._order.append(query.id)
            return query

    def get(self, query_id: int) -> LabelQuery:
        with self._lock:
            try:
                return self._queries[query_id]
            except KeyError:
                raise UnknownQueryError(query_id) from None

    def all(self) -> list[LabelQuery]:
        with self._lock:
            return [self._queries[i] for i in self._order]

    def pending(self) -> list[LabelQuery]:
        with self._lock:
            return [self._queries[i] for i in self._order
                    if self._queries[i].status == PENDING]

    def answer(self, query_id: int, label: str) -> LabelQuery:
        """Record a label; raises on unknown id, bad class, or dead query."""
        if label not in self._classes:
            raise ValueError(f"label {label!r} not one of {self._classes}")
        with self._lock:
            query = self._queries.get(query_id)
            if query is None:
                raise UnknownQueryError(query_id)
            if query.status != PENDING:
                raise QueryStateError(f"query {query_id} is {query.status}")
            query.status = ANSWERED
            query.answer = label
            self._unapplied.append(query_id)
            return query

    def expire_older_than(self, emission: int, horizon: int) -> int:
        """Expire pending queries issued ``horizon`` or more emissions ago."""
        expired = 0
        with self._lock:
            for i in self._order:
                q = self._queries[i]
                if q.status == PENDING and emission - q.issued_emission >= horizon:
                    q.status = EXPIRED
                    expired += 1
        return expired

    def take_unapplied(self) -> list[LabelQuery]:
        """Answered-but-not-yet-applied queries, in answer order."""
        with self._lock:
            out = [self._queries[i] for i in self._unapplied]
            self._unapplied.clear()
            return out


class GroundTruthOracle:
    """Labels queries from the known drift schedule of a synthetic stream.

    A query's meta-sample covers the trace elements
    [issued_at - (L+1)*n, issued_at); the label is the latest drift
    whose onset span intersects that extent, or normal when none does.
    """

    def __init__(self, drifts: Iterable[DriftSpec], spec: WindowSpec):
        self.drifts = sorted(drifts, key=lambda d: d.position)
        self.spec = spec

    def label_for(self, query: LabelQuery) -> str:
        lo = query.issued_at - self.spec.required_length
        hi = query.issued_at - 1
        label = NORMAL
        for d in self.drifts:
            if d.kind is DriftKind.NORMAL:
                continue
            onset_end = d.position + max(d.width, 1) - 1
            if d.position <= hi and onset_end >= lo:
                label = d.kind.value
        return label


@dataclass
class Alarm:
    """One non-normal prediction."""

    position: int
    kind: str
    entropy: float
    emission: int

    def to_row(self) -> tuple[int, str, str]:
        return (self.position, self.kind, repr(self.entropy))


@dataclass
class DriftEvent:
    """A coalesced run of consecutive same-type alarms."""

    position: int
    kind: str
    alarms: int = 1


@dataclass
class ActiveResult:
    alarms: list[Alarm]
    events: list[DriftEvent]
    queries: list[LabelQuery]
    detector: MetaDetector
    emissions: int
    position: int


class DetectionLoop:
    """Single-owner streaming loop around one meta-detector.

    Per emission: expired queries are retired, freshly answered labels
    are applied, the new meta-sample is classified, alarms and queries
    are raised. ``reset_hook`` fires on every alarm, which is where a
    prequential caller resets its base learner; consecutive same-type
    alarms also coalesce into ``events`` so that one drift crossing the
    view counts once when scoring detections.
    """

    def __init__(self, detector: MetaDetector, cfg: ActiveConfig,
                 oracle: GroundTruthOracle | None = None,
                 reset_hook: Callable[[Alarm], None] | None = None,
                 queue: LabelQueue | None = None):
        self.detector = detector
        self.cfg = cfg
        self.oracle = oracle
        self.reset_hook = reset_hook
        self.queue = queue if queue is not None else LabelQueue(detector.classes)
        self.view = StreamingView(detector.spec, absolute=detector.absolute)
        self.threshold = cfg.resolved_threshold(detector.n_classes)
        self.alarm_classes = (set(cfg.alarm_classes) if cfg.alarm_classes
                              else set(detector.classes) - {NORMAL})
        self._optimizer: Adam | None = None
        self.position = 0
        self.emissions = 0
        self.spent = 0
        self.alarms: list[Alarm] = []
        self.events: list[DriftEvent] = []
        self.applied: list[int] = []
        self.last_prediction: str | None = None
        self.last_probabilities: np.ndarray | None = None
        # Alarms of the same type within this many elements coalesce.
        self._event_span = detector.spec.required_length

    def push(self, error: int) -> Alarm | None:
        """Consume one error-trace element; returns an alarm if one fired."""
        self.position += 1
        sample = self.view.push(error)
        if sample is None:
            return None
        self.emissions += 1
        self.queue.expire_older_than(self.emissions, self.cfg.expire_after)
        self._apply_answers()

        predicted, probs = self.detector.predict(sample.gaps)
        h = entropy(probs)
        self.last_prediction = predicted
        self.last_probabilities = probs

        alarm: Alarm | None = None
        if predicted in self.alarm_classes:
            alarm = Alarm(position=self.position, kind=predicted,
                          entropy=h, emission=self.emissions)
            self._record_alarm(alarm)

        if should_query(probs, self.threshold, self.spent, self.cfg.label_budget):
            query = self.queue.create(
                gaps=np.array(sample.gaps, dtype=np.float64),
                window_means=np.array(self.view.window_means(), dtype=np.float64),
                probabilities=np.array(probs, dtype=np.float64),
                predicted=predicted,
                entropy=h,
                issued_at=self.position,
                issued_emission=self.emissions,
            )
            self.spent += 1
            if self.oracle is not None:
                try:
                    self.queue.answer(query.id, self.oracle.label_for(query))
                except Exception:
                    log.exception("oracle failed on query %d; left pending",
                                  query.id)
        return alarm

    def _record_alarm(self, alarm: Alarm) -> None:
        self.alarms.append(alarm)
        if self.reset_hook is not None:
            self.reset_hook(alarm)
        previous = self.alarms[-2] if len(self.alarms) > 1 else None
        same_run = (previous is not None
                    and previous.kind == alarm.kind
                    and alarm.position - previous.position <= self._event_span)
        if same_run:
            self.events[-1].alarms += 1
        else:
            self.events.append(DriftEvent(position=alarm.position,
                                          kind=alarm.kind))

    def _apply_answers(self) -> None:
        for query in self.queue.take_unapplied():
            if self.cfg.update_mode == PROTOTYPE_MEAN_PLUS_SGD:
                if self._optimizer is None:
                    self._optimizer = Adam(self.detector.net.params(),
                                           lr=self.cfg.sgd_lr)
                for _ in range(self.cfg.sgd_steps):
                    self.detector.sgd_label_step(query.answer, query.gaps,
                                                 self._optimizer)
            self.detector.apply_label(query.answer, query.gaps)
            self.applied.append(query.id)

    def finish(self) -> ActiveResult:
        """Apply any straggler answers and package the run."""
        self._apply_answers()
        return ActiveResult(alarms=self.alarms, events=self.events,
                            queries=self.queue.all(), detector=self.detector,
                            emissions=self.emissions, position=self.position)

    def status(self) -> dict:
        """Snapshot for the service's status endpoint."""
        means = self.view.window_means()
        return {
            "position": self.position,
            "emissions": self.emissions,
            "alarms": len(self.alarms),
            "events": len(self.events),
            "budget": self.cfg.label_budget,
            "budget_spent": self.spent,
            "budget_remaining": self.cfg.label_budget - self.spent,
            "expire_after": self.cfg.expire_after,
            "pending_queries": len(self.queue.pending()),
            "class_counts": {c: int(m) for c, m in
                             zip(self.detector.classes, self.detector.counts)},
            "window_means": [float(m) for m in means],
            "last_prediction": self.last_prediction,
            "last_probabilities": (
                [float(p) for p in self.last_probabilities]
                if self.last_probabilities is not None else None),
        }


def run_active_detection(trace: Iterable[int], detector: MetaDetector,
                         cfg: ActiveConfig | None = None,
                         oracle: GroundTruthOracle | None = None,
                         reset_hook: Callable[[Alarm], None] | None = None,
                         ) -> ActiveResult:
    """Run the detection loop over a complete error trace."""
    loop = DetectionLoop(detector, cfg or ActiveConfig(), oracle=oracle,
                         reset_hook=reset_hook)
    for value in trace:
        loop.push(int(value))
    return loop.finish()


def write_query_log(queries: Sequence[LabelQuery], path: str | Path) -> None:
    """One JSON object per line, in issue order."""
    with open(path, "w") as fh:
        for q in queries:
            fh.write(json.dumps(q.to_dict(), sort_keys=True) + "\n")


def read_query_log(path: str | Path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_alarm_csv(alarms: Sequence[Alarm], path: str | Path) -> None:
    """Alarm log: stream position, drift type, prediction entropy."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("timestamp", "type", "entropy"))
        for alarm in alarms:
            writer.writerow(alarm.to_row())
