"""Incremental Gaussian naive Bayes and the prequential (test-then-train) loop.

The learner keeps one-pass moment estimates per class (Welford update), so
it never stores samples and can be reset cheaply when a drift detector
fires. Densities are evaluated in log space with a variance floor to keep
degenerate features finite.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from .streams import Sample

# floor = VAR_SMOOTHING * (largest per-feature variance seen overall);
# the absolute fallback keeps the floor positive before any spread exists
VAR_SMOOTHING = 1e-9
_ABS_FLOOR = 1e-12


class _Moments:
    """Single-pass mean and M2 accumulator for one class."""

    __slots__ = ("count", "mean", "m2")

    def __init__(self, dim: int):
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)

    def update(self, x: np.ndarray) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def variance(self) -> np.ndarray:
        # population variance; zero until two points exist
        if self.count == 0:
            return np.zeros_like(self.m2)
        return self.m2 / self.count


class GaussianNaiveBayes:
    """Gaussian naive Bayes fit one sample at a time."""

    def __init__(self):
        self._dim: int | None = None
        self._by_class: dict[int, _Moments] = {}
        self._classes: list[int] = []  # first-seen order
        self._overall: _Moments | None = None

    @property
    def classes(self) -> tuple[int, ...]:
        return tuple(self._classes)

    @property
    def n_seen(self) -> int:
        return 0 if self._overall is None else self._overall.count

    def reset(self) -> None:
        self._dim = None
        self._by_class = {}
        self._classes = []
        self._overall = None

    def _check_dim(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("expected a single feature vector")
        if self._dim is None:
            self._dim = x.shape[0]
            self._overall = _Moments(self._dim)
        elif x.shape[0] != self._dim:
            raise ValueError(f"feature dim changed: {x.shape[0]} != {self._dim}")
        return x

    def partial_fit(self, x: np.ndarray, y: int) -> None:
        x = self._check_dim(x)
        y = int(y)
        if y not in self._by_class:
            self._by_class[y] = _Moments(self._dim)
            self._classes.append(y)
        self._by_class[y].update(x)
        self._overall.update(x)

    def _floor(self) -> float:
        top = float(self._overall.variance().max()) if self._overall else 0.0
        return max(VAR_SMOOTHING * top, _ABS_FLOOR)

    def class_stats(self, y: int) -> tuple[int, np.ndarray, np.ndarray]:
        """Count, mean, and floored variance for one class."""
        m = self._by_class[int(y)]
        return m.count, m.mean.copy(), np.maximum(m.variance(), self._floor())

    def predict_log_proba(self, x: np.ndarray) -> np.ndarray:
        if not self._classes:
            raise ValueError("no classes seen yet")
        x = self._check_dim(x)
        floor = self._floor()
        total = self._overall.count
        logs = np.empty(len(self._classes))
        for i, c in enumerate(self._classes):
            m = self._by_class[c]
            var = np.maximum(m.variance(), floor)
            ll = -0.5 * np.sum(np.log(2.0 * np.pi * var) + (x - m.mean) ** 2 / var)
            logs[i] = np.log(m.count / total) + ll
        top = logs.max()
        logs -= top + np.log(np.exp(logs - top).sum())
        return logs

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.predict_log_proba(x))

    def predict(self, x: np.ndarray) -> int:
        logs = self.predict_log_proba(x)
        return self._classes[int(np.argmax(logs))]


PrequentialHook = Callable[[int, Sample, int], None]


def prequential_run(
    stream: Iterable[Sample],
    learner: GaussianNaiveBayes | None = None,
    hook: PrequentialHook | None = None,
) -> tuple[np.ndarray, float]:
    """Run test-then-train over a stream and return (error trace, accuracy).

    Each sample is predicted before it is learned; e_t = 1 on a wrong
    prediction. A sample arriving while the learner is empty (the first
    one, or the first after a reset) trains without scoring and counts as
    error 0. The hook runs between the prediction and the training step and
    may mutate or reset the learner; that is how detector-driven resets and
    warning-buffer retraining plug in. Accuracy is exactly one minus the
    trace mean.
    """
    learner = learner if learner is not None else GaussianNaiveBayes()
    errors: list[int] = []
    for t, sample in enumerate(stream):
        if learner.classes:
            e = int(learner.predict(sample.features) != sample.label)
        else:
            e = 0
        errors.append(e)
        if hook is not None:
            hook(t, sample, e)
        learner.partial_fit(sample.features, sample.label)
    trace = np.array(errors, dtype=np.int8)
    if trace.size == 0:
        raise ValueError("empty stream")
    return trace, float(1.0 - trace.mean())
