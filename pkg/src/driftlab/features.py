"""Meta-features summarizing how a learner's error rate moves over time.

An error trace is cut into tumbling windows of size n; each window
contributes its mean error rate, and consecutive means are differenced
into "gaps". A meta-sample is the vector of the L most recent gaps, which
consumes L+1 windows of history. The streaming view produces the same
vectors online, one per window boundary once enough history exists.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class WindowSpec:
    """Tumbling-window geometry: window size n and gap count L."""

    n: int
    L: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("window size n must be at least 1")
        if self.L < 1:
            raise ValueError("gap count L must be at least 1")

    @property
    def required_length(self) -> int:
        """Trace elements one meta-sample consumes: (L + 1) windows."""
        return (self.L + 1) * self.n

    def to_dict(self) -> dict:
        return {"n": self.n, "L": self.L}

    @classmethod
    def from_dict(cls, d: dict) -> "WindowSpec":
        return cls(n=int(d["n"]), L=int(d["L"]))


@dataclass
class MetaSample:
    """One gap vector plus bookkeeping about where it came from."""

    gaps: np.ndarray
    label: str | None = None
    window_size: int = 1
    source: str = ""
    offset: int = -1  # index of the last trace element covered, -1 if unknown


def window_means(trace: np.ndarray, n: int) -> np.ndarray:
    """Mean error rate of each full tumbling window of size n.

    A trailing partial window is discarded. The trace must contain at
    least two full windows, otherwise no gap could ever be formed.
    """
    if n < 1:
        raise ValueError("window size n must be at least 1")
    trace = np.asarray(trace, dtype=np.float64)
    if trace.ndim != 1:
        raise ValueError("trace must be one-dimensional")
    count = trace.shape[0] // n
    if count < 2:
        raise ValueError(
            f"trace of length {trace.shape[0]} is shorter than 2 windows of size {n}"
        )
    return trace[: count * n].reshape(count, n).mean(axis=1)


def gaps(means: np.ndarray) -> np.ndarray:
    """Differences of consecutive window means."""
    means = np.asarray(means, dtype=np.float64)
    if means.ndim != 1 or means.shape[0] < 2:
        raise ValueError("need at least two window means")
    return np.diff(means)


def make_meta_sample(
    trace: np.ndarray,
    spec: WindowSpec,
    label: str | None = None,
    absolute: bool = False,
    source: str = "",
    offset: int = -1,
) -> MetaSample:
    """Build one meta-sample from the most recent (L + 1) * n elements.

    With ``absolute`` set, gap signs are dropped; use this when the
    direction of the error-rate change should not matter downstream.
    """
    trace = np.asarray(trace, dtype=np.float64)
    need = spec.required_length
    if trace.shape[0] < need:
        raise ValueError(
            f"trace of length {trace.shape[0]} is shorter than the "
            f"{need} elements one meta-sample needs"
        )
    g = gaps(window_means(trace[-need:], spec.n))
    if absolute:
        g = np.abs(g)
    return MetaSample(
        gaps=g, label=label, window_size=spec.n, source=source, offset=offset
    )


class StreamingView:
    """Online meta-sample emitter over a live error feed.

    Push one error indicator at a time; once (L + 1) * n elements have
    accumulated, a meta-sample is emitted at every window boundary (every
    n-th push). Each emission equals the batch extraction over the same
    trailing elements, exactly.
    """

    def __init__(self, spec: WindowSpec, absolute: bool = False, source: str = ""):
        self.spec = spec
        self.absolute = absolute
        self.source = source
        self._buffer: deque[float] = deque(maxlen=spec.required_length)
        self._count = 0

    @property
    def count(self) -> int:
        """Total elements pushed since the last reset."""
        return self._count

    def window_means(self) -> np.ndarray:
        """Means over the buffered history; empty until two windows exist."""
        buf = np.array(self._buffer, dtype=np.float64)
        if buf.shape[0] < 2 * self.spec.n:
            return np.empty(0)
        return window_means(buf, self.spec.n)

    def reset(self) -> None:
        self._buffer.clear()
        self._count = 0

    def push(self, error: float) -> MetaSample | None:
        self._buffer.append(float(error))
        self._count += 1
        if self._count < self.spec.required_length or self._count % self.spec.n != 0:
            return None
        trace = np.array(self._buffer, dtype=np.float64)
        return make_meta_sample(
            trace,
            self.spec,
            absolute=self.absolute,
            source=self.source,
            offset=self._count - 1,
        )


# ---------------------------------------------------------------------------
# Corpus files
# ---------------------------------------------------------------------------


def write_corpus(samples: Sequence[MetaSample], path: str | Path) -> None:
    """Write meta-samples as CSV: gap_0..gap_{L-1},label."""
    samples = list(samples)
    if not samples:
        raise ValueError("refusing to write an empty corpus")
    L = samples[0].gaps.shape[0]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"gap_{i}" for i in range(L)] + ["label"])
        for s in samples:
            if s.gaps.shape[0] != L:
                raise ValueError("mixed gap lengths in one corpus")
            if s.label is None:
                raise ValueError("corpus rows need labels")
            writer.writerow([repr(float(g)) for g in s.gaps] + [s.label])


def read_corpus(path: str | Path) -> list[MetaSample]:
    samples: list[MetaSample] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[-1] != "label" or len(header) < 2:
            raise ValueError(f"{path}: expected gap_* columns and a label column")
        L = len(header) - 1
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != L + 1:
                raise ValueError(f"{path}:{row_no}: expected {L + 1} fields")
            g = np.array([float(v) for v in row[:-1]])
            samples.append(MetaSample(gaps=g, label=row[-1]))
    return samples
