"""Synthetic data streams with injected concept drift.

Five stream families (SEA, rotating hyperplane, AGRAWAL, RBF, random tree)
plus a Bernoulli error-trace simulator. Each generator owns a concept
parameterization; drift is injected by switching, mixing, or interpolating
concepts at configured positions. All randomness flows through a single
seeded generator per stream, so equal seeds give equal output.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

GENERATOR_NAMES = ("sea", "hyperplane", "agrawal", "rbf", "rtg")


class DriftKind(str, Enum):
    SUDDEN = "sudden"
    GRADUAL = "gradual"
    INCREMENTAL = "incremental"
    NORMAL = "normal"

    def __str__(self) -> str:  # plain value in logs and CSV
        return self.value


DRIFT_KINDS = tuple(k.value for k in DriftKind)


@dataclass(frozen=True)
class DriftSpec:
    """Where and how a concept changes inside one stream or trace.

    ``position`` is the index of the first element affected by the change.
    ``width`` is the length of the transition region; it must be 0 for
    sudden and normal, and positive for gradual and incremental.
    ``magnitude`` is a dimensionless severity in [0, 1]; normal requires 0.
    """

    kind: DriftKind
    position: int = 0
    width: int = 0
    magnitude: float = 0.0

    def __post_init__(self):
        kind = DriftKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not 0.0 <= self.magnitude <= 1.0:
            raise ValueError(f"magnitude must be in [0, 1], got {self.magnitude}")
        if kind in (DriftKind.SUDDEN, DriftKind.NORMAL) and self.width != 0:
            raise ValueError(f"{kind.value} drift takes width 0, got {self.width}")
        if kind in (DriftKind.GRADUAL, DriftKind.INCREMENTAL) and self.width <= 0:
            raise ValueError(f"{kind.value} drift needs a positive width")
        if kind is DriftKind.NORMAL and self.magnitude != 0.0:
            raise ValueError("normal (no drift) requires magnitude 0")
        if self.position < 0:
            raise ValueError("position must be non-negative")

    def check_fits(self, length: int) -> None:
        if self.kind is DriftKind.NORMAL:
            return
        if self.position + self.width >= length:
            raise ValueError(
                f"drift region [{self.position}, {self.position + self.width}] "
                f"does not fit a stream of length {length}"
            )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "position": self.position,
            "width": self.width,
            "magnitude": self.magnitude,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DriftSpec":
        return cls(
            kind=DriftKind(d["kind"]),
            position=int(d.get("position", 0)),
            width=int(d.get("width", 0)),
            magnitude=float(d.get("magnitude", 0.0)),
        )


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    label: int


@dataclass(frozen=True)
class StreamConfig:
    generator: str
    length: int
    drift: DriftSpec
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.generator not in GENERATOR_NAMES:
            raise ValueError(
                f"unknown generator {self.generator!r}; choose from {GENERATOR_NAMES}"
            )
        if self.length <= 0:
            raise ValueError("length must be positive")
        if not 0.0 <= self.noise < 1.0:
            raise ValueError("noise must be in [0, 1)")


# ---------------------------------------------------------------------------
# Concept families
# ---------------------------------------------------------------------------


class _Family:
    """One stream family: concept construction, drifting, and sampling."""

    name: str = ""
    # families that cannot interpolate parameters fall back to probabilistic
    # mixing when asked for incremental drift
    can_interpolate: bool = True

    def initial_concept(self, rng: np.random.Generator):
        raise NotImplementedError

    def drifted_concept(self, concept, magnitude: float, rng: np.random.Generator):
        raise NotImplementedError

    def interpolate(self, old, new, alpha: float):
        raise NotImplementedError

    def sample(self, concept, rng: np.random.Generator) -> tuple[np.ndarray, int]:
        raise NotImplementedError


class _Sea(_Family):
    """Three uniform features on [0, 10]; positive iff f0 + f1 <= threshold.

    The third feature never enters the concept. Severity moves the
    threshold away from its current value by up to half the feature range.
    """

    name = "sea"
    THRESHOLDS = (8.0, 9.0, 7.0, 9.5)

    def initial_concept(self, rng):
        return float(self.THRESHOLDS[rng.integers(len(self.THRESHOLDS))])

    def drifted_concept(self, concept, magnitude, rng):
        direction = 1.0 if rng.random() < 0.5 else -1.0
        shifted = concept + direction * magnitude * 5.0
        return float(min(max(shifted, 3.0), 17.0))

    def interpolate(self, old, new, alpha):
        return old + alpha * (new - old)

    def sample(self, concept, rng):
        x = rng.uniform(0.0, 10.0, size=3)
        y = int(x[0] + x[1] <= concept)
        return x, y


class _Hyperplane(_Family):
    """Rotating hyperplane in 10 dimensions.

    Features are uniform on [0, 1]; the label is the side of the hyperplane
    sum(w * x) >= 0.5 * sum(w). Severity scales a random perturbation added
    to the weight vector.
    """

    name = "hyperplane"
    DIM = 10

    def initial_concept(self, rng):
        w = rng.uniform(0.0, 1.0, size=self.DIM)
        return w / w.sum()

    def drifted_concept(self, concept, magnitude, rng):
        bump = rng.uniform(-1.0, 1.0, size=self.DIM) * magnitude
        w = np.abs(concept + bump)
        total = w.sum()
        if total == 0.0:
            w = np.full(self.DIM, 1.0)
            total = w.sum()
        return w / total

    def interpolate(self, old, new, alpha):
        w = old + alpha * (new - old)
        return w / w.sum()

    def sample(self, concept, rng):
        x = rng.uniform(0.0, 1.0, size=self.DIM)
        y = int(float(concept @ x) >= 0.5 * float(concept.sum()))
        return x, y


class _Agrawal(_Family):
    """Loan applicant records labeled by one of three published predicates.

    Nine attributes (salary, commission, age, education level, car make,
    zipcode, house value, years owned, loan amount). The concept is the
    index of the active predicate; drifting picks a different one, so the
    severity knob is ignored here. Incremental drift falls back to mixing
    because predicates have no intermediate form.
    """

    name = "agrawal"
    can_interpolate = False
    N_FUNCTIONS = 3

    def initial_concept(self, rng):
        return int(rng.integers(self.N_FUNCTIONS))

    def drifted_concept(self, concept, magnitude, rng):
        choices = [i for i in range(self.N_FUNCTIONS) if i != concept]
        return int(choices[rng.integers(len(choices))])

    def sample(self, concept, rng):
        salary = rng.uniform(20_000.0, 150_000.0)
        commission = 0.0 if salary >= 75_000.0 else rng.uniform(10_000.0, 75_000.0)
        age = float(rng.integers(20, 81))
        elevel = float(rng.integers(0, 5))
        car = float(rng.integers(1, 21))
        zipcode = float(rng.integers(0, 9))
        hvalue = (9.0 - zipcode) * 30_000.0 * rng.uniform(0.5, 1.5)
        hyears = float(rng.integers(1, 31))
        loan = rng.uniform(0.0, 500_000.0)
        x = np.array(
            [salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan]
        )
        y = int(self._group_a(concept, salary, age, elevel))
        return x, y

    @staticmethod
    def _group_a(fn: int, salary: float, age: float, elevel: float) -> bool:
        if fn == 0:
            return age < 40.0 or age >= 60.0
        if fn == 1:
            if age < 40.0:
                return 50_000.0 <= salary <= 100_000.0
            if age < 60.0:
                return 75_000.0 <= salary <= 125_000.0
            return 25_000.0 <= salary <= 75_000.0
        if fn == 2:
            if age < 40.0:
                return elevel in (0.0, 1.0)
            if age < 60.0:
                return elevel in (1.0, 2.0, 3.0)
            return elevel in (2.0, 3.0, 4.0)
        raise ValueError(f"no such predicate: {fn}")


class _Rbf(_Family):
    """Mixture of radial basis centroids with fixed class assignments.

    Each sample picks a centroid (weighted), then offsets it by a Gaussian
    radius along a random direction. Severity scales how far centroids move
    to form the drifted concept; interpolation slides them linearly.
    """

    name = "rbf"
    DIM = 10
    N_CENTROIDS = 50

    def initial_concept(self, rng):
        centers = rng.uniform(0.0, 1.0, size=(self.N_CENTROIDS, self.DIM))
        classes = rng.integers(0, 2, size=self.N_CENTROIDS)
        if classes.max() == classes.min():  # force both classes to exist
            classes[0] = 1 - classes[0]
        weights = rng.uniform(0.0, 1.0, size=self.N_CENTROIDS)
        stds = rng.uniform(0.02, 0.12, size=self.N_CENTROIDS)
        return {
            "centers": centers,
            "classes": classes,
            "weights": weights / weights.sum(),
            "stds": stds,
        }

    def drifted_concept(self, concept, magnitude, rng):
        shift = rng.uniform(-0.5, 0.5, size=concept["centers"].shape) * magnitude
        centers = np.clip(concept["centers"] + shift, 0.0, 1.0)
        return {**concept, "centers": centers}

    def interpolate(self, old, new, alpha):
        centers = old["centers"] + alpha * (new["centers"] - old["centers"])
        return {**old, "centers": centers}

    def sample(self, concept, rng):
        idx = rng.choice(self.N_CENTROIDS, p=concept["weights"])
        direction = rng.normal(size=self.DIM)
        norm = float(np.linalg.norm(direction))
        if norm == 0.0:
            direction = np.ones(self.DIM)
            norm = float(np.linalg.norm(direction))
        radius = rng.normal(0.0, concept["stds"][idx])
        x = concept["centers"][idx] + direction / norm * radius
        return x, int(concept["classes"][idx])


class _RandomTree(_Family):
    """Full binary decision tree of depth 5 over 10 uniform features.

    The concept is the tree; drifting keeps the structure and flips each
    leaf label with probability equal to the severity (at least one leaf
    always flips so the concept actually changes). No intermediate trees
    exist, so incremental drift falls back to mixing.
    """

    name = "rtg"
    DIM = 10
    DEPTH = 5
    can_interpolate = False

    def initial_concept(self, rng):
        n_internal = 2**self.DEPTH - 1
        features = rng.integers(0, self.DIM, size=n_internal)
        thresholds = rng.uniform(0.2, 0.8, size=n_internal)
        leaves = rng.integers(0, 2, size=2**self.DEPTH)
        if leaves.max() == leaves.min():
            leaves[0] = 1 - leaves[0]
        return {"features": features, "thresholds": thresholds, "leaves": leaves}

    def drifted_concept(self, concept, magnitude, rng):
        leaves = concept["leaves"].copy()
        flip = rng.random(leaves.shape[0]) < magnitude
        if not flip.any():
            flip[rng.integers(leaves.shape[0])] = True
        leaves[flip] = 1 - leaves[flip]
        return {**concept, "leaves": leaves}

    def sample(self, concept, rng):
        x = rng.uniform(0.0, 1.0, size=self.DIM)
        node = 0
        for _ in range(self.DEPTH):
            feat = concept["features"][node]
            right = x[feat] > concept["thresholds"][node]
            node = 2 * node + (2 if right else 1)
        leaf = node - (2**self.DEPTH - 1)
        return x, int(concept["leaves"][leaf])


_FAMILIES: dict[str, _Family] = {
    f.name: f for f in (_Sea(), _Hyperplane(), _Agrawal(), _Rbf(), _RandomTree())
}


# ---------------------------------------------------------------------------
# Stream generation
# ---------------------------------------------------------------------------


def generate_stream(config: StreamConfig) -> list[Sample]:
    """Generate one labeled stream with a single (possibly null) drift."""
    drifts = [] if config.drift.kind is DriftKind.NORMAL else [config.drift]
    return generate_drifting_stream(
        config.generator, config.length, drifts, seed=config.seed, noise=config.noise
    )


def generate_drifting_stream(
    generator: str,
    length: int,
    drifts: Sequence[DriftSpec],
    seed: int = 0,
    noise: float = 0.0,
) -> list[Sample]:
    """Generate a stream with any number of non-overlapping drifts.

    Drifts must be sorted by position and in-bounds. Sudden drift switches
    concepts at the position; gradual drift samples from old or new with a
    linearly ramping probability across the width; incremental drift slides
    concept parameters across the width (families without parametric
    interpolation mix instead).
    """
    if generator not in _FAMILIES:
        raise ValueError(f"unknown generator {generator!r}")
    family = _FAMILIES[generator]
    drifts = sorted(drifts, key=lambda d: d.position)
    for d in drifts:
        if d.kind is DriftKind.NORMAL:
            raise ValueError("normal drift entries have no place in a drift list")
        d.check_fits(length)
    for a, b in zip(drifts, drifts[1:]):
        if a.position + a.width >= b.position:
            raise ValueError("drift regions must not overlap")

    rng = np.random.default_rng(seed)
    concepts = [family.initial_concept(rng)]
    for d in drifts:
        concepts.append(family.drifted_concept(concepts[-1], d.magnitude, rng))

    samples: list[Sample] = []
    segment = 0  # index of the active pre-drift concept
    for t in range(length):
        while segment < len(drifts) and t >= drifts[segment].position + drifts[segment].width:
            segment += 1
        old, cur_drift = concepts[segment], None
        if segment < len(drifts) and t >= drifts[segment].position:
            cur_drift = drifts[segment]
        if cur_drift is None:
            concept = old
        else:
            new = concepts[segment + 1]
            frac = (t - cur_drift.position + 1) / (cur_drift.width + 1)
            if cur_drift.kind is DriftKind.SUDDEN:
                concept = new
            elif cur_drift.kind is DriftKind.GRADUAL or not family.can_interpolate:
                concept = new if rng.random() < frac else old
            else:
                concept = family.interpolate(old, new, frac)
        x, y = family.sample(concept, rng)
        if noise > 0.0 and rng.random() < noise:
            y = 1 - y
        samples.append(Sample(features=x, label=y))
    return samples


# ---------------------------------------------------------------------------
# Error-trace simulation
# ---------------------------------------------------------------------------


def simulate_error_trace(
    kind: DriftKind | str,
    length: int,
    base_error: float,
    drift_error: float | None = None,
    position: int = 0,
    width: int = 0,
    seed: int = 0,
    block: int | None = None,
) -> np.ndarray:
    """Simulate a 0/1 error trace with the requested drift signature.

    The trace is Bernoulli with a time-varying rate: flat at ``base_error``
    (normal), stepping to ``drift_error`` at ``position`` (sudden), ramping
    linearly across the width (incremental), or alternating between the two
    rates in blocks whose choice probability ramps across the width
    (gradual). Block length defaults to a tenth of the width so the
    alternation is visible at window scale. Pass ``base_error`` above
    ``drift_error`` to simulate an error rate that falls instead of rises.
    """
    kind = DriftKind(kind)
    if length <= 0:
        raise ValueError("length must be positive")
    if not 0.0 <= base_error <= 1.0:
        raise ValueError("base_error must be a probability")
    if kind is not DriftKind.NORMAL:
        if drift_error is None:
            raise ValueError(f"{kind.value} drift needs a drift_error rate")
        if not 0.0 <= drift_error <= 1.0:
            raise ValueError("drift_error must be a probability")
        if not 0 <= position < length:
            raise ValueError("position must lie inside the trace")
    spec = DriftSpec(kind=kind, position=position, width=width)  # validates width
    if kind is not DriftKind.NORMAL:
        spec.check_fits(length)

    rng = np.random.default_rng(seed)
    rates = np.full(length, base_error, dtype=np.float64)
    if kind is DriftKind.SUDDEN:
        rates[position:] = drift_error
    elif kind is DriftKind.INCREMENTAL:
        ramp = np.arange(1, width + 1) / (width + 1)
        rates[position : position + width] = base_error + ramp * (drift_error - base_error)
        rates[position + width :] = drift_error
    elif kind is DriftKind.GRADUAL:
        block_len = block if block is not None else max(1, width // 10)
        if block_len <= 0:
            raise ValueError("block length must be positive")
        t = position
        while t < position + width:
            end = min(t + block_len, position + width)
            take_new = rng.random() < (t - position + 1) / (width + 1)
            rates[t:end] = drift_error if take_new else base_error
            t = end
        rates[position + width :] = drift_error
    return (rng.random(length) < rates).astype(np.int8)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

_META_PREFIX = "# meta: "


def write_stream_csv(samples: Sequence[Sample], path: str | Path, meta: dict | None = None) -> None:
    """Write a stream as CSV with header f0..f{D-1},label.

    Ground truth (drift positions and the like) rides in an optional
    ``# meta:`` JSON comment line above the header.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("refusing to write an empty stream")
    dim = samples[0].features.shape[0]
    with open(path, "w") as fh:
        if meta is not None:
            fh.write(_META_PREFIX + json.dumps(meta, sort_keys=True) + "\n")
        fh.write(",".join(f"f{i}" for i in range(dim)) + ",label\n")
        for s in samples:
            fh.write(",".join(repr(float(v)) for v in s.features) + f",{s.label}\n")


def read_stream_csv(path: str | Path) -> tuple[list[Sample], dict | None]:
    with open(path) as fh:
        first = fh.readline()
        meta = None
        if first.startswith(_META_PREFIX):
            meta = json.loads(first[len(_META_PREFIX):])
            first = fh.readline()
        header = first.strip().split(",")
        if not header or header[-1] != "label":
            raise ValueError(f"{path}: expected a trailing 'label' column")
        dim = len(header) - 1
        samples = []
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != dim + 1:
                raise ValueError(f"{path}:{line_no}: expected {dim + 1} fields")
            x = np.array([float(v) for v in parts[:-1]])
            samples.append(Sample(features=x, label=int(parts[-1])))
    return samples, meta


def write_trace(trace: np.ndarray, path: str | Path, meta: dict | None = None) -> None:
    """Write an error trace, one 0/1 per line, optional # meta: JSON header."""
    trace = np.asarray(trace)
    if trace.ndim != 1:
        raise ValueError("trace must be one-dimensional")
    with open(path, "w") as fh:
        if meta is not None:
            fh.write(_META_PREFIX + json.dumps(meta, sort_keys=True) + "\n")
        for v in trace:
            fh.write(f"{int(v)}\n")


def read_trace(path: str | Path) -> tuple[np.ndarray, dict | None]:
    meta = None
    values: list[int] = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith(_META_PREFIX.strip()) and meta is None:
                    meta = json.loads(line.split(":", 1)[1])
                continue
            if line not in ("0", "1"):
                raise ValueError(f"{path}:{line_no}: traces hold only 0 or 1")
            values.append(int(line))
    return np.array(values, dtype=np.int8), meta
