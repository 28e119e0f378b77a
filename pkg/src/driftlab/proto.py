"""Prototypical meta-detector over drift signatures.

A small embedding network maps each vector of window-mean gaps to a
point in R^M. Every drift class is represented by a prototype, the mean
embedding of a handful of support examples, and classification is a
softmax over negative cosine distances to the prototypes. Training is
episodic: per episode we sample a few support and query examples per
class, rebuild prototypes from the supports, and take one Adam step on
the query negative log-likelihood. All gradients are written out by
hand against the cosine-softmax head and pushed through the network's
own backward pass.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .features import MetaSample, WindowSpec
from .nets import Adam, EmbeddingNet, FCN, RNN, make_net

log = logging.getLogger(__name__)

# Canonical display/prototype order; labels outside this list sort last.
CLASS_ORDER = ("normal", "sudden", "gradual", "incremental")

CHECKPOINT_FORMAT = "driftlab-meta-detector"
CHECKPOINT_VERSION = 1


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stable under large magnitudes."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cosine_distances(u: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Pairwise 1 - cosine similarity; zero-norm rows give distance 1."""
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    c = np.atleast_2d(np.asarray(c, dtype=np.float64))
    cos, _, _, _ = _cosine_forward(u, c)
    return 1.0 - cos


def _cosine_forward(u: np.ndarray, c: np.ndarray):
    """Cosine similarity matrix plus the reciprocals the backward pass needs.

    Rows or prototypes with zero norm are treated as orthogonal to
    everything (similarity 0, so distance 1) and contribute nothing to
    the gradient. Returns (cos, inv_a, inv_b, n_degenerate).
    """
    a = np.linalg.norm(u, axis=1)
    b = np.linalg.norm(c, axis=1)
    inv_a = np.where(a > 0.0, 1.0 / np.where(a > 0.0, a, 1.0), 0.0)
    inv_b = np.where(b > 0.0, 1.0 / np.where(b > 0.0, b, 1.0), 0.0)
    cos = (u @ c.T) * inv_a[:, None] * inv_b[None, :]
    degenerate = int((a == 0.0).sum() + (b == 0.0).sum())
    return cos, inv_a, inv_b, degenerate


def _cosine_backward(w: np.ndarray, u: np.ndarray, c: np.ndarray,
                     cos: np.ndarray, inv_a: np.ndarray, inv_b: np.ndarray,
                     need_dc: bool = True):
    """Backprop dJ/dcos = w through the cosine similarity.

    d cos(u,c)/du = c/(|u||c|) - cos * u/|u|^2, and symmetrically for c.
    """
    scaled = w * inv_a[:, None] * inv_b[None, :]
    du = scaled @ c - u * (w * cos).sum(axis=1, keepdims=True) * (inv_a**2)[:, None]
    if not need_dc:
        return du, None
    dc = scaled.T @ u - c * (w * cos).sum(axis=0)[:, None] * (inv_b**2)[:, None]
    return du, dc


def episode_loss_and_grad(net: EmbeddingNet, support: np.ndarray,
                          query: np.ndarray) -> tuple[float, np.ndarray]:
    """One episodic loss evaluation, accumulating gradients into ``net``.

    ``support`` is (K, N_s, L) and ``query`` is (K, N_q, L); query row
    k*N_q + j belongs to class k. Supports and queries go through a
    single stacked forward pass so the layer caches line up with one
    backward call. Returns (loss, query probability matrix).
    """
    k, n_s, dim = support.shape
    n_q = query.shape[1]
    x = np.vstack([support.reshape(k * n_s, dim), query.reshape(k * n_q, dim)])
    z = net.forward(x)
    s = z[: k * n_s].reshape(k, n_s, -1)
    u = z[k * n_s :]
    protos = s.mean(axis=1)

    cos, inv_a, inv_b, degenerate = _cosine_forward(u, protos)
    if degenerate:
        log.debug("episode produced %d zero-norm embeddings", degenerate)
    probs = softmax(cos - 1.0)
    labels = np.repeat(np.arange(k), n_q)
    q = k * n_q
    loss = -float(np.mean(np.log(probs[np.arange(q), labels])))

    w = probs.copy()
    w[np.arange(q), labels] -= 1.0
    w /= q
    du, dproto = _cosine_backward(w, u, protos, cos, inv_a, inv_b)
    ds = np.repeat(dproto / n_s, n_s, axis=0)
    net.backward(np.vstack([ds, du]))
    return loss, probs


def query_loss_and_grad(net: EmbeddingNet, prototypes: np.ndarray,
                        x: np.ndarray, label_idx: int) -> float:
    """Single-example NLL against fixed prototypes, gradient into ``net``.

    Used by the active-update variant that fine-tunes the embedding on
    labelled queries while leaving the prototypes untouched.
    """
    u = net.forward(np.asarray(x, dtype=np.float64)[None, :])
    cos, inv_a, inv_b, _ = _cosine_forward(u, prototypes)
    probs = softmax(cos - 1.0)
    loss = -float(np.log(probs[0, label_idx]))
    w = probs.copy()
    w[0, label_idx] -= 1.0
    du, _ = _cosine_backward(w, u, prototypes, cos, inv_a, inv_b, need_dc=False)
    net.backward(du)
    return loss


def classes_from_labels(labels: Iterable[str]) -> tuple[str, ...]:
    """Stable class tuple: canonical drift kinds first, extras sorted."""
    seen = set(labels)
    ordered = [c for c in CLASS_ORDER if c in seen]
    ordered.extend(sorted(seen - set(CLASS_ORDER)))
    return tuple(ordered)


def group_by_class(corpus: Sequence[MetaSample],
                   classes: Sequence[str]) -> list[np.ndarray]:
    index = {c: i for i, c in enumerate(classes)}
    buckets: list[list[np.ndarray]] = [[] for _ in classes]
    for sample in corpus:
        if sample.label not in index:
            raise ValueError(f"sample label {sample.label!r} not in {classes}")
        buckets[index[sample.label]].append(np.asarray(sample.gaps, dtype=np.float64))
    return [np.array(b) if b else np.empty((0, 0)) for b in buckets]


@dataclass
class TrainConfig:
    """Episodic training knobs; defaults match the reference recipe."""

    episodes: int = 2000
    n_support: int = 5
    n_query: int = 15
    n_final: int = 20
    lr: float = 1e-3
    weight_decay: float = 0.0
    noise: float = 0.0
    patience: int = 100
    eval_every: int = 10
    val_fraction: float = 0.15
    seed: int = 0

    def __post_init__(self) -> None:
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")
        if self.n_support < 1 or self.n_query < 1 or self.n_final < 1:
            raise ValueError("episode sizes must be positive")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in [0, 1)")
        if self.weight_decay < 0.0 or self.noise < 0.0:
            raise ValueError("weight_decay and noise must be non-negative")


@dataclass
class TrainReport:
    episodes_run: int
    best_val_loss: float
    stopped_early: bool
    losses: list[float] = field(default_factory=list, repr=False)


class MetaDetector:
    """Embedding network plus per-class prototypes, ready to classify gaps."""

    def __init__(self, net: EmbeddingNet, classes: Sequence[str],
                 prototypes: np.ndarray, counts: Sequence[int],
                 spec: WindowSpec, absolute: bool = False):
        if prototypes.shape[0] != len(classes):
            raise ValueError("one prototype per class required")
        if len(counts) != len(classes):
            raise ValueError("one support count per class required")
        self.net = net
        self.classes = tuple(classes)
        self.prototypes = np.asarray(prototypes, dtype=np.float64)
        self.counts = [int(c) for c in counts]
        self.spec = spec
        self.absolute = bool(absolute)
        self.degenerate_seen = 0

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def class_index(self, label: str) -> int:
        try:
            return self.classes.index(label)
        except ValueError:
            raise ValueError(f"unknown class {label!r}; have {self.classes}") from None

    def predict_proba(self, gaps: np.ndarray) -> np.ndarray:
        """Class probabilities for one gap vector or a batch of them."""
        gaps = np.asarray(gaps, dtype=np.float64)
        single = gaps.ndim == 1
        z = self.net.embed(gaps)
        cos, _, _, degenerate = _cosine_forward(np.atleast_2d(z), self.prototypes)
        if degenerate:
            self.degenerate_seen += degenerate
            log.debug("zero-norm embedding at prediction (total %d)",
                      self.degenerate_seen)
        probs = softmax(cos - 1.0)
        return probs[0] if single else probs

    def predict(self, gaps: np.ndarray) -> tuple[str, np.ndarray]:
        probs = self.predict_proba(gaps)
        return self.classes[int(np.argmax(probs))], probs

    def predict_batch(self, gaps: np.ndarray) -> list[str]:
        probs = self.predict_proba(np.atleast_2d(gaps))
        return [self.classes[i] for i in np.argmax(probs, axis=1)]

    def apply_label(self, label: str, gaps: np.ndarray) -> None:
        """Fold a labelled example into its prototype as a running mean."""
        k = self.class_index(label)
        z = self.net.embed(np.asarray(gaps, dtype=np.float64))
        m = self.counts[k]
        self.prototypes[k] = (m * self.prototypes[k] + z) / (m + 1)
        self.counts[k] = m + 1

    def sgd_label_step(self, label: str, gaps: np.ndarray,
                       optimizer: Adam) -> float:
        """One gradient step on a labelled example, prototypes held fixed."""
        k = self.class_index(label)
        self.net.zero_grads()
        loss = query_loss_and_grad(self.net, self.prototypes,
                                   np.asarray(gaps, dtype=np.float64), k)
        optimizer.step(self.net.grads())
        return loss

    def clone(self) -> "MetaDetector":
        """Independent copy; online updates to one leave the other untouched."""
        cfg = self.net_config()
        if cfg["arch"] == "fcn":
            net: EmbeddingNet = FCN(cfg["dims"])
        else:
            net = RNN(cfg["in_dim"], hidden=cfg["hidden"], out_dim=cfg["out_dim"])
        for p, q in zip(net.params(), self.net.params()):
            p[:] = q
        return MetaDetector(net, self.classes, self.prototypes.copy(),
                            list(self.counts), self.spec, absolute=self.absolute)

    def net_config(self) -> dict:
        if isinstance(self.net, FCN):
            return {"arch": "fcn", "dims": list(self.net.dims)}
        if isinstance(self.net, RNN):
            return {"arch": "rnn", "in_dim": self.net.in_dim,
                    "hidden": self.net.hidden, "out_dim": self.net.out_dim}
        raise TypeError(f"cannot serialize network of type {type(self.net).__name__}")

    def save(self, path: str | Path) -> None:
        """Write a JSON checkpoint that round-trips weights bit for bit."""
        payload = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "net": self.net_config(),
            "window": self.spec.to_dict(),
            "absolute": self.absolute,
            "classes": list(self.classes),
            "params": [p.tolist() for p in self.net.params()],
            "prototypes": self.prototypes.tolist(),
            "counts": list(self.counts),
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "MetaDetector":
        payload = json.loads(Path(path).read_text())
        if payload.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path}: not a meta-detector checkpoint")
        if payload.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version "
                             f"{payload.get('version')!r}")
        cfg = payload["net"]
        if cfg["arch"] == "fcn":
            dims = cfg["dims"]
            net: EmbeddingNet = FCN(dims)
        else:
            net = RNN(cfg["in_dim"], hidden=cfg["hidden"], out_dim=cfg["out_dim"])
        params = net.params()
        stored = payload["params"]
        if len(stored) != len(params):
            raise ValueError(f"{path}: parameter count mismatch")
        for p, vals in zip(params, stored):
            arr = np.asarray(vals, dtype=np.float64)
            if arr.shape != p.shape:
                raise ValueError(f"{path}: parameter shape mismatch "
                                 f"{arr.shape} vs {p.shape}")
            p[:] = arr
        detector = cls(
            net,
            payload["classes"],
            np.asarray(payload["prototypes"], dtype=np.float64),
            payload["counts"],
            WindowSpec.from_dict(payload["window"]),
            absolute=payload.get("absolute", False),
        )
        return detector


def _sample_episode(buckets: Sequence[np.ndarray], n_support: int, n_query: int,
                    rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    supports, queries = [], []
    for data in buckets:
        idx = rng.choice(len(data), size=n_support + n_query, replace=False)
        supports.append(data[idx[:n_support]])
        queries.append(data[idx[n_support:]])
    return np.array(supports), np.array(queries)


def _validation_loss(net: EmbeddingNet, train_buckets: Sequence[np.ndarray],
                     val_buckets: Sequence[np.ndarray]) -> float:
    """Mean NLL on held-out samples, prototypes from the full train split."""
    protos = np.array([net.embed(b).mean(axis=0) for b in train_buckets])
    total, count = 0.0, 0
    for k, data in enumerate(val_buckets):
        if len(data) == 0:
            continue
        z = net.embed(data)
        cos, _, _, _ = _cosine_forward(z, protos)
        probs = softmax(cos - 1.0)
        total += -float(np.log(probs[:, k]).sum())
        count += len(data)
    if count == 0:
        raise ValueError("validation split is empty")
    return total / count


def compute_prototypes(net: EmbeddingNet, buckets: Sequence[np.ndarray],
                       n_final: int,
                       rng: np.random.Generator) -> tuple[np.ndarray, list[int]]:
    """Final prototypes from a random support draw per class."""
    protos, counts = [], []
    for data in buckets:
        take = min(n_final, len(data))
        idx = rng.choice(len(data), size=take, replace=False)
        protos.append(net.embed(data[idx]).mean(axis=0))
        counts.append(take)
    return np.array(protos), counts


def train_meta_detector(corpus: Sequence[MetaSample], spec: WindowSpec,
                        arch: str = "fcn", embed_dim: int = 16,
                        config: TrainConfig | None = None,
                        absolute: bool = False) -> tuple[MetaDetector, TrainReport]:
    """Episodic training with early stopping on a held-out split.

    The corpus must contain at least n_support + n_query examples per
    class after the validation split is carved off. The best-validation
    parameters are restored before the final prototypes are drawn.
    """
    cfg = config or TrainConfig()
    rng = np.random.default_rng(cfg.seed)
    classes = classes_from_labels(s.label for s in corpus)
    if len(classes) < 2:
        raise ValueError("need at least two classes to train")
    buckets = group_by_class(corpus, classes)

    dim = buckets[0].shape[1]
    if dim != spec.L:
        raise ValueError(f"corpus gap length {dim} does not match spec L={spec.L}")
    need = cfg.n_support + cfg.n_query
    train_buckets, val_buckets = [], []
    for cls_name, data in zip(classes, buckets):
        n_val = max(1, int(round(len(data) * cfg.val_fraction)))
        if len(data) - n_val < need:
            raise ValueError(
                f"class {cls_name!r} has {len(data)} samples; needs at least "
                f"{need + n_val} for episodes plus validation")
        perm = rng.permutation(len(data))
        val_buckets.append(data[perm[:n_val]])
        train_buckets.append(data[perm[n_val:]])

    net = make_net(arch, in_dim=spec.L, out_dim=embed_dim, rng=rng)
    optimizer = Adam(net.params(), lr=cfg.lr, weight_decay=cfg.weight_decay,
                     decay_mask=net.decay_mask())

    # episodes=0 skips training: prototypes over a freshly initialized
    # net give a chance-level detector, useful as a smoke path.
    best_val = np.inf
    best_params = [p.copy() for p in net.params()]
    best_episode = 0
    losses: list[float] = []
    stopped = False
    episode = 0
    for episode in range(1, cfg.episodes + 1):
        support, query = _sample_episode(train_buckets, cfg.n_support,
                                         cfg.n_query, rng)
        if cfg.noise:
            support = support + rng.normal(0.0, cfg.noise, support.shape)
            query = query + rng.normal(0.0, cfg.noise, query.shape)
        net.zero_grads()
        loss, _ = episode_loss_and_grad(net, support, query)
        optimizer.step(net.grads())
        losses.append(loss)

        if episode % cfg.eval_every == 0 or episode == cfg.episodes:
            val = _validation_loss(net, train_buckets, val_buckets)
            if val < best_val:
                best_val = val
                best_params = [p.copy() for p in net.params()]
                best_episode = episode
            elif episode - best_episode >= cfg.patience:
                stopped = True
                break

    for p, best in zip(net.params(), best_params):
        p[:] = best

    protos, counts = compute_prototypes(net, train_buckets, cfg.n_final, rng)
    detector = MetaDetector(net, classes, protos, counts, spec, absolute=absolute)
    report = TrainReport(episodes_run=episode, best_val_loss=float(best_val),
                         stopped_early=stopped, losses=losses)
    log.info("trained %s meta-detector: %d episodes, best val NLL %.4f%s",
             arch, episode, best_val, " (early stop)" if stopped else "")
    return detector, report
