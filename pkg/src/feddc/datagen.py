"""Synthetic data, CSV ingestion and iid client partitioning."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ContractViolation, IngestionError
from .rng import stream


@dataclass
class Dataset:
    """Labeled samples: ``X`` is ``(n, dim)`` float64, ``y`` holds 0/1 labels."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2:
            raise ContractViolation(f"features must be 2-D, got shape {self.X.shape}")
        if self.y.shape != (self.X.shape[0],):
            raise ContractViolation("label count does not match sample count")
        if self.y.size and not np.isin(self.y, (0, 1)).all():
            raise ContractViolation("labels must be 0 or 1")

    def __len__(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.X[idx], self.y[idx])

    @staticmethod
    def concat(parts):
        parts = list(parts)
        if not parts:
            raise ContractViolation("nothing to concatenate")
        return Dataset(np.concatenate([p.X for p in parts]), np.concatenate([p.y for p in parts]))


@dataclass
class SynthConfig:
    """Parameters of the ``make_classification``-style generator.

    Defaults reproduce the 100-feature setup used for the MLP experiments.
    """

    n_samples: int = 1000
    n_features: int = 100
    n_informative: int = 20
    n_redundant: int = 60
    n_repeated: int = 5
    clusters_per_class: int = 3
    class_sep: float = 1.0
    shift: float = 1.0
    scale: float = 3.0
    flip_y: float = 0.02
    seed: int = 0

    def validate(self):
        for name in ("n_samples", "n_features", "n_informative", "clusters_per_class"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("n_redundant", "n_repeated"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        used = self.n_informative + self.n_redundant + self.n_repeated
        if used > self.n_features:
            raise ConfigError(
                f"n_informative + n_redundant + n_repeated = {used} exceeds n_features = {self.n_features}"
            )
        n_clusters = 2 * self.clusters_per_class
        if n_clusters > 2**self.n_informative:
            raise ConfigError("2 * clusters_per_class must be <= 2**n_informative")
        if not 0.0 <= self.flip_y <= 1.0:
            raise ConfigError("flip_y must lie in [0, 1]")
        if self.n_repeated and self.n_informative + self.n_redundant == 0:
            raise ConfigError("repeated features need informative or redundant ones to copy")


def _hypercube_vertices(n_vertices, dim, rng):
    # distinct vertices of {0,1}^dim, drawn without replacement
    if dim <= 30:
        codes = rng.choice(2**dim, size=n_vertices, replace=False)
        bits = (codes[:, None] >> np.arange(dim)[None, :]) & 1
        return bits.astype(np.float64)
    seen = set()
    out = []
    while len(out) < n_vertices:
        v = rng.integers(0, 2, size=dim)
        key = v.tobytes()
        if key not in seen:
            seen.add(key)
            out.append(v)
    return np.array(out, dtype=np.float64)


def _make_classification(cfg):
    """Generator core. Returns ``(X, y, flipped)`` where ``flipped`` marks
    samples whose label was inverted."""
    cfg.validate()
    rng = stream(cfg.seed, "datagen.synthetic")
    n, n_inf = cfg.n_samples, cfg.n_informative
    n_clusters = 2 * cfg.clusters_per_class

    centroids = _hypercube_vertices(n_clusters, n_inf, rng)
    centroids = centroids * (2 * cfg.class_sep) - cfg.class_sep

    counts = np.full(n_clusters, n // n_clusters)
    counts[: n % n_clusters] += 1
    starts = np.concatenate([[0], np.cumsum(counts)])

    X = np.zeros((n, cfg.n_features))
    y = np.zeros(n, dtype=np.int64)
    X[:, :n_inf] = rng.standard_normal((n, n_inf))
    for k in range(n_clusters):
        lo, hi = starts[k], starts[k + 1]
        y[lo:hi] = k % 2
        cov = 2.0 * rng.random((n_inf, n_inf)) - 1.0
        X[lo:hi, :n_inf] = X[lo:hi, :n_inf] @ cov + centroids[k]

    col = n_inf
    if cfg.n_redundant:
        mix = 2.0 * rng.random((n_inf, cfg.n_redundant)) - 1.0
        X[:, col : col + cfg.n_redundant] = X[:, :n_inf] @ mix
        col += cfg.n_redundant
    if cfg.n_repeated:
        src = rng.integers(0, col, size=cfg.n_repeated)
        X[:, col : col + cfg.n_repeated] = X[:, src]
        col += cfg.n_repeated
    if col < cfg.n_features:
        X[:, col:] = rng.standard_normal((n, cfg.n_features - col))

    flipped = rng.random(n) < cfg.flip_y
    y = np.where(flipped, 1 - y, y)

    X = (X + cfg.shift) * cfg.scale

    rows = rng.permutation(n)
    cols = rng.permutation(cfg.n_features)
    X = X[rows][:, cols]
    return X, y[rows], flipped[rows]


def generate_synthetic(cfg):
    """Draw a binary classification dataset.

    Informative features come from Gaussian clusters centred on hypercube
    vertices (scaled by ``class_sep``), redundant features are random linear
    combinations of the informative ones, repeated features are copies.
    Labels are inverted with probability ``flip_y``. Deterministic in
    ``cfg.seed``.
    """
    X, y, _ = _make_classification(cfg)
    return Dataset(X, y)


@dataclass
class TeacherConfig:
    """A random unit-norm linear teacher through the origin labels
    heavy-tailed features: ``y = [x . w + label_noise * L > 0]`` with ``L``
    standard logistic. Features are centred log-normal,
    ``exp(tail * z) - exp(tail**2 / 2)`` for standard normal ``z``;
    ``tail = 0`` gives plain standard normal features."""

    n_samples: int = 10000
    n_features: int = 5
    tail: float = 1.5
    label_noise: float = 0.2
    seed: int = 0

    def validate(self):
        if self.n_samples < 1 or self.n_features < 1:
            raise ConfigError("n_samples and n_features must be >= 1")
        if self.tail < 0 or self.label_noise < 0:
            raise ConfigError("tail and label_noise must be >= 0")


def generate_teacher(cfg):
    cfg.validate()
    rng = stream(cfg.seed, "datagen.teacher")
    w = rng.standard_normal(cfg.n_features)
    w /= np.linalg.norm(w)
    Z = rng.standard_normal((cfg.n_samples, cfg.n_features))
    X = Z if cfg.tail == 0 else np.expm1(cfg.tail * Z) - np.expm1(cfg.tail**2 / 2)
    z = X @ w + cfg.label_noise * rng.logistic(size=cfg.n_samples)
    return Dataset(X, (z > 0).astype(np.int64))


_LABELS = {"0": 0, "1": 1, "-1": 0}


def _parse_label(text, line):
    t = text.strip()
    if t in _LABELS:
        return _LABELS[t]
    try:
        v = float(t)
    except ValueError:
        raise IngestionError(f"label {t!r} is not numeric", line) from None
    if v == 1.0:
        return 1
    if v in (0.0, -1.0):
        return 0
    raise IngestionError(f"unknown label {t!r} (expected 0/1)", line)


def load_csv(path, header=False):
    """Read ``label,f1,...,fk`` rows into a :class:`Dataset`.

    Labels ``0``/``1`` (also ``-1`` for the negative class and float
    spellings such as ``1.0``) are accepted.
    """
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"no such file: {path}")
    labels, rows = [], []
    width = None
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise IngestionError("row needs a label and at least one feature", lineno)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise IngestionError(f"expected {width} columns, found {len(row)}", lineno)
            labels.append(_parse_label(row[0], lineno))
            try:
                rows.append([float(c) for c in row[1:]])
            except ValueError:
                raise IngestionError("non-numeric feature value", lineno) from None
    if not rows:
        raise IngestionError(f"{path} contains no samples")
    X = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise IngestionError(f"{path} contains non-finite feature values")
    return Dataset(X, np.array(labels, dtype=np.int64))


def save_csv(data, path, header=False):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(["label"] + [f"x{i}" for i in range(data.dim)])
        for label, row in zip(data.y, data.X):
            w.writerow([int(label)] + [repr(float(v)) for v in row])


def partition_iid(pool, m, n_per_client, seed):
    """Split ``m * n_per_client`` samples of ``pool`` into disjoint shards,
    drawn uniformly without replacement."""
    if m < 1 or n_per_client < 1:
        raise ConfigError("m and n_per_client must be >= 1")
    need = m * n_per_client
    if need > len(pool):
        raise ConfigError(f"pool has {len(pool)} samples, {m} clients x {n_per_client} need {need}")
    order = stream(seed, "datagen.partition").permutation(len(pool))[:need]
    return [pool.subset(order[i * n_per_client : (i + 1) * n_per_client]) for i in range(m)]


def train_test_split(pool, test_fraction, seed):
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n = len(pool)
    n_test = int(round(n * test_fraction))
    order = stream(seed, "datagen.split").permutation(n)
    return pool.subset(order[n_test:]), pool.subset(order[:n_test])
