"""Labeled sample sets, synthetic data, CSV ingestion and mini-batch iteration."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class FormatError(ValueError):
    """Raised when a data file cannot be parsed into a valid sample set."""


@dataclass(frozen=True)
class SampleSet:
    """Binary-labeled feature matrix with precomputed class partitions.

    ``prior_p`` is the dataset-level fraction of positives. It is fixed at
    construction and used as the class prior in every loss evaluation,
    including mini-batch ones.
    """

    features: np.ndarray
    labels: np.ndarray
    pos_idx: np.ndarray = field(init=False)
    neg_idx: np.ndarray = field(init=False)
    prior_p: float = field(init=False)

    def __post_init__(self):
        X = np.ascontiguousarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValueError(f"labels shape {y.shape} does not match {X.shape[0]} rows")
        if X.shape[0] == 0:
            raise ValueError("empty dataset")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be 0 or 1")
        y = y.astype(np.int8)
        pos = np.flatnonzero(y == 1)
        neg = np.flatnonzero(y == 0)
        if pos.size == 0:
            raise ValueError("no positive instances")
        if neg.size == 0:
            raise ValueError("no negative instances")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "pos_idx", pos)
        object.__setattr__(self, "neg_idx", neg)
        object.__setattr__(self, "prior_p", pos.size / y.size)

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_pos(self) -> int:
        return self.pos_idx.size

    @property
    def n_neg(self) -> int:
        return self.neg_idx.size


@dataclass(frozen=True)
class BatchSpec:
    batch_size: int
    shuffle_seed: int = 0
    stratified: bool = False

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")


def generate_synthetic(n_pos, n_neg, d, separation, seed, stream=0):
    """Draw a two-Gaussian imbalanced sample set.

    Positives come from N(+separation/sqrt(d) * 1, I) and negatives from
    N(-separation/sqrt(d) * 1, I), so the class means sit ``2*separation``
    apart in Euclidean distance. Rows are ordered positives first.

    ``stream`` selects an independent draw for the same seed, which is how
    held-out sets are produced without colliding with another run's seed.
    """
    if n_pos < 1 or n_neg < 1:
        raise ValueError("n_pos and n_neg must both be at least 1")
    if d < 1:
        raise ValueError("d must be at least 1")
    if separation < 0:
        raise ValueError("separation must be non-negative")
    rng = np.random.default_rng([int(seed), int(stream)])
    shift = separation / math.sqrt(d)
    X = np.empty((n_pos + n_neg, d))
    X[:n_pos] = rng.standard_normal((n_pos, d)) + shift
    X[n_pos:] = rng.standard_normal((n_neg, d)) - shift
    y = np.concatenate([np.ones(n_pos, np.int8), np.zeros(n_neg, np.int8)])
    return SampleSet(X, y)


def parse_synthetic_spec(text):
    """Parse ``npos:nneg:dim:separation`` into keyword arguments."""
    parts = text.split(":")
    if len(parts) != 4:
        raise ValueError(f"synthetic spec must be npos:nneg:dim:separation, got {text!r}")
    try:
        n_pos, n_neg, d = (int(p) for p in parts[:3])
        sep = float(parts[3])
    except ValueError as exc:
        raise ValueError(f"bad synthetic spec {text!r}: {exc}") from None
    return dict(n_pos=n_pos, n_neg=n_neg, d=d, separation=sep)


def _is_number(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def load_csv(path, label_column=-1):
    """Read a comma-separated file into a :class:`SampleSet`.

    A single header row is detected when any of its fields is non-numeric.
    ``label_column`` is a header name or a zero-based (possibly negative)
    column index. All other columns become 64-bit features, in file order.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise FormatError("empty dataset")

    header = None
    if any(c.strip() and not _is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        raise FormatError("empty dataset")

    ncol = len(header) if header is not None else len(rows[0])
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if header is None:
            raise FormatError(f"label column {label_column!r} given by name but file has no header")
        if label_column not in header:
            raise FormatError(f"label column {label_column!r} not in header {header}")
        lab = header.index(label_column)
    else:
        lab = int(label_column)
        if not -ncol <= lab < ncol:
            raise FormatError(f"label column index {lab} out of range for {ncol} columns")
        lab %= ncol

    first_row = 2 if header is not None else 1
    X = np.empty((len(rows), ncol - 1))
    y = np.empty(len(rows), np.int8)
    for i, row in enumerate(rows):
        lineno = first_row + i
        if len(row) != ncol:
            raise FormatError(f"row {lineno}: expected {ncol} fields, got {len(row)}")
        cells = [c.strip() for c in row]
        if any(c == "" for c in cells):
            raise FormatError(f"row {lineno}: missing value")
        label = cells[lab]
        try:
            label_val = float(label)
        except ValueError:
            raise FormatError(f"row {lineno}: non-binary label {label!r}") from None
        if label_val not in (0.0, 1.0):
            raise FormatError(f"row {lineno}: non-binary label {label!r}")
        y[i] = int(label_val)
        feats = cells[:lab] + cells[lab + 1:]
        try:
            X[i] = [float(c) for c in feats]
        except ValueError as exc:
            raise FormatError(f"row {lineno}: {exc}") from None
        if not np.all(np.isfinite(X[i])):
            raise FormatError(f"row {lineno}: missing value")

    if not np.any(y == 1):
        raise FormatError("no positive instances")
    if not np.any(y == 0):
        raise FormatError("no negative instances")
    return SampleSet(X, y)


def min_max_scale(data, reference=None):
    """Scale features to [0, 1] per column using ``reference`` ranges.

    Constant columns map to 0. ``reference`` defaults to ``data`` itself;
    pass the training set to scale a held-out set consistently.
    """
    ref = data if reference is None else reference
    lo = ref.features.min(axis=0)
    span = ref.features.max(axis=0) - lo
    span[span == 0] = 1.0
    return SampleSet((data.features - lo) / span, data.labels)


def _stratified_counts(sizes, n_pos, n_neg):
    # positives per batch, proportional to batch size (largest remainder)
    n = n_pos + n_neg
    exact = np.array(sizes, dtype=np.float64) * n_pos / n
    counts = np.floor(exact).astype(int)
    order = np.argsort(-(exact - counts), kind="stable")
    counts[order[: n_pos - counts.sum()]] += 1
    sizes = np.asarray(sizes)
    # every batch of size >= 2 gets one of each class when supply allows
    for b in range(len(sizes)):
        if sizes[b] < 2:
            continue
        if counts[b] == 0:
            donors = np.flatnonzero(counts >= 2)
            if donors.size:
                counts[donors[np.argmax(counts[donors])]] -= 1
                counts[b] += 1
        if counts[b] == sizes[b]:
            donors = np.flatnonzero(sizes - counts >= 2)
            if donors.size:
                d = donors[np.argmax((sizes - counts)[donors])]
                counts[d] += 1
                counts[b] -= 1
    return counts


def iter_batches(data, spec, epoch):
    """Partition one epoch's seeded permutation into index slices.

    Slices have ``spec.batch_size`` elements except possibly the last. The
    result depends only on ``(spec.shuffle_seed, epoch)``. With
    ``spec.stratified`` the two classes are permuted separately and dealt
    into batches in proportion to batch size, so every batch of size >= 2
    holds both classes as long as each class has at least one member per
    batch.
    """
    n = data.n
    bs = spec.batch_size
    if bs > n:
        raise ValueError(f"batch_size {bs} exceeds dataset size {n}")
    rng = np.random.default_rng([int(spec.shuffle_seed), int(epoch)])
    sizes = [bs] * (n // bs) + ([n % bs] if n % bs else [])

    if not spec.stratified:
        perm = rng.permutation(n)
        return [perm[i:i + bs] for i in range(0, n, bs)]

    pos = rng.permutation(data.pos_idx)
    neg = rng.permutation(data.neg_idx)
    counts = _stratified_counts(sizes, pos.size, neg.size)
    out = []
    ip = ineg = 0
    for size, k in zip(sizes, counts):
        batch = np.concatenate([pos[ip:ip + k], neg[ineg:ineg + size - k]])
        ip += k
        ineg += size - k
        out.append(batch[rng.permutation(size)])
    return out
