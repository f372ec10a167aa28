# Dataset management: synthetic generation, LIBSVM files, subsetting and the
# local dataset cache under DATA_DIR.

import logging
import os
import re
from dataclasses import dataclass

import numpy as np

from config.settings import DATA_DIR
from core.exceptions import DatasetError, LibsvmParseError

logger = logging.getLogger(__name__)

DATASET_PATTERN = re.compile(
    r"^(?P<name>.+?)(?:-(?P<i>-?\d+)-(?P<j>-?\d+))?-(?P<m>\d+)-(?P<d>\d+)$"
)


@dataclass(frozen=True)
class Dataset:
    """Samples Q (rows) by features (columns) with +-1 labels."""
    Q: np.ndarray
    labels: np.ndarray
    name: str

    def __post_init__(self):
        object.__setattr__(self, "Q", np.array(self.Q, dtype=float))
        object.__setattr__(self, "labels", np.array(self.labels, dtype=float).ravel())
        if self.Q.ndim != 2 or self.Q.shape[0] != self.labels.shape[0]:
            raise DatasetError(f"dataset '{self.name}': {self.Q.shape[0]} rows but {self.labels.shape[0]} labels")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise DatasetError(f"dataset '{self.name}': labels must be -1 or +1")
        self.Q.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def shape(self):
        return self.Q.shape


def normalize_columns(Q):
    """Scales every non-zero column to unit Euclidean norm."""
    Q = np.array(Q, dtype=float, copy=True)
    norms = np.linalg.norm(Q, axis=0)
    nonzero = norms > 0
    Q[:, nonzero] /= norms[nonzero]
    return Q


def gen_randn(m, n, seed=0):
    """randn(m, n) with uniformly random binary labels and unit-norm columns."""
    if m < 1 or n < 1:
        raise DatasetError(f"randn dataset needs m, n >= 1 (got {m}, {n})")
    rng = np.random.default_rng(seed)
    Q = rng.standard_normal((m, n))
    labels = rng.choice(np.array([-1.0, 1.0]), size=m)
    return Dataset(Q=normalize_columns(Q), labels=labels, name=f"randn-{m}-{n}")


def _map_labels(raw, label_pair, path):
    if label_pair is not None:
        pos, neg = (float(v) for v in label_pair)
        keep = (raw == pos) | (raw == neg)
        return keep, np.where(raw[keep] == pos, 1.0, -1.0)
    distinct = np.unique(raw)
    if np.all(np.isin(distinct, (-1.0, 1.0))):
        return np.ones(raw.size, dtype=bool), raw.copy()
    if distinct.size == 2:
        return np.ones(raw.size, dtype=bool), np.where(raw == distinct[1], 1.0, -1.0)
    raise LibsvmParseError(path, 0, f"{distinct.size} distinct labels; select a label pair")


def _parse_number(text, path, lineno, message):
    try:
        value = float(text)
    except ValueError:
        raise LibsvmParseError(path, lineno, message) from None
    if not np.isfinite(value):
        raise LibsvmParseError(path, lineno, f"{message}: value must be finite")
    return value


def load_libsvm(path, label_pair=None, n_features=None, name=None):
    """
    Reads a LIBSVM file (label idx:val ..., 1-based indices) into a dense Dataset.

    label_pair=(i, j) keeps rows labelled i (mapped to +1) or j (mapped to -1).
    Without a pair the labels must already be +-1 or take exactly two values, the
    larger becoming +1. Columns are left as stored.
    """
    if not os.path.exists(path):
        raise DatasetError(f"dataset file not found: {path}")
    labels, rows, width = [], [], 0
    lineno = 0
    with open(path, "r", encoding="utf-8") as fh:
        try:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                tokens = line.split()
                labels.append(_parse_number(tokens[0], path, lineno, f"bad label '{tokens[0]}'"))
                entries = {}
                for token in tokens[1:]:
                    idx, sep, val = token.partition(":")
                    try:
                        index = int(idx)
                    except ValueError:
                        raise LibsvmParseError(path, lineno, f"bad entry '{token}'") from None
                    if not sep or index < 1:
                        raise LibsvmParseError(path, lineno, f"bad entry '{token}'")
                    if index in entries:
                        raise LibsvmParseError(path, lineno, f"duplicate index {index}")
                    entries[index] = _parse_number(val, path, lineno, f"bad entry '{token}'")
                width = max([width, *entries])
                rows.append(entries)
        except UnicodeDecodeError:
            raise LibsvmParseError(path, lineno + 1, "not UTF-8 text") from None
    if not rows:
        raise LibsvmParseError(path, 0, "file contains no samples")

    if n_features is not None:
        if n_features < width:
            raise LibsvmParseError(path, 0, f"index {width} exceeds n_features={n_features}")
        width = n_features
    Q = np.zeros((len(rows), width))
    for r, entries in enumerate(rows):
        for index in sorted(entries):
            Q[r, index - 1] = entries[index]

    keep, mapped = _map_labels(np.asarray(labels), label_pair, path)
    if not np.any(keep):
        raise DatasetError(f"{path}: no samples carry labels {label_pair}")
    name = name or os.path.splitext(os.path.basename(path))[0]
    return Dataset(Q=Q[keep], labels=mapped, name=name)


def save_libsvm(ds, path):
    """Writes ds in LIBSVM format, zero entries omitted, floats at full precision."""
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for label, row in zip(ds.labels, ds.Q):
            entries = " ".join(f"{j + 1}:{float(row[j])!r}" for j in np.flatnonzero(row))
            fh.write(f"{int(label):+d} {entries}".rstrip() + "\n")
    logger.info("Saved dataset '%s' (%dx%d) to %s", ds.name, ds.Q.shape[0], ds.Q.shape[1], path)
    return path


def subset(ds, m, d, seed=0, name=None):
    """Seeded random choice of m samples and d features (kept in file order), columns re-normalized."""
    rows, cols = ds.Q.shape
    if m > rows or d > cols:
        raise DatasetError(f"dataset '{ds.name}' is {rows}x{cols}; cannot take {m}x{d}")
    rng = np.random.default_rng(seed)
    pick_rows = np.sort(rng.permutation(rows)[:m])
    pick_cols = np.sort(rng.permutation(cols)[:d])
    Q = normalize_columns(ds.Q[np.ix_(pick_rows, pick_cols)])
    return Dataset(Q=Q, labels=ds.labels[pick_rows].copy(), name=name or f"{ds.name}-{m}-{d}")


def class_stats(ds):
    """Per-class means and covariances (normalized by the class count); +1 is class 1."""
    stats = []
    for label in (1.0, -1.0):
        X = ds.Q[ds.labels == label]
        if X.shape[0] == 0:
            raise DatasetError(f"dataset '{ds.name}' has no samples with label {label:+g}")
        mean = X.mean(axis=0)
        centered = X - mean
        stats.append((mean, centered.T @ centered / X.shape[0]))
    (mu1, S1), (mu2, S2) = stats
    return mu1, mu2, S1, S2


def dataset_path(name, data_dir=DATA_DIR):
    return os.path.join(data_dir, f"{name}.libsvm")


def resolve_dataset(spec, seed=0, data_dir=DATA_DIR):
    """
    Turns a dataset name into a Dataset.

    randn-m-d is generated on the fly. <name>-m-d and <name>-i-j-m-d subset
    data_dir/<name>.libsvm (the second keeps labels i and j only). A bare name
    loads the whole cached file.
    """
    match = DATASET_PATTERN.match(spec)
    if match is None:
        ds = load_libsvm(dataset_path(spec, data_dir))
        return Dataset(Q=normalize_columns(ds.Q), labels=ds.labels.copy(), name=spec)

    name, m, d = match["name"], int(match["m"]), int(match["d"])
    if name == "randn" and match["i"] is None:
        return gen_randn(m, d, seed)

    pair = (int(match["i"]), int(match["j"])) if match["i"] is not None else None
    path = dataset_path(name, data_dir)
    if not os.path.exists(path):
        raise DatasetError(f"dataset file not found: {path} (create it with 'gen-data {name} <m> <n>' or copy it there)")
    logger.info("Loading %s from %s", spec, path)
    return subset(load_libsvm(path, label_pair=pair), m, d, seed=seed, name=spec)
