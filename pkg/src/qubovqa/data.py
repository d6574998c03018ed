"""Dataset loading and preparation for binary classification.

The pipeline is: seeded stratified split, optional class balancing of the
training split, then standardization, PCA and min-max scaling, all fitted on
the training split only.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .statevector import encode_matrix

SMOTE_NEIGHBORS = 5


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    provenance: tuple[str, ...] = ()
    index: Optional[np.ndarray] = None  # row ids in the source table

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels).astype(int)
        if x.ndim != 2 or y.shape != (x.shape[0],):
            raise ValueError("features must be (r, m) with one label per row")
        if not np.all(np.isfinite(x)):
            raise ValueError("features contain missing or infinite values")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        idx = np.arange(len(y)) if self.index is None else np.asarray(self.index, dtype=int)
        for arr in (x, y, idx):
            arr.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "index", idx)
        object.__setattr__(self, "provenance", tuple(self.provenance))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> tuple[int, int]:
        ones = int(self.labels.sum())
        return len(self) - ones, ones

    def take(self, rows, step: Optional[str] = None) -> "LabeledDataset":
        rows = np.asarray(rows, dtype=int)
        prov = self.provenance + ((step,) if step else ())
        return LabeledDataset(self.features[rows], self.labels[rows], prov, self.index[rows])

    def with_features(self, x, step: str) -> "LabeledDataset":
        return replace(self, features=x, provenance=self.provenance + (step,))

    def states(self, q: int) -> np.ndarray:
        """Amplitude-encoded rows, shape (r, 2**q)."""
        return encode_matrix(self.features, q)


@dataclass(frozen=True)
class SplitBundle:
    train: LabeledDataset
    test: LabeledDataset
    validation: LabeledDataset

    def sizes(self) -> tuple[int, int, int]:
        return len(self.train), len(self.test), len(self.validation)


# ---------------------------------------------------------------- loading


def load_csv(
    path,
    label_column: str,
    positive_classes: Sequence,
    keep_classes: Optional[Sequence] = None,
    name: Optional[str] = None,
) -> LabeledDataset:
    """Read a headed CSV; labels in ``positive_classes`` become 1, the rest 0.

    ``keep_classes`` drops rows whose raw label lies outside it.  Rows with
    missing values (empty or ``?``) are dropped.
    """
    try:
        df = pd.read_csv(path, na_values=["?"])
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise ValueError(f"cannot read {path}: {exc}") from exc
    if label_column not in df.columns:
        raise ValueError(f"label column {label_column!r} not in {list(df.columns)}")
    if keep_classes is not None:
        df = df[df[label_column].isin(list(keep_classes))]
    n_raw = len(df)
    df = df.dropna()
    feats = df.drop(columns=[label_column])
    non_numeric = [c for c in feats.columns if not pd.api.types.is_numeric_dtype(feats[c])]
    if non_numeric:
        raise ValueError(f"non-numeric feature columns: {non_numeric}")
    if df.empty:
        raise ValueError(f"no usable rows in {path}")
    labels = df[label_column].isin(list(positive_classes)).to_numpy().astype(int)
    trace = f"load:{name or path} rows={len(df)} dropped_missing={n_raw - len(df)}"
    return LabeledDataset(feats.to_numpy(dtype=float), labels, (trace,), df.index.to_numpy())


def load_iris() -> LabeledDataset:
    """Bundled Iris table restricted to setosa (0) and versicolor (1)."""
    path = resources.files("qubovqa") / "datasets" / "iris.csv"
    with resources.as_file(path) as p:
        return load_csv(p, "species", ["versicolor"], keep_classes=["setosa", "versicolor"], name="iris")


def subsample(ds: LabeledDataset, n: int, seed) -> LabeledDataset:
    """Seeded stratified subset of ``n`` records."""
    if not 0 < n <= len(ds):
        raise ValueError(f"subsample size must be in [1, {len(ds)}]")
    if n == len(ds):
        return ds
    rng = np.random.default_rng(seed)
    rows = _stratified_take(ds.labels, n / len(ds), rng)[0]
    return ds.take(np.sort(rows), f"subsample:{n} seed={seed}")


# ------------------------------------------------------------- transforms


@dataclass(frozen=True)
class Pca:
    mean: np.ndarray
    components: np.ndarray  # (m, k), columns are principal axes
    eigenvalues: np.ndarray  # (k,) descending

    def transform(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) @ self.components

    def inverse(self, z) -> np.ndarray:
        return np.asarray(z) @ self.components.T + self.mean


def fit_pca(x, k: int) -> Pca:
    x = np.asarray(x, dtype=float)
    m = x.shape[1]
    if not 1 <= k <= m:
        raise ValueError(f"k must be in [1, {m}]")
    if x.shape[0] < 2:
        raise ValueError("need at least two records to fit PCA")
    mean = x.mean(axis=0)
    cov = np.cov(x - mean, rowvar=False).reshape(m, m)
    vals, vecs = np.linalg.eigh(cov)
    if vals[-1] <= 0:
        raise ValueError("zero-variance input")
    order = np.argsort(vals)[::-1][:k]
    vecs = vecs[:, order]
    # deterministic orientation: largest-magnitude loading positive
    signs = np.sign(vecs[np.argmax(np.abs(vecs), axis=0), np.arange(k)])
    return Pca(mean, vecs * signs, vals[order])


def pca_reduce(ds: LabeledDataset, k: int, fit_on: Optional[LabeledDataset] = None) -> LabeledDataset:
    """Project onto the top ``k`` principal axes of ``fit_on`` (default ``ds``)."""
    if k > ds.n_features:
        raise ValueError(f"k={k} exceeds {ds.n_features} features")
    pca = fit_pca((fit_on or ds).features, k)
    return ds.with_features(pca.transform(ds.features), f"pca:k={k}")


@dataclass(frozen=True)
class Scaler:
    """Affine map ``(x - shift) / scale`` with optional clipping to [0, 1]."""

    shift: np.ndarray
    scale: np.ndarray
    clip: bool = False

    def transform(self, x) -> np.ndarray:
        z = (np.asarray(x, dtype=float) - self.shift) / self.scale
        return np.clip(z, 0.0, 1.0) if self.clip else z


def fit_standardizer(x) -> Scaler:
    sd = x.std(axis=0)
    return Scaler(x.mean(axis=0), np.where(sd > 0, sd, 1.0))


def fit_minmax(x) -> Scaler:
    lo, hi = x.min(axis=0), x.max(axis=0)
    return Scaler(lo, np.where(hi > lo, hi - lo, 1.0), clip=True)


# -------------------------------------------------------------- balancing


def balance(ds: LabeledDataset, mode: str, seed, k: int = SMOTE_NEIGHBORS) -> LabeledDataset:
    """Equalize class counts by SMOTE oversampling or random undersampling."""
    n0, n1 = ds.class_counts()
    if n0 == 0 or n1 == 0:
        raise ValueError("balancing needs both classes")
    if mode not in ("oversample", "undersample"):
        raise ValueError(f"unknown balance mode {mode!r}")
    if n0 == n1:
        return ds
    rng = np.random.default_rng(seed)
    minority = int(n1 < n0)
    small = np.flatnonzero(ds.labels == minority)
    large = np.flatnonzero(ds.labels != minority)
    if mode == "undersample":
        keep = np.sort(np.concatenate([small, rng.choice(large, size=len(small), replace=False)]))
        return ds.take(keep, f"undersample seed={seed}")
    synth, _ = smote(ds.features[small], len(large) - len(small), rng, k)
    x = np.vstack([ds.features, synth])
    y = np.concatenate([ds.labels, np.full(len(synth), minority)])
    idx = np.concatenate([ds.index, np.full(len(synth), -1)])
    return LabeledDataset(x, y, ds.provenance + (f"smote k={k} seed={seed} added={len(synth)}",), idx)


def smote(x: np.ndarray, n_new: int, rng, k: int = SMOTE_NEIGHBORS):
    """``n_new`` points on segments from random rows to one of their ``k`` nearest neighbours.

    Returns the points and the (parent, neighbour) row pairs used.
    """
    r = len(x)
    if r == 1:
        return np.repeat(x, n_new, axis=0), np.zeros((n_new, 2), dtype=int)
    k = min(k, r - 1)
    dist = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=2)
    np.fill_diagonal(dist, np.inf)
    nbrs = np.argsort(dist, axis=1, kind="stable")[:, :k]
    parents = rng.integers(0, r, n_new)
    mates = nbrs[parents, rng.integers(0, k, n_new)]
    u = rng.random(n_new)[:, None]
    return x[parents] + u * (x[mates] - x[parents]), np.stack([parents, mates], axis=1)


# -------------------------------------------------------------- splitting


def _stratified_take(labels, frac: float, rng):
    """Per-class shuffled rows; ``round(frac * count)`` of each class go to the first part."""
    first, second = [], []
    for c in (0, 1):
        rows = rng.permutation(np.flatnonzero(labels == c))
        n = int(round(frac * len(rows)))
        first.append(rows[:n])
        second.append(rows[n:])
    return rng.permutation(np.concatenate(first)), rng.permutation(np.concatenate(second))


def split(ds: LabeledDataset, seed, holdout: float = 0.2) -> SplitBundle:
    """Stratified shuffle: ``holdout`` to validation, then ``holdout`` of the rest to test."""
    if len(ds) < 5:
        raise ValueError("need at least 5 records to split")
    rng = np.random.default_rng(seed)
    val, rest = _stratified_take(ds.labels, holdout, rng)
    test_rel, train_rel = _stratified_take(ds.labels[rest], holdout, rng)
    tag = f"split seed={seed}"
    return SplitBundle(
        ds.take(rest[train_rel], tag + " part=train"),
        ds.take(rest[test_rel], tag + " part=test"),
        ds.take(val, tag + " part=validation"),
    )


# ---------------------------------------------------------------- pipeline


@dataclass(frozen=True)
class PrepConfig:
    q: int = 2
    balance: Optional[str] = None  # None, "oversample" or "undersample"
    n_components: Optional[int] = None  # default: 2**q when there are more features
    standardize: bool = True
    subsample: Optional[int] = None


def prepare(ds: LabeledDataset, cfg: PrepConfig, seed) -> SplitBundle:
    """Split, balance the training part, then scale and reduce with train-fitted maps."""
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(3)]
    if cfg.subsample is not None:
        ds = subsample(ds, cfg.subsample, seeds[0])
    bundle = split(ds, seeds[1])
    train = bundle.train
    if cfg.balance is not None:
        train = balance(train, cfg.balance, seeds[2])
    parts = [train, bundle.test, bundle.validation]
    k = cfg.n_components or min(ds.n_features, 2**cfg.q)
    if k > 2**cfg.q:
        raise ValueError(f"{k} components do not fit in {2**cfg.q} amplitudes")
    if cfg.standardize:
        st = fit_standardizer(train.features)
        parts = [p.with_features(st.transform(p.features), "standardize") for p in parts]
    if k < ds.n_features:
        pca = fit_pca(parts[0].features, k)
        parts = [p.with_features(pca.transform(p.features), f"pca:k={k}") for p in parts]
    mm = fit_minmax(parts[0].features)
    parts = [p.with_features(_nonzero_rows(mm.transform(p.features)), "minmax") for p in parts]
    return SplitBundle(*parts)


def _nonzero_rows(x: np.ndarray) -> np.ndarray:
    # a record clipped to the origin cannot be amplitude-encoded; give it equal weights
    x = x.copy()
    x[~x.any(axis=1)] = 1.0
    return x
