import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_dataset
from qubovqa.data import (
    LabeledDataset, PrepConfig, balance, fit_minmax, fit_pca, load_csv, load_iris, pca_reduce, prepare, smote,
    split, subsample,
)


def test_iris_shape_and_classes():
    ds = load_iris()
    assert len(ds) == 100 and ds.n_features == 4
    assert ds.class_counts() == (50, 50)
    assert "iris" in ds.provenance[0]


def test_heart_style_csv(tmp_path):
    p = tmp_path / "heart.csv"
    p.write_text("age,chol,ca,num\n63,233,0,0\n67,286,3,2\n41,204,?,0\n56,236,0,1\n57,354,0,4\n")
    ds = load_csv(p, "num", positive_classes=[1, 2, 3, 4])
    assert len(ds) == 4
    assert ds.labels.tolist() == [0, 1, 1, 1]
    assert ds.index.tolist() == [0, 1, 3, 4]
    assert "dropped_missing=1" in ds.provenance[0]


def test_load_csv_errors(tmp_path):
    with pytest.raises(ValueError):
        load_csv(tmp_path / "missing.csv", "y", [1])
    p = tmp_path / "t.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        load_csv(p, "y", [1])
    p.write_text("a,name,y\n1,x,1\n")
    with pytest.raises(ValueError):
        load_csv(p, "y", [1])


def test_dataset_validation():
    with pytest.raises(ValueError):
        LabeledDataset(np.ones((2, 2)), np.array([0, 2]))
    with pytest.raises(ValueError):
        LabeledDataset(np.array([[np.nan, 1.0]]), np.array([0]))
    with pytest.raises(ValueError):
        LabeledDataset(np.ones((2, 2)), np.array([0]))


def test_pca_isometry(rng):
    x = rng.normal(size=(30, 4))
    pca = fit_pca(x, 4)
    z = pca.transform(x)
    for i, j in rng.integers(0, 30, (20, 2)):
        assert abs(np.linalg.norm(z[i] - z[j]) - np.linalg.norm(x[i] - x[j])) < 1e-9
    assert np.allclose(pca.inverse(z), x, atol=1e-9)


def test_pca_rank_one(rng):
    t = rng.normal(size=40)
    direction = np.array([1.0, 2.0, -2.0]) / 3
    x = t[:, None] * direction + 5.0
    pca = fit_pca(x, 3)
    assert pca.eigenvalues[0] > 0.1 and np.all(np.abs(pca.eigenvalues[1:]) < 1e-10)
    assert abs(abs(pca.components[:, 0] @ direction) - 1) < 1e-9


def test_pca_variance_is_top_eigenvalue(rng):
    x = rng.normal(size=(50, 5)) @ rng.normal(size=(5, 5))
    pca = fit_pca(x, 2)
    z = pca.transform(x)
    assert abs(np.var(z[:, 0], ddof=1) - pca.eigenvalues[0]) < 1e-9 * pca.eigenvalues[0]
    assert pca.eigenvalues[0] >= pca.eigenvalues[1]
    with pytest.raises(ValueError):
        fit_pca(np.ones((5, 2)), 1)
    with pytest.raises(ValueError):
        fit_pca(x, 6)


def test_pca_reduce_fit_on(rng):
    ds = random_dataset(20, 6, 0)
    other = random_dataset(20, 6, 1)
    a = pca_reduce(ds, 4, fit_on=other)
    assert a.n_features == 4 and a.provenance[-1] == "pca:k=4"
    assert np.allclose(a.features, fit_pca(other.features, 4).transform(ds.features))


def test_balance_examples(rng):
    even = random_dataset(10, 3, 0)
    assert balance(even, "oversample", 0) is even
    x = rng.uniform(size=(14, 3))
    y = np.array([0] * 10 + [1] * 4)
    ds = LabeledDataset(x, y)
    over = balance(ds, "oversample", 1)
    assert over.class_counts() == (10, 10)
    assert np.array_equal(over.features[:14], x)
    assert (over.index[14:] == -1).all()
    under = balance(ds, "undersample", 1)
    assert under.class_counts() == (4, 4)
    assert set(np.flatnonzero(y == 1)) <= set(under.index.tolist())
    with pytest.raises(ValueError):
        balance(ds, "mixup", 0)
    with pytest.raises(ValueError):
        balance(LabeledDataset(x[:3], [0, 0, 0]), "oversample", 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(1, 20), st.integers(0, 1000))
def test_smote_convexity(r, n_new, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(r, 3))
    pts, pairs = smote(x, n_new, rng)
    for p, (i, j) in zip(pts, pairs):
        seg = x[j] - x[i]
        u = (p - x[i]) @ seg / (seg @ seg)
        assert -1e-12 <= u <= 1 + 1e-12
        assert np.allclose(x[i] + u * seg, p)


@pytest.mark.parametrize("seed", [0, 1])
def test_split_sizes_and_partition(seed):
    ds = load_iris()
    b = split(ds, seed)
    assert b.sizes() == (64, 16, 20)
    ids = [set(p.index.tolist()) for p in (b.train, b.test, b.validation)]
    assert not (ids[0] & ids[1] or ids[0] & ids[2] or ids[1] & ids[2])
    assert set().union(*ids) == set(range(100))
    for part in (b.train, b.test, b.validation):
        n0, n1 = part.class_counts()
        assert abs(n0 - n1) <= 1


def test_split_seeds_differ():
    ds = load_iris()
    assert split(ds, 0).train.index.tolist() != split(ds, 1).train.index.tolist()
    assert split(ds, 0).train.index.tolist() == split(ds, 0).train.index.tolist()


def test_subsample_stratified():
    ds = random_dataset(40, 3, 0)
    s = subsample(ds, 20, 3)
    assert len(s) == 20 and abs(s.class_counts()[0] - s.class_counts()[1]) <= 1
    with pytest.raises(ValueError):
        subsample(ds, 41, 0)


def test_prepare_ranges_and_reduction(rng):
    x = rng.normal(size=(60, 7))
    y = (x[:, 0] > 0).astype(int)
    b = prepare(LabeledDataset(x, y), PrepConfig(q=2), seed=4)
    for part in (b.train, b.test, b.validation):
        assert part.n_features == 4
        assert part.features.min() >= 0 and part.features.max() <= 1
        assert part.features.any(axis=1).all()
    assert np.allclose(b.train.features.max(axis=0), 1.0)


def test_prepare_no_leakage(rng):
    x = rng.normal(size=(50, 6))
    y = np.arange(50) % 2
    cfg = PrepConfig(q=2)
    first = prepare(LabeledDataset(x, y), cfg, seed=2)
    x2 = x.copy()
    x2[first.validation.index] = rng.normal(size=(len(first.validation), 6)) * 100
    second = prepare(LabeledDataset(x2, y), cfg, seed=2)
    assert np.array_equal(first.train.features, second.train.features)
    assert np.array_equal(first.test.features, second.test.features)


def test_prepare_balances_train_only():
    x = np.random.default_rng(0).normal(size=(50, 4))
    y = np.array([1] * 15 + [0] * 35)
    b = prepare(LabeledDataset(x, y), PrepConfig(q=2, balance="oversample"), seed=1)
    n0, n1 = b.train.class_counts()
    assert n0 == n1
    assert (b.test.index >= 0).all() and (b.validation.index >= 0).all()


def test_minmax_clips_unseen():
    mm = fit_minmax(np.array([[0.0, 1.0], [2.0, 3.0]]))
    assert mm.transform([[3.0, 0.0]]).tolist() == [[1.0, 0.0]]
