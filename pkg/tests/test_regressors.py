import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import knn_full_scan, normal_equations_exact, sdr, stump_candidates
from wsnfault import regressors
from wsnfault.regressors import ALGORITHMS, ArityMismatch, Dataset, EmptyDataset, UnknownAlgorithm
from wsnfault.regressors.base import ols, stable_mean
from wsnfault.regressors.knn import KTooLarge, fit_knn
from wsnfault.regressors.linear import fit_linear_regression
from wsnfault.regressors.m5p import adjusted_error, best_sdr_split, fit_m5p
from wsnfault.regressors.stump import fit_decision_stump
from wsnfault.regressors.table import fit_decision_table


def random_dataset(rng, n_min=2, n_max=50, p_max=4, integer=False):
    p = int(rng.integers(1, p_max + 1))
    n = int(rng.integers(max(n_min, p + 2), n_max + 1))
    if integer:
        X = rng.integers(0, 6, size=(n, p)).astype(float)
    else:
        X = rng.uniform(-10, 10, size=(n, p))
    y = rng.normal(size=n) * 5 + X @ rng.normal(size=p)
    return Dataset(X, y)


def oracle_mean(values):
    base = min(values)
    return base + math.fsum(v - base for v in values) / len(values)


# -- linear regression ---------------------------------------------------------


def test_ols_matches_exact_normal_equations():
    rng = np.random.default_rng(11)
    for _ in range(100):
        d = random_dataset(rng)
        m = fit_linear_regression(d)
        want = normal_equations_exact(d.X.tolist(), d.y.tolist())
        assert abs(m.intercept - want[0]) <= 1e-8
        assert np.max(np.abs(np.array(m.coef) - want[1:])) <= 1e-8


def test_linear_exact_small_case():
    d = Dataset.from_rows([([0.0], 1.0), ([1.0], 3.0), ([2.0], 5.0)])
    m = fit_linear_regression(d)
    assert m.intercept == 1.0 and m.coef == (2.0,)
    assert m.predict([10.0]) == pytest.approx(21.0)


def test_ols_rank_deficient_uses_ridge_or_none():
    X = np.column_stack([np.arange(10.0), 2 * np.arange(10.0)])
    y = 3 * np.arange(10.0)
    assert ols(X, y, ridge=None) is None
    b0, coef = ols(X, y)
    assert np.allclose(X @ coef + b0, y, atol=1e-6)


# -- decision stump -----------------------------------------------------------


def training_sse(model, d):
    return math.fsum((model.predict(x) - t) ** 2 for x, t in zip(d.X, d.y))


def test_stump_sse_equals_exhaustive_minimum():
    rng = np.random.default_rng(12)
    for i in range(100):
        d = random_dataset(rng, integer=i % 2 == 0)
        cands = stump_candidates(d.X.tolist(), d.y.tolist())
        unsplit = sum((t - d.y.mean()) ** 2 for t in d.y)
        best = min([c[2] for c in cands] + [unsplit])
        s = fit_decision_stump(d)
        assert training_sse(s, d) == pytest.approx(best, rel=1e-9, abs=1e-9)
        if s.feature is not None:
            mine = [c for c in cands if c[0] == s.feature and c[1] == s.threshold]
            assert mine and mine[0][2] == pytest.approx(best, rel=1e-9, abs=1e-9)


def test_stump_ties_prefer_lowest_feature_then_threshold():
    # both features split the targets perfectly at the same place
    d = Dataset.from_rows([([0.0, 0.0], 0.0), ([1.0, 1.0], 0.0), ([2.0, 2.0], 5.0), ([3.0, 3.0], 5.0)])
    s = fit_decision_stump(d)
    assert s.feature == 0 and s.threshold == 1.5
    assert (s.left_value, s.right_value) == (0.0, 5.0)
    assert s.predict([1.4, 9.0]) == 0.0 and s.predict([1.5, -9.0]) == 5.0


def test_stump_constant_features_is_leaf():
    d = Dataset.from_rows([([1.0], 1.0), ([1.0], 3.0)])
    s = fit_decision_stump(d)
    assert s.feature is None and s.predict([7.0]) == 2.0


# -- k-NN -----------------------------------------------------------------------


@pytest.mark.parametrize("k", [1, 3, 5])
def test_knn_matches_full_scan(k):
    rng = np.random.default_rng(13 + k)
    for _ in range(100):
        d = random_dataset(rng, n_min=k)
        m = fit_knn(d, k)
        for _ in range(3):
            q = rng.uniform(-12, 12, size=d.n_features)
            _, targets = knn_full_scan(d.X.tolist(), d.y.tolist(), q.tolist(), k)
            assert m.predict(q) == oracle_mean(targets)
            idx, _ = knn_full_scan(m.X.tolist(), m.y.tolist(), q.tolist(), k)
            assert m.neighbours(q).tolist() == idx


def test_knn_tie_prefers_lower_index():
    d = Dataset.from_rows([([0.0], 1.0), ([2.0], 2.0), ([4.0], 3.0)])
    assert fit_knn(d, 1).predict([1.0]) == 1.0
    assert fit_knn(d, 1).predict([3.0]) == 2.0


def test_knn_k_too_large():
    d = Dataset.from_rows([([0.0], 1.0), ([1.0], 2.0)])
    with pytest.raises(KTooLarge):
        fit_knn(d, 3)


# -- decision table --------------------------------------------------------------


def test_table_learns_step_function():
    xs = np.repeat(np.arange(10.0), 5)
    noise = np.linspace(0, 1, xs.size)
    d = Dataset(np.column_stack([xs, noise]), np.where(xs < 5, 1.0, 9.0))
    t = fit_decision_table(d)
    assert t.selected == (0,)
    assert t.predict([2.0, 0.3]) == 1.0 and t.predict([8.0, 0.3]) == 9.0


def test_table_unseen_cell_falls_back_to_global_mean():
    xs = np.array([0.0, 0.0, 0.0, 10.0, 10.0, 10.0])
    d = Dataset(xs[:, None], np.array([1.0, 1.0, 1.0, 3.0, 3.0, 3.0]))
    t = fit_decision_table(d)
    assert t.predict([5.0]) == 2.0


# -- M5P ----------------------------------------------------------------------------


def test_sdr_split_matches_oracle():
    rng = np.random.default_rng(14)
    for _ in range(30):
        d = random_dataset(rng, n_min=12)
        split = best_sdr_split(d.X, d.y, 4)
        if split is None:
            continue
        score, f, thr = split
        left = d.y[d.X[:, f] < thr].tolist()
        right = d.y[d.X[:, f] >= thr].tolist()
        assert len(left) >= 4 and len(right) >= 4
        assert score == pytest.approx(sdr(d.y.tolist(), [left, right]), rel=1e-9, abs=1e-12)


def test_m5p_exact_on_linear_data():
    rng = np.random.default_rng(15)
    for _ in range(100):
        n = int(rng.integers(10, 120))
        x = rng.uniform(-5, 5, size=n)
        y = rng.normal() * 4 + rng.choice([-1, 1]) * rng.uniform(0.1, 5) * x
        m = fit_m5p(Dataset(x[:, None], y))
        assert len(m.leaves()) == 1
        assert np.max(np.abs(m.predict_many(x[:, None]) - y)) <= 1e-8


def test_m5p_recovers_line():
    x = np.arange(100.0)
    m = fit_m5p(Dataset(x[:, None], 2 * x + 1))
    assert len(m.leaves()) == 1
    assert np.max(np.abs(m.predict_many(x[:, None]) - (2 * x + 1))) <= 1e-8


def test_m5p_two_clusters_root_split():
    x = np.concatenate([np.linspace(-5, -0.5, 20), np.linspace(0.5, 5, 20)])
    y = np.where(x < 0, 0.05 * x, 10 + 0.05 * x)
    m = fit_m5p(Dataset(x[:, None], y))
    assert m.root.feature == 0 and -0.5 <= m.root.threshold <= 0.5


def test_m5p_piecewise_linear_splits():
    x = np.linspace(0, 10, 200)
    y = np.where(x < 5, x, 20 - 3 * x)
    m = fit_m5p(Dataset(x[:, None], y))
    assert len(m.leaves()) >= 2
    assert np.max(np.abs(m.predict_many(x[:, None]) - y)) < 0.5


def test_adjusted_error_penalty():
    assert adjusted_error(1.0, 10, 2) == pytest.approx(12 / 8)
    assert adjusted_error(1.0, 2, 3) == pytest.approx(10.0)


# -- shared contract ----------------------------------------------------------------


@pytest.mark.parametrize("algo", ALGORITHMS)
def test_constant_targets_predict_constant(algo):
    rng = np.random.default_rng(16)
    for c in (0.1, -3.7, 25.035, 1e6 + 0.3):
        X = rng.uniform(-1, 1, size=(30, 5))
        m = regressors.fit(algo, Dataset(X, np.full(30, c)))
        for q in rng.uniform(-2, 2, size=(25, 5)):
            assert m.predict(q) == c


@pytest.mark.parametrize("algo", ALGORITHMS)
@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**16))
def test_permutation_invariance(algo, seed):
    rng = np.random.default_rng(seed)
    d = random_dataset(rng, n_min=10, integer=True)
    perm = rng.permutation(d.n_rows)
    a = regressors.fit(algo, d)
    b = regressors.fit(algo, Dataset(d.X[perm], d.y[perm]))
    for q in rng.uniform(-1, 7, size=(10, d.n_features)):
        assert a.predict(q) == pytest.approx(b.predict(q), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("algo", ALGORITHMS)
def test_serialisation_roundtrip_bit_identical(algo, tmp_path):
    rng = np.random.default_rng(17)
    d = random_dataset(rng, n_min=30)
    m = regressors.fit(algo, d)
    path = tmp_path / "m.model"
    regressors.save_model(m, path)
    doc = json.loads(path.read_text())
    assert doc["format"] == "wsnfault-model" and doc["algorithm"] == algo
    back = regressors.load_model(path)
    for q in rng.uniform(-12, 12, size=(50, d.n_features)):
        assert back.predict(q) == m.predict(q)


@pytest.mark.parametrize("algo", ALGORITHMS)
def test_arity_and_empty_errors(algo):
    with pytest.raises(EmptyDataset):
        regressors.fit(algo, Dataset(np.zeros((0, 2)), np.zeros(0)))
    m = regressors.fit(algo, Dataset.from_rows([([0.0, 1.0], 1.0), ([1.0, 0.0], 2.0), ([2.0, 2.0], 3.0)]))
    with pytest.raises(ArityMismatch):
        m.predict([1.0])


def test_resolve_algorithm():
    assert regressors.resolve_algorithm("stump") == "DecisionStump"
    assert regressors.resolve_algorithm("IBk") == "KNN"
    with pytest.raises(UnknownAlgorithm):
        regressors.resolve_algorithm("svm")


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30))
def test_stable_mean_order_free_and_exact_on_constants(vals):
    arr = np.array(vals)
    assert stable_mean(arr) == stable_mean(arr[::-1])
    assert stable_mean(np.full(len(vals), vals[0])) == vals[0]
