import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adriana.errors import SeriesTooShort, SingularDesign
from adriana.stationarity import difference
from adriana.surrogates import linear, trees

from conftest import ar1


def normal_equations(X, y):
    A = np.column_stack([np.ones(len(X)), X])
    return np.linalg.solve(A.T @ A, A.T @ y)


def test_ols_lag1_exact_line():
    x = np.linspace(-3, 5, 20)
    a, b = linear.ols_lag1(x, 2 * x + 1)
    assert a == pytest.approx(1, abs=1e-10) and b == pytest.approx(2, abs=1e-10)
    with pytest.raises(SingularDesign):
        linear.ols_lag1(np.ones(5), np.arange(5.0))


def test_ols_matches_normal_equations():
    g = np.random.default_rng(0)
    for _ in range(100):
        n, d = int(g.integers(5, 40)), int(g.integers(1, 4))
        X, y = g.normal(size=(n, d)), g.normal(size=n)
        c, coef, _ = linear.ols(X, y)
        ref = normal_equations(X, y)
        assert np.allclose(np.r_[c, coef], ref, atol=1e-8)
        a, b = linear.ols_lag1(X[:, 0], y)
        ref1 = normal_equations(X[:, :1], y)
        assert np.allclose([a, b], ref1, atol=1e-8)


def test_ols_rank_deficient():
    X = np.column_stack([np.arange(6.0), 2 * np.arange(6.0)])
    with pytest.raises(SingularDesign):
        linear.ols(X, np.arange(6.0))


def test_ar_recovers_phi():
    c, phi, _, _ = linear.fit_ar(ar1(2000, 0.8, seed=1), 1)
    assert phi[0] == pytest.approx(0.8, abs=0.05)


def test_ar_white_noise():
    _, phi, _, _ = linear.fit_ar(np.random.default_rng(2).normal(size=2000), 3)
    assert np.all(np.abs(phi) < 0.1)


def test_ar1_equals_lag1_regression():
    x = ar1(300, 0.5, seed=3)
    c, phi, _, _ = linear.fit_ar(x, 1)
    a, b = linear.ols_lag1(x[:-1], x[1:])
    assert c == pytest.approx(a, abs=1e-10) and phi[0] == pytest.approx(b, abs=1e-10)


def test_ar_too_short():
    with pytest.raises(SeriesTooShort):
        linear.fit_ar(np.arange(6.0), 3)


def test_arima_110_is_ar1_on_differences():
    x = np.cumsum(ar1(500, 0.4, seed=4)) + 3.0
    c, phi, rss, n, aic = linear.fit_arima_110(x)
    c2, phi2, rss2, n2 = linear.fit_ar(difference(x, 1)[0], 1)
    assert (c, phi, rss, n) == pytest.approx((c2, phi2[0], rss2, n2))
    assert aic == pytest.approx(n * np.log(rss / n) + 4)
    with pytest.raises(SeriesTooShort):
        linear.fit_arima_110(np.arange(9.0))


def test_arima_random_walk_phi_near_zero():
    walk = np.cumsum(np.random.default_rng(5).normal(size=2000))
    assert abs(linear.fit_arima_110(walk)[1]) < 0.05


def test_ar_order_selection():
    g = np.random.default_rng(6)
    e = g.normal(size=3000)
    x = np.zeros(3000)
    for t in range(2, 3000):
        x[t] = 0.5 * x[t - 1] - 0.3 * x[t - 2] + e[t]
    assert linear.select_ar_order(x, 6) == 2


def test_svr_near_zero_targets_keep_zero_weights():
    g = np.random.default_rng(7)
    X = g.normal(size=(50, 3))
    y = g.uniform(-0.1, 0.1, 50)
    w, b, trace = linear.fit_svr_linear(X, y, epsilon=0.5)
    assert np.allclose(w, 0) and b == 0
    assert trace[-1] <= trace[0]


def test_svr_fits_linear_data():
    g = np.random.default_rng(8)
    X = g.random((200, 3))
    w_true = np.array([0.3, -0.2, 0.5])
    y = X @ w_true + 0.1
    w, b, trace = linear.fit_svr_linear(X[:150], y[:150], epsilon=0.01, iterations=8000)
    pred = X[150:] @ w + b
    assert np.sqrt(np.mean((pred - y[150:]) ** 2)) < 0.05
    assert trace[-1] <= trace[0]
    assert all(a >= b for a, b in zip(trace, trace[1:]))


# --- trees -------------------------------------------------------------------

def brute_force_tree(X, y, depth, min_leaf=1):
    """Exhaustive CART: every feature and every observed value as threshold, at every node."""
    def rec(idx, d):
        ys = y[idx]
        leaf = {"value": ys.mean()}
        if d >= depth or len(idx) < 2 or np.all(ys == ys[0]):
            return leaf
        best = None
        for f in range(X.shape[1]):
            for thr in sorted(set(X[idx, f])):
                left = idx[X[idx, f] < thr]
                right = idx[X[idx, f] >= thr]
                if len(left) < min_leaf or len(right) < min_leaf:
                    continue
                sse = ((y[left] - y[left].mean()) ** 2).sum() + ((y[right] - y[right].mean()) ** 2).sum()
                if best is None or sse < best[0] - 1e-12 * max(1.0, abs(best[0])):
                    best = (sse, f, thr, left, right)
        if best is None or not best[0] < ((ys - ys.mean()) ** 2).sum():
            return leaf
        _, f, thr, left, right = best
        return {"f": f, "thr": thr, "l": rec(left, d + 1), "r": rec(right, d + 1)}

    root = rec(np.arange(len(y)), 0)

    def predict(x):
        n = root
        while "f" in n:
            n = n["l"] if x[n["f"]] < n["thr"] else n["r"]
        return n["value"]
    return predict


def test_tree_matches_brute_force():
    g = np.random.default_rng(9)
    for _ in range(20):
        X = np.round(g.normal(size=(10, 3)), 1)
        y = g.normal(size=10)
        t = trees.fit_tree(X, y, max_depth=2)
        oracle = brute_force_tree(X, y, 2)
        Q = np.round(g.normal(size=(30, 3)), 1)
        assert np.allclose(t.predict(np.vstack([X, Q])), [oracle(q) for q in np.vstack([X, Q])])


def test_tree_constant_targets():
    t = trees.fit_tree(np.random.default_rng(0).normal(size=(12, 2)), np.full(12, 4.2), max_depth=5)
    assert t.n_nodes == 1 and t.predict([[0.0, 0.0]])[0] == pytest.approx(4.2)


def test_tree_step_function():
    x = np.array([-3.0, -2, -0.5, 0.5, 1, 4])
    y = np.where(x > 0, 10.0, 0.0)
    t = trees.fit_tree(x[:, None], y, max_depth=1)
    assert t.feature[0] == 0 and -0.5 < t.threshold[0] <= 0.5
    assert sorted(t.value[t.feature == trees.LEAF]) == [0.0, 10.0]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5), st.integers(2, 8), st.integers(1, 4))
def test_tree_respects_constraints(seed, depth, min_split, min_leaf):
    g = np.random.default_rng(seed)
    X, y = g.normal(size=(40, 3)), g.normal(size=40)
    t = trees.fit_tree(X, y, depth, min_split, min_leaf)
    assert t.depth <= depth
    leaf_of = np.array([_leaf(t, x) for x in X])
    counts = np.bincount(leaf_of, minlength=t.n_nodes)
    assert all(counts[k] >= min_leaf for k in range(t.n_nodes) if t.feature[k] == trees.LEAF)


def _leaf(t, x):
    n = 0
    while t.feature[n] != trees.LEAF:
        n = t.left[n] if x[t.feature[n]] < t.threshold[n] else t.right[n]
    return n


def test_tree_serialization_roundtrip():
    g = np.random.default_rng(1)
    X, y = g.normal(size=(30, 2)), g.normal(size=30)
    t = trees.fit_tree(X, y, 3)
    t2 = trees.Tree.from_mapping(t.to_mapping())
    assert np.array_equal(t.predict(X), t2.predict(X))


def test_forest_single_tree_without_bootstrap():
    g = np.random.default_rng(2)
    X, y = g.normal(size=(40, 4)), g.normal(size=40)
    (f,) = trees.fit_forest(X, y, estimators=1, max_depth=3, max_features=None, bootstrap=False)
    assert np.array_equal(f.predict(X), trees.fit_tree(X, y, 3).predict(X))


def test_forest_variance_reduction_and_determinism():
    g = np.random.default_rng(3)
    X, y = g.normal(size=(200, 4)), g.normal(size=200)
    Q = g.normal(size=(300, 4))
    ts = trees.fit_forest(X, y, estimators=30, max_depth=6, seed=5)
    ens = trees.predict_forest(ts, Q)
    assert np.var(ens) <= max(np.var(t.predict(Q)) for t in ts)
    again = trees.predict_forest(trees.fit_forest(X, y, estimators=30, max_depth=6, seed=5), Q)
    assert np.array_equal(ens, again)


def test_boosting_properties():
    x = np.linspace(-1, 1, 60)[:, None]
    y = (x[:, 0] > 0.2).astype(float) * 3
    base, ts = trees.fit_boosted(x, y, estimators=25, learning_rate=0.0)
    assert np.allclose(trees.predict_boosted(base, ts, 0.0, x), y.mean())
    base, ts = trees.fit_boosted(x, y, estimators=25, learning_rate=0.1)
    rmse = [np.sqrt(np.mean((trees.predict_boosted(base, ts[:m], 0.1, x) - y) ** 2))
            for m in range(26)]
    assert all(a >= b - 1e-12 for a, b in zip(rmse, rmse[1:]))
    assert rmse[-1] < np.std(y)
