import numpy
import pytest
from pytest import approx

from paddywatch.trees import (
    LEAF, Tree, boost, boosted_scores, forest_votes, grow_forest, grow_tree, importance,
    logistic_loss)


def blobs(n=120, n_classes=2, n_noise=3, seed=0):
    """Class c centered at 3*c on feature 0; other features are noise."""
    rng = numpy.random.default_rng(seed)
    y = numpy.arange(n) % n_classes
    X = rng.normal(0.0, 1.0, (n, 1 + n_noise))
    X[:, 0] = 3.0 * y + rng.normal(0.0, 0.4, n)
    return X, y


def test_grow_tree_separates():
    X = numpy.array([[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]])
    Y = numpy.eye(2)[[0, 0, 0, 1, 1, 1]]
    tree = grow_tree(X, Y, max_depth=3, min_leaf=1)
    assert tree.n_nodes == 3
    assert tree.feature[0] == 0
    assert 2.0 < tree.threshold[0] < 10.0
    assert numpy.array_equal(tree.predict_value(X), Y)
    assert tree.gain[0] > 0


def test_grow_tree_depth_zero_gives_proportions():
    X = numpy.arange(8.0)[:, None]
    Y = numpy.eye(2)[[0, 0, 0, 1, 1, 1, 1, 1]]
    tree = grow_tree(X, Y, max_depth=0, min_leaf=1)
    assert tree.n_nodes == 1
    assert list(tree.value[0]) == approx([3 / 8, 5 / 8])


@pytest.mark.parametrize('min_leaf', [1, 3, 7])
def test_grow_tree_min_leaf(min_leaf):
    X, y = blobs(60, n_classes=3, seed=min_leaf)
    Y = numpy.eye(3)[y]
    tree = grow_tree(X, Y, max_depth=10, min_leaf=min_leaf)
    counts = numpy.bincount(tree.apply(X), minlength=tree.n_nodes)
    for leaf in tree.leaves:
        assert counts[leaf] >= min_leaf


def test_grow_tree_ignores_constant_feature():
    X = numpy.ones((10, 1))
    Y = numpy.eye(2)[[0, 1] * 5]
    assert grow_tree(X, Y, max_depth=5, min_leaf=1).n_nodes == 1


def test_tree_save_restore():
    X, y = blobs(40)
    tree = grow_tree(X, numpy.eye(2)[y], max_depth=4, min_leaf=2)
    restored = Tree.restore(tree.save())
    assert numpy.array_equal(restored.apply(X), tree.apply(X))
    assert numpy.array_equal(restored.value, tree.value)
    assert restored.feature[tree.leaves[0]] == LEAF


def test_forest_deterministic_across_workers():
    X, y = blobs(80, n_classes=3)
    params = dict(n_classes=3, n_trees=8, max_depth=4, min_leaf=2, max_features=2, seed=5)
    single = grow_forest(X, y, workers=1, **params)
    pooled = grow_forest(X, y, workers=2, **params)
    for a, b in zip(single, pooled):
        assert numpy.array_equal(a.feature, b.feature)
        assert numpy.array_equal(a.threshold, b.threshold)
    other = grow_forest(X, y, workers=1, **dict(params, seed=6))
    assert any(not numpy.array_equal(a.threshold, b.threshold) for a, b in zip(single, other))


def test_forest_votes():
    X, y = blobs(90, n_classes=3)
    trees = grow_forest(X, y, 3, 15, 5, 1, 2, seed=1)
    votes = forest_votes(trees, X, 3)
    assert votes.sum(axis=1) == approx(numpy.ones(90))
    assert numpy.mean(numpy.argmax(votes, axis=1) == y) > 0.9


def test_logistic_loss():
    assert logistic_loss(numpy.zeros(4), numpy.array([0, 1, 0, 1.0])) == approx(numpy.log(2))


@pytest.mark.parametrize('learning_rate', [0.05, 0.3, 1.0])
@pytest.mark.parametrize('n_classes', [2, 3])
def test_boost_loss_never_increases(learning_rate, n_classes):
    X, y = blobs(90, n_classes=n_classes, seed=3)
    init, rounds, curve = boost(X, y, n_classes, n_trees=15, max_depth=2,
                                learning_rate=learning_rate, min_leaf=3)
    assert len(rounds) == 15
    assert len(rounds[0]) == (1 if n_classes == 2 else n_classes)
    assert len(curve) == 16
    assert all(later <= earlier + 1e-12 for earlier, later in zip(curve, curve[1:]))
    assert curve[-1] < curve[0]


def test_boost_prior_init():
    X, y = blobs(40)
    y = numpy.array([1] * 30 + [0] * 10)
    init, _, _ = boost(X, y, 2, n_trees=0, max_depth=2, learning_rate=0.1, min_leaf=1)
    assert init[0] == approx(numpy.log(3.0))


@pytest.mark.parametrize('n_classes', [2, 3])
def test_boosted_scores(n_classes):
    X, y = blobs(90, n_classes=n_classes, seed=4)
    init, rounds, _ = boost(X, y, n_classes, n_trees=20, max_depth=2,
                            learning_rate=0.3, min_leaf=2)
    scores = boosted_scores(init, rounds, 0.3, X)
    assert scores.shape == (90, n_classes)
    assert scores.sum(axis=1) == approx(numpy.ones(90))
    assert numpy.mean(numpy.argmax(scores, axis=1) == y) > 0.9


def test_importance():
    X, y = blobs(100, n_noise=4)
    trees = grow_forest(X, y, 2, 10, 3, 1, 5, seed=2)
    gains = importance(trees, X.shape[1])
    assert gains.sum() == approx(1.0)
    assert numpy.argmax(gains) == 0
    assert importance([], 3).sum() == 0
