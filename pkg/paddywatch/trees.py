"""
CART decision trees and the two ensembles built from them.

Trees are stored as flat arrays (one entry per node) so they pickle cheaply
between worker processes and serialize losslessly to JSON. A sample goes to
the left child when x[feature] <= threshold.

Random forest: Gini splits on bootstrap samples with a random feature subset
per split; prediction is a majority vote.
Gradient boosting: logistic loss with Newton leaf values and backtracking,
so the training loss never increases; more than two classes are handled by
one-vs-rest boosters normalized with softmax.
"""

import logging
from multiprocessing import pool
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple  # noqa

import numpy
import scipy.special

from .typing import FloatArray


LEAF = -1
MAX_BACKTRACK_HALVINGS = 30
MIN_HESSIAN = 1e-12
PROBABILITY_FLOOR = 1e-12


class Tree:
    def __init__(
                self,
                feature: Sequence[int],
                threshold: Sequence[float],
                left: Sequence[int],
                right: Sequence[int],
                value: Sequence[Sequence[float]],
                gain: Sequence[float]
            ) -> None:
        self.feature = numpy.asarray(feature, dtype=numpy.int64)
        self.threshold = numpy.asarray(threshold, dtype=float)
        self.left = numpy.asarray(left, dtype=numpy.int64)
        self.right = numpy.asarray(right, dtype=numpy.int64)
        self.value = numpy.asarray(value, dtype=float)
        self.gain = numpy.asarray(gain, dtype=float)

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def leaves(self) -> FloatArray:
        return numpy.flatnonzero(self.feature == LEAF)

    def apply(self, X: FloatArray) -> FloatArray:
        """Index of the leaf reached by every row of X."""
        node = numpy.zeros(X.shape[0], dtype=numpy.int64)
        active = self.feature[node] != LEAF
        while active.any():
            idx = numpy.flatnonzero(active)
            current = node[idx]
            go_left = X[idx, self.feature[current]] <= self.threshold[current]
            node[idx] = numpy.where(go_left, self.left[current], self.right[current])
            active[idx] = self.feature[node[idx]] != LEAF
        return node

    def predict_value(self, X: FloatArray) -> FloatArray:
        return self.value[self.apply(X)]

    def feature_gains(self, n_features: int) -> FloatArray:
        gains = numpy.zeros(n_features)
        internal = self.feature != LEAF
        numpy.add.at(gains, self.feature[internal], self.gain[internal])
        return gains

    def save(self) -> Dict[str, Any]:
        return {
            'feature': self.feature.tolist(),
            'threshold': self.threshold.tolist(),
            'left': self.left.tolist(),
            'right': self.right.tolist(),
            'value': self.value.tolist(),
            'gain': self.gain.tolist(),
        }

    @classmethod
    def restore(cls, data: Mapping[str, Any]) -> 'Tree':
        return cls(data['feature'], data['threshold'], data['left'], data['right'],
                   data['value'], data['gain'])


def _best_split(
            X: FloatArray,
            Y: FloatArray,
            features: Sequence[int],
            min_leaf: int
        ) -> Tuple[float, int, float]:
    """
    Best (gain, feature, threshold) among the candidate features.

    The score sum_c (S_left,c^2 / n_left + S_right,c^2 / n_right) is the
    Gini criterion for one-hot targets and the variance criterion for
    real-valued ones; gain is its increase over the unsplit node.
    """
    n = X.shape[0]
    total = Y.sum(axis=0)
    parent_score = float(numpy.sum(total ** 2) / n)
    n_left = numpy.arange(1, n, dtype=float)
    n_right = n - n_left
    size_ok = (n_left >= min_leaf) & (n_right >= min_leaf)

    best_gain, best_feature, best_threshold = 0.0, LEAF, 0.0
    for f in features:
        xs = X[:, f]
        order = numpy.argsort(xs, kind='stable')
        xs_sorted = xs[order]
        valid = size_ok & (xs_sorted[:-1] < xs_sorted[1:])
        if not valid.any():
            continue
        cum = numpy.cumsum(Y[order], axis=0)[:-1]
        score = (numpy.sum(cum ** 2, axis=1) / n_left
                 + numpy.sum((total - cum) ** 2, axis=1) / n_right)
        score[~valid] = -numpy.inf
        i = int(numpy.argmax(score))
        gain = float(score[i]) - parent_score
        if gain > best_gain:
            threshold = (xs_sorted[i] + xs_sorted[i + 1]) / 2.0
            if threshold >= xs_sorted[i + 1]:
                threshold = xs_sorted[i]
            best_gain, best_feature, best_threshold = gain, int(f), float(threshold)
    return best_gain, best_feature, best_threshold


def grow_tree(
            X: FloatArray,
            Y: FloatArray,
            max_depth: int,
            min_leaf: int,
            max_features: Optional[int] = None,
            rng: Optional[numpy.random.Generator] = None
        ) -> Tree:
    """
    Grow a CART tree on targets Y of shape (n_samples, n_outputs).

    Leaf values are the mean target of the leaf's samples (class
    proportions for one-hot targets). With max_features below the number of
    features a random subset is drawn for every split.
    """
    n_features = X.shape[1]
    if max_features is None or max_features >= n_features:
        max_features = n_features
    feature, threshold, left, right, value, gain = [], [], [], [], [], []  # type: ignore

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(Y[idx].mean(axis=0))
        gain.append(0.0)
        return len(feature) - 1

    root = new_node(numpy.arange(X.shape[0]))
    stack = [(root, numpy.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if depth >= max_depth or idx.size < 2 * min_leaf:
            continue
        Y_node = Y[idx]
        if numpy.all(Y_node == Y_node[0]):
            continue
        if max_features < n_features:
            assert rng is not None
            candidates = rng.choice(n_features, size=max_features, replace=False)
        else:
            candidates = numpy.arange(n_features)
        split_gain, f, thr = _best_split(X[idx], Y_node, candidates, min_leaf)
        if f == LEAF:
            continue
        goes_left = X[idx, f] <= thr
        left_idx, right_idx = idx[goes_left], idx[~goes_left]
        feature[node], threshold[node], gain[node] = f, thr, split_gain
        left[node] = new_node(left_idx)
        right[node] = new_node(right_idx)
        stack.append((right[node], right_idx, depth + 1))
        stack.append((left[node], left_idx, depth + 1))
    return Tree(feature, threshold, left, right, numpy.array(value), gain)


# random forest; worker state is set once per process by the pool initializer
__forest_X = None  # type: Optional[FloatArray]
__forest_Y = None  # type: Optional[FloatArray]
__forest_params = {}  # type: Dict[str, int]


def forest_worker_init(X: FloatArray, Y: FloatArray, params: Mapping[str, int]) -> None:
    global __forest_X
    global __forest_Y
    global __forest_params
    __forest_X = X
    __forest_Y = Y
    __forest_params = dict(params)


def worker_grow_bootstrap_tree(seed: numpy.random.SeedSequence) -> Tree:
    assert __forest_X is not None and __forest_Y is not None
    rng = numpy.random.default_rng(seed)
    n = __forest_X.shape[0]
    sample = rng.integers(0, n, size=n)
    return grow_tree(
        __forest_X[sample], __forest_Y[sample],
        max_depth=__forest_params['max_depth'],
        min_leaf=__forest_params['min_leaf'],
        max_features=__forest_params['max_features'],
        rng=rng)


def grow_forest(
            X: FloatArray,
            y: FloatArray,
            n_classes: int,
            n_trees: int,
            max_depth: int,
            min_leaf: int,
            max_features: int,
            seed: int,
            workers: int = 1
        ) -> List[Tree]:
    """Bootstrap forest; tree i is grown from the i-th child of the seed."""
    Y = numpy.eye(n_classes)[y]
    params = {'max_depth': max_depth, 'min_leaf': min_leaf, 'max_features': max_features}
    seeds = numpy.random.SeedSequence(seed).spawn(n_trees)
    if workers <= 1:
        forest_worker_init(X, Y, params)
        return [worker_grow_bootstrap_tree(s) for s in seeds]
    with pool.Pool(processes=workers, initializer=forest_worker_init,
                   initargs=(X, Y, params)) as p:
        chunksize = max(1, n_trees // (4 * workers))
        return list(p.imap(worker_grow_bootstrap_tree, seeds, chunksize=chunksize))


def forest_votes(trees: Sequence[Tree], X: FloatArray, n_classes: int) -> FloatArray:
    """Vote fractions (n_samples, n_classes); a tree votes its leaf's majority class."""
    votes = numpy.zeros((X.shape[0], n_classes))
    rows = numpy.arange(X.shape[0])
    for tree in trees:
        leaf_class = numpy.argmax(tree.value, axis=1)
        votes[rows, leaf_class[tree.apply(X)]] += 1
    return votes / len(trees)


# gradient boosting
def logistic_loss(F: FloatArray, target: FloatArray) -> float:
    """Mean logistic loss of raw scores F against 0/1 targets."""
    return float(numpy.mean(numpy.logaddexp(0.0, F) - target * F))


def _line_search_leaf(F_leaf: FloatArray, target_leaf: FloatArray, step: float) -> float:
    """Halve the Newton step until the leaf's loss does not increase."""
    def leaf_loss(delta):
        shifted = F_leaf + delta
        return float(numpy.sum(numpy.logaddexp(0.0, shifted) - target_leaf * shifted))

    base = leaf_loss(0.0)
    for _ in range(MAX_BACKTRACK_HALVINGS):
        if leaf_loss(step) <= base:
            return step
        step /= 2.0
    return 0.0


def boosting_targets(y: FloatArray, n_classes: int) -> FloatArray:
    """0/1 target columns: the positive class for two classes, one-vs-rest otherwise."""
    if n_classes == 2:
        return (y == 1).astype(float)[:, None]
    return numpy.eye(n_classes)[y]


def boost(
            X: FloatArray,
            y: FloatArray,
            n_classes: int,
            n_trees: int,
            max_depth: int,
            learning_rate: float,
            min_leaf: int
        ) -> Tuple[FloatArray, List[List[Tree]], List[float]]:
    """
    Fit logistic gradient boosting (one booster per class beyond two).

    Returns the initial raw scores (prior log-odds), the trees as
    rounds x boosters and the training loss (summed over boosters) before
    and after every round. Each leaf takes a Newton step shortened until
    the leaf's loss does not grow, so the loss curve is non-increasing for
    any learning rate in [0, 1].
    """
    targets = boosting_targets(y, n_classes)
    prior = numpy.clip(targets.mean(axis=0), PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR)
    init = scipy.special.logit(prior)
    F = numpy.tile(init, (X.shape[0], 1))

    def total_loss():
        return sum(logistic_loss(F[:, b], targets[:, b]) for b in range(targets.shape[1]))

    curve = [total_loss()]
    rounds = []  # type: List[List[Tree]]
    for _ in range(n_trees):
        round_trees = []
        for b in range(targets.shape[1]):
            p = scipy.special.expit(F[:, b])
            gradient = targets[:, b] - p
            hessian = p * (1.0 - p)
            tree = grow_tree(X, gradient[:, None], max_depth=max_depth, min_leaf=min_leaf)
            leaf_of = tree.apply(X)
            values = numpy.zeros_like(tree.value)
            for leaf in tree.leaves:
                members = leaf_of == leaf
                if not members.any():
                    continue
                newton = gradient[members].sum() / max(hessian[members].sum(), MIN_HESSIAN)
                values[leaf, 0] = _line_search_leaf(
                    F[members, b], targets[members, b], newton)
            tree.value = values
            F[:, b] += learning_rate * values[leaf_of, 0]
            round_trees.append(tree)
        rounds.append(round_trees)
        curve.append(total_loss())
    logging.debug('boosting finished: loss %.6f -> %.6f', curve[0], curve[-1])
    return init, rounds, curve


def boosted_scores(
            init: FloatArray,
            rounds: Sequence[Sequence[Tree]],
            learning_rate: float,
            X: FloatArray
        ) -> FloatArray:
    """Class scores: sigmoid for a single booster, softmax across one-vs-rest boosters."""
    F = numpy.tile(numpy.asarray(init, dtype=float), (X.shape[0], 1))
    for round_trees in rounds:
        for b, tree in enumerate(round_trees):
            F[:, b] += learning_rate * tree.predict_value(X)[:, 0]
    if F.shape[1] == 1:
        positive = scipy.special.expit(F[:, 0])
        return numpy.column_stack((1.0 - positive, positive))
    return scipy.special.softmax(F, axis=1)


def importance(trees: Sequence[Tree], n_features: int) -> FloatArray:
    """Gain importance: per-tree normalized split gains, averaged, summing to 1."""
    total = numpy.zeros(n_features)
    for tree in trees:
        gains = tree.feature_gains(n_features)
        if gains.sum() > 0:
            total += gains / gains.sum()
    if total.sum() > 0:
        total /= total.sum()
    return total
