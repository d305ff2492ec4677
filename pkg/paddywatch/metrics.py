"""
Classification metrics and ranking comparisons.
"""

from collections import Counter
import logging
from typing import Any, Dict, Hashable, List, Mapping, Optional, Sequence  # noqa

import numpy
import scipy.stats
import sklearn.metrics

from . import PaddyError
from .dataformat import JSONDataObject


DEFAULT_RBO_P = 0.95


class InputError(PaddyError):
    pass


class UndefinedCorrelation(PaddyError):
    pass


class MetricsReport(JSONDataObject):
    """
    Test-set metrics of one classifier.

    per_class maps label -> {'precision', 'recall', 'f1', 'support'};
    confusion[i][j] counts samples of labels[i] predicted as labels[j].
    """
    _ATTRIBUTES = {
        'labels': (None, None),
        'n_test': (None, None),
        'overall_accuracy': (None, None),
        'f1_weighted': (None, None),
        'f1_macro': (None, None),
        'per_class': (None, None),
        'confusion': (None, None),
    }

    def __init__(
                self,
                labels: Optional[Sequence[str]] = None,
                overall_accuracy: float = 0.0,
                f1_weighted: float = 0.0,
                f1_macro: float = 0.0,
                per_class: Optional[Mapping[str, Mapping[str, float]]] = None,
                confusion: Optional[Sequence[Sequence[int]]] = None,
                _restore_dict: Optional[Mapping[str, Any]] = None
            ) -> None:
        super().__init__()
        self.labels = list(labels) if labels is not None else []
        self.overall_accuracy = overall_accuracy
        self.f1_weighted = f1_weighted
        self.f1_macro = f1_macro
        self.per_class = dict(per_class) if per_class is not None else {}
        self.confusion = [list(row) for row in confusion] if confusion is not None else []
        self.n_test = int(sum(sum(row) for row in self.confusion))
        if _restore_dict is not None:
            self.restore(_restore_dict)


def _check_aligned(y_true: Sequence[Any], y_pred: Sequence[Any]) -> None:
    if len(y_true) != len(y_pred):
        raise InputError('{} true labels but {} predictions'.format(len(y_true), len(y_pred)))
    if not y_true:
        raise InputError('no samples to evaluate')


def classification_metrics(
            y_true: Sequence[str],
            y_pred: Sequence[str],
            labels: Optional[Sequence[str]] = None
        ) -> MetricsReport:
    """
    Accuracy, macro/weighted F1, per-class scores and confusion matrix.

    `labels` fixes the class set and matrix order; by default it is every
    label seen in y_true or y_pred, sorted. Zero denominators score 0.
    """
    y_true, y_pred = list(y_true), list(y_pred)
    _check_aligned(y_true, y_pred)
    if labels is None:
        labels = sorted(set(y_true) | set(y_pred))
    labels = list(labels)
    precision, recall, f1, support = sklearn.metrics.precision_recall_fscore_support(
        y_true, y_pred, labels=labels, zero_division=0)
    for label, count in zip(labels, support):
        if not count:
            logging.warning('class %s has no test samples; its F1 counts as 0', label)
    confusion = sklearn.metrics.confusion_matrix(y_true, y_pred, labels=labels)
    total_support = float(numpy.sum(support))
    per_class = {
        label: {
            'precision': float(p), 'recall': float(r), 'f1': float(f), 'support': int(s)}
        for label, p, r, f, s in zip(labels, precision, recall, f1, support)}
    return MetricsReport(
        labels=labels,
        overall_accuracy=float(sklearn.metrics.accuracy_score(y_true, y_pred)),
        f1_weighted=float(numpy.dot(f1, support) / total_support) if total_support else 0.0,
        f1_macro=float(numpy.mean(f1)),
        per_class=per_class,
        confusion=confusion.tolist())


def weighted_f1(y_true: Sequence[str], y_pred: Sequence[str], labels: Sequence[str]) -> float:
    return classification_metrics(y_true, y_pred, labels).f1_weighted


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x_arr = numpy.asarray(x, dtype=float)
    y_arr = numpy.asarray(y, dtype=float)
    if x_arr.shape != y_arr.shape:
        raise InputError('correlated sequences differ in length')
    if x_arr.size < 2:
        raise InputError('correlation needs at least 2 points')
    if numpy.all(x_arr == x_arr[0]) or numpy.all(y_arr == y_arr[0]):
        raise UndefinedCorrelation('correlation undefined for a constant sequence')
    return float(scipy.stats.pearsonr(x_arr, y_arr)[0])


def rbo(
            ranking_a: Sequence[Hashable],
            ranking_b: Sequence[Hashable],
            p: float = DEFAULT_RBO_P
        ) -> float:
    """
    Extrapolated rank-biased overlap of two rankings (best item first).

    For rankings of unequal length the shorter one is treated as complete
    up to its depth; for equal lengths this is the usual RBO_ext.
    """
    if not 0 < p < 1:
        raise InputError('RBO persistence p must lie in (0, 1), got {}'.format(p))
    for ranking in (ranking_a, ranking_b):
        if len(set(ranking)) != len(ranking):
            raise InputError('ranking contains duplicates')
    if not ranking_a or not ranking_b:
        return 0.0
    short, long_ = sorted((list(ranking_a), list(ranking_b)), key=len)
    s, l = len(short), len(long_)

    # overlap[d] = |short[:d] & long[:d]|; past depth s the short list is complete
    overlap = [0] * (l + 1)
    seen_short, seen_long = set(), set()  # type: ignore
    for d in range(1, l + 1):
        x = long_[d - 1]
        y = short[d - 1] if d <= s else None
        if x == y:
            overlap[d] = overlap[d - 1] + 1
            continue
        seen_long.add(x)
        gained = 1 if x in seen_short else 0
        if y is not None:
            seen_short.add(y)
            gained += 1 if y in seen_long else 0
        overlap[d] = overlap[d - 1] + gained

    agreement = sum(overlap[d] / d * p ** d for d in range(1, l + 1))
    tail = sum(overlap[s] * (d - s) / (s * d) * p ** d for d in range(s + 1, l + 1))
    extrapolation = ((overlap[l] - overlap[s]) / l + overlap[s] / s) * p ** l
    return (1 - p) / p * (agreement + tail) + extrapolation


def error_by_origin(
            y_true_collapsed: Sequence[str],
            y_pred: Sequence[str],
            original_labels: Sequence[str]
        ) -> Dict[str, float]:
    """Share of misclassified samples coming from each original class."""
    if not len(y_true_collapsed) == len(y_pred) == len(original_labels):
        raise InputError('error analysis needs aligned sequences')
    errors = Counter(
        origin for truth, pred, origin in zip(y_true_collapsed, y_pred, original_labels)
        if truth != pred)
    n_errors = sum(errors.values())
    if not n_errors:
        return {}
    return {origin: count / n_errors for origin, count in sorted(errors.items())}


def expected_baseline_accuracy(labels: Sequence[str]) -> float:
    """Accuracy of proportional random guessing: sum of squared class shares."""
    if not labels:
        raise InputError('no labels')
    counts = numpy.array(list(Counter(labels).values()), dtype=float)
    shares = counts / counts.sum()
    return float(numpy.sum(shares ** 2))


