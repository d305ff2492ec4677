"""
Dimensional classification tasks, datasets and tree-ensemble models.

The three-way practice label (CONTROL, DSR, AWD) is collapsed per task:
SOWING separates DSR from puddled transplanting (PTR = CONTROL + AWD),
IRRIGATION separates AWD from continuous flooding (CF = CONTROL + DSR).
"""

from collections import Counter
from enum import Enum
import logging
import math
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple  # noqa

import numpy

from . import PaddyError
from .dataformat import JSONDataObject
from .features import N_FEATURES, SCHEMA_NAMES, SCHEMA_VERSION, FeatureVector, TemporalWindow
from .metrics import InputError, weighted_f1
from .timeseries import Orbit, PracticeLabel
from . import trees as treelib
from .typing import FloatArray, PlotID


MODEL_FORMAT_VERSION = 1
DEFAULT_TEST_FRACTION = 0.1
VALIDATION_FRACTION = 0.2
DEFAULT_MAX_FEATURES = int(round(math.sqrt(N_FEATURES)))  # 9
GB_MIN_LEAF = 5


class StratificationError(PaddyError):
    pass


class DegenerateTraining(PaddyError):
    pass


class SchemaError(PaddyError):
    pass


def feature_names(n_orbits: int = 1) -> Tuple[str, ...]:
    """Column names of X; blocks of several orbits are prefixed in Orbit order."""
    if n_orbits == 1:
        return SCHEMA_NAMES
    return tuple('{}:{}'.format(orbit.value, name)
                 for orbit in list(Orbit)[:n_orbits] for name in SCHEMA_NAMES)


class Task(Enum):
    COMBINED = 'combined'
    SOWING = 'sowing'
    IRRIGATION = 'irrigation'

    @property
    def classes(self) -> Tuple[str, ...]:
        """Task labels in tie-breaking order."""
        return _TASK_CLASSES[self]

    @property
    def positive_class(self) -> Optional[str]:
        return _POSITIVE_CLASS[self]

    def collapse(self, label: str) -> str:
        return _COLLAPSE[self][PracticeLabel(label)]


_TASK_CLASSES = {
    Task.COMBINED: ('CONTROL', 'DSR', 'AWD'),
    Task.SOWING: ('PTR', 'DSR'),
    Task.IRRIGATION: ('CF', 'AWD'),
}

_POSITIVE_CLASS = {
    Task.COMBINED: None,
    Task.SOWING: 'DSR',
    Task.IRRIGATION: 'AWD',
}

_COLLAPSE = {
    Task.COMBINED: {
        PracticeLabel.CONTROL: 'CONTROL',
        PracticeLabel.DSR: 'DSR',
        PracticeLabel.AWD: 'AWD'},
    Task.SOWING: {
        PracticeLabel.CONTROL: 'PTR',
        PracticeLabel.DSR: 'DSR',
        PracticeLabel.AWD: 'PTR'},
    Task.IRRIGATION: {
        PracticeLabel.CONTROL: 'CF',
        PracticeLabel.DSR: 'CF',
        PracticeLabel.AWD: 'AWD'},
}


class ModelKind(Enum):
    RF = 'RF'
    GB = 'GB'


def collapse_labels(labels: Sequence[str], task: Task) -> List[str]:
    return [task.collapse(label) for label in labels]


class LabeledDataset:
    """
    Feature matrix with three-way labels and plot metadata.

    Planting days ride along for error analysis only and never enter X.
    With several orbits, X holds one schema block per orbit side by side.
    """

    def __init__(
                self,
                X: FloatArray,
                labels: Sequence[str],
                plot_ids: Sequence[PlotID],
                planting_days: Optional[Sequence[float]] = None,
                window: Optional[TemporalWindow] = None,
                n_orbits: int = 1
            ) -> None:
        X = numpy.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != N_FEATURES * n_orbits:
            raise SchemaError('feature matrix must have {} columns, got shape {}'.format(
                N_FEATURES * n_orbits, X.shape))
        if not len(labels) == len(plot_ids) == X.shape[0]:
            raise InputError('features, labels and plot ids are not aligned')
        for label in labels:
            if label not in PracticeLabel.__members__:
                raise InputError('missing or unknown label {!r}'.format(label))
        self.X = X
        self.labels = list(labels)
        self.plot_ids = list(plot_ids)
        if planting_days is None:
            planting_days = [math.nan] * len(self.labels)
        self.planting_days = numpy.asarray(planting_days, dtype=float)
        self.window = window
        self.n_orbits = n_orbits

    def __len__(self) -> int:
        return len(self.labels)

    def targets(self, task: Task) -> List[str]:
        return collapse_labels(self.labels, task)

    def subset(self, indices: Sequence[int]) -> 'LabeledDataset':
        indices = numpy.asarray(indices, dtype=numpy.int64)
        return LabeledDataset(
            self.X[indices], [self.labels[i] for i in indices],
            [self.plot_ids[i] for i in indices], self.planting_days[indices], self.window,
            self.n_orbits)


def stratified_indices(
            strata: Sequence[str],
            test_frac: float,
            seed: int
        ) -> Tuple[FloatArray, FloatArray]:
    """
    Split indices into (train, test), proportionally per stratum.

    The test size is ceil(n * test_frac); whole shares are assigned first
    and the remainder goes to the strata with the largest fractional shares.
    """
    if not 0 < test_frac < 1:
        raise StratificationError('test fraction must lie in (0, 1), got {}'.format(test_frac))
    counts = Counter(strata)
    for stratum, count in counts.items():
        if count < 2:
            raise StratificationError('class {} has only {} member(s)'.format(stratum, count))
    order = sorted(counts, key=_class_order_key)
    exact = {stratum: counts[stratum] * test_frac for stratum in order}
    allocation = {stratum: int(math.floor(exact[stratum])) for stratum in order}
    remainder = int(math.ceil(len(strata) * test_frac - 1e-9)) - sum(allocation.values())
    by_fraction = sorted(order, key=lambda s: -(exact[s] - allocation[s]))
    for stratum in by_fraction[:max(remainder, 0)]:
        allocation[stratum] += 1

    rng = numpy.random.default_rng(seed)
    test = []  # type: List[int]
    for stratum in order:
        members = numpy.flatnonzero(numpy.asarray(strata) == stratum)
        chosen = rng.permutation(members)[:allocation[stratum]]
        test.extend(int(i) for i in chosen)
    test_idx = numpy.sort(numpy.array(test, dtype=numpy.int64))
    train_idx = numpy.setdiff1d(numpy.arange(len(strata)), test_idx)
    return train_idx, test_idx


def stratified_split(
            ds: LabeledDataset,
            test_frac: float,
            seed: int
        ) -> Tuple[LabeledDataset, LabeledDataset]:
    """Stratified on the three-way labels, so every task shares the same split."""
    train_idx, test_idx = stratified_indices(ds.labels, test_frac, seed)
    return ds.subset(train_idx), ds.subset(test_idx)


def _class_order_key(label: str) -> Tuple[int, str]:
    for task in Task:
        if label in task.classes:
            return task.classes.index(label), label
    return len(PracticeLabel), label


def _encode(ds: LabeledDataset, task: Task) -> FloatArray:
    targets = ds.targets(task)
    present = set(targets)
    if len(present) < 2:
        raise DegenerateTraining('training data for task {} holds only class(es) {}'.format(
            task.value, sorted(present)))
    return numpy.array([task.classes.index(t) for t in targets], dtype=numpy.int64)


def _restore_rounds(rounds):
    return [[treelib.Tree.restore(t) for t in round_trees] for round_trees in rounds]


def _save_rounds(rounds):
    return [[t.save() for t in round_trees] for round_trees in rounds]


def _restore_window(data):
    return TemporalWindow(data['start_day'], data['end_day'], data['step_days'])


def _save_window(window):
    return {'start_day': window.start_day, 'end_day': window.end_day,
            'step_days': window.step_days}


class EnsembleModel(JSONDataObject):
    """
    Trained RF or GB ensemble, immutable once built.

    RF keeps a flat list of trees; GB keeps its trees as boosting rounds
    with one tree per booster, plus the initial raw scores.
    """
    _ATTRIBUTES = {
        'format_version': (None, None),
        'kind': (ModelKind, lambda x: x.value),
        'task': (Task, lambda x: x.value),
        'classes': (None, None),
        'schema_version': (None, None),
        'hyperparams': (None, None),
        'seed': (None, None),
        'validation_f1': (None, None),
        'test_fraction': (None, None),
        'window': (_restore_window, _save_window),
        'n_orbits': (None, None),
        'importance': (None, None),
        'train_curve': (None, None),
        'search_trials': (None, None),
        'init_scores': (None, None),
        'trees': (lambda x: [treelib.Tree.restore(t) for t in x],
                  lambda x: [t.save() for t in x]),
        'rounds': (_restore_rounds, _save_rounds),
    }

    def __init__(
                self,
                kind: ModelKind = ModelKind.RF,
                task: Task = Task.COMBINED,
                hyperparams: Optional[Mapping[str, Any]] = None,
                seed: int = 0,
                _restore_dict: Optional[Mapping[str, Any]] = None
            ) -> None:
        super().__init__()
        self.format_version = MODEL_FORMAT_VERSION
        self.kind = kind
        self.task = task
        self.classes = list(task.classes)
        self.schema_version = SCHEMA_VERSION
        self.hyperparams = dict(hyperparams) if hyperparams is not None else {}
        self.seed = seed
        self.validation_f1 = None  # type: Optional[float]
        self.test_fraction = None  # type: Optional[float]
        self.window = None  # type: Optional[TemporalWindow]
        self.n_orbits = 1
        self.importance = []  # type: List[float]
        self.train_curve = []  # type: List[float]
        self.search_trials = []  # type: List[Dict[str, Any]]
        self.init_scores = None  # type: Optional[List[float]]
        self.trees = None  # type: Optional[List[treelib.Tree]]
        self.rounds = None  # type: Optional[List[List[treelib.Tree]]]
        if _restore_dict is not None:
            self.restore(_restore_dict)
            if self.format_version != MODEL_FORMAT_VERSION:
                raise ValueError('unsupported model format version {}'.format(
                    self.format_version))

    def all_trees(self) -> List[treelib.Tree]:
        if self.kind == ModelKind.RF:
            return list(self.trees or [])
        return [tree for round_trees in (self.rounds or []) for tree in round_trees]

    def scores(self, X: FloatArray) -> FloatArray:
        """Per-class scores (n_samples, n_classes); each row sums to 1."""
        X = numpy.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != N_FEATURES * self.n_orbits:
            raise SchemaError('model expects {} features, got shape {}'.format(
                N_FEATURES * self.n_orbits, X.shape))
        if self.kind == ModelKind.RF:
            return treelib.forest_votes(self.trees or [], X, len(self.classes))
        return treelib.boosted_scores(
            numpy.asarray(self.init_scores), self.rounds or [],
            self.hyperparams['learning_rate'], X)

    def classify(self, X: FloatArray) -> List[str]:
        # argmax returns the first maximum, i.e. the earliest class in task order
        return [self.classes[i] for i in numpy.argmax(self.scores(X), axis=1)]

    def top_features(self, count: int) -> List[Tuple[str, float]]:
        ranked = sorted(zip(feature_names(self.n_orbits), self.importance),
                        key=lambda item: -item[1])
        return ranked[:count]


class Prediction(NamedTuple):
    label: str
    scores: Dict[str, float]


def predict(model: EnsembleModel, features: FeatureVector) -> Prediction:
    if features.schema_version != model.schema_version:
        raise SchemaError('feature schema {} does not match model schema {}'.format(
            features.schema_version, model.schema_version))
    scores = model.scores(features.values[None, :])[0]
    label = model.classes[int(numpy.argmax(scores))]
    return Prediction(label, dict(zip(model.classes, scores.tolist())))


def train_rf(
            train: LabeledDataset,
            hp: Mapping[str, Any],
            seed: int,
            task: Task = Task.COMBINED,
            workers: int = 1
        ) -> EnsembleModel:
    y = _encode(train, task)
    params = {
        'n_trees': int(hp['n_trees']),
        'max_depth': int(hp['max_depth']),
        'min_leaf': int(hp['min_leaf']),
        'max_features': int(hp.get('max_features', DEFAULT_MAX_FEATURES)),
    }
    model = EnsembleModel(ModelKind.RF, task, params, seed)
    model.window = train.window
    model.n_orbits = train.n_orbits
    model.trees = treelib.grow_forest(
        train.X, y, len(task.classes), params['n_trees'], params['max_depth'],
        params['min_leaf'], params['max_features'], seed, workers)
    model.importance = treelib.importance(model.trees, train.X.shape[1]).tolist()
    return model


def train_gb(
            train: LabeledDataset,
            hp: Mapping[str, Any],
            seed: int,
            task: Task = Task.COMBINED
        ) -> EnsembleModel:
    """Boosting is deterministic given the data; the seed is recorded only."""
    y = _encode(train, task)
    params = {
        'n_trees': int(hp['n_trees']),
        'max_depth': int(hp['max_depth']),
        'learning_rate': float(hp['learning_rate']),
        'min_leaf': int(hp.get('min_leaf', GB_MIN_LEAF)),
    }
    model = EnsembleModel(ModelKind.GB, task, params, seed)
    model.window = train.window
    model.n_orbits = train.n_orbits
    init, rounds, curve = treelib.boost(
        train.X, y, len(task.classes), params['n_trees'], params['max_depth'],
        params['learning_rate'], params['min_leaf'])
    model.init_scores = init.tolist()
    model.rounds = rounds
    model.train_curve = curve
    model.importance = treelib.importance(model.all_trees(), train.X.shape[1]).tolist()
    return model


def train_model(
            kind: ModelKind,
            train: LabeledDataset,
            hp: Mapping[str, Any],
            seed: int,
            task: Task,
            workers: int = 1
        ) -> EnsembleModel:
    if kind == ModelKind.RF:
        return train_rf(train, hp, seed, task, workers)
    return train_gb(train, hp, seed, task)


def sample_hyperparams(
            kind: ModelKind,
            rng: numpy.random.Generator,
            max_trees: Optional[int] = None
        ) -> Dict[str, Any]:
    """
    Draw one configuration from the search grid.

    RF: trees in [100, 800], depth in [3, 20], min_leaf in [1, 10].
    GB: trees in [50, 500], depth in [2, 8], learning rate log-uniform in
    [0.01, 0.3]. max_trees caps the tree count without changing the draws.
    """
    if kind == ModelKind.RF:
        hp = {
            'n_trees': int(rng.integers(100, 801)),
            'max_depth': int(rng.integers(3, 21)),
            'min_leaf': int(rng.integers(1, 11)),
        }  # type: Dict[str, Any]
    else:
        hp = {
            'n_trees': int(rng.integers(50, 501)),
            'max_depth': int(rng.integers(2, 9)),
            'learning_rate': float(math.exp(rng.uniform(math.log(0.01), math.log(0.3)))),
        }
    if max_trees is not None:
        hp['n_trees'] = min(hp['n_trees'], max_trees)
    return hp


def hyperparam_search(
            train: LabeledDataset,
            kind: ModelKind,
            task: Task,
            budget: int,
            seed: int,
            max_trees: Optional[int] = None,
            workers: int = 1
        ) -> EnsembleModel:
    """
    Seeded random search scored by weighted F1 on an inner 80:20 split.

    The best configuration (earliest on ties) is refit on all of train.
    """
    if budget < 1:
        raise ValueError('search budget must be at least 1')
    inner_train, inner_val = stratified_split(train, VALIDATION_FRACTION, seed)
    val_targets = inner_val.targets(task)
    rng = numpy.random.default_rng(seed)
    trials = []  # type: List[Dict[str, Any]]
    best_hp, best_f1 = None, -1.0  # type: Optional[Dict[str, Any]], float
    for trial in range(budget):
        hp = sample_hyperparams(kind, rng, max_trees)
        candidate = train_model(kind, inner_train, hp, seed, task, workers)
        objective = weighted_f1(val_targets, candidate.classify(inner_val.X), task.classes)
        logging.info('trial %d/%d %s %s: validation weighted F1 %.4f',
                     trial + 1, budget, kind.value, hp, objective)
        trials.append({'hyperparams': hp, 'validation_f1': objective})
        if objective > best_f1:
            best_hp, best_f1 = hp, objective
    assert best_hp is not None
    logging.info('selected %s %s (validation weighted F1 %.4f)', kind.value, best_hp, best_f1)
    model = train_model(kind, train, best_hp, seed, task, workers)
    model.validation_f1 = best_f1
    model.search_trials = trials
    return model


def baseline_proportional(
            train_labels: Sequence[str],
            test_labels: Sequence[str],
            seed: int
        ) -> List[str]:
    """Draw test predictions i.i.d. from the training class distribution."""
    counts = Counter(train_labels)
    if not counts:
        raise InputError('no training labels')
    classes = sorted(counts, key=_class_order_key)
    shares = numpy.array([counts[c] for c in classes], dtype=float)
    rng = numpy.random.default_rng(seed)
    drawn = rng.choice(len(classes), size=len(test_labels), p=shares / shares.sum())
    return [classes[i] for i in drawn]
