"""
Batch inference over large plot sets, district aggregation and comparison
with official records.

Plots stream through a worker pool in bounded batches; results come back
in input order, so outputs do not depend on the number of workers.
"""

from collections import Counter
from itertools import islice
import logging
from multiprocessing import pool
from typing import (  # noqa
    Any, Dict, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple)

import numpy
import pandas

from . import PaddyError
from .dataformat import InvalidFileFormat, JSONDataObject
from .features import TemporalWindow, extract_features
from .learn import EnsembleModel, SchemaError, predict
from .metrics import DEFAULT_RBO_P, InputError, pearson, rbo
from .timeseries import DEFAULT_SMOOTHING_SIGMA, PlotSeries
from .typing import District, PlotID


M2_PER_ACRE = 4046.8564224
MIN_COMMON_DISTRICTS = 3
DEFAULT_CHUNKSIZE = 64
BATCH_CHUNKS = 8  # chunks per worker held in flight
REPORT_CHUNKS = 10000
PREDICTION_COLUMNS = ('plot_id', 'district', 'area_m2', 'predicted_class', 'score')


class PlotPrediction(NamedTuple):
    plot_id: PlotID
    district: District
    area_m2: float
    predicted_class: str
    score: float


class LedgerEntry(NamedTuple):
    plot_id: PlotID
    error: str


class ErrorLedger:
    """Plots that failed during a batch, with the reason."""

    def __init__(self) -> None:
        self.entries = []  # type: List[LedgerEntry]

    def add(self, plot_id: PlotID, error: str) -> None:
        self.entries.append(LedgerEntry(plot_id, error))

    def __len__(self) -> int:
        return len(self.entries)

    def to_csv(self, filename: str) -> None:
        pandas.DataFrame(self.entries, columns=LedgerEntry._fields).to_csv(
            filename, index=False)


def check_ensemble(models: Sequence[EnsembleModel], window: TemporalWindow) -> None:
    if not models:
        raise InputError('at least one model is required')
    tasks = {model.task for model in models}
    schemas = {model.schema_version for model in models}
    if len(tasks) > 1:
        raise SchemaError('models were trained for different tasks: {}'.format(
            ', '.join(sorted(task.value for task in tasks))))
    if len(schemas) > 1:
        raise SchemaError('models use different feature schemas: {}'.format(
            ', '.join(sorted(schemas))))
    for model in models:
        if model.n_orbits != 1:
            raise SchemaError('model {} was trained on features of {} orbits; plots are '
                              'predicted one orbit at a time'.format(
                                  model.fileorigin or model.kind.value, model.n_orbits))
        if model.window is not None and model.window != window:
            logging.warning('model %s was trained on %r, predicting on %r',
                            model.fileorigin or model.kind.value, model.window, window)


def ensemble_vote(
            labels: Sequence[str],
            validation_f1: Sequence[Optional[float]]
        ) -> str:
    """
    Modal label; ties go to the tied label predicted by the model with the
    highest validation weighted F1 (earliest model on equal F1).
    """
    counts = Counter(labels)
    top = max(counts.values())
    tied = {label for label, count in counts.items() if count == top}
    if len(tied) == 1:
        return tied.pop()
    f1 = [-1.0 if value is None else value for value in validation_f1]
    ranked = sorted(range(len(labels)), key=lambda i: -f1[i])
    return next(labels[i] for i in ranked if labels[i] in tied)


# worker state, set by the pool initializer
__models = []  # type: Sequence[EnsembleModel]
__window = None  # type: Optional[TemporalWindow]
__sigma = DEFAULT_SMOOTHING_SIGMA


def worker_init(
            models: Sequence[EnsembleModel],
            window: TemporalWindow,
            sigma: float
        ) -> None:
    global __models
    global __window
    global __sigma
    __models = models
    __window = window
    __sigma = sigma


def worker_predict(plot: PlotSeries) -> Tuple[Optional[PlotPrediction], Optional[str]]:
    """Extract features once and predict with every model; never raises on bad plots."""
    assert __window is not None
    try:
        fv = extract_features(plot, __window, __sigma)
        predictions = [predict(model, fv) for model in __models]
    except (PaddyError, ValueError, ArithmeticError) as exc:
        return None, '{}: {}'.format(type(exc).__name__, exc)
    label = ensemble_vote([p.label for p in predictions],
                          [model.validation_f1 for model in __models])
    score = float(numpy.mean([p.scores[label] for p in predictions]))
    return PlotPrediction(plot.plot_id, plot.district, plot.area_m2, label, score), None


def _batches(iterator: Iterator[PlotSeries], size: int) -> Iterator[List[PlotSeries]]:
    while True:
        batch = list(islice(iterator, size))
        if not batch:
            return
        yield batch


def _collect(
            results: Iterable[Tuple[Sequence[PlotSeries], Iterable[Any]]],
            ledger: ErrorLedger
        ) -> Iterator[PlotPrediction]:
    processed = 0
    for batch, outcomes in results:
        for plot, (prediction, error) in zip(batch, outcomes):
            processed += 1
            if error is not None:
                ledger.add(plot.plot_id, error)
            else:
                yield prediction
            if processed % REPORT_CHUNKS == 0:
                logging.info('%d plots processed, %d failed', processed, len(ledger))


def batch_predict(
            models: Sequence[EnsembleModel],
            plots: Iterable[PlotSeries],
            window: TemporalWindow,
            ledger: Optional[ErrorLedger] = None,
            sigma: float = DEFAULT_SMOOTHING_SIGMA,
            workers: int = 1,
            chunksize: int = DEFAULT_CHUNKSIZE
        ) -> Iterator[PlotPrediction]:
    """
    Predict every plot with the model ensemble, in input order.

    At most workers * chunksize * BATCH_CHUNKS plots are held in memory.
    Failed plots go to the ledger and the batch carries on.
    """
    check_ensemble(models, window)
    if ledger is None:
        ledger = ErrorLedger()
    batch_size = max(workers, 1) * chunksize * BATCH_CHUNKS
    batches = _batches(iter(plots), batch_size)
    if workers <= 1:
        worker_init(models, window, sigma)
        yield from _collect(((batch, map(worker_predict, batch)) for batch in batches), ledger)
        return
    with pool.Pool(processes=workers, initializer=worker_init,
                   initargs=(models, window, sigma)) as p:
        yield from _collect(
            ((batch, p.imap(worker_predict, batch, chunksize=chunksize)) for batch in batches),
            ledger)


class PredictionWriter:
    """Appends predictions to a CSV in fixed-size blocks."""

    def __init__(self, filename: str, block: int = 10000) -> None:
        self.filename = filename
        self.block = block
        self.buffer = []  # type: List[PlotPrediction]
        self.header = True
        self.count = 0

    def __enter__(self) -> 'PredictionWriter':
        open(self.filename, 'w').close()
        return self

    def __exit__(self, *exc_info) -> None:
        self.flush()

    def write(self, prediction: PlotPrediction) -> None:
        self.buffer.append(prediction)
        self.count += 1
        if len(self.buffer) >= self.block:
            self.flush()

    def flush(self) -> None:
        if not self.buffer and not self.header:
            return
        frame = pandas.DataFrame(self.buffer, columns=PREDICTION_COLUMNS)
        frame.to_csv(self.filename, mode='a', header=self.header, index=False)
        self.header = False
        self.buffer = []


def iter_predictions_csv(filename: str, chunksize: int = 100000) -> Iterator[PlotPrediction]:
    try:
        reader = pandas.read_csv(filename, chunksize=chunksize, keep_default_na=False,
                                 dtype={'plot_id': str, 'district': str,
                                        'predicted_class': str})
        for chunk in reader:
            missing = [col for col in PREDICTION_COLUMNS if col not in chunk.columns]
            if missing:
                raise InvalidFileFormat('{}: missing column(s) {}'.format(
                    filename, ', '.join(missing)))
            for row in chunk[list(PREDICTION_COLUMNS)].itertuples(index=False):
                yield PlotPrediction(row[0], row[1], float(row[2]), row[3], float(row[4]))
    except pandas.errors.EmptyDataError as exc:
        raise InvalidFileFormat('{}: file is empty'.format(filename)) from exc
    except (pandas.errors.ParserError, ValueError) as exc:
        raise InvalidFileFormat('{}: {}'.format(filename, exc)) from exc


class DistrictSummary(NamedTuple):
    district: District
    n_plots: int
    n_positive: int
    positive_area_m2: float

    @property
    def positive_acres(self) -> float:
        return self.positive_area_m2 / M2_PER_ACRE


class DistrictAggregator:
    """Single consumer of the prediction stream."""

    def __init__(self, positive_class: str) -> None:
        self.positive_class = positive_class
        self.n_plots = Counter()  # type: Counter
        self.n_positive = Counter()  # type: Counter
        self.area = {}  # type: Dict[District, float]

    def add(self, prediction: PlotPrediction) -> None:
        if not prediction.district:
            raise InputError('plot {} carries no district'.format(prediction.plot_id))
        district = prediction.district
        self.n_plots[district] += 1
        self.area.setdefault(district, 0.0)
        if prediction.predicted_class == self.positive_class:
            self.n_positive[district] += 1
            self.area[district] += prediction.area_m2

    def summaries(self) -> List[DistrictSummary]:
        """Sorted by positive area, largest first; equal areas by district name."""
        summaries = [
            DistrictSummary(district, self.n_plots[district], self.n_positive[district],
                            self.area[district])
            for district in self.n_plots]
        return sorted(summaries, key=lambda s: (-s.positive_area_m2, s.district))


def aggregate_districts(
            predictions: Iterable[PlotPrediction],
            positive_class: str
        ) -> List[DistrictSummary]:
    aggregator = DistrictAggregator(positive_class)
    for prediction in predictions:
        aggregator.add(prediction)
    return aggregator.summaries()


def summaries_frame(summaries: Sequence[DistrictSummary]) -> pandas.DataFrame:
    return pandas.DataFrame(
        [(s.district, s.n_plots, s.n_positive, s.positive_area_m2, s.positive_acres)
         for s in summaries],
        columns=('district', 'n_plots', 'n_positive', 'positive_area_m2', 'positive_acres'))


def read_summaries_csv(filename: str) -> List[DistrictSummary]:
    try:
        frame = pandas.read_csv(filename, dtype={'district': str}, keep_default_na=False)
        return [DistrictSummary(str(row.district), int(row.n_plots), int(row.n_positive),
                                float(row.positive_area_m2))
                for row in frame.itertuples(index=False)]
    except (pandas.errors.ParserError, pandas.errors.EmptyDataError,
            ValueError, AttributeError) as exc:
        raise InvalidFileFormat('{}: {}'.format(filename, exc)) from exc


def _ranking(values: Mapping[District, float]) -> List[District]:
    return sorted(values, key=lambda district: (-values[district], district))


class ComparisonReport(JSONDataObject):
    """
    Predicted versus recorded positive acreage for the common districts.

    rows holds one dict per district: predicted_acres, recorded_acres,
    difference (predicted - recorded) and estimate (over/under/equal).
    """
    _ATTRIBUTES = {
        'p': (None, None),
        'pearson': (None, None),
        'rbo': (None, None),
        'rows': (None, None),
        'unmatched': (None, None),
    }

    def __init__(
                self,
                p: float = DEFAULT_RBO_P,
                _restore_dict: Optional[Mapping[str, Any]] = None
            ) -> None:
        super().__init__()
        self.p = p
        self.pearson = None  # type: Optional[float]
        self.rbo = None  # type: Optional[float]
        self.rows = []  # type: List[Dict[str, Any]]
        self.unmatched = []  # type: List[str]
        if _restore_dict is not None:
            self.restore(_restore_dict)

    def to_frame(self) -> pandas.DataFrame:
        return pandas.DataFrame(self.rows, columns=(
            'district', 'predicted_acres', 'recorded_acres', 'difference', 'estimate'))


def compare_records(
            summaries: Sequence[DistrictSummary],
            records: Mapping[District, float],
            p: float = DEFAULT_RBO_P
        ) -> ComparisonReport:
    predicted = {s.district: s.positive_acres for s in summaries}
    common = sorted(set(predicted) & set(records))
    if len(common) < MIN_COMMON_DISTRICTS:
        raise InputError('{} district(s) in common with the records, at least {} '
                         'required'.format(len(common), MIN_COMMON_DISTRICTS))
    report = ComparisonReport(p)
    report.unmatched = sorted(set(predicted) ^ set(records))
    if report.unmatched:
        logging.warning('%d district(s) present on one side only: %s',
                        len(report.unmatched), ', '.join(report.unmatched))
    pred = {d: predicted[d] for d in common}
    rec = {d: float(records[d]) for d in common}
    report.pearson = pearson([pred[d] for d in common], [rec[d] for d in common])
    report.rbo = rbo(_ranking(pred), _ranking(rec), p)
    for district in _ranking(rec):
        difference = pred[district] - rec[district]
        estimate = 'over' if difference > 0 else 'under' if difference < 0 else 'equal'
        report.rows.append({
            'district': district, 'predicted_acres': pred[district],
            'recorded_acres': rec[district], 'difference': difference,
            'estimate': estimate})
    return report
