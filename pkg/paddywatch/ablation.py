"""
Temporal-range ablation: the same classifiers trained over different season
windows, sampling steps and orbits, evaluated on one shared stratified test
split.
"""

import datetime
from enum import Enum
import logging
from multiprocessing import pool
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple  # noqa

import numpy
import pandas

from .dataformat import JSONDataObject
from .features import TemporalWindow, extract_features
from .learn import (
    DEFAULT_TEST_FRACTION, LabeledDataset, ModelKind, Task, hyperparam_search,
    stratified_indices)
from .metrics import MetricsReport, classification_metrics
from .timeseries import DEFAULT_SMOOTHING_SIGMA, Orbit, PlotSeries, season_day
from .typing import PlotID


NOMINAL_STEP_DAYS = 7
# feature availability marks: full, mostly, partly, none
MARKS = ('yes', 'more', 'less', 'no')


class WindowPreset(NamedTuple):
    row: int
    dates: str
    start_day: int
    end_day: int
    lag_share: float  # approximate share of the window carrying lag features
    dsr: str
    ptr: str
    cf: str
    awd: str

    def window(self, step_days: int = NOMINAL_STEP_DAYS) -> TemporalWindow:
        return TemporalWindow(self.start_day, self.end_day, step_days)


def _day(month: int, day: int) -> int:
    return season_day(datetime.date(2024, month, day))


TABLE2_PRESETS = (
    WindowPreset(1, 'May 1 - Aug 15', _day(5, 1), _day(8, 15), 0.50, 'yes', 'yes', 'more', 'no'),
    WindowPreset(2, 'Jun 1 - Aug 30', _day(6, 1), _day(8, 30), 0.50, 'more', 'yes', 'yes', 'less'),
    WindowPreset(3, 'Jun 1 - Sep 15', _day(6, 1), _day(9, 15), 0.50, 'more', 'yes', 'yes', 'less'),
    WindowPreset(4, 'Jun 1 - Oct 15', _day(6, 1), _day(10, 15), 0.60, 'more', 'yes', 'yes', 'yes'),
    WindowPreset(5, 'Jul 1 - Oct 15', _day(7, 1), _day(10, 15), 0.50, 'no', 'yes', 'yes', 'yes'),
    WindowPreset(6, 'Aug 1 - Oct 15', _day(8, 1), _day(10, 15), 0.33, 'no', 'no', 'yes', 'yes'),
    WindowPreset(7, 'Aug 1 - Nov 15', _day(8, 1), _day(11, 15), 0.50, 'no', 'no', 'yes', 'yes'),
    WindowPreset(8, 'Sep 1 - Dec 15', _day(9, 1), _day(12, 15), 0.50, 'no', 'no', 'yes', 'yes'),
    WindowPreset(9, 'Oct 1 - Dec 15', _day(10, 1), _day(12, 15), 0.33, 'no', 'no', 'less', 'yes'),
    WindowPreset(10, 'Aug 1 - Dec 15', _day(8, 1), _day(12, 15), 0.60, 'no', 'no', 'yes', 'yes'),
    WindowPreset(11, 'Jun 1 - Dec 15', _day(6, 1), _day(12, 15), 0.33, 'more', 'yes', 'yes', 'yes'),
    WindowPreset(12, 'May 1 - Dec 15', _day(5, 1), _day(12, 15), 0.90, 'yes', 'yes', 'yes', 'yes'),
)
PRESETS = {'table2': TABLE2_PRESETS}


def custom_preset(window: TemporalWindow, row: int = 1) -> WindowPreset:
    return WindowPreset(row, 'day {} - {}'.format(window.start_day, window.end_day),
                        window.start_day, window.end_day, float('nan'), '', '', '', '')


class OrbitSet(Enum):
    """Which orbit series feed a dataset; both puts the two feature blocks side by side."""
    ASCENDING = 'ascending'
    DESCENDING = 'descending'
    BOTH = 'both'

    @property
    def orbits(self) -> Tuple[Orbit, ...]:
        if self == OrbitSet.BOTH:
            return tuple(Orbit)
        return (Orbit(self.value),)


class AblationCell(NamedTuple):
    preset: WindowPreset
    step_days: int
    orbit: OrbitSet
    task: Task
    kind: ModelKind
    validation_f1: float
    report: MetricsReport


def _save_cells(cells):
    return [{
        'preset': cell.preset._asdict(),
        'step_days': cell.step_days,
        'orbit': cell.orbit.value,
        'task': cell.task.value,
        'kind': cell.kind.value,
        'validation_f1': cell.validation_f1,
        'report': cell.report.save(),
    } for cell in cells]


def _restore_cells(data):
    return [AblationCell(
        WindowPreset(**item['preset']), item['step_days'],
        OrbitSet(item.get('orbit', OrbitSet.ASCENDING.value)), Task(item['task']),
        ModelKind(item['kind']), item['validation_f1'],
        MetricsReport(_restore_dict=item['report'])) for item in data]


class AblationGrid(JSONDataObject):
    """Cells in grid order: preset, then step, then orbit set, then task."""
    _ATTRIBUTES = {
        'seed': (None, None),
        'test_fraction': (None, None),
        'budget': (None, None),
        'n_test': (None, None),
        'cells': (_restore_cells, _save_cells),
    }

    def __init__(
                self,
                seed: int = 0,
                test_fraction: float = DEFAULT_TEST_FRACTION,
                budget: int = 1,
                _restore_dict: Optional[Mapping[str, Any]] = None
            ) -> None:
        super().__init__()
        self.seed = seed
        self.test_fraction = test_fraction
        self.budget = budget
        self.n_test = 0
        self.cells = []  # type: List[AblationCell]
        if _restore_dict is not None:
            self.restore(_restore_dict)

    def get(
                self,
                row: int,
                task: Task,
                step_days: Optional[int] = None,
                orbit: Optional[OrbitSet] = None
            ) -> AblationCell:
        for cell in self.cells:
            if cell.preset.row == row and cell.task == task and (
                    step_days is None or cell.step_days == step_days) and (
                    orbit is None or cell.orbit == orbit):
                return cell
        raise KeyError((row, task, step_days, orbit))

    def to_frame(self) -> pandas.DataFrame:
        """One line per (window, step, orbit set) with the weighted F1 of every task."""
        rows = {}  # type: Dict[Tuple[int, int, OrbitSet], Dict[str, Any]]
        for cell in self.cells:
            key = (cell.preset.row, cell.step_days, cell.orbit)
            if key not in rows:
                preset = cell.preset
                rows[key] = {
                    'row': preset.row, 'dates': preset.dates,
                    'window_start': preset.start_day, 'window_end': preset.end_day,
                    'step': cell.step_days, 'orbit': cell.orbit.value,
                    'lag_share': preset.lag_share,
                    'dsr': preset.dsr, 'ptr': preset.ptr, 'cf': preset.cf, 'awd': preset.awd,
                }
            line = rows[key]
            line['f1_{}'.format(cell.task.value)] = cell.report.f1_weighted
            line['accuracy_{}'.format(cell.task.value)] = cell.report.overall_accuracy
            line['kind_{}'.format(cell.task.value)] = cell.kind.value
        return pandas.DataFrame(list(rows.values()))

    def export_csv(self, filename: str) -> None:
        self.to_frame().to_csv(filename, index=False, float_format='%.4f')


def group_orbits(plots: Sequence[PlotSeries]) -> List[Dict[Orbit, PlotSeries]]:
    """Series of each plot keyed by orbit, plots in order of first appearance."""
    groups = {}  # type: Dict[PlotID, Dict[Orbit, PlotSeries]]
    for plot in plots:
        group = groups.setdefault(plot.plot_id, {})
        if plot.orbit in group:
            raise ValueError('plot {} has two {} series'.format(plot.plot_id, plot.orbit.value))
        group[plot.orbit] = plot
    return list(groups.values())


def _orbit_series(group: Mapping[Orbit, PlotSeries], orbit_set: OrbitSet) -> List[PlotSeries]:
    missing = [orbit.value for orbit in orbit_set.orbits if orbit not in group]
    if missing:
        plot_id = next(iter(group.values())).plot_id
        raise ValueError('plot {} has no {} series'.format(plot_id, ' or '.join(missing)))
    return [group[orbit] for orbit in orbit_set.orbits]


def window_dataset(
            plots: Sequence[PlotSeries],
            window: TemporalWindow,
            sigma: float = DEFAULT_SMOOTHING_SIGMA,
            orbit_set: OrbitSet = OrbitSet.ASCENDING
        ) -> LabeledDataset:
    """
    Extract features of labeled plots over one window.

    One row per plot; with both orbits the ascending and descending feature
    vectors of a plot are concatenated.
    """
    selected = [_orbit_series(group, orbit_set) for group in group_orbits(plots)]
    X = numpy.vstack([
        numpy.concatenate([extract_features(plot, window, sigma).values for plot in series])
        for series in selected])
    heads = [series[0] for series in selected]
    return LabeledDataset(
        X,
        [plot.label.value for plot in heads],
        [plot.plot_id for plot in heads],
        [numpy.nan if plot.planting_day is None else plot.planting_day for plot in heads],
        window, len(orbit_set.orbits))


# worker state, set by the pool initializer
__plots = []  # type: Sequence[PlotSeries]
__split = (None, None)  # type: Tuple[Any, Any]
__params = {}  # type: Dict[str, Any]


def worker_init(
            plots: Sequence[PlotSeries],
            split: Tuple[Any, Any],
            params: Mapping[str, Any]
        ) -> None:
    global __plots
    global __split
    global __params
    __plots = plots
    __split = split
    __params = dict(params)


def worker_run_window(args: Tuple[WindowPreset, int, OrbitSet]) -> List[AblationCell]:
    preset, step_days, orbit_set = args
    params = __params
    dataset = window_dataset(__plots, preset.window(step_days), params['sigma'], orbit_set)
    train, test = dataset.subset(__split[0]), dataset.subset(__split[1])
    cells = []
    for task in params['tasks']:
        best = None
        for kind in params['kinds']:
            model = hyperparam_search(train, kind, task, params['budget'], params['seed'],
                                      params['max_trees'])
            if best is None or model.validation_f1 > best.validation_f1:
                best = model
        assert best is not None
        report = classification_metrics(
            test.targets(task), best.classify(test.X), task.classes)
        logging.info('row %d %s step %d %s orbit %s: %s weighted F1 %.4f', preset.row,
                     preset.dates, step_days, orbit_set.value, task.value, best.kind.value,
                     report.f1_weighted)
        cells.append(AblationCell(preset, step_days, orbit_set, task, best.kind,
                                  float(best.validation_f1), report))
    return cells


def run_ablation(
            plots: Sequence[PlotSeries],
            presets: Sequence[WindowPreset],
            tasks: Sequence[Task],
            budget: int,
            seed: int,
            kinds: Sequence[ModelKind] = (ModelKind.RF, ModelKind.GB),
            steps: Optional[Sequence[int]] = None,
            test_fraction: float = DEFAULT_TEST_FRACTION,
            sigma: float = DEFAULT_SMOOTHING_SIGMA,
            max_trees: Optional[int] = None,
            workers: int = 1,
            orbit_sets: Sequence[OrbitSet] = (OrbitSet.ASCENDING,)
        ) -> AblationGrid:
    """
    Train and evaluate every (window, step, orbit set, task) cell.

    `plots` may hold an ascending and a descending series per plot. Features
    are re-extracted per window and orbit set; the train/test split is drawn
    once over plots on the three-way labels and shared by every cell. For
    each task the kind with the best validation F1 is evaluated on the test
    split.
    """
    if not plots:
        raise ValueError('no plots to run the ablation on')
    for plot in plots:
        if plot.label is None:
            raise ValueError('plot {} has no label'.format(plot.plot_id))
    groups = group_orbits(plots)
    for group in groups:
        for orbit_set in orbit_sets:
            _orbit_series(group, orbit_set)
    strata = [next(iter(group.values())).label.value for group in groups]
    split = stratified_indices(strata, test_fraction, seed)
    params = {
        'tasks': list(tasks), 'kinds': list(kinds), 'budget': budget, 'seed': seed,
        'max_trees': max_trees, 'sigma': sigma,
    }
    jobs = [(preset, step, orbit_set) for preset in presets
            for step in (steps or [NOMINAL_STEP_DAYS]) for orbit_set in orbit_sets]

    grid = AblationGrid(seed, test_fraction, budget)
    grid.n_test = len(split[1])
    if workers <= 1:
        worker_init(plots, split, params)
        results = map(worker_run_window, jobs)
        for cells in results:
            grid.cells.extend(cells)
    else:
        with pool.Pool(processes=workers, initializer=worker_init,
                       initargs=(plots, split, params)) as p:
            for cells in p.imap(worker_run_window, jobs):
                grid.cells.extend(cells)
    return grid
