from argparse import ArgumentParser, ArgumentTypeError, Namespace
import datetime
import logging
import sys
from typing import (  # noqa
    Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union)

from tabulate import tabulate

from . import PaddyError
from .cfg import ConfigError, read_cfg
from .dataformat import InvalidFileFormat, RunManifest, config_digest, manifest_filename
from .features import ALLOWED_STEPS, TemporalWindow
from .learn import EnsembleModel, ModelKind, Task
from .metrics import MetricsReport
from .scale import ComparisonReport, DistrictSummary
from .stats import BaselineStatistics
from .timeseries import Orbit, WindowError

Number = Union[int, float]
StatsTuple = Tuple[Number, Optional[float]]

LOGGING_LEVEL = logging.INFO
CONFIG_FILENAME = 'paddywatch.cfg'
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_INTERRUPTED = 130


class UsageError(PaddyError):
    """Bad command-line input detected after argument parsing."""


def setup_logging(level: int = LOGGING_LEVEL) -> None:
    logging.basicConfig(format='%(asctime)s %(levelname)8s  %(message)s', level=level)
    logger = logging.getLogger('matplotlib')
    # set WARNING for Matplotlib
    logger.setLevel(logging.WARNING)


def read_config(filename: str) -> Dict[str, Dict[str, Any]]:
    try:
        return read_cfg(filename)
    except ConfigError as exc:
        raise ArgumentTypeError(str(exc)) from exc


def read_model(filename: str) -> EnsembleModel:
    try:
        return EnsembleModel.from_json(filename)
    except (FileNotFoundError, InvalidFileFormat) as exc:
        raise ArgumentTypeError(str(exc)) from exc


def iso_date(dstr: str) -> datetime.date:
    try:
        return datetime.date.fromisoformat(dstr)
    except ValueError as exc:
        raise ArgumentTypeError('{!r} is not an ISO date (YYYY-MM-DD)'.format(dstr)) from exc


def int_list(lstr: str) -> List[int]:
    try:
        return [int(value) for value in lstr.split(',') if value.strip()]
    except ValueError as exc:
        raise ArgumentTypeError('{!r} is not a comma separated list of integers'.format(
            lstr)) from exc


def add_arg_config(parser: ArgumentParser) -> None:
    parser.add_argument('-c', '--config', type=read_config,
                        default=CONFIG_FILENAME, dest='cfg',
                        help='config file (default: {})'.format(CONFIG_FILENAME))


def add_arg_seed(parser: ArgumentParser) -> None:
    parser.add_argument('--seed', type=int,
                        help='master seed; every random stream derives from it '
                             '(default: [scene] seed from config)')


def add_arg_workers(parser: ArgumentParser) -> None:
    parser.add_argument('-w', '--workers', type=int,
                        help='number of worker processes (default: [scale] workers)')


def add_arg_task(parser: ArgumentParser, multiple: bool = False) -> None:
    choices = [task.value for task in Task]
    if multiple:
        parser.add_argument('--task', type=Task, nargs='+', default=list(Task),
                            metavar='TASK',
                            help='classification tasks: {} (default: all)'.format(
                                ', '.join(choices)))
    else:
        parser.add_argument('--task', type=Task, default=Task.COMBINED, metavar='TASK',
                            help='classification task: {} (default: {})'.format(
                                ', '.join(choices), Task.COMBINED.value))


def model_kind(kstr: str) -> ModelKind:
    try:
        return ModelKind(kstr.upper())
    except ValueError as exc:
        raise ArgumentTypeError('model kind must be rf or gb') from exc


def add_arg_kind(parser: ArgumentParser) -> None:
    parser.add_argument('--kind', type=model_kind, nargs='+', metavar='KIND',
                        help='model kinds to search: rf, gb (default: [learn] kinds)')


def orbit(ostr: str) -> Orbit:
    try:
        return Orbit(ostr.lower())
    except ValueError as exc:
        raise ArgumentTypeError('orbit must be ascending or descending') from exc


def add_arg_orbit(parser: ArgumentParser) -> None:
    parser.add_argument('--orbit', type=orbit, default=Orbit.ASCENDING,
                        help='use only series of this orbit: ascending, descending '
                             '(default: ascending)')


def add_arg_window(parser: ArgumentParser) -> None:
    parser.add_argument('--start', type=iso_date,
                        help='window start date, YYYY-MM-DD (default: [features] window_start)')
    parser.add_argument('--end', type=iso_date,
                        help='window end date, YYYY-MM-DD (default: [features] window_end)')
    parser.add_argument('--step', type=int, choices=ALLOWED_STEPS,
                        help='sampling step in days (default: [features] step_days)')


def get_seed(args: Namespace) -> int:
    if getattr(args, 'seed', None) is not None:
        return args.seed
    return args.cfg['scene']['seed']


def get_workers(args: Namespace) -> int:
    workers = getattr(args, 'workers', None)
    if workers is None:
        workers = args.cfg['scale']['workers']
    if workers < 1:
        raise UsageError('at least one worker is required')
    return workers


def get_kinds(args: Namespace) -> List[ModelKind]:
    if getattr(args, 'kind', None):
        return list(args.kind)
    return [ModelKind(kind) for kind in args.cfg['learn']['kinds']]


def get_window(args: Namespace) -> TemporalWindow:
    """Window from --start/--end/--step, falling back to the [features] config."""
    fcfg = args.cfg['features']
    start = args.start or fcfg['window_start']
    end = args.end or fcfg['window_end']
    step = args.step or fcfg['step_days']
    try:
        return TemporalWindow.from_dates(start, end, step)
    except WindowError as exc:
        raise UsageError(str(exc)) from exc


def run_tool(func: Callable[[Namespace], None], args: Namespace) -> None:
    """Run a tool and translate failures into exit codes."""
    try:
        func(args)
    except KeyboardInterrupt:
        logging.info('SIGINT received, exiting...')
        sys.exit(EXIT_INTERRUPTED)
    except (UsageError, ConfigError) as exc:
        logging.critical(exc)
        sys.exit(EXIT_USAGE)
    except (PaddyError, OSError) as exc:
        logging.critical(exc)
        sys.exit(EXIT_RUNTIME)


def start_manifest(tool: str, args: Namespace, seed: Optional[int] = None) -> RunManifest:
    return RunManifest(tool, config_digest(args.cfg), seed)


def finish_manifest(
            manifest: RunManifest,
            inputs: Iterable[str],
            outputs: Sequence[str]
        ) -> None:
    """Record digests and write the manifest beside the first output."""
    manifest.add_inputs(inputs)
    manifest.add_outputs(outputs)
    manifest.finish(manifest_filename(outputs[0]))


def percentage(
            dividend: Number,
            divisor: Optional[Number]
        ) -> Optional[float]:
    """Return dividend/divisor value in %"""
    if divisor is None:
        return None
    if divisor == 0:
        if dividend > 0:
            return float('+inf')
        if dividend < 0:
            return float('-inf')
        return float('nan')
    return dividend * 100.0 / divisor


def get_stats_data(n: Number, total: Optional[Number] = None) -> StatsTuple:
    """Return absolute and relative data statistics"""
    return n, percentage(n, total)


def print_class_counts(counts: Mapping[str, int], title: str = 'class') -> None:
    total = sum(counts.values())
    rows = [(label, *get_stats_data(count, total)) for label, count in counts.items()]
    print('')
    print(tabulate(rows, [title, 'count', '%'], tablefmt='simple', floatfmt='.2f'))


def print_metrics(report: MetricsReport, title: str = '') -> None:
    if title:
        print('== {}'.format(title))
    print('overall accuracy     {:8.2f} %'.format(report.overall_accuracy * 100))
    print('F1 weighted          {:8.2f} %'.format(report.f1_weighted * 100))
    print('F1 macro             {:8.2f} %'.format(report.f1_macro * 100))
    print('test samples         {:8d}'.format(report.n_test))
    rows = [(label, cls['precision'] * 100, cls['recall'] * 100, cls['f1'] * 100,
             cls['support'])
            for label, cls in report.per_class.items()]
    print('')
    print(tabulate(rows, ['class', 'precision %', 'recall %', 'F1 %', 'support'],
                   tablefmt='simple', floatfmt='.2f'))


def print_confusion(report: MetricsReport) -> None:
    rows = [[label] + row for label, row in zip(report.labels, report.confusion)]
    print('')
    print(tabulate(rows, ['true \\ predicted'] + report.labels, tablefmt='simple'))


def print_error_by_origin(shares: Mapping[str, float]) -> None:
    print('')
    if not shares:
        print('no misclassified samples')
        return
    rows = [(origin, share * 100) for origin, share in shares.items()]
    print(tabulate(rows, ['errors from class', '%'], tablefmt='simple', floatfmt='.2f'))


def print_baseline(stats: BaselineStatistics, trials: int) -> None:
    assert stats.accuracy is not None and stats.f1_weighted is not None
    print('')
    print('== proportional baseline ({} trials)'.format(trials))
    rows = [
        ('accuracy', stats.accuracy.format_spread(), stats.expected_accuracy * 100,
         stats.accuracy.median * 100, stats.accuracy.mad * 100),
        ('F1 weighted', stats.f1_weighted.format_spread(), None,
         stats.f1_weighted.median * 100, stats.f1_weighted.mad * 100),
    ]
    print(tabulate(rows, ['metric', 'mean % (±95 %)', 'expected %', 'median %', 'MAD %'],
                   tablefmt='simple', floatfmt='.2f', missingval='-'))


def print_importance(pairs: Sequence[Tuple[str, float]]) -> None:
    print('')
    print(tabulate([(name, share * 100) for name, share in pairs],
                   ['feature', 'gain %'], tablefmt='simple', floatfmt='.2f'))


def print_district_summaries(summaries: Sequence[DistrictSummary], positive: str) -> None:
    rows = [(s.district, s.n_plots, s.n_positive, s.positive_acres) for s in summaries]
    print('')
    print(tabulate(rows, ['district', 'plots', positive, '{} acres'.format(positive)],
                   tablefmt='simple', floatfmt='.1f'))


def print_comparison(report: ComparisonReport) -> None:
    rows = [(row['district'], row['predicted_acres'], row['recorded_acres'],
             row['difference'], row['estimate']) for row in report.rows]
    print('')
    print(tabulate(rows, ['district', 'predicted acres', 'recorded acres', 'difference', ''],
                   tablefmt='simple', floatfmt='.1f'))
    print('')
    print('Pearson              {:8.4f}'.format(report.pearson))
    print('RBO (p={:.2f})        {:8.4f}'.format(report.p, report.rbo))
