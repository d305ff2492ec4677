#!/usr/bin/env python3

import argparse
import logging
import os

from tabulate import tabulate

from paddywatch import cli, dataio
from paddywatch.ablation import PRESETS, OrbitSet, custom_preset, run_ablation
from paddywatch.features import ALLOWED_STEPS


def add_arguments(parser: argparse.ArgumentParser) -> None:
    cli.add_arg_config(parser)
    cli.add_arg_seed(parser)
    cli.add_arg_workers(parser)
    cli.add_arg_task(parser, multiple=True)
    cli.add_arg_kind(parser)
    cli.add_arg_window(parser)
    parser.add_argument('series', type=str, help='time-series CSV')
    parser.add_argument('--labels', type=str, required=True,
                        help='labels CSV (plot_id,label,planting_day)')
    parser.add_argument('--preset', choices=sorted(PRESETS),
                        help='run the whole preset list of season windows; without it '
                             'a single window is taken from --start/--end')
    parser.add_argument('--steps', type=cli.int_list,
                        help='comma separated sampling steps, each one of {} '
                             '(default: --step or [features] step_days)'.format(
                                 ', '.join(str(s) for s in ALLOWED_STEPS)))
    parser.add_argument('--budget', type=int,
                        help='hyperparameter configurations per cell (default: [learn] budget)')
    parser.add_argument('--max-trees', type=int,
                        help='cap on the number of trees (default: [learn] max_trees)')
    parser.add_argument('--test-fraction', type=float,
                        help='share of plots held out (default: [learn] test_fraction)')
    parser.add_argument('--orbit', type=OrbitSet, nargs='+', default=[OrbitSet.ASCENDING],
                        metavar='ORBIT',
                        help='orbit sets to compare: ascending, descending, both '
                             '(default: ascending)')
    parser.add_argument('-o', '--output', type=str, required=True,
                        help='output grid CSV; the full grid is written beside it as JSON')


def json_filename(output: str) -> str:
    return os.path.splitext(output)[0] + '.json'


def run(args: argparse.Namespace) -> None:
    lcfg = args.cfg['learn']
    seed = cli.get_seed(args)
    workers = cli.get_workers(args)
    kinds = cli.get_kinds(args)
    budget = args.budget if args.budget is not None else lcfg['budget']
    max_trees = args.max_trees if args.max_trees is not None else lcfg.get('max_trees')
    test_fraction = args.test_fraction or lcfg['test_fraction']
    if budget < 1:
        raise cli.UsageError('--budget must be at least 1')
    if not 0 < test_fraction < 1:
        raise cli.UsageError('--test-fraction must lie in (0, 1)')

    window = cli.get_window(args)
    steps = args.steps or [window.step_days]
    bad = [step for step in steps if step not in ALLOWED_STEPS]
    if bad:
        raise cli.UsageError('unsupported step(s) {}; choose from {}'.format(
            ', '.join(str(s) for s in bad), ', '.join(str(s) for s in ALLOWED_STEPS)))
    if args.preset:
        presets = PRESETS[args.preset]
    else:
        presets = (custom_preset(window),)

    labels = dataio.read_labels_csv(args.labels)
    plots = [dataio.attach_labels(plot, labels) for plot in dataio.iter_series_csv(args.series)]
    unlabeled = [plot.plot_id for plot in plots if plot.label is None]
    if unlabeled:
        raise cli.UsageError('{} plot(s) have no label, e.g. {}'.format(
            len(unlabeled), unlabeled[0]))
    if not plots:
        raise cli.UsageError('{}: no plots'.format(args.series))

    n_plots = len({plot.plot_id for plot in plots})
    manifest = cli.start_manifest('ablate', args, seed)
    logging.info('Ablation over %d window(s) x %d step(s) x %d orbit set(s), %d plots',
                 len(presets), len(steps), len(args.orbit), n_plots)
    try:
        grid = run_ablation(
            plots, presets, args.task, budget, seed, kinds=kinds, steps=steps,
            test_fraction=test_fraction, sigma=args.cfg['features']['smoothing_sigma'],
            max_trees=max_trees, workers=workers, orbit_sets=args.orbit)
    except ValueError as exc:
        raise cli.UsageError(str(exc)) from exc
    manifest.stage('ablate', '{} cells, {} test plots'.format(len(grid.cells), grid.n_test))

    outputs = [args.output, json_filename(args.output)]
    for filename in outputs:
        dataio.backup_existing(filename)
    grid.export_csv(outputs[0])
    grid.export_json(outputs[1])

    frame = grid.to_frame()
    columns = ['row', 'dates', 'step', 'orbit'] + [
        'f1_{}'.format(task.value) for task in args.task]
    table = frame[columns].copy()
    for task in args.task:
        table['f1_{}'.format(task.value)] *= 100
    print('')
    print('weighted F1 % on {} held-out plots'.format(grid.n_test))
    print(tabulate(table.values.tolist(), columns, tablefmt='simple', floatfmt='.2f'))
    cli.finish_manifest(manifest, [args.series, args.labels], outputs)


def main():
    cli.setup_logging()
    parser = argparse.ArgumentParser(
        description='train and evaluate classifiers over season windows, sampling steps '
                    'and orbits')
    add_arguments(parser)
    args = parser.parse_args()
    cli.run_tool(run, args)


if __name__ == '__main__':
    main()
