#!/usr/bin/env python3

import argparse
import logging

from paddywatch import cli, dataio
from paddywatch.learn import Task
from paddywatch.scale import DistrictAggregator, iter_predictions_csv, summaries_frame


def add_arguments(parser: argparse.ArgumentParser) -> None:
    cli.add_arg_config(parser)
    parser.add_argument('predictions', type=str, help='predictions CSV written by predict')
    target = parser.add_mutually_exclusive_group()
    target.add_argument('--task', type=Task, default=Task.SOWING, metavar='TASK',
                        help='task whose positive class is counted: sowing (DSR) or '
                             'irrigation (AWD) (default: sowing)')
    target.add_argument('--positive', type=str, metavar='CLASS',
                        help='count an explicit predicted class instead, e.g. CONTROL')
    parser.add_argument('-o', '--output', type=str,
                        help='write district summaries to this CSV')


def positive_class(args: argparse.Namespace) -> str:
    if args.positive:
        return args.positive
    if args.task.positive_class is None:
        raise cli.UsageError('task {} has no positive class; use --positive'.format(
            args.task.value))
    return args.task.positive_class


def run(args: argparse.Namespace) -> None:
    positive = positive_class(args)
    aggregator = DistrictAggregator(positive)
    n_predictions = 0
    for prediction in iter_predictions_csv(args.predictions):
        aggregator.add(prediction)
        n_predictions += 1
    if not n_predictions:
        raise cli.UsageError('{}: no predictions'.format(args.predictions))
    summaries = aggregator.summaries()
    logging.info('%d plots in %d district(s)', n_predictions, len(summaries))
    if not any(s.n_positive for s in summaries):
        logging.warning('no plot was predicted %s', positive)
    cli.print_district_summaries(summaries, positive)

    if args.output:
        manifest = cli.start_manifest('aggregate', args)
        manifest.stage('aggregate', '{} districts, positive class {}'.format(
            len(summaries), positive))
        dataio.backup_existing(args.output)
        summaries_frame(summaries).to_csv(args.output, index=False, float_format='%.4f')
        cli.finish_manifest(manifest, [args.predictions], [args.output])


def main():
    cli.setup_logging()
    parser = argparse.ArgumentParser(
        description='sum predicted plots and positive acreage per district')
    add_arguments(parser)
    args = parser.parse_args()
    cli.run_tool(run, args)


if __name__ == '__main__':
    main()
