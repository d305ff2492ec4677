#!/usr/bin/env python3

import argparse
import logging

from paddywatch import cli, dataio
from paddywatch.learn import ModelKind, hyperparam_search, stratified_split


DEFAULT_TOP_FEATURES = 10


def add_arguments(parser: argparse.ArgumentParser) -> None:
    cli.add_arg_config(parser)
    cli.add_arg_seed(parser)
    cli.add_arg_workers(parser)
    cli.add_arg_task(parser)
    parser.add_argument('features', type=str, help='labeled features CSV')
    parser.add_argument('--kind', type=cli.model_kind, default=ModelKind.RF, metavar='KIND',
                        help='model kind: rf or gb (default: rf)')
    parser.add_argument('--budget', type=int,
                        help='number of sampled hyperparameter configurations '
                             '(default: [learn] budget)')
    parser.add_argument('--max-trees', type=int,
                        help='cap on the number of trees (default: [learn] max_trees)')
    parser.add_argument('--test-fraction', type=float,
                        help='share of plots held out for evaluation '
                             '(default: [learn] test_fraction)')
    parser.add_argument('-o', '--output', type=str, required=True,
                        help='output model file (JSON)')


def run(args: argparse.Namespace) -> None:
    lcfg = args.cfg['learn']
    seed = cli.get_seed(args)
    workers = cli.get_workers(args)
    budget = args.budget if args.budget is not None else lcfg['budget']
    max_trees = args.max_trees if args.max_trees is not None else lcfg.get('max_trees')
    test_fraction = args.test_fraction or lcfg['test_fraction']
    if budget < 1:
        raise cli.UsageError('--budget must be at least 1')
    if not 0 < test_fraction < 1:
        raise cli.UsageError('--test-fraction must lie in (0, 1)')

    manifest = cli.start_manifest('train', args, seed)
    dataset = dataio.load_dataset(args.features)
    train, test = stratified_split(dataset, test_fraction, seed)
    logging.info('%d plots: %d for training, %d held out', len(dataset), len(train), len(test))
    cli.print_class_counts(
        {label: train.targets(args.task).count(label) for label in args.task.classes},
        title='{} training class'.format(args.task.value))

    model = hyperparam_search(train, args.kind, args.task, budget, seed, max_trees, workers)
    model.test_fraction = test_fraction
    manifest.stage('search', '{} trials, selected {} {}, validation weighted F1 {:.4f}'.format(
        budget, model.kind.value, model.hyperparams, model.validation_f1))

    dataio.backup_existing(args.output)
    model.export_json(args.output)
    print('')
    print('{} {} model, hyperparameters {}'.format(
        args.task.value, model.kind.value, model.hyperparams))
    print('validation weighted F1 {:.2f} %'.format(model.validation_f1 * 100))
    cli.print_importance(model.top_features(DEFAULT_TOP_FEATURES))
    cli.finish_manifest(manifest, [args.features], [args.output])


def main():
    cli.setup_logging()
    parser = argparse.ArgumentParser(
        description='search hyperparameters and train an RF or GB model for one task')
    add_arguments(parser)
    args = parser.parse_args()
    cli.run_tool(run, args)


if __name__ == '__main__':
    main()
