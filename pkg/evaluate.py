#!/usr/bin/env python3

import argparse

import pandas

from paddywatch import cli, dataio
from paddywatch.learn import stratified_split
from paddywatch.metrics import classification_metrics, error_by_origin
from paddywatch.stats import DEFAULT_BASELINE_TRIALS, baseline_trials


def add_arguments(parser: argparse.ArgumentParser) -> None:
    cli.add_arg_config(parser)
    parser.add_argument('features', type=str, help='labeled features CSV used for training')
    parser.add_argument('model', type=cli.read_model, help='model file written by train')
    parser.add_argument('--baseline-trials', type=int, default=DEFAULT_BASELINE_TRIALS,
                        help='seeded runs of the proportional baseline (default: {}; '
                             'use 0 to skip)'.format(DEFAULT_BASELINE_TRIALS))
    parser.add_argument('--importance', type=int, default=0, metavar='N',
                        help='also list the N features with the largest split gain')
    parser.add_argument('-o', '--output', type=str,
                        help='write the metrics report (JSON)')
    parser.add_argument('--confusion-csv', type=str,
                        help='write the confusion matrix as CSV')


def run(args: argparse.Namespace) -> None:
    model = args.model
    task = model.task
    dataset = dataio.load_dataset(args.features)
    if model.window is not None and dataset.window != model.window:
        raise cli.UsageError('features were extracted over {!r}, the model expects {!r}'.format(
            dataset.window, model.window))
    test_fraction = model.test_fraction or args.cfg['learn']['test_fraction']
    train, test = stratified_split(dataset, test_fraction, model.seed)
    truth = test.targets(task)
    predicted = model.classify(test.X)
    report = classification_metrics(truth, predicted, task.classes)

    cli.print_metrics(report, '{} {} on {} held-out plots'.format(
        task.value, model.kind.value, len(test)))
    cli.print_confusion(report)
    if task.positive_class is not None:
        cli.print_error_by_origin(error_by_origin(truth, predicted, test.labels))
    if args.baseline_trials > 0:
        stats = baseline_trials(train.targets(task), truth, task.classes, model.seed,
                                args.baseline_trials)
        cli.print_baseline(stats, args.baseline_trials)
    if args.importance > 0:
        cli.print_importance(model.top_features(args.importance))

    outputs = []
    if args.output:
        dataio.backup_existing(args.output)
        report.export_json(args.output)
        outputs.append(args.output)
    if args.confusion_csv:
        frame = pandas.DataFrame(report.confusion, index=report.labels, columns=report.labels)
        frame.to_csv(args.confusion_csv, index_label='true')
        outputs.append(args.confusion_csv)
    if outputs:
        manifest = cli.start_manifest('evaluate', args, model.seed)
        manifest.stage('evaluate', 'weighted F1 {:.4f}'.format(report.f1_weighted))
        cli.finish_manifest(manifest, [args.features, model.fileorigin], outputs)


def main():
    cli.setup_logging()
    parser = argparse.ArgumentParser(
        description='evaluate a trained model on its held-out test plots')
    add_arguments(parser)
    args = parser.parse_args()
    cli.run_tool(run, args)


if __name__ == '__main__':
    main()
