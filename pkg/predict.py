#!/usr/bin/env python3

import argparse
import logging
import os

from paddywatch import cli, dataio
from paddywatch.features import TemporalWindow
from paddywatch.scale import ErrorLedger, PredictionWriter, batch_predict


def add_arguments(parser: argparse.ArgumentParser) -> None:
    cli.add_arg_config(parser)
    cli.add_arg_workers(parser)
    cli.add_arg_window(parser)
    cli.add_arg_orbit(parser)
    parser.add_argument('series', type=str, help='time-series CSV of the plots to classify')
    parser.add_argument('--model', type=cli.read_model, nargs='+', required=True,
                        metavar='MODEL',
                        help='one or more model files trained for the same task; '
                             'several models vote')
    parser.add_argument('--chunksize', type=int,
                        help='plots per worker task (default: [scale] chunksize)')
    parser.add_argument('--ledger', type=str,
                        help='write plots that could not be classified to this CSV')
    parser.add_argument('-o', '--output', type=str, required=True,
                        help='output predictions CSV')


def prediction_window(args: argparse.Namespace) -> TemporalWindow:
    """Window from the flags if any is given, else the one the first model was trained on."""
    if args.start is None and args.end is None and args.step is None:
        for model in args.model:
            if model.window is not None:
                return model.window
    return cli.get_window(args)


def run(args: argparse.Namespace) -> None:
    workers = cli.get_workers(args)
    chunksize = args.chunksize or args.cfg['scale']['chunksize']
    if chunksize < 1:
        raise cli.UsageError('--chunksize must be at least 1')
    if os.path.getsize(args.series) == 0:
        raise cli.UsageError('{}: empty input'.format(args.series))
    window = prediction_window(args)
    models = args.model

    manifest = cli.start_manifest('predict', args)
    logging.info('Predicting %s with %d model(s) over %r, %s orbit',
                 models[0].task.value, len(models), window, args.orbit.value)
    ledger = ErrorLedger()
    dataio.backup_existing(args.output)
    plots = dataio.iter_series_csv(args.series, on_error=ledger.add, orbit=args.orbit)
    predictions = batch_predict(
        models, plots, window, ledger,
        sigma=args.cfg['features']['smoothing_sigma'], workers=workers, chunksize=chunksize)
    with PredictionWriter(args.output) as writer:
        for prediction in predictions:
            writer.write(prediction)
    manifest.stage('predict', '{} plots classified, {} failed'.format(
        writer.count, len(ledger)))
    logging.info('%d predictions written to %s, %d plot(s) failed',
                 writer.count, args.output, len(ledger))

    outputs = [args.output]
    if args.ledger:
        dataio.backup_existing(args.ledger)
        ledger.to_csv(args.ledger)
        outputs.append(args.ledger)
    elif len(ledger):
        for entry in ledger.entries[:10]:
            logging.warning('plot %s: %s', entry.plot_id, entry.error)
    inputs = [args.series] + [model.fileorigin for model in models if model.fileorigin]
    cli.finish_manifest(manifest, inputs, outputs)


def main():
    cli.setup_logging()
    parser = argparse.ArgumentParser(
        description='classify every plot of a time-series CSV with trained models')
    add_arguments(parser)
    args = parser.parse_args()
    cli.run_tool(run, args)


if __name__ == '__main__':
    main()
