#!/usr/bin/env python3

import argparse
import logging
from multiprocessing import pool
import os
from typing import Any, Dict, Iterable, Iterator, Optional, Tuple  # noqa

from paddywatch import PaddyError, cli, dataio, gridfile, zonal
from paddywatch.features import TemporalWindow, extract_features
from paddywatch.timeseries import PlotSeries


REPORT_CHUNKS = 10000

window = None  # type: Optional[TemporalWindow]
sigma = 0.5


def worker_init(window_: TemporalWindow, sigma_: float) -> None:
    global window
    global sigma
    window = window_
    sigma = sigma_


def worker_extract(plot: PlotSeries) -> Tuple[Optional[Dict[str, Any]], Optional[str]]:
    assert window is not None, "worker wasn't initialized!"
    try:
        fv = extract_features(plot, window, sigma)
    except (PaddyError, ValueError) as exc:
        return None, '{}: {}'.format(plot.plot_id, exc)
    if fv.gap_warning:
        logging.warning('plot %s: acquisition gap longer than 30 days', plot.plot_id)
    return dataio.feature_row(fv, plot), None


def plots_from_grids(
            grids_dir: str,
            polygons_file: str,
            buffer_px: int,
            min_area: float,
            max_area: float
        ) -> Iterator[PlotSeries]:
    band_grids = gridfile.read_grid_dir(grids_dir)
    polygons = zonal.size_filter(dataio.read_geojson(polygons_file), min_area, max_area)
    for polygon in polygons:
        try:
            yield zonal.plot_series(polygon, band_grids, buffer_px)
        except (zonal.EmptyMask, zonal.PlotTooSmall) as exc:
            logging.warning('skipping plot %s: %s', polygon.plot_id, exc)


def add_arguments(parser: argparse.ArgumentParser) -> None:
    cli.add_arg_config(parser)
    cli.add_arg_workers(parser)
    cli.add_arg_window(parser)
    cli.add_arg_orbit(parser)
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--series', type=str,
                        help='time-series CSV (plot_id,district,area_m2,band,day,value_db)')
    source.add_argument('--grids', type=str,
                        help='directory of VV/VH grid files; requires --polygons')
    parser.add_argument('--polygons', type=str,
                        help='GeoJSON FeatureCollection of plot polygons')
    parser.add_argument('--labels', type=str,
                        help='labels CSV (plot_id,label,planting_day) joined onto the rows')
    parser.add_argument('--buffer-px', type=int,
                        help='mask erosion radius in pixels (default: [features] buffer_px)')
    parser.add_argument('-o', '--output', type=str, required=True,
                        help='output features CSV')


def run(args: argparse.Namespace) -> None:
    feature_window = cli.get_window(args)
    failed = 0

    def skip_plot(plot_id: str, error: str) -> None:
        nonlocal failed
        failed += 1
        logging.warning('skipping plot %s: %s', plot_id, error)

    workers = cli.get_workers(args)
    smoothing = args.cfg['features']['smoothing_sigma']
    if args.grids:
        if not args.polygons:
            raise cli.UsageError('--grids requires --polygons')
        buffer_px = args.buffer_px
        if buffer_px is None:
            buffer_px = args.cfg['features']['buffer_px']
        plots = plots_from_grids(
            args.grids, args.polygons, buffer_px,
            args.cfg['scene']['min_area_m2'], args.cfg['scene']['max_area_m2'])
        inputs = [args.grids, args.polygons]
    else:
        if os.path.getsize(args.series) == 0:
            raise cli.UsageError('{}: empty input'.format(args.series))
        plots = dataio.iter_series_csv(args.series, on_error=skip_plot, orbit=args.orbit)
        inputs = [args.series]
    labels = None
    if args.labels:
        labels = dataio.read_labels_csv(args.labels)
        plots = (dataio.attach_labels(plot, labels) for plot in plots)
        inputs.append(args.labels)

    manifest = cli.start_manifest('features', args)
    logging.info('Extracting features over %r', feature_window)
    rows = []
    if workers <= 1:
        worker_init(feature_window, smoothing)
        results = map(worker_extract, plots)  # type: Iterable
    else:
        p = pool.Pool(processes=workers, initializer=worker_init,
                      initargs=(feature_window, smoothing))
        results = p.imap(worker_extract, plots, chunksize=64)
    try:
        for i, (row, error) in enumerate(results, start=1):
            if error is not None:
                failed += 1
                logging.warning('skipping plot %s', error)
            else:
                rows.append(row)
            if i % REPORT_CHUNKS == 0:
                logging.info('%d plots processed', i)
    finally:
        if workers > 1:
            p.terminate()
    if not rows:
        raise cli.UsageError('no plots to extract features from')
    if labels is not None:
        unlabeled = sum(1 for row in rows if not row['label'])
        if unlabeled:
            logging.warning('%d plot(s) have no label', unlabeled)

    dataio.backup_existing(args.output)
    dataio.write_features_csv(rows, args.output)
    manifest.stage('extract', '{} plots, {} failed'.format(len(rows), failed))
    logging.info('%d feature rows written to %s (%d plots failed)',
                 len(rows), args.output, failed)
    cli.finish_manifest(manifest, inputs, [args.output])


def main():
    cli.setup_logging()
    parser = argparse.ArgumentParser(
        description='extract the feature matrix of every plot, from a time-series CSV '
                    'or from grids and plot polygons')
    add_arguments(parser)
    args = parser.parse_args()
    cli.run_tool(run, args)


if __name__ == '__main__':
    main()
