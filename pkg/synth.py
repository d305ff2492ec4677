#!/usr/bin/env python3

import argparse
import logging
import os

from paddywatch import cli, dataio, gridfile, synth
from paddywatch.cfg import orbit_list
from paddywatch.timeseries import Orbit, PracticeLabel


SERIES_FILENAME = 'series.csv'
LABELS_FILENAME = 'labels.csv'
POLYGONS_FILENAME = 'plots.geojson'
GRIDS_DIRNAME = 'grids'


def add_arguments(parser: argparse.ArgumentParser) -> None:
    cli.add_arg_config(parser)
    cli.add_arg_seed(parser)
    cli.add_arg_workers(parser)
    parser.add_argument('outdir', type=str,
                        help='output directory for {}, {} and {}'.format(
                            SERIES_FILENAME, LABELS_FILENAME, POLYGONS_FILENAME))
    for practice in PracticeLabel:
        parser.add_argument('--n-{}'.format(practice.value.lower()), type=int,
                            help='number of {} plots (default: [scene] n_{})'.format(
                                practice.value, practice.value.lower()))
    parser.add_argument('--period', type=int,
                        help='revisit period in days (default: [schedule] period_days)')
    parser.add_argument('--orbits', type=orbit_list,
                        help='comma separated orbits to generate, ascending and optionally '
                             'descending (default: [schedule] orbits)')
    parser.add_argument('--align-planting-dates', action='store_true',
                        help='plant every plot on the same day (removes lag features)')
    parser.add_argument('--grids', action='store_true',
                        help='also render VV/VH grids into <outdir>/{}'.format(GRIDS_DIRNAME))


def run(args: argparse.Namespace) -> None:
    seed = cli.get_seed(args)
    workers = cli.get_workers(args)
    config = synth.scene_config(args.cfg)
    if args.period is not None:
        if args.period < 1:
            raise cli.UsageError('revisit period must be at least 1 day')
        config = config._replace(schedule=config.schedule._replace(period_days=args.period))
    if args.orbits is not None:
        config = config._replace(orbits=tuple(Orbit(name) for name in args.orbits))
    if Orbit.DESCENDING in config.orbits and \
            config.descending_offset_days >= config.schedule.period_days:
        raise cli.UsageError('descending offset of {} days needs a revisit period above '
                             'it'.format(config.descending_offset_days))
    if args.align_planting_dates:
        config = config._replace(
            planting=config.planting._replace(align_planting_dates=True))
    counts = {}
    for practice in PracticeLabel:
        count = getattr(args, 'n_{}'.format(practice.value.lower()))
        if count is None:
            count = args.cfg['scene']['n_{}'.format(practice.value.lower())]
        if count < 1:
            raise cli.UsageError('at least one {} plot is required'.format(practice.value))
        counts[practice] = count

    manifest = cli.start_manifest('synth', args, seed)
    logging.info('Generating %d plots, %s orbit(s) (seed %d)', sum(counts.values()),
                 ', '.join(orbit.value for orbit in config.orbits), seed)
    scene = synth.generate_scene(counts, config, seed, workers)
    synth.log_planting_summary(scene.plots)
    manifest.stage('generate', '{} plots, {} series'.format(
        len(scene.plots), len(scene.series())))

    os.makedirs(args.outdir, exist_ok=True)
    outputs = [os.path.join(args.outdir, name)
               for name in (SERIES_FILENAME, LABELS_FILENAME, POLYGONS_FILENAME)]
    for filename in outputs:
        dataio.backup_existing(filename)
    dataio.write_series_csv(scene.series(), outputs[0])
    dataio.write_labels_csv(scene.plots, outputs[1])
    dataio.write_geojson(scene.polygons, outputs[2])
    if args.grids:
        pixel_size = args.cfg['scene'].get('pixel_size_m', 10.0)
        grids_dir = os.path.join(args.outdir, GRIDS_DIRNAME)
        gridfile.write_grid_dir(synth.render_grids(scene, pixel_size), grids_dir)
        outputs.append(grids_dir)
        manifest.stage('render', 'grids at {:g} m'.format(pixel_size))
    cli.print_class_counts({practice.value: count for practice, count in counts.items()})
    cli.finish_manifest(manifest, [], outputs)


def main():
    cli.setup_logging()
    parser = argparse.ArgumentParser(
        description='generate a labeled synthetic scene: per-plot VV/VH series, '
                    'labels and plot polygons')
    add_arguments(parser)
    args = parser.parse_args()
    cli.run_tool(run, args)


if __name__ == '__main__':
    main()
