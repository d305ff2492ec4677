#!/usr/bin/env python3

# pylint: disable=wrong-import-order,wrong-import-position
import argparse
import logging
from typing import Optional  # noqa

from paddywatch import cli, dataio
from paddywatch.scale import ComparisonReport, compare_records, read_summaries_csv

# Force matplotlib to use a different backend to handle machines without a display
import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa


DEFAULT_RECORDS = 'data/mock_records.csv'


def plot_scatter(report: ComparisonReport, filename: str, title: Optional[str] = None) -> None:
    predicted = [row['predicted_acres'] for row in report.rows]
    recorded = [row['recorded_acres'] for row in report.rows]
    _, ax = plt.subplots(figsize=(8, 8))
    ax.scatter(recorded, predicted, s=18)
    for row in report.rows:
        ax.annotate(row['district'], (row['recorded_acres'], row['predicted_acres']),
                    fontsize=7, xytext=(3, 3), textcoords='offset points')
    top = max(max(predicted), max(recorded)) * 1.05
    ax.plot([0, top], [0, top], linestyle='--', linewidth=0.8, color='grey')
    ax.set_xlim(0, top)
    ax.set_ylim(0, top)
    ax.set_xlabel('recorded acres')
    ax.set_ylabel('predicted acres')
    ax.set_title(title or 'Pearson {:.3f}, RBO {:.3f}'.format(report.pearson, report.rbo))
    plt.savefig(filename, dpi=300)
    plt.close()


def add_arguments(parser: argparse.ArgumentParser) -> None:
    cli.add_arg_config(parser)
    parser.add_argument('districts', type=str, help='district summaries CSV written by aggregate')
    parser.add_argument('--records', type=str, default=DEFAULT_RECORDS,
                        help='official acreage per district, CSV district,acres '
                             '(default: {})'.format(DEFAULT_RECORDS))
    parser.add_argument('--rbo-p', type=float,
                        help='RBO persistence in (0, 1) (default: [scale] rbo_p)')
    parser.add_argument('-o', '--output', type=str,
                        help='write the per-district comparison to this CSV')
    parser.add_argument('--json', type=str,
                        help='write the full comparison report (JSON)')
    parser.add_argument('--plot', type=str,
                        help='save a predicted versus recorded scatter plot (PNG)')


def run(args: argparse.Namespace) -> None:
    p = args.rbo_p if args.rbo_p is not None else args.cfg['scale']['rbo_p']
    if not 0 < p < 1:
        raise cli.UsageError('--rbo-p must lie in (0, 1)')
    summaries = read_summaries_csv(args.districts)
    records = dataio.read_records_csv(args.records)
    report = compare_records(summaries, records, p)
    cli.print_comparison(report)

    outputs = []
    if args.output:
        dataio.backup_existing(args.output)
        report.to_frame().to_csv(args.output, index=False, float_format='%.2f')
        outputs.append(args.output)
    if args.json:
        dataio.backup_existing(args.json)
        report.export_json(args.json)
        outputs.append(args.json)
    if args.plot:
        plot_scatter(report, args.plot)
        logging.info('scatter plot saved to %s', args.plot)
        outputs.append(args.plot)
    if outputs:
        manifest = cli.start_manifest('compare', args)
        manifest.stage('compare', 'Pearson {:.4f}, RBO {:.4f} over {} districts'.format(
            report.pearson, report.rbo, len(report.rows)))
        cli.finish_manifest(manifest, [args.districts, args.records], outputs)


def main():
    cli.setup_logging()
    parser = argparse.ArgumentParser(
        description='compare predicted district acreage with official records')
    add_arguments(parser)
    args = parser.parse_args()
    cli.run_tool(run, args)


if __name__ == '__main__':
    main()
