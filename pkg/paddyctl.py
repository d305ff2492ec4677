#!/usr/bin/env python3

import argparse

import ablate
import aggregate
import compare
import evaluate
import features
import predict
import synth
import train
from paddywatch import cli


COMMANDS = (
    ('synth', synth, 'generate a labeled synthetic scene'),
    ('features', features, 'extract per-plot feature vectors'),
    ('train', train, 'search hyperparameters and train one model'),
    ('evaluate', evaluate, 'evaluate a model on its held-out plots'),
    ('ablate', ablate, 'compare season windows and sampling steps'),
    ('predict', predict, 'classify plots in bulk'),
    ('aggregate', aggregate, 'sum predictions per district'),
    ('compare', compare, 'compare district acreage with official records'),
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='rice water-management classification from SAR backscatter')
    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
    subparsers.required = True
    for name, module, help_ in COMMANDS:
        subparser = subparsers.add_parser(name, help=help_, description=help_)
        module.add_arguments(subparser)
        subparser.set_defaults(func=module.run)
    return parser


def main():
    cli.setup_logging()
    args = build_parser().parse_args()
    cli.run_tool(args.func, args)


if __name__ == '__main__':
    main()
