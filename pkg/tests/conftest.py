import os

import pytest

from paddywatch.cfg import read_cfg
from paddywatch.synth import generate_scene, scene_config
from paddywatch.timeseries import PracticeLabel


CONFIG_PATH = os.path.join(os.path.dirname(__file__), '..', 'paddywatch.cfg')


def pytest_addoption(parser):
    parser.addoption('--run-acceptance', action='store_true', default=False,
                     help='run slow full-size scene tests')


def pytest_configure(config):
    config.addinivalue_line('markers', 'acceptance: slow test on a full-size scene')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--run-acceptance'):
        return
    skip = pytest.mark.skip(reason='needs --run-acceptance')
    for item in items:
        if 'acceptance' in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope='session')
def cfg():
    return read_cfg(CONFIG_PATH)


@pytest.fixture(scope='session')
def small_scene(cfg):
    """12 labeled plots per practice spread over the configured districts"""
    counts = {practice: 12 for practice in PracticeLabel}
    return generate_scene(counts, scene_config(cfg), seed=11)
