import datetime
import os

import pytest

from paddywatch.cfg import (
    ConfigError, boolean, find_key_line, int_list, kind_list, read_cfg)


CONFIG_PATH = os.path.join(os.path.dirname(__file__), '..', 'paddywatch.cfg')


def config_text():
    with open(CONFIG_PATH) as f:
        return f.read()


def write_config(tmp_path, text):
    filename = str(tmp_path / 'test.cfg')
    with open(filename, 'w') as f:
        f.write(text)
    return filename


def line_of(text, needle):
    return next(i for i, line in enumerate(text.splitlines(), start=1) if line.startswith(needle))


def test_default_config():
    cfg = read_cfg(CONFIG_PATH)
    assert cfg['scene']['seed'] == 2024
    assert (cfg['scene']['n_control'], cfg['scene']['n_dsr'], cfg['scene']['n_awd']) == \
        (411, 420, 452)
    assert len(cfg['scene']['districts']) == 18
    assert 'Sri Muktsar Sahib' in cfg['scene']['districts']
    assert len(cfg['scene']['district_dsr_weights']) == 18
    assert cfg['schedule']['dropped'] == [5]
    assert cfg['schedule']['orbits'] == ['ascending']
    assert cfg['planting']['align_planting_dates'] is False
    assert 'aligned_day' not in cfg['planting']
    assert cfg['features']['window_start'] == datetime.date(2024, 5, 1)
    assert cfg['learn']['kinds'] == ['RF', 'GB']
    assert 'max_trees' not in cfg['learn']
    assert cfg['scale']['rbo_p'] == 0.95


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        read_cfg(str(tmp_path / 'missing.cfg'))


@pytest.mark.parametrize('old, new, needle, message', [
    ('n_dsr = 420', 'n_dsr = many', 'n_dsr', 'invalid format'),
    ('awd_shape = square', 'awd_shape = triangle', 'awd_shape', 'invalid format'),
    ('align_planting_dates = false', 'align_planting_dates = maybe',
     'align_planting_dates', 'invalid format'),
    ('kinds = rf, gb', 'kinds = rf, svm', 'kinds', 'invalid format'),
    ('window_end = 2024-12-15', 'window_end = 15.12.2024', 'window_end', 'invalid format'),
    ('awd_cycle_max_days = 10', 'awd_cycle_max_days = 12', 'awd_cycle_max_days', '[4, 10]'),
    ('awd_mean = 58', 'awd_mean = 40', 'awd_mean', 'DSR < CONTROL < AWD'),
    ('span_days = 110', 'span_days = 140', 'span_days', '[0, 110]'),
    ('test_fraction = 0.1', 'test_fraction = 1.5', 'test_fraction', '(0, 1)'),
    ('rbo_p = 0.95', 'rbo_p = 1', 'rbo_p', '(0, 1)'),
    ('orbits = ascending', 'orbits = descending', 'orbits', 'invalid format'),
    ('descending_offset_days = 6', 'descending_offset_days = 12', 'descending_offset_days',
     '[0, period_days)'),
    ('district_dsr_weights = 1.0, 1.2,', 'district_dsr_weights = 1.2,',
     'district_dsr_weights', 'one weight per district'),
])
def test_invalid_value_points_at_line(tmp_path, old, new, needle, message):
    text = config_text()
    assert old in text
    text = text.replace(old, new, 1)
    filename = write_config(tmp_path, text)
    with pytest.raises(ConfigError) as excinfo:
        read_cfg(filename)
    assert '{}:{}'.format(filename, line_of(text, needle)) in str(excinfo.value)
    assert message in str(excinfo.value)


def test_missing_key(tmp_path):
    text = config_text().replace('budget = 20\n', '')
    filename = write_config(tmp_path, text)
    with pytest.raises(ConfigError) as excinfo:
        read_cfg(filename)
    assert 'key "budget" not found' in str(excinfo.value)
    assert '{}:{}'.format(filename, line_of(text, '[learn]')) in str(excinfo.value)


def test_unexpected_key(tmp_path):
    text = config_text().replace('[noise]\n', '[noise]\ncolour = red\n')
    filename = write_config(tmp_path, text)
    with pytest.raises(ConfigError) as excinfo:
        read_cfg(filename)
    assert 'unexpected key "colour"' in str(excinfo.value)
    assert '{}:{}'.format(filename, line_of(text, 'colour')) in str(excinfo.value)


def test_unexpected_section(tmp_path):
    text = config_text() + '\n[orbits]\nascending = true\n'
    filename = write_config(tmp_path, text)
    with pytest.raises(ConfigError) as excinfo:
        read_cfg(filename)
    assert 'unexpected config section [orbits]' in str(excinfo.value)


def test_missing_section(tmp_path):
    text = config_text()
    start = text.index('[noise]')
    end = text.index('[features]')
    filename = write_config(tmp_path, text[:start] + text[end:])
    with pytest.raises(ConfigError) as excinfo:
        read_cfg(filename)
    assert 'section [noise] missing' in str(excinfo.value)


def test_syntax_error(tmp_path):
    filename = write_config(tmp_path, 'seed = 1\n' + config_text())
    with pytest.raises(ConfigError) as excinfo:
        read_cfg(filename)
    assert '{}:1'.format(filename) in str(excinfo.value)


def test_optional_keys(tmp_path):
    text = config_text().replace('# aligned_day = 48', 'aligned_day = 40').replace(
        '# max_trees = 100', 'max_trees = 100').replace('dropped = 5', 'dropped = none')
    cfg = read_cfg(write_config(tmp_path, text))
    assert cfg['planting']['aligned_day'] == 40
    assert cfg['learn']['max_trees'] == 100
    assert cfg['schedule']['dropped'] == []


def test_find_key_line():
    text = config_text()
    assert find_key_line(CONFIG_PATH, 'noise') == line_of(text, '[noise]')
    assert find_key_line(CONFIG_PATH, 'noise', 'speckle_sigma_db') == \
        line_of(text, 'speckle_sigma_db')
    assert find_key_line(CONFIG_PATH, 'noise', 'seed') is None
    assert find_key_line('/nonexistent.cfg', 'noise') is None


@pytest.mark.parametrize('value, expected', [
    ('yes', True), ('On', True), ('0', False), (' false ', False)])
def test_boolean(value, expected):
    assert boolean(value) is expected


def test_value_parsers():
    assert int_list('None') == []
    assert int_list('5, 7') == [5, 7]
    assert kind_list('gb') == ['GB']
    with pytest.raises(ValueError):
        boolean('maybe')
    with pytest.raises(ValueError):
        kind_list('')
