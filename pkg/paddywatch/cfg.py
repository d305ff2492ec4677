"""
Configuration parser for paddywatch tools.

Read-only.
"""

import configparser
import datetime
import logging
import os
import re
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple  # noqa

from . import PaddyError


AWD_SHAPES = ('square', 'sine')
ORBITS = ('ascending', 'descending')
MODEL_KINDS = ('RF', 'GB')


class ConfigError(PaddyError, ValueError):
    pass


def comma_list(lstr):
    """
    Split string 'a, b' into list [a, b]
    """
    return [name.strip() for name in lstr.split(',') if name.strip()]


def float_list(lstr):
    return [float(value) for value in comma_list(lstr)]


def int_list(lstr):
    """'none' stands for an empty list"""
    if lstr.strip().lower() == 'none':
        return []
    return [int(value) for value in comma_list(lstr)]


def boolean(bstr):
    value = bstr.strip().lower()
    if value in ('1', 'yes', 'true', 'on'):
        return True
    if value in ('0', 'no', 'false', 'off'):
        return False
    raise ValueError('not a boolean')


def iso_date(dstr):
    return datetime.date.fromisoformat(dstr.strip())


def awd_shape(sstr):
    if sstr not in AWD_SHAPES:
        raise ValueError('unsupported AWD modulation shape')
    return sstr


def orbit_list(ostr):
    orbits = [orbit.lower() for orbit in comma_list(ostr)]
    if 'ascending' not in orbits or set(orbits) - set(ORBITS):
        raise ValueError('orbits must include ascending and be chosen from {}'.format(
            ', '.join(ORBITS)))
    return [orbit for orbit in ORBITS if orbit in orbits]


def kind_list(kstr):
    kinds = [kind.upper() for kind in comma_list(kstr)]
    unknown = set(kinds) - set(MODEL_KINDS)
    if unknown or not kinds:
        raise ValueError('model kinds must be chosen from {}'.format(', '.join(MODEL_KINDS)))
    return kinds


# declarative config format description
# dict structure: dict[section name][key name] = (type, required)
_CFGFMT = {
    'scene': {
        'seed': (int, True),
        'n_control': (int, True),
        'n_dsr': (int, True),
        'n_awd': (int, True),
        'districts': (comma_list, True),
        'district_dsr_weights': (float_list, False),
        'min_area_m2': (float, True),
        'max_area_m2': (float, True),
        'pixel_size_m': (float, False),
    },
    'schedule': {
        'start_day': (int, True),
        'end_day': (int, True),
        'period_days': (int, True),
        'dropped': (int_list, False),
        'orbits': (orbit_list, True),
        'descending_offset_days': (int, True),
        'descending_dip_scale': (float, True),
    },
    'planting': {
        'dsr_mean': (float, True),
        'dsr_std': (float, True),
        'control_mean': (float, True),
        'control_std': (float, True),
        'awd_mean': (float, True),
        'awd_std': (float, True),
        'span_start': (int, True),
        'span_days': (int, True),
        'align_planting_dates': (boolean, True),
        'aligned_day': (int, False),
    },
    'templates': {
        'base_vv_db': (float, True),
        'base_vh_db': (float, True),
        'flood_drop_db': (float, True),
        'vh_flood_drop_db': (float, True),
        'flood_days': (float, True),
        'sowing_dip_db': (float, True),
        'sowing_dip_duration_days': (float, True),
        'vv_growth_db': (float, True),
        'vh_growth_db': (float, True),
        'growth_midpoint_days': (float, True),
        'growth_rate_days': (float, True),
        'harvest_after_days': (float, True),
        'canopy_attenuation': (float, True),
        'awd_start_days': (float, True),
        'awd_cycle_min_days': (float, True),
        'awd_cycle_max_days': (float, True),
        'awd_cycle_jitter_days': (float, True),
        'awd_wet_fraction': (float, True),
        'awd_shape': (awd_shape, True),
    },
    'noise': {
        'speckle_sigma_db': (float, True),
    },
    'features': {
        'window_start': (iso_date, True),
        'window_end': (iso_date, True),
        'step_days': (int, True),
        'smoothing_sigma': (float, True),
        'buffer_px': (int, True),
    },
    'learn': {
        'test_fraction': (float, True),
        'budget': (int, True),
        'kinds': (kind_list, True),
        'max_trees': (int, False),
    },
    'scale': {
        'workers': (int, True),
        'chunksize': (int, True),
        'rbo_p': (float, True),
    },
}


def find_key_line(filename: str, section: str, key: Optional[str] = None) -> Optional[int]:
    """Line number of a key (or of the section header when key is None)."""
    current = None
    section_re = re.compile(r'^\s*\[(?P<name>[^\]]+)\]')
    key_re = re.compile(r'^\s*(?P<key>[^=#\s][^=]*?)\s*=')
    try:
        with open(filename) as f:
            for lineno, line in enumerate(f, start=1):
                match = section_re.match(line)
                if match:
                    current = match.group('name').strip()
                    if key is None and current == section:
                        return lineno
                    continue
                if key is not None and current == section:
                    match = key_re.match(line)
                    if match and match.group('key').lower() == key.lower():
                        return lineno
    except OSError:
        pass
    return None


def _anchor(filename: str, section: str, key: Optional[str] = None) -> str:
    lineno = find_key_line(filename, section, key)
    if lineno is None:
        return filename
    return '{}:{}'.format(filename, lineno)


def cfg2dict_convert(fmt, cparser, filename):
    """
    Convert values from ConfigParser into dict with proper data types.

    Raises ConfigError if a mandatory section or key is missing
           and if an extra key is detected.
    """
    cdict = {}  # type: Dict[str, Dict[str, Any]]
    for sectname, sectfmt in fmt.items():
        sectdict = cdict.setdefault(sectname, {})
        if sectname not in cparser:
            raise ConfigError('{}: section [{}] missing in config'.format(filename, sectname))
        for valname, (valfmt, valreq) in sectfmt.items():
            try:
                if not cparser[sectname][valname].strip():
                    raise ValueError('empty values are not allowed')
                sectdict[valname] = valfmt(cparser[sectname][valname])
            except ValueError as ex:
                raise ConfigError('{}: config section [{}] key "{}" has invalid format: '
                                  '{}; expected format: {}'.format(
                                      _anchor(filename, sectname, valname), sectname,
                                      valname, ex, valfmt.__name__)) from ex
            except KeyError as ex:
                if valreq:
                    raise ConfigError('{}: config section [{}] key "{}" not found'.format(
                        _anchor(filename, sectname), sectname, valname)) from ex
        unsupported_keys = set(cparser[sectname].keys()) - set(sectfmt.keys())
        if unsupported_keys:
            key = sorted(unsupported_keys)[0]
            raise ConfigError('{}: unexpected key "{}" in section [{}]'.format(
                _anchor(filename, sectname, key), key, sectname))
    return cdict


def cfg2dict_check_sect(fmt, cfg, filename):
    """
    Check non-existence of unhandled config sections.
    """
    supported_sections = set(fmt.keys())
    present_sections = set(cfg.keys()) - {'DEFAULT'}
    unsupported_sections = present_sections - supported_sections
    if unsupported_sections:
        section = sorted(unsupported_sections)[0]
        raise ConfigError('{}: unexpected config section [{}]'.format(
            _anchor(filename, section), section))


def cfg2dict_check_values(cdict, filename):
    """Cross-key constraints."""
    def fail(section, key, msg):
        raise ConfigError('{}: [{}] {}'.format(_anchor(filename, section, key), section, msg))

    scene = cdict['scene']
    for key in ('n_control', 'n_dsr', 'n_awd'):
        if scene[key] < 1:
            fail('scene', key, '{} must be at least 1'.format(key))
    if not scene['districts']:
        fail('scene', 'districts', 'at least one district is required')
    weights = scene.get('district_dsr_weights')
    if weights is not None:
        if len(weights) != len(scene['districts']):
            fail('scene', 'district_dsr_weights', 'one weight per district is required')
        if any(w <= 0 for w in weights):
            fail('scene', 'district_dsr_weights', 'weights must be positive')
    if not 0 < scene['min_area_m2'] < scene['max_area_m2']:
        fail('scene', 'max_area_m2', 'area bounds must satisfy 0 < min < max')

    schedule = cdict['schedule']
    if schedule['period_days'] < 1:
        fail('schedule', 'period_days', 'period must be at least 1 day')
    if not 0 <= schedule['start_day'] < schedule['end_day']:
        fail('schedule', 'end_day', 'schedule must satisfy 0 <= start < end')
    if not 0 <= schedule['descending_offset_days'] < schedule['period_days']:
        fail('schedule', 'descending_offset_days', 'offset must lie in [0, period_days)')
    if not 0 <= schedule['descending_dip_scale'] <= 1:
        fail('schedule', 'descending_dip_scale', 'dip scale must lie in [0, 1]')

    planting = cdict['planting']
    if not planting['dsr_mean'] < planting['control_mean'] < planting['awd_mean']:
        fail('planting', 'awd_mean', 'class means must be ordered DSR < CONTROL < AWD')
    if planting['span_days'] > 110 or planting['span_days'] < 0:
        fail('planting', 'span_days', 'span must lie in [0, 110] days')

    templates = cdict['templates']
    if not 4 <= templates['awd_cycle_min_days'] <= templates['awd_cycle_max_days'] <= 10:
        fail('templates', 'awd_cycle_max_days', 'AWD cycle bounds must lie within [4, 10] days')
    if not 0 < templates['awd_wet_fraction'] < 1:
        fail('templates', 'awd_wet_fraction', 'wet fraction must lie in (0, 1)')

    learn = cdict['learn']
    if not 0 < learn['test_fraction'] < 1:
        fail('learn', 'test_fraction', 'test fraction must lie in (0, 1)')
    if learn['budget'] < 1:
        fail('learn', 'budget', 'budget must be at least 1')

    if not 0 < cdict['scale']['rbo_p'] < 1:
        fail('scale', 'rbo_p', 'RBO persistence must lie in (0, 1)')


def read_cfg(filename):
    """
    Read config file, convert values, validate data and return dict[section][key] = value.
    """
    # verify the file exists (ConfigParser does not do it)
    if not os.path.isfile(filename):
        msg = "Config file {} doesn't exist".format(filename)
        logging.critical(msg)
        raise ConfigError(msg)

    try:
        parser = configparser.ConfigParser(
            delimiters='=',
            comment_prefixes='#',
            interpolation=None,
            empty_lines_in_values=False)
        try:
            parser.read(filename)
        except configparser.Error as exc:
            lineno = getattr(exc, 'lineno', None)
            anchor = '{}:{}'.format(filename, lineno) if lineno else filename
            raise ConfigError('{}: {}'.format(anchor, exc.message)) from exc

        cdict = cfg2dict_convert(_CFGFMT, parser, filename)
        cfg2dict_check_sect(_CFGFMT, parser, filename)
        cfg2dict_check_values(cdict, filename)
    except ConfigError as exc:
        logging.critical('Failed to parse config: %s', exc)
        raise

    return cdict


if __name__ == '__main__':
    from pprint import pprint
    import sys

    pprint(read_cfg(sys.argv[1]))
