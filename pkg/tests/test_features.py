import datetime
import math

import numpy
import pytest
from pytest import approx

from paddywatch.features import (
    DegenerateFit, FeatureVector, N_FEATURES, SCHEMA_NAMES, SENTINEL, ExtremumKind,
    TemporalWindow, extract_features, find_extrema, find_inflections, fit_gaussian)
from paddywatch.timeseries import (
    Band, PlotSeries, PracticeLabel, ResampledSeries, WindowError)


def series(values, step=7, start=0):
    values = numpy.asarray(values, dtype=float)
    return ResampledSeries(Band.VV, start, start + step * (values.size - 1), step, values)


def seasonal_plot(label=None, planting_day=None, plot_id='P1'):
    days = numpy.arange(0, 229, 12)
    vv = -12.0 - 5.0 * numpy.exp(-(days - 60.0) ** 2 / 300.0) + 0.01 * days
    vh = -20.0 + 6.0 / (1.0 + numpy.exp(-(days - 100.0) / 10.0))
    return PlotSeries(plot_id, 'D1', 8000.0, days, {Band.VV: vv, Band.VH: vh},
                      label=label, planting_day=planting_day)


def test_schema():
    assert N_FEATURES == 76
    assert len(set(SCHEMA_NAMES)) == 76
    assert SCHEMA_NAMES[0] == 'VV_trough1_t'
    assert SCHEMA_NAMES[-1] == 'RVI_max'
    assert 'RATIO_gauss_sigma' in SCHEMA_NAMES


@pytest.mark.parametrize('start, end, step', [
    (datetime.date(2024, 6, 1), datetime.date(2024, 9, 15), 4),
    (datetime.date(2024, 5, 1), datetime.date(2024, 12, 15), 7),
])
def test_window_from_dates(start, end, step):
    window = TemporalWindow.from_dates(start, end, step)
    assert window.start_day == (start - datetime.date(2024, 5, 1)).days
    assert window.end_day == (end - datetime.date(2024, 5, 1)).days
    assert window == TemporalWindow(window.start_day, window.end_day, step)
    assert hash(window) == hash(TemporalWindow(window.start_day, window.end_day, step))


@pytest.mark.parametrize('start, end, step', [
    (50, 50, 7),
    (-1, 100, 7),
    (0, 229, 7),
    (0, 100, 5),
])
def test_window_rejects(start, end, step):
    with pytest.raises(WindowError):
        TemporalWindow(start, end, step)


def test_feature_vector_length():
    window = TemporalWindow(0, 228, 7)
    with pytest.raises(ValueError):
        FeatureVector('P', window, [0.0] * 75)
    fv = FeatureVector('P', window, numpy.arange(76.0))
    assert fv['VV_trough1_t'] == 0.0
    assert fv.as_dict()['RVI_max'] == 75.0


@pytest.mark.parametrize('values, troughs, crests', [
    ([5, 3, 5], [(7.0, 3.0)], []),
    ([1, 4, 1, 4, 1], [(14.0, 1.0)], [(7.0, 4.0), (21.0, 4.0)]),
    ([3, 1, 1, 1, 3], [(7.0, 1.0)], []),
    ([1, 2, 3, 4], [], []),
    ([2, 2, 2, 2], [], []),
    ([1, 3, 3, 2, 2, 5], [(21.0, 2.0)], [(7.0, 3.0)]),
])
def test_find_extrema(values, troughs, crests):
    extrema = find_extrema(series(values))
    assert extrema.trough_count == len(troughs)
    assert extrema.crest_count == len(crests)
    found = [(f.t_rel, f.amplitude) for f in extrema.troughs if f.present]
    assert found == troughs
    found = [(f.t_rel, f.amplitude) for f in extrema.crests if f.present]
    assert found == crests


def test_find_extrema_pads_and_counts():
    values = [0, 1] * 6 + [0]  # six crests, five interior troughs
    extrema = find_extrema(series(values))
    assert extrema.crest_count == 6
    assert extrema.trough_count == 5
    assert len(extrema.crests) == 3
    assert [f.t_rel for f in extrema.crests] == [7.0, 21.0, 35.0]
    assert not find_extrema(series([1, 2, 3])).troughs[0].present
    assert find_extrema(series([1, 2, 3])).troughs[0].t_rel == SENTINEL


def test_find_inflections_cubic():
    t = numpy.arange(-20, 21, dtype=float)
    (first, second, third) = find_inflections(series(t ** 3 - 300 * t, step=1))
    assert first.present
    assert first.kind == ExtremumKind.INFLECTION
    assert abs(first.t_rel - 20.0) <= 1.0
    assert not second.present and not third.present


def test_find_inflections_none_for_line():
    assert not any(f.present for f in find_inflections(series(numpy.arange(10.0))))


@pytest.mark.parametrize('sigma', [5.0, 12.0, 30.0, 60.0])
def test_fit_gaussian_recovers_parameters(sigma):
    t = 4.0 * numpy.arange(58)
    y = 5.0 * numpy.exp(-(t - 100.0) ** 2 / (2 * sigma ** 2))
    fit = fit_gaussian(series(y, step=4))
    assert fit.converged
    assert fit.amplitude == approx(5.0, abs=1e-3)
    assert fit.peak_day == approx(100.0, abs=1e-3)
    assert fit.sigma_days == approx(sigma, abs=1e-3)
    assert fit.r_squared > 0.999


@pytest.mark.parametrize('values', [
    [1.0] * 10,
    [1.0, 2.0, 3.0, 2.0],
])
def test_fit_gaussian_degenerate(values):
    with pytest.raises(DegenerateFit):
        fit_gaussian(series(values))


def test_extract_features_constant_plot():
    days = list(range(0, 229, 12))
    plot = PlotSeries('C', 'D1', 5000.0, days,
                      {Band.VV: [-11.0] * len(days), Band.VH: [-19.0] * len(days)})
    fv = extract_features(plot, TemporalWindow(0, 228, 7))
    assert fv.values.shape == (76,)
    assert fv['VV_mean'] == approx(-11.0)
    assert fv['VH_max'] == approx(-19.0)
    assert fv['RATIO_min'] == approx(8.0)
    for band in ('VV', 'VH', 'RATIO'):
        for kind in ('trough', 'crest', 'infl'):
            for i in (1, 2, 3):
                assert fv['{}_{}{}_t'.format(band, kind, i)] == SENTINEL
    assert fv['RATIO_gauss_amp'] == SENTINEL
    assert fv['RATIO_gauss_r2'] == 0.0
    expected_rvi = 4 * 10 ** -1.9 / (10 ** -1.1 + 10 ** -1.9)
    assert fv['RVI_mean'] == approx(expected_rvi)


def test_extract_features_seasonal():
    fv = extract_features(seasonal_plot(), TemporalWindow(0, 228, 7))
    assert fv['VV_trough1_t'] == approx(63.0, abs=7.0)
    assert fv['VV_trough_count'] >= 1
    assert fv['VH_min'] < fv['VH_max']
    assert all(math.isfinite(value) for name, value in fv.as_dict().items()
               if not name.startswith('RATIO_gauss'))
    assert not fv.gap_warning


def test_extract_features_ignores_labels():
    window = TemporalWindow(31, 137, 4)
    plain = extract_features(seasonal_plot(), window)
    labeled = extract_features(seasonal_plot(PracticeLabel.DSR, 20), window)
    assert numpy.array_equal(plain.values, labeled.values)


def test_extract_features_window_shifts_times():
    full = extract_features(seasonal_plot(), TemporalWindow(0, 228, 7))
    late = extract_features(seasonal_plot(), TemporalWindow(28, 228, 7))
    assert late['VV_trough1_t'] == approx(full['VV_trough1_t'] - 28.0)
