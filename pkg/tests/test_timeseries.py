import datetime

import numpy
import pytest
from pytest import approx

from paddywatch.timeseries import (
    Acquisition, Band, GridMismatch, InsufficientData, InvalidSeries, PlotSeries,
    ResampledSeries, WindowError, derive_ratio, derive_rvi, fit_spline, preprocess,
    resample, season_date, season_day, smooth)


def make_plot(days, vv, vh=None, **kwargs):
    if vh is None:
        vh = [value - 8.0 for value in vv]
    return PlotSeries('P1', 'D1', 5000.0, days, {Band.VV: vv, Band.VH: vh}, **kwargs)


@pytest.mark.parametrize('date, day', [
    (datetime.date(2024, 5, 1), 0),
    (datetime.date(2024, 6, 1), 31),
    (datetime.date(2024, 9, 15), 137),
    (datetime.date(2024, 12, 15), 228),
])
def test_season_day(date, day):
    assert season_day(date) == day
    assert season_date(2024, day) == date


@pytest.mark.parametrize('days', [
    [],
    [10, 5, 20],
    [0, 12, 12],
    [-1, 11, 23],
])
def test_plot_series_rejects_bad_days(days):
    with pytest.raises(InvalidSeries):
        make_plot(days, [0.0] * len(days))


def test_plot_series_rejects_derived_band():
    with pytest.raises(InvalidSeries):
        PlotSeries('P1', 'D1', 5000.0, [0, 12],
                   {Band.VV: [1, 2], Band.VH: [1, 2], Band.RATIO: [0, 0]})


def test_plot_series_rejects_missing_band():
    with pytest.raises(InvalidSeries):
        PlotSeries('P1', 'D1', 5000.0, [0, 12], {Band.VV: [1, 2]})


@pytest.mark.parametrize('area', [0, -5.0])
def test_plot_series_rejects_area(area):
    with pytest.raises(InvalidSeries):
        PlotSeries('P1', 'D1', area, [0, 12], {Band.VV: [1, 2], Band.VH: [1, 2]})


def test_plot_series_is_immutable():
    plot = make_plot([0, 12, 24], [-10.0, -11.0, -12.0])
    with pytest.raises(ValueError):
        plot.bands[Band.VV][0] = 0.0
    with pytest.raises(ValueError):
        plot.days[0] = 3


def test_acquisitions_skip_missing():
    plot = make_plot([0, 12, 24], [-10.0, float('nan'), -12.0])
    assert plot.acquisitions(Band.VV) == [Acquisition(0, -10.0), Acquisition(24, -12.0)]


@pytest.mark.parametrize('days, expected', [
    ([0, 12, 24, 36], False),
    ([0, 12, 24, 60], True),
    ([0, 30, 60], False),
    ([0, 31], True),
])
def test_gap_warning(days, expected):
    assert make_plot(days, [-10.0] * len(days)).gap_warning is expected


def test_smooth_preserves_constant():
    values = [-13.37] * 17
    assert numpy.array_equal(smooth(values, 0.5), numpy.array(values))


def test_smooth_stays_within_range():
    rng = numpy.random.default_rng(3)
    values = rng.normal(-12.0, 3.0, 40)
    smoothed = smooth(values, 1.5)
    assert smoothed.min() >= values.min() - 1e-12
    assert smoothed.max() <= values.max() + 1e-12
    assert numpy.std(smoothed) < numpy.std(values)


@pytest.mark.parametrize('values, sigma, exc', [
    ([], 0.5, InvalidSeries),
    ([1.0, 2.0], 0, ValueError),
])
def test_smooth_rejects(values, sigma, exc):
    with pytest.raises(exc):
        smooth(values, sigma)


def test_spline_interpolates_knots():
    days = [0, 12, 24, 36, 48, 60]
    values = [-10.0, -14.0, -9.0, -8.5, -12.0, -11.0]
    spline = fit_spline([Acquisition(t, v) for t, v in zip(days, values)])
    assert spline(days) == approx(values, abs=1e-9)


def test_spline_reproduces_linear():
    days = numpy.arange(0, 100, 10)
    spline = fit_spline([Acquisition(int(t), 2.0 * t - 5.0) for t in days])
    grid = numpy.linspace(0, 90, 37)
    assert spline(grid) == approx(2.0 * grid - 5.0, abs=1e-9)


def test_spline_clamps_outside():
    spline = fit_spline([Acquisition(t, float(t)) for t in (10, 20, 30, 40)])
    assert spline([0, 50]) == approx([10.0, 40.0])


def test_spline_skips_missing():
    acquisitions = [Acquisition(0, 1.0), Acquisition(5, float('nan')), Acquisition(10, 2.0),
                    Acquisition(20, 3.0), Acquisition(30, 4.0)]
    spline = fit_spline(acquisitions)
    assert spline.first_t == 0
    assert spline([30]) == approx([4.0])


def test_spline_insufficient_data():
    with pytest.raises(InsufficientData):
        fit_spline([Acquisition(0, 1.0), Acquisition(12, 2.0), Acquisition(24, 1.0)])


def test_preprocess_constant():
    spline = preprocess([Acquisition(t, -7.0) for t in range(0, 120, 12)], Band.VV)
    assert spline.band == Band.VV
    assert spline(numpy.arange(0, 109)) == approx(numpy.full(109, -7.0), abs=1e-12)


@pytest.mark.parametrize('start, end, step, length', [
    (0, 228, 7, 33),
    (0, 228, 4, 58),
    (31, 137, 10, 11),
    (0, 10, 3, 4),
])
def test_resample_length(start, end, step, length):
    spline = fit_spline([Acquisition(t, 0.0) for t in range(0, 229, 12)])
    resampled = resample(spline, start, end, step)
    assert len(resampled) == length
    assert resampled.days[0] == start
    assert resampled.days[-1] <= end


@pytest.mark.parametrize('start, end, step', [
    (100, 50, 7),
    (0, 100, 0),
    (300, 400, 7),
    (0, 10, 7),
])
def test_resample_rejects(start, end, step):
    spline = fit_spline([Acquisition(t, 0.0) for t in range(0, 229, 12)])
    with pytest.raises(WindowError):
        resample(spline, start, end, step)


def test_derive_ratio_and_rvi():
    vv = ResampledSeries(Band.VV, 0, 21, 7, [-10.0, -10.0, -12.0, -8.0])
    vh = ResampledSeries(Band.VH, 0, 21, 7, [-10.0, -20.0, -15.0, -18.0])
    ratio = derive_ratio(vv, vh)
    assert ratio.band == Band.RATIO
    assert list(ratio.values) == approx([0.0, 10.0, 3.0, 10.0])
    rvi = derive_rvi(vv, vh)
    assert rvi.values[0] == approx(2.0)
    assert rvi.values[1] == approx(4 * 0.01 / (0.1 + 0.01))
    assert numpy.all((rvi.values > 0) & (rvi.values < 4))


def test_derived_bands_need_same_grid():
    vv = ResampledSeries(Band.VV, 0, 21, 7, [0.0] * 4)
    vh = ResampledSeries(Band.VH, 0, 28, 4, [0.0] * 8)
    with pytest.raises(GridMismatch):
        derive_ratio(vv, vh)
    with pytest.raises(GridMismatch):
        derive_rvi(vv, vh)
