"""
Hand-crafted temporal features.

Each plot is turned into a fixed-length vector of 76 values extracted from
the smoothed, resampled VV, VH and VV/VH ratio series plus the radar
vegetation index. Feature names are versioned by SCHEMA_VERSION; models
refuse vectors of another schema.

Absent extrema (fewer than three found) are filled with SENTINEL.
"""

import datetime
from enum import Enum
import logging
import math
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple  # noqa

import numpy
import scipy.optimize

from . import PaddyError
from .timeseries import (
    Band, DEFAULT_SMOOTHING_SIGMA, PlotSeries, ResampledSeries, SEASON_LAST_DAY,
    WindowError, derive_ratio, derive_rvi, preprocess, resample, season_day)
from .typing import DayOffset, FloatArray, PlotID


SCHEMA_VERSION = 'hc76-1'
SENTINEL = -9999.0
EXTREMA_PER_KIND = 3
ALLOWED_STEPS = (4, 7, 10)
MIN_GAUSSIAN_POINTS = 5
GAUSSIAN_MAX_ITERATIONS = 200
GAUSSIAN_TOLERANCE = 1e-10
# relative threshold below which a second difference counts as zero
INFLECTION_EPS = 1e-9

EXTREMA_BANDS = (Band.VV, Band.VH, Band.RATIO)


class DegenerateFit(PaddyError):
    pass


class ExtremumKind(Enum):
    TROUGH = 'trough'
    CREST = 'crest'
    INFLECTION = 'infl'


class ExtremumFeature(NamedTuple):
    kind: ExtremumKind
    t_rel: float  # days since window start
    amplitude: float
    present: bool

    @classmethod
    def absent(cls, kind: ExtremumKind) -> 'ExtremumFeature':
        return cls(kind, SENTINEL, SENTINEL, False)


class Extrema(NamedTuple):
    troughs: Tuple[ExtremumFeature, ...]
    crests: Tuple[ExtremumFeature, ...]
    trough_count: int
    crest_count: int


class GaussianFitParams(NamedTuple):
    amplitude: float
    peak_day: float  # days since window start
    sigma_days: float
    r_squared: float
    converged: bool

    @classmethod
    def degenerate(cls) -> 'GaussianFitParams':
        return cls(SENTINEL, SENTINEL, SENTINEL, 0.0, False)


class TemporalWindow:
    """Season sub-range [start_day, end_day] sampled every step_days."""

    def __init__(self, start_day: DayOffset, end_day: DayOffset, step_days: int) -> None:
        if not 0 <= start_day < end_day <= SEASON_LAST_DAY:
            raise WindowError(
                'window [{}, {}] must satisfy 0 <= start < end <= {}'.format(
                    start_day, end_day, SEASON_LAST_DAY))
        if step_days not in ALLOWED_STEPS:
            raise WindowError('step {} not in {}'.format(step_days, ALLOWED_STEPS))
        self.start_day = int(start_day)
        self.end_day = int(end_day)
        self.step_days = int(step_days)

    @classmethod
    def from_dates(
                cls,
                start: datetime.date,
                end: datetime.date,
                step_days: int
            ) -> 'TemporalWindow':
        return cls(season_day(start), season_day(end), step_days)

    @property
    def length(self) -> int:
        return (self.end_day - self.start_day) // self.step_days + 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, TemporalWindow):
            return NotImplemented
        return (self.start_day, self.end_day, self.step_days) == \
            (other.start_day, other.end_day, other.step_days)

    def __hash__(self) -> int:
        return hash((self.start_day, self.end_day, self.step_days))

    def __repr__(self) -> str:
        return 'TemporalWindow({}, {}, {})'.format(
            self.start_day, self.end_day, self.step_days)


def _schema_names() -> List[str]:
    names = []
    for band in EXTREMA_BANDS:
        for kind in ExtremumKind:
            for i in range(1, EXTREMA_PER_KIND + 1):
                names.append('{}_{}{}_t'.format(band.value, kind.value, i))
                names.append('{}_{}{}_amp'.format(band.value, kind.value, i))
        names.extend('{}_{}'.format(band.value, stat) for stat in (
            'trough_count', 'crest_count', 'mean', 'min', 'max'))
    names.extend('RATIO_gauss_{}'.format(param) for param in (
        'amp', 'peak_t', 'sigma', 'r2'))
    names.extend('RVI_{}'.format(stat) for stat in ('mean', 'min', 'max'))
    return names


SCHEMA_NAMES = tuple(_schema_names())
N_FEATURES = len(SCHEMA_NAMES)
assert N_FEATURES == 76


class FeatureVector:
    def __init__(
                self,
                plot_id: PlotID,
                window: TemporalWindow,
                values: Sequence[float],
                gap_warning: bool = False,
                schema_version: str = SCHEMA_VERSION
            ) -> None:
        self.plot_id = plot_id
        self.window = window
        self.values = numpy.asarray(values, dtype=float)
        if self.values.shape != (N_FEATURES,):
            raise ValueError('feature vector must have {} values, got {}'.format(
                N_FEATURES, self.values.shape))
        self.gap_warning = gap_warning
        self.schema_version = schema_version

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(SCHEMA_NAMES, self.values.tolist()))

    def __getitem__(self, name: str) -> float:
        return float(self.values[SCHEMA_NAMES.index(name)])


def _runs(values: FloatArray) -> Tuple[FloatArray, FloatArray]:
    """Collapse runs of equal values; return run start indices and run values."""
    starts = numpy.flatnonzero(numpy.concatenate(([True], numpy.diff(values) != 0)))
    return starts, values[starts]


def _pad(found: List[ExtremumFeature], kind: ExtremumKind) -> Tuple[ExtremumFeature, ...]:
    found = found[:EXTREMA_PER_KIND]
    found += [ExtremumFeature.absent(kind)] * (EXTREMA_PER_KIND - len(found))
    return tuple(found)


def find_extrema(series: ResampledSeries, k: int = EXTREMA_PER_KIND) -> Extrema:
    """
    Strict local minima (troughs) and maxima (crests) in time order.

    A plateau counts once, at its first index. Runs touching either end of
    the series are never extrema.
    """
    values = series.values
    starts, run_values = _runs(values)
    troughs, crests = [], []
    for i in range(1, len(starts) - 1):
        prev_v, v, next_v = run_values[i - 1], run_values[i], run_values[i + 1]
        t_rel = float(starts[i] * series.step_days)
        if v < prev_v and v < next_v:
            troughs.append(ExtremumFeature(ExtremumKind.TROUGH, t_rel, float(v), True))
        elif v > prev_v and v > next_v:
            crests.append(ExtremumFeature(ExtremumKind.CREST, t_rel, float(v), True))
    return Extrema(
        _pad(troughs[:k], ExtremumKind.TROUGH), _pad(crests[:k], ExtremumKind.CREST),
        len(troughs), len(crests))


def find_inflections(
            series: ResampledSeries,
            k: int = EXTREMA_PER_KIND
        ) -> Tuple[ExtremumFeature, ...]:
    """
    Sign changes of the discrete second difference, reported at the last
    sample before the change. Near-zero second differences carry no sign.
    """
    values = series.values
    if values.size < 3:
        return _pad([], ExtremumKind.INFLECTION)
    second = numpy.diff(values, 2)
    eps = INFLECTION_EPS * max(1.0, float(numpy.max(numpy.abs(values))))
    signs = numpy.where(numpy.abs(second) <= eps, 0, numpy.sign(second))

    found = []  # type: List[ExtremumFeature]
    last_sign, last_idx = 0, -1
    for j, sign in enumerate(signs):
        if sign == 0:
            continue
        if last_sign and sign != last_sign:
            sample = last_idx + 1  # second[j] is centered on sample j + 1
            found.append(ExtremumFeature(
                ExtremumKind.INFLECTION, float(sample * series.step_days),
                float(values[sample]), True))
            if len(found) == k:
                break
        last_sign, last_idx = sign, j
    return _pad(found, ExtremumKind.INFLECTION)


def _gaussian(params: FloatArray, t: FloatArray) -> FloatArray:
    amplitude, mu, sigma = params
    return amplitude * numpy.exp(-(t - mu) ** 2 / (2 * sigma ** 2))


def fit_gaussian(series: ResampledSeries) -> GaussianFitParams:
    """
    Least-squares fit of A * exp(-(t - mu)^2 / (2 sigma^2)) with
    Levenberg-Marquardt. A fit that runs out of iterations is returned with
    converged=False.
    """
    y = series.values
    if y.size < MIN_GAUSSIAN_POINTS:
        raise DegenerateFit('Gaussian fit needs at least {} samples, got {}'.format(
            MIN_GAUSSIAN_POINTS, y.size))
    if numpy.all(y == y[0]):
        raise DegenerateFit('cannot fit a Gaussian to a constant series')
    t = series.step_days * numpy.arange(y.size, dtype=float)
    window_length = float(series.end_day - series.start_day)
    x0 = numpy.array([numpy.max(y), t[numpy.argmax(y)], window_length / 6.0])

    def residuals(params):
        return _gaussian(params, t) - y

    def jacobian(params):
        amplitude, mu, sigma = params
        g = numpy.exp(-(t - mu) ** 2 / (2 * sigma ** 2))
        return numpy.column_stack((
            g,
            amplitude * g * (t - mu) / sigma ** 2,
            amplitude * g * (t - mu) ** 2 / sigma ** 3))

    try:
        with numpy.errstate(all='ignore'):
            result = scipy.optimize.least_squares(
                residuals, x0, jac=jacobian, method='lm',
                ftol=GAUSSIAN_TOLERANCE, xtol=GAUSSIAN_TOLERANCE,
                gtol=GAUSSIAN_TOLERANCE, max_nfev=GAUSSIAN_MAX_ITERATIONS)
    except ValueError as exc:
        logging.debug('Gaussian fit failed: %s', exc)
        return GaussianFitParams(float(x0[0]), float(x0[1]), float(x0[2]), 0.0, False)
    amplitude, mu, sigma = result.x
    sse = float(numpy.sum(result.fun ** 2))
    sst = float(numpy.sum((y - numpy.mean(y)) ** 2))
    r_squared = 1.0 - sse / sst
    converged = bool(result.status > 0) and all(
        math.isfinite(v) for v in (amplitude, mu, sigma, r_squared))
    if not converged:
        logging.debug('Gaussian fit did not converge: %s', result.message)
    return GaussianFitParams(
        float(amplitude), float(mu), float(abs(sigma)), r_squared, converged)


def _band_block(series: ResampledSeries) -> List[float]:
    extrema = find_extrema(series)
    inflections = find_inflections(series)
    block = []  # type: List[float]
    for features in (extrema.troughs, extrema.crests, inflections):
        for feature in features:
            block.extend((feature.t_rel, feature.amplitude))
    block.extend((
        float(extrema.trough_count), float(extrema.crest_count),
        float(numpy.mean(series.values)), float(numpy.min(series.values)),
        float(numpy.max(series.values))))
    return block


def extract_features(
            plot: PlotSeries,
            window: TemporalWindow,
            sigma: float = DEFAULT_SMOOTHING_SIGMA
        ) -> FeatureVector:
    """Full chain: smooth, spline, resample VV/VH, derive bands, extract."""
    resampled = {}  # type: Dict[Band, ResampledSeries]
    for band in (Band.VV, Band.VH):
        spline = preprocess(plot.acquisitions(band), band, sigma)
        resampled[band] = resample(
            spline, window.start_day, window.end_day, window.step_days)
    ratio = derive_ratio(resampled[Band.VV], resampled[Band.VH])
    rvi = derive_rvi(resampled[Band.VV], resampled[Band.VH])
    resampled[Band.RATIO] = ratio

    values = []  # type: List[float]
    for band in EXTREMA_BANDS:
        values.extend(_band_block(resampled[band]))
    try:
        fit = fit_gaussian(ratio)
    except DegenerateFit as exc:
        logging.debug('plot %s: %s', plot.plot_id, exc)
        fit = GaussianFitParams.degenerate()
    values.extend((fit.amplitude, fit.peak_day, fit.sigma_days, fit.r_squared))
    values.extend((float(numpy.mean(rvi.values)), float(numpy.min(rvi.values)),
                   float(numpy.max(rvi.values))))
    return FeatureVector(plot.plot_id, window, values, plot.gap_warning)
