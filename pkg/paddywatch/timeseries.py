"""
Per-plot SAR backscatter time series and the preprocessing chain.

Acquisition times are integer day offsets from the season origin (May 1 of
the growing season). Backscatter values are in dB. A plot series stores one
value per band and acquisition day; a value of NaN marks a missing
observation (e.g. every pixel of the plot was NO_DATA at that timestep).

The chain applied before feature extraction is:
    smooth() -> fit_spline() -> resample() -> derive_ratio() / derive_rvi()
"""

import datetime
from enum import Enum
import math
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence  # noqa

import numpy
import scipy.interpolate
import scipy.ndimage

from . import PaddyError
from .typing import DayOffset, District, FloatArray, PlotID


SEASON_ORIGIN_MONTH = 5
SEASON_ORIGIN_DAY = 1
SEASON_LAST_DAY = 228  # Dec 15
MIN_SPLINE_POINTS = 4
MIN_RESAMPLED_LENGTH = 4
DEFAULT_SMOOTHING_SIGMA = 0.5
GAP_WARNING_DAYS = 30


class InvalidSeries(PaddyError):
    pass


class InsufficientData(PaddyError):
    pass


class WindowError(PaddyError):
    pass


class GridMismatch(PaddyError):
    pass


class Band(Enum):
    VV = 'VV'
    VH = 'VH'
    RATIO = 'RATIO'
    RVI = 'RVI'

    @property
    def derived(self) -> bool:
        return self in (Band.RATIO, Band.RVI)


INGESTED_BANDS = (Band.VV, Band.VH)


class Orbit(Enum):
    """Pass direction of the acquisitions; a plot has one series per orbit."""
    ASCENDING = 'ascending'
    DESCENDING = 'descending'


class PracticeLabel(Enum):
    """Ground-truth practice of a plot. Enumeration order breaks ties."""
    CONTROL = 'CONTROL'  # puddled transplanted rice + continuous flooding
    DSR = 'DSR'  # direct seeded rice
    AWD = 'AWD'  # puddled transplanted rice + alternate wetting and drying

    @property
    def index(self) -> int:
        return list(PracticeLabel).index(self)


class Acquisition(NamedTuple):
    t: DayOffset
    value: float


def season_day(date: datetime.date) -> DayOffset:
    """Convert a calendar date into a day offset from May 1 of the same year."""
    origin = datetime.date(date.year, SEASON_ORIGIN_MONTH, SEASON_ORIGIN_DAY)
    return (date - origin).days


def season_date(year: int, day: DayOffset) -> datetime.date:
    origin = datetime.date(year, SEASON_ORIGIN_MONTH, SEASON_ORIGIN_DAY)
    return origin + datetime.timedelta(days=day)


class PlotSeries:
    """
    Immutable record of one plot's ingested observations.

    All bands share the `days` vector; `bands` maps VV and VH to value
    arrays aligned with it.
    """

    def __init__(
                self,
                plot_id: PlotID,
                district: District,
                area_m2: float,
                days: Sequence[DayOffset],
                bands: Mapping[Band, Sequence[float]],
                label: Optional[PracticeLabel] = None,
                planting_day: Optional[DayOffset] = None,
                orbit: Orbit = Orbit.ASCENDING
            ) -> None:
        if not area_m2 > 0:
            raise InvalidSeries('plot {}: area must be positive, got {}'.format(
                plot_id, area_m2))
        days_arr = numpy.asarray(days, dtype=numpy.int64)
        if days_arr.ndim != 1 or not days_arr.size:
            raise InvalidSeries('plot {}: no acquisitions'.format(plot_id))
        if days_arr[0] < 0 or numpy.any(numpy.diff(days_arr) <= 0):
            raise InvalidSeries(
                'plot {}: acquisition days must be non-negative and strictly '
                'increasing'.format(plot_id))
        self.plot_id = plot_id
        self.district = district
        self.area_m2 = float(area_m2)
        self.label = label
        self.planting_day = planting_day
        self.orbit = orbit
        days_arr.setflags(write=False)
        self.days = days_arr

        self.bands = {}  # type: Dict[Band, FloatArray]
        for band in INGESTED_BANDS:
            if band not in bands:
                raise InvalidSeries('plot {}: band {} missing'.format(plot_id, band.value))
        for band, values in bands.items():
            if band.derived:
                raise InvalidSeries('plot {}: band {} is derived and cannot be '
                                    'ingested'.format(plot_id, band.value))
            arr = numpy.array(values, dtype=float)
            if arr.shape != days_arr.shape:
                raise InvalidSeries('plot {}: band {} has {} values for {} days'.format(
                    plot_id, band.value, arr.size, days_arr.size))
            if numpy.any(numpy.isinf(arr)):
                raise InvalidSeries('plot {}: band {} contains infinite values'.format(
                    plot_id, band.value))
            arr.setflags(write=False)
            self.bands[band] = arr

    def acquisitions(self, band: Band) -> List[Acquisition]:
        """Observed (non-missing) acquisitions of a band, in time order."""
        values = self.bands[band]
        return [Acquisition(int(t), float(v))
                for t, v in zip(self.days, values) if not math.isnan(v)]

    @property
    def gap_warning(self) -> bool:
        """True if observed VV acquisitions are more than a month apart."""
        observed = self.days[~numpy.isnan(self.bands[Band.VV])]
        if observed.size < 2:
            return True
        return bool(numpy.max(numpy.diff(observed)) > GAP_WARNING_DAYS)

    def __repr__(self) -> str:
        return 'PlotSeries({}, {}, {}, {} acquisitions)'.format(
            self.plot_id, self.district, self.orbit.value, self.days.size)


def smooth(values: Sequence[float], sigma: float = DEFAULT_SMOOTHING_SIGMA) -> FloatArray:
    """
    Gaussian smoothing over sample index (not over days).

    The kernel is truncated at ceil(4 * sigma) samples and renormalized at
    the series boundaries, so constant series are preserved exactly and
    every output lies within [min, max] of the input.
    """
    arr = numpy.asarray(values, dtype=float)
    if not arr.size:
        raise InvalidSeries('cannot smooth an empty series')
    if not sigma > 0:
        raise ValueError('smoothing sigma must be positive, got {}'.format(sigma))
    radius = int(math.ceil(4 * sigma))
    offsets = numpy.arange(-radius, radius + 1, dtype=float)
    kernel = numpy.exp(-0.5 * (offsets / sigma) ** 2)

    # smoothing deviations from the first sample keeps constants exact
    base = arr[0]
    weighted = scipy.ndimage.correlate1d(arr - base, kernel, mode='constant', cval=0.0)
    norm = scipy.ndimage.correlate1d(
        numpy.ones_like(arr), kernel, mode='constant', cval=0.0)
    return base + weighted / norm


class SplineHandle:
    """
    Natural cubic spline through a plot's acquisitions.

    Evaluation outside [first_t, last_t] is clamped to the boundary values.
    """

    def __init__(
                self,
                days: Sequence[float],
                values: Sequence[float],
                band: Optional[Band] = None
            ) -> None:
        self.band = band
        self.days = numpy.asarray(days, dtype=float)
        self.values = numpy.asarray(values, dtype=float)
        self.first_t = float(self.days[0])
        self.last_t = float(self.days[-1])
        self._spline = scipy.interpolate.CubicSpline(
            self.days, self.values, bc_type='natural', extrapolate=False)

    def __call__(self, days) -> FloatArray:
        clamped = numpy.clip(numpy.asarray(days, dtype=float), self.first_t, self.last_t)
        return self._spline(clamped)


def fit_spline(
            acquisitions: Iterable[Acquisition],
            band: Optional[Band] = None
        ) -> SplineHandle:
    """Fit a natural cubic spline; missing (NaN) values are skipped."""
    points = sorted((a for a in acquisitions if not math.isnan(a.value)),
                    key=lambda a: a.t)
    if len(points) < MIN_SPLINE_POINTS:
        raise InsufficientData('need at least {} observed acquisitions, got {}'.format(
            MIN_SPLINE_POINTS, len(points)))
    days = numpy.array([a.t for a in points], dtype=float)
    if numpy.any(numpy.diff(days) == 0):
        raise InvalidSeries('duplicate acquisition timestamps')
    values = numpy.array([a.value for a in points], dtype=float)
    return SplineHandle(days, values, band)


def preprocess(
            acquisitions: Sequence[Acquisition],
            band: Optional[Band] = None,
            sigma: float = DEFAULT_SMOOTHING_SIGMA
        ) -> SplineHandle:
    """Smooth observed acquisition values, then fit the spline through them."""
    observed = [a for a in acquisitions if not math.isnan(a.value)]
    if len(observed) < MIN_SPLINE_POINTS:
        raise InsufficientData('need at least {} observed acquisitions, got {}'.format(
            MIN_SPLINE_POINTS, len(observed)))
    smoothed = smooth([a.value for a in observed], sigma)
    return fit_spline(
        (Acquisition(a.t, float(v)) for a, v in zip(observed, smoothed)), band)


class ResampledSeries:
    """Values on the regular grid start_day, start_day + step_days, ... <= end_day."""

    def __init__(
                self,
                band: Optional[Band],
                start_day: DayOffset,
                end_day: DayOffset,
                step_days: int,
                values: Sequence[float]
            ) -> None:
        self.band = band
        self.start_day = start_day
        self.end_day = end_day
        self.step_days = step_days
        self.values = numpy.asarray(values, dtype=float)
        self.values.setflags(write=False)

    @property
    def days(self) -> FloatArray:
        return self.start_day + self.step_days * numpy.arange(len(self))

    def __len__(self) -> int:
        return int(self.values.size)

    def same_grid(self, other: 'ResampledSeries') -> bool:
        return (self.start_day == other.start_day
                and self.step_days == other.step_days
                and len(self) == len(other))


def resample(
            spline: SplineHandle,
            start_day: DayOffset,
            end_day: DayOffset,
            step_days: int
        ) -> ResampledSeries:
    if start_day >= end_day:
        raise WindowError('window start {} must precede end {}'.format(start_day, end_day))
    if step_days < 1:
        raise WindowError('resampling step must be at least one day')
    if end_day < spline.first_t or start_day > spline.last_t:
        raise WindowError('window [{}, {}] does not intersect observations [{}, {}]'.format(
            start_day, end_day, spline.first_t, spline.last_t))
    count = (end_day - start_day) // step_days + 1
    if count < MIN_RESAMPLED_LENGTH:
        raise WindowError('window [{}, {}] with step {} yields only {} samples'.format(
            start_day, end_day, step_days, count))
    days = start_day + step_days * numpy.arange(count)
    return ResampledSeries(spline.band, start_day, end_day, step_days, spline(days))


def _check_grids(vv: ResampledSeries, vh: ResampledSeries) -> None:
    if not vv.same_grid(vh):
        raise GridMismatch('VV grid ({}, {}, {}) differs from VH grid ({}, {}, {})'.format(
            vv.start_day, vv.step_days, len(vv), vh.start_day, vh.step_days, len(vh)))


def derive_ratio(vv: ResampledSeries, vh: ResampledSeries) -> ResampledSeries:
    """VV/VH ratio; in the dB domain a plain difference."""
    _check_grids(vv, vh)
    return ResampledSeries(
        Band.RATIO, vv.start_day, vv.end_day, vv.step_days, vv.values - vh.values)


def derive_rvi(vv: ResampledSeries, vh: ResampledSeries) -> ResampledSeries:
    """Radar vegetation index 4*VH / (VV + VH) computed on linear power."""
    _check_grids(vv, vh)
    vv_lin = numpy.power(10.0, vv.values / 10.0)
    vh_lin = numpy.power(10.0, vh.values / 10.0)
    return ResampledSeries(
        Band.RVI, vv.start_day, vv.end_day, vv.step_days,
        4.0 * vh_lin / (vv_lin + vh_lin))

