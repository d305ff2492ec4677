"""
Zonal statistics: plot polygons over backscatter grids.

A pixel belongs to a plot when its center lies inside the polygon. Masks
are eroded by a square structuring element before the per-timestep mean is
taken, so pixels straddling the plot boundary do not contaminate the series.
"""

import logging
import math
from typing import Dict, List, Mapping, Optional, Sequence, Tuple  # noqa

import numpy
import scipy.ndimage
import shapely
import shapely.geometry

from . import PaddyError
from .timeseries import Acquisition, Band, INGESTED_BANDS, PlotSeries
from .typing import BoolArray, Coordinate, DayOffset, District, PlotID


MIN_PLOT_AREA_M2 = 2000.0
MAX_PLOT_AREA_M2 = 100000.0  # 10 ha
DEFAULT_BUFFER_PX = 1


class InvalidPolygon(PaddyError):
    pass


class EmptyMask(PaddyError):
    pass


class PlotTooSmall(PaddyError):
    pass


class GridError(PaddyError):
    pass


class Grid:
    """
    Single-band raster for one timestep.

    `origin` is the planar coordinate of the upper-left corner; rows grow
    downwards (towards smaller y), columns to the right. NaN is NO_DATA.
    """

    def __init__(
                self,
                values: numpy.ndarray,
                pixel_size_m: float,
                origin: Coordinate
            ) -> None:
        values = numpy.asarray(values)
        if values.ndim != 2 or not values.size:
            raise GridError('grid values must be a non-empty 2-D array')
        if not pixel_size_m > 0:
            raise GridError('pixel size must be positive')
        self.values = values
        self.pixel_size_m = float(pixel_size_m)
        self.origin = (float(origin[0]), float(origin[1]))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        """(minx, miny, maxx, maxy) of the grid extent"""
        x0, y0 = self.origin
        return (x0, y0 - self.height * self.pixel_size_m,
                x0 + self.width * self.pixel_size_m, y0)

    def congruent(self, other: 'Grid') -> bool:
        return (self.values.shape == other.values.shape
                and self.pixel_size_m == other.pixel_size_m
                and self.origin == other.origin)

    def pixel_centers(
                self,
                rows: slice = slice(None),
                cols: slice = slice(None)
            ) -> Tuple[numpy.ndarray, numpy.ndarray]:
        row_idx = numpy.arange(self.height)[rows]
        col_idx = numpy.arange(self.width)[cols]
        xs = self.origin[0] + (col_idx + 0.5) * self.pixel_size_m
        ys = self.origin[1] - (row_idx + 0.5) * self.pixel_size_m
        return numpy.meshgrid(xs, ys)


class PlotPolygon:
    """Plot boundary in the grid's planar CRS (meters). Rings must be closed."""

    def __init__(
                self,
                plot_id: PlotID,
                district: District,
                exterior: Sequence[Coordinate],
                holes: Sequence[Sequence[Coordinate]] = ()
            ) -> None:
        self.plot_id = plot_id
        self.district = district
        self.exterior = [tuple(map(float, pt)) for pt in exterior]
        self.holes = [[tuple(map(float, pt)) for pt in ring] for ring in holes]
        for ring in [self.exterior] + self.holes:
            if len(ring) < 4 or ring[0] != ring[-1]:
                raise InvalidPolygon('plot {}: rings must be closed and have at least '
                                     '3 distinct vertices'.format(plot_id))
        self.geometry = shapely.geometry.Polygon(self.exterior, self.holes)
        if not self.geometry.is_valid:
            raise InvalidPolygon('plot {}: {}'.format(
                plot_id, shapely.is_valid_reason(self.geometry)))
        if not self.geometry.area > 0:
            raise InvalidPolygon('plot {}: polygon has zero area'.format(plot_id))

    @property
    def area_m2(self) -> float:
        return float(self.geometry.area)

    def __repr__(self) -> str:
        return 'PlotPolygon({}, {}, {:.0f} m2)'.format(
            self.plot_id, self.district, self.area_m2)


def rasterize(polygon: PlotPolygon, grid: Grid) -> BoolArray:
    """Boolean mask of pixels whose centers fall inside the polygon."""
    minx, miny, maxx, maxy = polygon.geometry.bounds
    gminx, gminy, gmaxx, gmaxy = grid.bounds
    if maxx <= gminx or minx >= gmaxx or maxy <= gminy or miny >= gmaxy:
        raise EmptyMask('plot {} lies outside the grid extent'.format(polygon.plot_id))

    # only test pixels under the polygon's bounding box
    px = grid.pixel_size_m
    col0 = max(int(math.floor((minx - gminx) / px)), 0)
    col1 = min(int(math.ceil((maxx - gminx) / px)), grid.width)
    row0 = max(int(math.floor((gmaxy - maxy) / px)), 0)
    row1 = min(int(math.ceil((gmaxy - miny) / px)), grid.height)
    rows, cols = slice(row0, row1), slice(col0, col1)
    xs, ys = grid.pixel_centers(rows, cols)

    mask = numpy.zeros((grid.height, grid.width), dtype=bool)
    mask[rows, cols] = shapely.contains_xy(polygon.geometry, xs, ys)
    if not mask.any():
        raise EmptyMask('no pixel center falls inside plot {}'.format(polygon.plot_id))
    return mask


def erode(mask: BoolArray, radius_px: int = DEFAULT_BUFFER_PX) -> BoolArray:
    """Morphological erosion by a (2r+1) x (2r+1) square; outside the grid is unset."""
    if radius_px < 0:
        raise ValueError('erosion radius must be non-negative')
    mask = numpy.asarray(mask, dtype=bool)
    if radius_px == 0:
        return mask.copy()
    structure = numpy.ones((2 * radius_px + 1, 2 * radius_px + 1), dtype=bool)
    return scipy.ndimage.binary_erosion(mask, structure=structure, border_value=0)


def reduce_plot(
            mask: BoolArray,
            timed_grids: Sequence[Tuple[DayOffset, Grid]]
        ) -> List[Acquisition]:
    """
    Mean of the masked non-NO_DATA pixels for each (day, grid) pair.

    A timestep whose masked pixels are all NO_DATA yields a NaN value,
    which downstream spline fitting skips.
    """
    if not numpy.any(mask):
        raise PlotTooSmall('mask is empty after erosion')
    if not timed_grids:
        return []
    reference = timed_grids[0][1]
    if mask.shape != reference.values.shape:
        raise GridError('mask shape {} differs from grid shape {}'.format(
            mask.shape, reference.values.shape))
    acquisitions = []
    for day, grid in timed_grids:
        if not grid.congruent(reference):
            raise GridError('grid of day {} is not congruent with day {}'.format(
                day, timed_grids[0][0]))
        pixels = grid.values[mask].astype(numpy.float64)
        pixels = pixels[~numpy.isnan(pixels)]
        value = float(numpy.mean(pixels)) if pixels.size else math.nan
        acquisitions.append(Acquisition(int(day), value))
    return acquisitions


def size_filter(
            polygons: Sequence[PlotPolygon],
            min_m2: float = MIN_PLOT_AREA_M2,
            max_m2: float = MAX_PLOT_AREA_M2
        ) -> List[PlotPolygon]:
    """Keep polygons whose area lies in the closed interval [min_m2, max_m2]."""
    if not min_m2 < max_m2:
        raise ValueError('minimum area {} must be below maximum {}'.format(min_m2, max_m2))
    kept = [poly for poly in polygons if min_m2 <= poly.area_m2 <= max_m2]
    if len(kept) < len(polygons):
        logging.info('Size filter dropped %d of %d plots outside [%g, %g] m2',
                     len(polygons) - len(kept), len(polygons), min_m2, max_m2)
    return kept


def plot_series(
            polygon: PlotPolygon,
            band_grids: Mapping[Band, Sequence[Tuple[DayOffset, Grid]]],
            buffer_px: int = DEFAULT_BUFFER_PX
        ) -> PlotSeries:
    """Rasterize, erode and reduce one plot over all ingested bands."""
    reference = band_grids[Band.VV][0][1]
    mask = erode(rasterize(polygon, reference), buffer_px)
    if not mask.any():
        raise PlotTooSmall('plot {} has no pixels left after {} px erosion'.format(
            polygon.plot_id, buffer_px))
    days = None  # type: Optional[List[int]]
    values = {}  # type: Dict[Band, List[float]]
    for band in INGESTED_BANDS:
        acquisitions = reduce_plot(mask, band_grids[band])
        band_days = [a.t for a in acquisitions]
        if days is None:
            days = band_days
        elif band_days != days:
            raise GridError('bands of plot {} are not observed on the same days'.format(
                polygon.plot_id))
        values[band] = [a.value for a in acquisitions]
    return PlotSeries(polygon.plot_id, polygon.district, polygon.area_m2, days, values)
