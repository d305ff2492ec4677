"""
File formats of the paddywatch tool chain.

series CSV    plot_id,district,area_m2,band,day,value_db[,orbit] (long format,
              rows of one plot and orbit contiguous; empty value_db = missing;
              orbit defaults to ascending)
labels CSV    plot_id,label,planting_day
polygons      GeoJSON FeatureCollection, properties plot_id and district
features CSV  one row per plot, schema columns plus metadata columns
records CSV   district,acres
"""

import json
import logging
import math
import os
from typing import (  # noqa
    Any, Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple)

import numpy
import pandas
import shapely.geometry

from .dataformat import InvalidFileFormat
from .features import SCHEMA_NAMES, SCHEMA_VERSION, FeatureVector, TemporalWindow
from .learn import LabeledDataset, SchemaError
from .timeseries import Band, INGESTED_BANDS, InvalidSeries, Orbit, PlotSeries, PracticeLabel
from .typing import District, PlotID
from .zonal import InvalidPolygon, PlotPolygon


SERIES_COLUMNS = ('plot_id', 'district', 'area_m2', 'band', 'day', 'value_db')
ORBIT_COLUMN = 'orbit'
LABEL_COLUMNS = ('plot_id', 'label', 'planting_day')
METADATA_COLUMNS = (
    'plot_id', 'label', 'district', 'area_m2', 'planting_day', 'gap_warning',
    'schema', 'window_start', 'window_end', 'step', 'orbit')
RECORD_COLUMNS = ('district', 'acres')
DEFAULT_CHUNKSIZE = 100000


def backup_existing(filename: str) -> None:
    """Move an existing output aside to <filename>.bak before it is overwritten."""
    if os.path.exists(filename):
        backup_filename = filename + '.bak'
        os.replace(filename, backup_filename)
        logging.warning('%s already exists, overwriting file. Original file backed up as %s',
                        filename, backup_filename)


def _check_columns(frame: pandas.DataFrame, required: Sequence[str], filename: str) -> None:
    missing = [col for col in required if col not in frame.columns]
    if missing:
        raise InvalidFileFormat('{}: missing column(s) {}'.format(filename, ', '.join(missing)))


# time series

class InvalidPlot(InvalidFileFormat):
    """Rows of a single plot are unusable; the rest of the file may be fine."""


PlotErrorHandler = Callable[[PlotID, str], None]
OTHER_ORBITS = {orbit: {other.value for other in Orbit if other != orbit} for orbit in Orbit}


def write_series_csv(plots: Iterable[PlotSeries], filename: str) -> None:
    rows = []  # type: List[Tuple[Any, ...]]
    for plot in plots:
        for band in INGESTED_BANDS:
            for day, value in zip(plot.days, plot.bands[band]):
                rows.append((plot.plot_id, plot.district, plot.area_m2, band.value,
                             int(day), value, plot.orbit.value))
    frame = pandas.DataFrame(rows, columns=SERIES_COLUMNS + (ORBIT_COLUMN,))
    frame.to_csv(filename, index=False, na_rep='')


def _plot_from_rows(rows: pandas.DataFrame, filename: str) -> PlotSeries:
    plot_id = rows['plot_id'].iloc[0]
    name = rows[ORBIT_COLUMN].iloc[0]
    try:
        orbit = Orbit(name)
    except ValueError as exc:
        raise InvalidPlot('{}: plot {}: unknown orbit {!r}'.format(
            filename, plot_id, name)) from exc
    if rows['district'].nunique() != 1 or rows['area_m2'].nunique() != 1:
        raise InvalidPlot('{}: plot {} has inconsistent district or area'.format(
            filename, plot_id))
    bands = {}
    for name in rows['band'].unique():
        try:
            band = Band(name)
        except ValueError as exc:
            raise InvalidPlot('{}: plot {}: unknown band {!r}'.format(
                filename, plot_id, name)) from exc
        if band.derived:
            raise InvalidPlot('{}: plot {}: band {} is derived and cannot be '
                              'ingested'.format(filename, plot_id, band.value))
        bands[name] = band
    if rows.duplicated(['band', 'day']).any():
        raise InvalidPlot('{}: plot {} has duplicate (band, day) rows'.format(
            filename, plot_id))
    day_sets = {frozenset(days) for _, days in rows.groupby('band')['day']}
    if len(day_sets) > 1:
        raise InvalidPlot('{}: plot {}: bands were observed on different days'.format(
            filename, plot_id))
    table = rows.pivot(index='day', columns='band', values='value_db').sort_index()
    values = {band: table[name].to_numpy(dtype=float) for name, band in bands.items()}
    return PlotSeries(plot_id, rows['district'].iloc[0], float(rows['area_m2'].iloc[0]),
                      table.index.to_numpy(), values, orbit=orbit)


def _series_keys(chunk: pandas.DataFrame) -> numpy.ndarray:
    """Row positions where a new (plot_id, orbit) block begins."""
    ids = chunk['plot_id'].to_numpy()
    orbits = chunk[ORBIT_COLUMN].to_numpy()
    changed = (ids[1:] != ids[:-1]) | (orbits[1:] != orbits[:-1])
    return numpy.flatnonzero(numpy.concatenate(([True], changed)))


def iter_series_csv(
            filename: str,
            chunksize: int = DEFAULT_CHUNKSIZE,
            on_error: Optional[PlotErrorHandler] = None,
            orbit: Optional[Orbit] = None
        ) -> Iterator[PlotSeries]:
    """
    Stream plots from a series CSV, one (plot, orbit) series at a time.

    Memory stays bounded by the chunk size: rows of a plot that straddle
    a chunk boundary are carried over into the next chunk. The orbit
    column is optional and defaults to ascending; with `orbit` set, series
    of the other orbit are skipped unparsed.

    Errors confined to one plot (InvalidPlot, InvalidSeries) are passed to
    `on_error` as (plot_id, 'Type: message') and the plot is skipped; without
    a handler they are raised. Missing columns, non-contiguous plots and
    unparsable files always abort.
    """
    seen = set()  # type: set

    def emit(rows: pandas.DataFrame) -> Iterator[PlotSeries]:
        key = (rows['plot_id'].iloc[0], rows[ORBIT_COLUMN].iloc[0])
        if key in seen:
            raise InvalidFileFormat('{}: rows of plot {} are not contiguous'.format(
                filename, key[0]))
        seen.add(key)
        if orbit is not None and key[1] in OTHER_ORBITS[orbit]:
            return
        try:
            plot = _plot_from_rows(rows, filename)
        except (InvalidPlot, InvalidSeries) as exc:
            if on_error is None:
                raise
            on_error(key[0], '{}: {}'.format(type(exc).__name__, exc))
            return
        yield plot

    pending = None  # type: Optional[pandas.DataFrame]
    try:
        reader = pandas.read_csv(
            filename, chunksize=chunksize, keep_default_na=False,
            na_values={'value_db': ['', 'nan', 'NaN']},
            dtype={'plot_id': str, 'district': str, 'band': str, ORBIT_COLUMN: str})
        for chunk in reader:
            _check_columns(chunk, SERIES_COLUMNS, filename)
            if ORBIT_COLUMN not in chunk.columns:
                chunk[ORBIT_COLUMN] = Orbit.ASCENDING.value
            chunk[ORBIT_COLUMN] = chunk[ORBIT_COLUMN].replace('', Orbit.ASCENDING.value)
            if pending is not None:
                chunk = pandas.concat([pending, chunk], ignore_index=True)
            bounds = list(_series_keys(chunk)) + [len(chunk)]
            for start, end in zip(bounds[:-2], bounds[1:-1]):
                yield from emit(chunk.iloc[start:end])
            pending = chunk.iloc[bounds[-2]:]
    except pandas.errors.EmptyDataError as exc:
        raise InvalidFileFormat('{}: file is empty'.format(filename)) from exc
    except (pandas.errors.ParserError, ValueError) as exc:
        raise InvalidFileFormat('{}: {}'.format(filename, exc)) from exc
    if pending is not None and len(pending):
        yield from emit(pending)


def read_series_csv(filename: str) -> List[PlotSeries]:
    return list(iter_series_csv(filename))


# labels

def write_labels_csv(plots: Iterable[PlotSeries], filename: str) -> None:
    frame = pandas.DataFrame(
        [(plot.plot_id, plot.label.value if plot.label else '', plot.planting_day)
         for plot in plots],
        columns=LABEL_COLUMNS)
    frame.to_csv(filename, index=False)


def read_labels_csv(filename: str) -> Dict[PlotID, Tuple[PracticeLabel, Optional[int]]]:
    try:
        frame = pandas.read_csv(filename, dtype={'plot_id': str, 'label': str},
                                keep_default_na=False, na_values={'planting_day': ['']})
    except (pandas.errors.ParserError, pandas.errors.EmptyDataError, ValueError) as exc:
        raise InvalidFileFormat('{}: {}'.format(filename, exc)) from exc
    _check_columns(frame, LABEL_COLUMNS, filename)
    labels = {}
    for plot_id, label, planting_day in frame[list(LABEL_COLUMNS)].itertuples(index=False):
        try:
            practice = PracticeLabel(label)
        except ValueError as exc:
            raise InvalidFileFormat('{}: plot {}: unknown label {!r}'.format(
                filename, plot_id, label)) from exc
        day = None if math.isnan(planting_day) else int(planting_day)
        labels[plot_id] = (practice, day)
    return labels


def attach_labels(
            plot: PlotSeries,
            labels: Mapping[PlotID, Tuple[PracticeLabel, Optional[int]]]
        ) -> PlotSeries:
    if plot.plot_id not in labels:
        return plot
    label, planting_day = labels[plot.plot_id]
    return PlotSeries(plot.plot_id, plot.district, plot.area_m2, plot.days, plot.bands,
                      label=label, planting_day=planting_day, orbit=plot.orbit)


# polygons

def write_geojson(polygons: Iterable[PlotPolygon], filename: str) -> None:
    collection = {
        'type': 'FeatureCollection',
        'features': [{
            'type': 'Feature',
            'properties': {'plot_id': poly.plot_id, 'district': poly.district},
            'geometry': shapely.geometry.mapping(poly.geometry),
        } for poly in polygons],
    }
    with open(filename, 'w') as f:
        json.dump(collection, f)


def read_geojson(filename: str) -> List[PlotPolygon]:
    try:
        with open(filename) as f:
            collection = json.load(f)
    except json.decoder.JSONDecodeError as exc:
        raise InvalidFileFormat("Couldn't parse GeoJSON file: {}".format(filename)) from exc
    if not isinstance(collection, dict) or collection.get('type') != 'FeatureCollection':
        raise InvalidFileFormat('{}: expected a GeoJSON FeatureCollection'.format(filename))
    polygons = []
    for feature in collection.get('features', []):
        try:
            props = feature['properties']
            geometry = shapely.geometry.shape(feature['geometry'])
            plot_id = str(props['plot_id'])
            district = str(props.get('district', ''))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise InvalidFileFormat('{}: malformed feature: {}'.format(filename, exc)) from exc
        if geometry.geom_type != 'Polygon':
            raise InvalidPolygon('plot {}: {} geometries are not supported'.format(
                plot_id, geometry.geom_type))
        polygons.append(PlotPolygon(
            plot_id, district, list(geometry.exterior.coords),
            [list(ring.coords) for ring in geometry.interiors]))
    return polygons


# features

def feature_row(
            fv: FeatureVector,
            plot: PlotSeries
        ) -> Dict[str, Any]:
    row = {
        'plot_id': fv.plot_id,
        'label': plot.label.value if plot.label else '',
        'district': plot.district,
        'area_m2': plot.area_m2,
        'planting_day': plot.planting_day,
        'gap_warning': bool(fv.gap_warning),
        'schema': fv.schema_version,
        'window_start': fv.window.start_day,
        'window_end': fv.window.end_day,
        'step': fv.window.step_days,
        'orbit': plot.orbit.value,
    }  # type: Dict[str, Any]
    row.update(fv.as_dict())
    return row


def write_features_csv(rows: Iterable[Mapping[str, Any]], filename: str) -> None:
    frame = pandas.DataFrame(list(rows), columns=list(METADATA_COLUMNS) + list(SCHEMA_NAMES))
    frame.to_csv(filename, index=False)


def read_features_frame(filename: str) -> pandas.DataFrame:
    try:
        frame = pandas.read_csv(filename, dtype={'plot_id': str, 'label': str,
                                                 'district': str, 'schema': str},
                                keep_default_na=False, na_values={'planting_day': ['']})
    except (pandas.errors.ParserError, pandas.errors.EmptyDataError, ValueError) as exc:
        raise InvalidFileFormat('{}: {}'.format(filename, exc)) from exc
    _check_columns(frame, ('plot_id', 'schema', 'window_start', 'window_end', 'step'), filename)
    missing = [name for name in SCHEMA_NAMES if name not in frame.columns]
    if missing:
        raise SchemaError('{}: {} schema column(s) missing, e.g. {}'.format(
            filename, len(missing), missing[0]))
    versions = set(frame['schema'])
    if versions - {SCHEMA_VERSION}:
        raise SchemaError('{}: feature schema {} does not match {}'.format(
            filename, ', '.join(sorted(versions)), SCHEMA_VERSION))
    if frame.empty:
        raise InvalidFileFormat('{}: no feature rows'.format(filename))
    return frame


def frame_window(frame: pandas.DataFrame, filename: str = '') -> TemporalWindow:
    windows = frame[['window_start', 'window_end', 'step']].drop_duplicates()
    if len(windows) != 1:
        raise InvalidFileFormat('{}: rows were extracted over different windows'.format(
            filename))
    start, end, step = (int(v) for v in windows.iloc[0])
    return TemporalWindow(start, end, step)


def load_dataset(filename: str) -> LabeledDataset:
    """Labeled feature matrix from a features CSV; every row must carry a label."""
    frame = read_features_frame(filename)
    if ORBIT_COLUMN in frame.columns and frame[ORBIT_COLUMN].nunique() > 1:
        raise InvalidFileFormat('{}: rows come from different orbits'.format(filename))
    if 'label' not in frame.columns or (frame['label'] == '').any():
        raise InvalidFileFormat('{}: every row needs a label'.format(filename))
    planting = frame['planting_day'] if 'planting_day' in frame.columns else None
    return LabeledDataset(
        frame[list(SCHEMA_NAMES)].to_numpy(dtype=float),
        frame['label'].tolist(),
        frame['plot_id'].tolist(),
        planting.to_numpy(dtype=float) if planting is not None else None,
        frame_window(frame, filename))


# district records

def read_records_csv(filename: str) -> Dict[District, float]:
    try:
        frame = pandas.read_csv(filename, dtype={'district': str})
    except (pandas.errors.ParserError, pandas.errors.EmptyDataError, ValueError) as exc:
        raise InvalidFileFormat('{}: {}'.format(filename, exc)) from exc
    _check_columns(frame, RECORD_COLUMNS, filename)
    if frame['district'].duplicated().any():
        raise InvalidFileFormat('{}: duplicate districts'.format(filename))
    if (frame['acres'] < 0).any() or frame['acres'].isna().any():
        raise InvalidFileFormat('{}: acreage must be a non-negative number'.format(filename))
    return dict(zip(frame['district'], frame['acres'].astype(float)))
