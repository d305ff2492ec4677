"""
Binary grid file format (ZGRD) and grid directories.

Layout, little-endian:
    magic 'ZGRD' | version u16 | width u32 | height u32 |
    pixel_size f32 | origin_x f64 | origin_y f64 | width*height f32 values

Values are stored row-major; NaN marks NO_DATA. A grid directory holds one
file per band and acquisition day, named <BAND>_<day>.zgrd.
"""

import os
import re
import struct
from typing import Dict, List, Mapping, Sequence, Tuple  # noqa

import numpy

from .timeseries import Band, INGESTED_BANDS
from .typing import DayOffset
from .zonal import Grid, GridError


MAGIC = b'ZGRD'
BIN_FORMAT_VERSION = 1
HEADER_FORMAT = '<4sHIIfdd'
HEADER_SIZE = struct.calcsize(HEADER_FORMAT)
VALUE_DTYPE = numpy.dtype('<f4')
GRID_FILE_RE = re.compile(r'^(?P<band>[A-Z]+)_(?P<day>\d+)\.zgrd$')

TimedGrids = List[Tuple[DayOffset, Grid]]


def grid_to_binary(grid: Grid) -> bytes:
    header = struct.pack(
        HEADER_FORMAT, MAGIC, BIN_FORMAT_VERSION, grid.width, grid.height,
        grid.pixel_size_m, grid.origin[0], grid.origin[1])
    return header + numpy.ascontiguousarray(grid.values, dtype=VALUE_DTYPE).tobytes()


def grid_from_binary(buff: bytes) -> Grid:
    if len(buff) < HEADER_SIZE:
        raise GridError('Missing data in binary format')
    magic, version, width, height, pixel_size, origin_x, origin_y = struct.unpack_from(
        HEADER_FORMAT, buff, 0)
    if magic != MAGIC:
        raise GridError('Not a grid file (magic {!r})'.format(magic))
    if version != BIN_FORMAT_VERSION:
        raise GridError('Unsupported grid format version {} (expected {})'.format(
            version, BIN_FORMAT_VERSION))
    expected = width * height * VALUE_DTYPE.itemsize
    payload = buff[HEADER_SIZE:]
    if len(payload) != expected:
        raise GridError('Grid payload has {} bytes, expected {}'.format(
            len(payload), expected))
    values = numpy.frombuffer(payload, dtype=VALUE_DTYPE).reshape((height, width))
    return Grid(values, pixel_size, (origin_x, origin_y))


def write_grid(grid: Grid, filename: str) -> None:
    with open(filename, 'wb') as f:
        f.write(grid_to_binary(grid))


def read_grid(filename: str) -> Grid:
    with open(filename, 'rb') as f:
        return grid_from_binary(f.read())


def grid_filename(band: Band, day: DayOffset) -> str:
    return '{}_{:03d}.zgrd'.format(band.value, day)


def write_grid_dir(band_grids: Mapping[Band, Sequence[Tuple[DayOffset, Grid]]],
                   directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    for band, timed in band_grids.items():
        for day, grid in timed:
            write_grid(grid, os.path.join(directory, grid_filename(band, day)))


def read_grid_dir(directory: str) -> Dict[Band, TimedGrids]:
    """Read all grid files of a directory, ordered by day within each band."""
    band_grids = {band: [] for band in INGESTED_BANDS}  # type: Dict[Band, TimedGrids]
    for name in sorted(os.listdir(directory)):
        match = GRID_FILE_RE.match(name)
        if match is None:
            continue
        try:
            band = Band(match.group('band'))
        except ValueError:
            raise GridError('{}: unknown band in grid file name'.format(name))
        if band.derived:
            raise GridError('{}: band {} is derived and cannot be ingested'.format(
                name, band.value))
        band_grids[band].append(
            (int(match.group('day')), read_grid(os.path.join(directory, name))))
    for band, timed in band_grids.items():
        if not timed:
            raise GridError('{}: no {} grids found'.format(directory, band.value))
        timed.sort(key=lambda item: item[0])
    return band_grids
