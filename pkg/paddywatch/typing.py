"""Shared data types for Mypy"""

from typing import Tuple

import numpy

# data-related types
PlotID = str
District = str
DayOffset = int
Decibel = float
LabelName = str
FloatArray = numpy.ndarray
BoolArray = numpy.ndarray
Coordinate = Tuple[float, float]
