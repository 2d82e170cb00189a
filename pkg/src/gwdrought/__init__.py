"""Groundwater drought analytics: storage anomalies, optimal precipitation
accumulation periods, drought events, NDVI coupling and relative importance."""

from .chrono_grid import (
    CategoricalGrid,
    Grid2D,
    GriddedSeries,
    MonthIndex,
    MonthlySeries,
    RegionMask,
    TimeAxis,
    months_between,
)

__version__ = "0.1.0"
