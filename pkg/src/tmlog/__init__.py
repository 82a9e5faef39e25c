"""Numerical toolkit for fractional Trudinger-Moser problems with a logarithmic kernel in one dimension."""

from .errors import (CSVFormatError, GrowthOverflow, IllConditionedPoint, InvalidArgument,
                     StallError, UndefinedMultiplier, UnsupportedInput)
from .function_space import Grid1D, SampledFunction, make_interval_grid, read_csv, write_csv
from .growth_models import GrowthModel, parse_growth

__version__ = "0.1.0"

__all__ = [
    "CSVFormatError", "GrowthOverflow", "IllConditionedPoint", "InvalidArgument", "StallError",
    "UndefinedMultiplier", "UnsupportedInput", "Grid1D", "SampledFunction", "make_interval_grid",
    "read_csv", "write_csv", "GrowthModel", "parse_growth",
]
