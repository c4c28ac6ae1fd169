"""Cycle statistics of cycle-weighted random permutations."""
from .core import (CycleType, Permutation, StatEntry, StatReport, WeightSequence, cycle_type,
                   load_weight_file, parse_weights, sigma, weight)
from .egf import WeightedSeries, compute_series
from .errors import (CalibrationError, CapExceeded, DomainError, InvalidSpec, PermProfError,
                     SeriesOverflow, TailError, ZeroMeasure)

__version__ = "0.1.0"

__all__ = [
    "CycleType", "Permutation", "StatEntry", "StatReport", "WeightSequence", "cycle_type",
    "load_weight_file", "parse_weights", "sigma", "weight", "WeightedSeries", "compute_series",
    "CalibrationError", "CapExceeded", "DomainError", "InvalidSpec", "PermProfError",
    "SeriesOverflow", "TailError", "ZeroMeasure",
]
