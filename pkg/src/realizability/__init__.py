"""Realizability of point processes on finite lattices from prescribed low-order
correlation functions."""

from .core import (
    CorrelationSpec,
    DomainError,
    FiniteMeasure,
    LatticeDomain,
    PairFunction,
    SizingError,
    TripletFunction,
    correlations_of_measure,
    entropy,
    thin,
)

__version__ = "0.1.0"

__all__ = [
    "CorrelationSpec",
    "DomainError",
    "FiniteMeasure",
    "LatticeDomain",
    "PairFunction",
    "SizingError",
    "TripletFunction",
    "correlations_of_measure",
    "entropy",
    "thin",
]
