"""Quantum walks on colored graphs: hitting times, spectra, decoherence, quotients."""

from . import decoherence, graphs, groups, hitting, quotient, spectral, walk
from .errors import (
    GroupOrderError,
    IndeterminateError,
    NotAnAutomorphismError,
    OracleMismatchError,
    QwlabError,
    SymmetryError,
    ThresholdUnreachableError,
)

__version__ = "0.1.0"

__all__ = [
    "graphs",
    "groups",
    "walk",
    "hitting",
    "spectral",
    "decoherence",
    "quotient",
    "QwlabError",
    "IndeterminateError",
    "ThresholdUnreachableError",
    "GroupOrderError",
    "NotAnAutomorphismError",
    "SymmetryError",
    "OracleMismatchError",
    "__version__",
]
