"""Exact Painleve-Kovalevskaya test for two-field quadratic matrix ODE systems."""
from __future__ import annotations

from .engine import SeriesSolution, build_L, expand_series, maximality, residual_check
from .exact import MatPoly, PolyQ, param, parse_poly
from .system import ResiduePair, ResidueShape, SystemSpec

__version__ = "0.1.0"

__all__ = [
    "MatPoly",
    "PolyQ",
    "param",
    "parse_poly",
    "SystemSpec",
    "ResidueShape",
    "ResiduePair",
    "SeriesSolution",
    "build_L",
    "expand_series",
    "maximality",
    "residual_check",
]
