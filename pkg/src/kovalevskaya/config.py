"""Config files for systems, families and run options.

A config is a JSON or YAML mapping.  Recognised keys:

``n``, ``alpha``, ``beta``
    size and the two commutator weights.
``b1`` .. ``b5``, ``c1`` .. ``c5``
    coefficient matrices of the inhomogeneous system.
``homogeneous``
    optional flag; defaults to true when no coefficient is given.
``family``, ``family_data``
    a deformation family id and its matrices/scalars by name
    (``h``, ``gamma1``, ``gamma2`` | ``h``, ``gamma`` | ``h1``, ``h2``, ``gamma``).
``type``, ``shape``, ``m``, ``N``, ``box``, ``trials``, ``seed``, ``jobs``
    the same run options as the command-line flags.

A scalar value is an integer or a string holding a polynomial in rational
numbers and parameter names, for example ``"-1/2"`` or ``"2*g1 + 1/3"``.
Floats are rejected.  A matrix value is either a list of ``n`` rows of
``n`` scalars or a single scalar meaning that multiple of the identity.
"""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any

import yaml

from .exact import MatPoly, PolyQ, parse_poly
from .system import SystemSpec

__all__ = [
    "ConfigError",
    "COEFFICIENT_KEYS",
    "RUN_KEYS",
    "load_config",
    "parse_scalar",
    "parse_rational",
    "parse_matrix",
    "system_from_config",
]

COEFFICIENT_KEYS = tuple(f"{c}{i}" for c in "bc" for i in range(1, 6))
RUN_KEYS = ("n", "alpha", "beta", "homogeneous", "family", "family_data", "type", "shape", "m",
            "N", "box", "trials", "seed", "jobs")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def load_config(path: str | Path) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc}") from None
    try:
        if p.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            data = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("a config must be a mapping")
    unknown = sorted(set(data) - set(RUN_KEYS) - set(COEFFICIENT_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return data


def parse_scalar(value: Any, where: str = "value") -> PolyQ:
    if isinstance(value, bool) or isinstance(value, float):
        raise ConfigError(f"{where}: use an integer or a rational string, not {value!r}")
    if isinstance(value, int):
        return PolyQ.const(value)
    if isinstance(value, str):
        try:
            return parse_poly(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: expected a scalar, got {type(value).__name__}")


def parse_rational(value: Any, where: str = "value") -> Fraction:
    p = parse_scalar(value, where)
    if not p.is_constant():
        raise ConfigError(f"{where}: expected a rational number, got {value!r}")
    return p.as_rational()


def parse_matrix(value: Any, n: int, where: str = "matrix") -> MatPoly:
    if isinstance(value, list):
        if len(value) != n or any(not isinstance(r, list) or len(r) != n for r in value):
            raise ConfigError(f"{where}: expected {n} rows of {n} entries")
        return MatPoly.from_rows(
            [[parse_scalar(x, f"{where}[{i + 1}][{j + 1}]") for j, x in enumerate(r)] for i, r in enumerate(value)]
        )
    return MatPoly.identity(n) * parse_scalar(value, where)


def _require_n(data: dict) -> int:
    n = data.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError("n must be a positive integer")
    return n


def system_from_config(data: dict) -> SystemSpec:
    """Build a SystemSpec from the coefficient part of a config mapping."""
    n = _require_n(data)
    for key in ("alpha", "beta"):
        if key not in data:
            raise ConfigError(f"missing {key}")
    alpha = parse_rational(data["alpha"], "alpha")
    beta = parse_rational(data["beta"], "beta")
    coefs = {k: parse_matrix(data[k], n, k) for k in COEFFICIENT_KEYS if k in data}
    homogeneous = data.get("homogeneous", not coefs)
    if not isinstance(homogeneous, bool):
        raise ConfigError("homogeneous must be true or false")
    if homogeneous:
        if coefs:
            raise ConfigError("a homogeneous system takes no coefficients")
        return SystemSpec.homogeneous_system(n, alpha, beta)
    return SystemSpec.build(n, alpha, beta, **coefs)
