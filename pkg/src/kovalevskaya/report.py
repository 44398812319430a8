"""Deterministic JSON reports.

Every rational is written as a string, dictionaries are key-sorted and no
timing or host information is recorded, so equal inputs give equal bytes.
"""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from .engine import SeriesSolution, maximality, residual_check
from .exact import MatPoly, PolyQ

__all__ = ["SCHEMA", "to_jsonable", "dumps", "write_report", "envelope", "series_fragment"]

SCHEMA = "kov-report/1"


def to_jsonable(obj: Any) -> Any:
    """Recursively convert exact values; floats are refused."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, float):
        raise TypeError("floats are not allowed in reports")
    if isinstance(obj, (PolyQ, MatPoly)):
        return obj.to_text()
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return [to_jsonable(v) for v in sorted(obj)]
    if hasattr(obj, "as_dict"):
        return to_jsonable(obj.as_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def envelope(command: str, config: dict, result: dict, ok: bool) -> dict:
    return {"schema": SCHEMA, "command": command, "config": config, "ok": ok, "result": result}


def write_report(report: dict, path: str | Path | None) -> str:
    """Serialize ``report``; write it to ``path`` unless it is None."""
    text = dumps(report)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def series_fragment(series: SeriesSolution, with_residual: bool = True) -> dict:
    """Residue shape, resonances, free parameters, coefficients, obstructions and verdict."""
    verdict = maximality(series)
    frag = {
        "shape": series.residues.shape.describe(),
        "type": series.residues.type_tag,
        "p": series.residues.p.to_text(),
        "q": series.residues.q.to_text(),
        "depth": series.depth,
        "resonances": {str(k): v for k, v in sorted(series.resonances.items())},
        "free_parameters": [fp.label for fp in series.free_params],
        "u": {str(k - 1): m.to_text() for k, m in enumerate(series.u_coefficients())},
        "v": {str(k - 1): m.to_text() for k, m in enumerate(series.v_coefficients())},
        "obstructions": [{"order": k, "polynomials": texts} for k, texts in series.obstruction_texts()],
        "verdict": verdict.as_dict(),
    }
    if with_residual:
        # an obstructed truncation is not expected to solve the system
        frag["residual_ok"] = residual_check(series.system, series) if series.obstruction_free else None
    return frag
