"""Acceptance gate: one test per criterion, exact arithmetic (zero tolerance).

A PASS/FAIL line per criterion is printed in the pytest terminal summary.
"""
from __future__ import annotations

import subprocess
import sys
import time

import pytest

from kovalevskaya.acceptance import CRITERIA, run_criterion

LINES: dict[int, str] = {}


def _record(number: int, passed: bool, title: str, elapsed: float, note: str = "") -> None:
    mark = "PASS" if passed else "FAIL"
    LINES[number] = f"criterion {number:2d}: {mark}  {title}  [{elapsed:.1f}s]{'  ' + note if note else ''}"


@pytest.mark.parametrize("number", [k for k in sorted(CRITERIA) if k != 10])
def test_criterion(number):
    res = run_criterion(number, seed=0, jobs=1)
    within = res.time_limit is None or res.elapsed < res.time_limit
    note = "" if within else f"over the {res.time_limit:.0f}s limit"
    _record(number, res.passed and within, res.title, res.elapsed, note)
    assert res.passed, res.details.get("mismatches", res.details)
    assert within, note


def test_criterion_10_selftest_is_byte_identical(tmp_path):
    t0 = time.perf_counter()
    blobs = []
    for i in range(2):
        out = tmp_path / f"selftest{i}.json"
        subprocess.run([sys.executable, "-m", "kovalevskaya", "selftest", "--seed", "0", "--out", str(out)],
                       capture_output=True, text=True)
        blobs.append(out.read_bytes())
    same = blobs[0] == blobs[1] and len(blobs[0]) > 0
    _record(10, same, "two full selftest runs give byte-identical reports", time.perf_counter() - t0)
    assert same
