"""Command-line entry point ``kov``.

Every subcommand prints a short human summary on stdout and, with
``--out PATH``, writes a JSON report (``--out -`` sends the JSON to stdout
instead of the summary).  Exit status: 0 success, 1 verification failure,
2 bad input or config.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

from . import acceptance
from .classify import (
    ConstraintViolated,
    default_family,
    default_p4_2_data,
    p4_0,
    p4_1,
    p4_2,
    scan_sigma,
    verify_deformation,
)
from .config import (
    ConfigError,
    load_config,
    parse_matrix,
    parse_rational,
    system_from_config,
)
from .degenerate import (
    DegenerationResult,
    ReductionCoefficients,
    ReductionPreconditionFailed,
    degenerate_scalar,
    degenerate_to_p2,
    reduce_second_order_check,
)
from .engine import ResidueMismatch, build_L, default_depth, expand_series, spectrum_dimensions
from .exact import DivergentLimit
from .report import envelope, series_fragment, write_report
from .system import (
    SIGMA,
    BadPartition,
    DeltaZero,
    NotInSigma0,
    ResidueShape,
    SystemSpec,
    check_residue_equations,
    delta,
    diag_residues,
    dihedral_orbit,
    mu_values,
    noncommuting_exists,
    noncommuting_residues,
    orbit_dimension,
    type_residues,
)

__all__ = ["RunConfig", "build_parser", "run", "main"]

FAMILIES = ("P4_0", "P4_1", "P4_2")


class UsageError(ValueError):
    """Bad flags or inconsistent options (exit 2)."""


@dataclass
class RunConfig:
    """Merged view of flags, config file and environment; numerics are exact."""

    subcommand: str
    n: int | None = None
    alpha: Fraction | None = None
    beta: Fraction | None = None
    box: tuple[int, int] | None = None
    family: str | None = None
    N: int | None = None
    trials: int = 20
    out: str | None = None
    seed: int = 0
    jobs: int = 1
    residue_type: int | None = None
    shape: tuple[int, int, int, int] | None = None
    m: int = 0
    config_path: str | None = None
    raw: dict = field(default_factory=dict)

    def for_report(self) -> dict:
        """Inputs that determine the result; jobs and output path are left out."""
        d: dict[str, Any] = {"subcommand": self.subcommand, "seed": self.seed}
        for key in ("n", "alpha", "beta", "family", "N", "m"):
            v = getattr(self, key)
            if v is not None:
                d[key] = v
        if self.box is not None:
            d["box"] = list(self.box)
        if self.residue_type is not None:
            d["type"] = self.residue_type
        if self.shape is not None:
            d["shape"] = list(self.shape)
        if self.subcommand in ("reduce-check",):
            d["trials"] = self.trials
        return d


# ---------------------------------------------------------------------------
# parsing


def _int_list(text: str, count: int, what: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(x) for x in str(text).split(","))
    except ValueError:
        raise UsageError(f"{what}: expected {count} comma-separated integers") from None
    if len(vals) != count:
        raise UsageError(f"{what}: expected {count} comma-separated integers")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or YAML file with system and run options")
    common.add_argument("--out", help="write the JSON report here ('-' for stdout)")
    common.add_argument("--seed", type=int, help="seed for random draws (fallback: $KOV_SEED, then 0)")
    common.add_argument("--jobs", type=int, help="worker processes for grid scans")

    point = argparse.ArgumentParser(add_help=False)
    point.add_argument("--alpha", help="rational, e.g. -1 or 1/2")
    point.add_argument("--beta", help="rational")
    point.add_argument("--n", type=int, help="matrix size")

    residue = argparse.ArgumentParser(add_help=False)
    residue.add_argument("--type", type=int, choices=(1, 2, 3), dest="residue_type")
    residue.add_argument("--shape", help="k1,k2,k3,k4 sizes of the diagonal blocks")
    residue.add_argument("--m", type=int, help="size of the non-commuting blocks (default 0)")

    p = argparse.ArgumentParser(prog="kov", description="Painleve-Kovalevskaya test for matrix systems")
    sub = p.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("residues", parents=[common, point, residue], help="residue pairs at a point")
    sp = sub.add_parser("spectrum", parents=[common, point, residue], help="spectrum of the linearization")
    sp.add_argument("--kmin", type=int, default=-10)
    sp.add_argument("--kmax", type=int, default=10)
    ex = sub.add_parser("expand", parents=[common, point, residue], help="Laurent expansion")
    ex.add_argument("--N", type=int, help="last order (default: largest resonance + 3)")
    sc = sub.add_parser("scan", parents=[common], help="classify an integer box")
    sc.add_argument("--box", help="lo,hi")
    sc.add_argument("--n", type=int)
    vf = sub.add_parser("verify-family", parents=[common], help="test a deformed family")
    vf.add_argument("--family", choices=FAMILIES)
    vf.add_argument("--n", type=int)
    rc = sub.add_parser("reduce-check", parents=[common], help="second-order reduction at random jets")
    rc.add_argument("--family", choices=("P4_1", "P4_2"))
    rc.add_argument("--n", type=int)
    rc.add_argument("--trials", type=int)
    dg = sub.add_parser("degenerate", parents=[common], help="epsilon limit to a matrix P2 system")
    dg.add_argument("--family", choices=FAMILIES + ("scalar",))
    dg.add_argument("--n", type=int)
    st = sub.add_parser("selftest", parents=[common], help="run the acceptance suite")
    st.add_argument("--only", help="comma-separated criterion numbers")
    return p


def _env_seed() -> int:
    raw = os.environ.get("KOV_SEED")
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"KOV_SEED must be an integer, got {raw!r}") from None


def _pick(flag, data: dict, key: str):
    return flag if flag is not None else data.get(key)


def make_config(ns: argparse.Namespace) -> RunConfig:
    data = load_config(ns.config) if getattr(ns, "config", None) else {}
    cfg = RunConfig(ns.subcommand, config_path=getattr(ns, "config", None), raw=data)
    n = _pick(getattr(ns, "n", None), data, "n")
    if n is not None:
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ConfigError("n must be a positive integer")
        cfg.n = n
    for key in ("alpha", "beta"):
        v = _pick(getattr(ns, key, None), data, key)
        if v is not None:
            setattr(cfg, key, parse_rational(v, key))
    box = _pick(getattr(ns, "box", None), data, "box")
    if box is not None:
        lo, hi = box if isinstance(box, list) else _int_list(box, 2, "box")
        if lo > hi:
            raise UsageError("box: lo must not exceed hi")
        cfg.box = (int(lo), int(hi))
    cfg.family = _pick(getattr(ns, "family", None), data, "family")
    cfg.N = _pick(getattr(ns, "N", None), data, "N")
    trials = _pick(getattr(ns, "trials", None), data, "trials")
    cfg.trials = 20 if trials is None else int(trials)
    cfg.residue_type = _pick(getattr(ns, "residue_type", None), data, "type")
    shape = _pick(getattr(ns, "shape", None), data, "shape")
    if shape is not None:
        cfg.shape = tuple(shape) if isinstance(shape, list) else _int_list(shape, 4, "shape")
    m = _pick(getattr(ns, "m", None), data, "m")
    cfg.m = int(m or 0)
    seed = _pick(ns.seed, data, "seed")
    cfg.seed = _env_seed() if seed is None else int(seed)
    jobs = _pick(ns.jobs, data, "jobs")
    cfg.jobs = max(1, int(jobs or 1))
    cfg.out = ns.out
    return cfg


def _need(cfg: RunConfig, *keys: str) -> None:
    missing = [k for k in keys if getattr(cfg, k) is None]
    if missing:
        raise UsageError(f"{cfg.subcommand}: missing {', '.join('--' + k for k in missing)}")


# ---------------------------------------------------------------------------
# subcommands; each returns (ok, result dict, summary lines)

Outcome = tuple[bool, dict, list[str]]


def _residue_pair(cfg: RunConfig):
    _need(cfg, "n", "alpha", "beta")
    if cfg.residue_type is not None:
        if cfg.shape is not None or cfg.m:
            raise UsageError("--type excludes --shape and --m")
        return type_residues(cfg.residue_type, cfg.n)
    if cfg.shape is None:
        raise UsageError("give --type or --shape")
    if cfg.m:
        shape = ResidueShape.noncommuting(cfg.m, *cfg.shape)
        return noncommuting_residues(cfg.alpha, cfg.beta, shape)
    shape = ResidueShape.commuting(*cfg.shape)
    if shape.n != cfg.n:
        raise UsageError(f"shape sizes add up to {shape.n}, not n = {cfg.n}")
    return diag_residues(cfg.n, shape)


def cmd_residues(cfg: RunConfig) -> Outcome:
    _need(cfg, "n", "alpha", "beta")
    a, b = cfg.alpha, cfg.beta
    result: dict[str, Any] = {
        "delta": delta(a, b),
        "noncommuting_exists": noncommuting_exists(a, b),
        "orbit": sorted([list(p) for p in dihedral_orbit(a, b)]),
    }
    try:
        result["mu"] = list(mu_values(a, b).as_tuple())
    except DeltaZero:
        result["mu"] = None
    lines = [f"point ({a}, {b}): delta = {result['delta']}, non-commuting residues: {result['noncommuting_exists']}"]
    ok = True
    if cfg.residue_type is not None or cfg.shape is not None:
        pair = _residue_pair(cfg)
        good = check_residue_equations(pair, a, b)
        ok = good
        result["pair"] = {
            "p": pair.p.to_text(), "q": pair.q.to_text(), "shape": pair.shape.describe(),
            "type": pair.type_tag, "satisfies_equations": good, "orbit_dimension": orbit_dimension(pair),
        }
        lines.append(f"p = {pair.p.to_text()}")
        lines.append(f"q = {pair.q.to_text()}")
        lines.append(f"residue equations hold: {good}; orbit dimension {orbit_dimension(pair)}")
    return ok, result, lines


def cmd_spectrum(cfg: RunConfig, kmin: int, kmax: int) -> Outcome:
    pair = _residue_pair(cfg)
    L = build_L(pair, cfg.alpha, cfg.beta)
    rows = []
    mismatch = []
    table = spectrum_dimensions(cfg.alpha, cfg.beta, pair.shape) if pair.shape.is_commuting else None
    for k in range(kmin, kmax + 1):
        row = {"k": k, "nullity": L.nullity(k), "generalized_nullity": L.generalized_nullity(k)}
        if table is not None:
            row["formula"] = table.dimension_at(k)
            if row["formula"] != row["nullity"]:
                mismatch.append(k)
        rows.append(row)
    result = {"shape": pair.shape.describe(), "rows": rows, "formula_mismatches": mismatch}
    if table is not None:
        result["formula"] = [{"lambda": lam, "dimension": d} for lam, d, _ in table.entries]
    lines = [f"k={r['k']}: nullity {r['nullity']}" + (f", formula {r['formula']}" if "formula" in r else "")
             for r in rows if r["nullity"] or r.get("formula")]
    if mismatch:
        lines.append(f"rank nullity differs from the formula at k = {mismatch}")
    return not mismatch, result, lines


def _system_for(cfg: RunConfig) -> SystemSpec:
    data = dict(cfg.raw)
    for key in ("n", "alpha", "beta"):
        if getattr(cfg, key) is not None:
            data[key] = getattr(cfg, key) if key == "n" else str(getattr(cfg, key))
    return system_from_config(data)


def cmd_expand(cfg: RunConfig) -> Outcome:
    sys_ = _system_for(cfg)
    pair = _residue_pair(cfg)
    N = cfg.N if cfg.N is not None else default_depth(build_L(pair, sys_.alpha, sys_.beta))
    if N < 0:
        raise UsageError("--N must be nonnegative")
    ser = expand_series(sys_, pair, N=N)
    frag = series_fragment(ser)
    frag["system"] = {
        "homogeneous": sys_.homogeneous,
        "coefficients": {k: m.to_text() for k, m in sys_.coefficients().items() if not m.is_zero()},
    }
    lines = [f"resonances: {frag['resonances']}", f"free parameters: {', '.join(frag['free_parameters']) or '-'}"]
    lines += [f"u[{k}] = {t}" for k, t in frag["u"].items()]
    if frag["obstructions"]:
        lines.append(f"obstructions at orders {[o['order'] for o in frag['obstructions']]}")
    lines.append(f"maximal: {frag['verdict']['maximal']}; residual check: {frag['residual_ok']}")
    return frag["residual_ok"] is not False, frag, lines


def cmd_scan(cfg: RunConfig) -> Outcome:
    _need(cfg, "box", "n")
    lo, hi = cfg.box
    results = scan_sigma(lo, hi, cfg.n, jobs=cfg.jobs)
    marked = [r for r in results if r.total_maximal >= 3]
    pts = sorted((int(r.point[0]), int(r.point[1])) for r in marked)
    expected = sorted(p for p in SIGMA if lo <= p[0] <= hi and lo <= p[1] <= hi)
    ok = pts == expected
    result = {
        "points": [r.as_dict() for r in marked],
        "count": len(marked),
        "expected": [list(p) for p in expected],
        "matches_expected": ok,
    }
    lines = [f"{len(marked)} points with three maximal solutions:"]
    for r in marked:
        nc = " + non-commuting" if r.noncommuting_maximal else ""
        lines.append(f"  ({r.point[0]}, {r.point[1]}): types {sorted(r.maximal_types)}{nc}")
    return ok, result, lines


def _family_from_data(fid: str, n: int, data: dict, seed: int):
    if not data:
        return default_family(fid, n, seed)
    g = lambda key, default: parse_rational(data.get(key, default), key)
    if fid == "P4_0":
        return p4_0(parse_matrix(data["h"], n, "h"), g("gamma1", 0), g("gamma2", 0))
    if fid == "P4_1":
        return p4_1(parse_matrix(data["h"], n, "h"), g("gamma", 0))
    h1d, h2d = default_p4_2_data(n)
    h1 = parse_matrix(data["h1"], n, "h1") if "h1" in data else h1d
    h2 = parse_matrix(data["h2"], n, "h2") if "h2" in data else h2d
    fam = p4_2(h1, h2, g("gamma", 0))
    try:
        fam.check_constraints()
    except ConstraintViolated as exc:
        raise ConfigError(str(exc)) from None
    return fam


def _family_data(cfg: RunConfig) -> dict:
    data = cfg.raw.get("family_data") or {}
    if not isinstance(data, dict):
        raise ConfigError("family_data must be a mapping")
    return data


def cmd_verify_family(cfg: RunConfig) -> Outcome:
    _need(cfg, "family", "n")
    try:
        fam = _family_from_data(cfg.family, cfg.n, _family_data(cfg), cfg.seed)
    except KeyError as exc:
        raise ConfigError(f"family_data is missing {exc}") from None
    rep = verify_deformation(fam)
    d = rep.as_dict()
    lines = [f"{fam.id} at ({fam.alpha}, {fam.beta}), n = {fam.n}"]
    for c in rep.candidates:
        lines.append(f"  candidate {c.candidate}: maximal {c.verdict.maximal}, "
                     f"parameters {c.verdict.total}/{2 * fam.n ** 2}, residual {c.residual_ok}")
    lines.append(f"passed: {rep.passed}")
    return rep.passed, d, lines


def cmd_reduce_check(cfg: RunConfig) -> Outcome:
    if any(k in cfg.raw for k in ("b1", "b5", "c3", "c5")):
        sys_ = _system_for(cfg)
    else:
        _need(cfg, "family", "n")
        try:
            sys_ = _family_from_data(cfg.family, cfg.n, _family_data(cfg), cfg.seed).system()
        except KeyError as exc:
            raise ConfigError(f"family_data is missing {exc}") from None
    try:
        ok = reduce_second_order_check(sys_, cfg.trials, seed=cfg.seed)
    except ReductionPreconditionFailed as exc:
        raise ConfigError(str(exc)) from None
    coef = ReductionCoefficients.from_system(sys_)
    result = {
        "passed": ok, "trials": cfg.trials, "kappa": coef.kappa,
        "k1": coef.k1, "k2": coef.k2, "k3": coef.k3, "k4": coef.k4, "k5": coef.k5,
    }
    lines = [f"kappa = {coef.kappa}", f"identity holds at {cfg.trials} random jets: {ok}"]
    return ok, result, lines


def cmd_degenerate(cfg: RunConfig) -> Outcome:
    _need(cfg, "family")
    try:
        if cfg.family == "scalar":
            r: DegenerationResult = degenerate_scalar()
        else:
            _need(cfg, "n")
            data = {}
            for key, value in _family_data(cfg).items():
                data[key] = parse_rational(value, key) if key.startswith("gamma") else parse_matrix(value, cfg.n, key)
            r = degenerate_to_p2(cfg.family, cfg.n, data, seed=cfg.seed)
    except DivergentLimit as exc:
        return False, {"match": False, "divergent": str(exc)}, [f"limit diverges: {exc}"]
    d = r.as_dict()
    lines = [f"{d['family']} -> {d['target']}: match {d['match']}",
             f"f' = {d['limit_f']}", f"g' = {d['limit_g']}"]
    return r.match, d, lines


def cmd_selftest(cfg: RunConfig, only: str | None) -> Outcome:
    numbers = sorted(acceptance.CRITERIA) if not only else list(_int_list(only, len(only.split(",")), "--only"))
    unknown = [k for k in numbers if k not in acceptance.CRITERIA]
    if unknown:
        raise UsageError(f"unknown criteria {unknown}")
    lines: list[str] = []

    def progress(res):
        mark = "PASS" if res.passed else "FAIL"
        print(f"criterion {res.number:2d} {mark}  {res.title}  ({res.elapsed:.1f}s)", flush=True)

    quiet = cfg.out == "-"
    results = acceptance.run_suite(numbers, cfg.seed, cfg.jobs, None if quiet else progress)
    ok = all(r.passed for r in results)
    lines.append(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    return ok, {"criteria": [r.as_dict() for r in results]}, lines


# ---------------------------------------------------------------------------


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = make_config(ns)
        dispatch: dict[str, Callable[[], Outcome]] = {
            "residues": lambda: cmd_residues(cfg),
            "spectrum": lambda: cmd_spectrum(cfg, ns.kmin, ns.kmax),
            "expand": lambda: cmd_expand(cfg),
            "scan": lambda: cmd_scan(cfg),
            "verify-family": lambda: cmd_verify_family(cfg),
            "reduce-check": lambda: cmd_reduce_check(cfg),
            "degenerate": lambda: cmd_degenerate(cfg),
            "selftest": lambda: cmd_selftest(cfg, ns.only),
        }
        ok, result, lines = dispatch[ns.subcommand]()
    except (ConfigError, UsageError, DeltaZero, NotInSigma0, BadPartition, ResidueMismatch) as exc:
        print(f"kov: error: {exc}", file=sys.stderr)
        return 2
    report = envelope(ns.subcommand, cfg.for_report(), result, ok)
    if cfg.out == "-":
        sys.stdout.write(write_report(report, None))
    else:
        for line in lines:
            print(line)
        if cfg.out:
            write_report(report, cfg.out)
    return 0 if ok else 1


def main() -> None:
    sys.exit(run())
