"""Command-line interface.

Subcommands: gen, evolve, picard, norms, schedule, rates, check.  Every
subcommand reads a JSON config file (see the README for the schema).
Exit codes: 0 success, 2 configuration problems, 3 solver stability
failures, 4 degenerate rate fits.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DegenerateFitError, StabilityError
from .lab import (
    _cfg_get,
    _make_data,
    _parse_p,
    fit_rate,
    heat_tail_check,
    heat_tail_ratio,
    picard_local_bounds,
    run_separation_experiment,
    write_report_files,
)
from .norms import KatoSpec, LorentzSpec, MixedNormSpec, kato_norm, lebesgue_norm, lorentz_norm, mixed_norm
from .picard import picard_ladder
from .pslf import save_trajectory, write_snapshot
from .schedule import exponent_schedule
from .solver import evolve
from .spectral import Ball, Grid3, oseen_center_magnitude, oseen_kernel_ratio

__all__ = ["main"]


# ---------------------------------------------------------------------------
# shared config plumbing


def _load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigurationError("config root must be a JSON object")
    return cfg


def _grid_from(cfg: dict) -> Grid3:
    try:
        return Grid3(int(_cfg_get(cfg, "grid.n", required=True)),
                     float(_cfg_get(cfg, "grid.L", required=True)))
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc


def _datum_from(cfg: dict, grid: Grid3):
    kind = _cfg_get(cfg, "data.kind", required=True)
    return _make_data(kind, _cfg_get(cfg, "data.params", {}), grid)


def _time_from(cfg: dict) -> tuple[float, int]:
    T = float(_cfg_get(cfg, "time.T", required=True))
    M = int(_cfg_get(cfg, "time.M", required=True))
    if not T > 0.0:
        raise ConfigurationError("time.T must be positive")
    if M < 1 or M & (M - 1):
        raise ConfigurationError("time.M must be a positive power of two")
    return T, M


def _ball_from(cfg: dict, grid: Grid3) -> Ball:
    raw = _cfg_get(cfg, "measure.ball", required=True)
    try:
        ball = Ball(tuple(raw["center"]), float(raw["radius"]))
        ball.validate_for(grid)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid measure.ball: {exc}") from exc
    return ball


def _out_dir(args, cfg: dict) -> Path:
    out = getattr(args, "out", None) or _cfg_get(cfg, "output.dir")
    if out is None:
        raise ConfigurationError("no output directory: pass --out or set output.dir")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return repr(value)
    return str(value)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_gen(args) -> int:
    cfg = _load_config(args.config)
    grid = _grid_from(cfg)
    u0 = _datum_from(cfg, grid)
    out = _out_dir(args, cfg)
    path = write_snapshot(u0, out / "u0.pslf")
    print(f"wrote {path}")
    return 0


def _cmd_evolve(args) -> int:
    cfg = _load_config(args.config)
    grid = _grid_from(cfg)
    u0 = _datum_from(cfg, grid)
    T, M = _time_from(cfg)
    u = evolve(u0, T, M, label="u")
    out = _out_dir(args, cfg)
    manifest = save_trajectory(u, out / "u")
    print(f"wrote {manifest}")
    return 0


def _cmd_picard(args) -> int:
    cfg = _load_config(args.config)
    grid = _grid_from(cfg)
    u0 = _datum_from(cfg, grid)
    T, M = _time_from(cfg)
    k_max = int(_cfg_get(cfg, "ladder.k_max", required=True))
    if k_max < 0:
        raise ConfigurationError("ladder.k_max must be >= 0")
    picards = picard_ladder(u0, k_max, T, M)
    out = _out_dir(args, cfg)
    for k, pk in enumerate(picards):
        manifest = save_trajectory(pk, out / f"p{k}")
        print(f"wrote {manifest}")
    return 0


def _norm_rows(cfg: dict):
    """Norm table for the configured datum and its heat-flow trajectory."""
    grid = _grid_from(cfg)
    u0 = _datum_from(cfg, grid)
    T, M = _time_from(cfg)
    ball = _ball_from(cfg, grid)
    p0 = picard_ladder(u0, 0, T, M)[0]
    inf = math.inf
    rows = []
    for region, label in ((None, "global"), (ball, ball.label())):
        rows.append(("lebesgue", 2.0, None, None, None, label,
                     lebesgue_norm(u0, 2.0, region)))
        rows.append(("lebesgue", inf, None, None, None, label,
                     lebesgue_norm(u0, inf, region)))
        rows.append(("lorentz", 3.0, inf, None, None, label,
                     lorentz_norm(u0, LorentzSpec(3.0, inf), region)))
    rows.append(("kato", None, inf, None, T, "global",
                 kato_norm(p0, KatoSpec(inf, T))))
    mspec = MixedNormSpec(4.0, 2.0, T)
    rows.append(("mixed", None, 2.0, 4.0, T, "global", mixed_norm(p0, mspec)))
    return rows


def _cmd_norms(args) -> int:
    cfg = _load_config(args.config)
    rows = _norm_rows(cfg)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["norm_kind", "p", "q", "r", "T", "region", "value"])
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        print(f"wrote {path}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_schedule(args) -> int:
    cfg = _load_config(args.config)
    gamma = float(_cfg_get(cfg, "schedule.gamma", required=True))
    p_exp = _parse_p(_cfg_get(cfg, "schedule.p", required=True))
    sigma = float(_cfg_get(cfg, "schedule.sigma", required=True))
    try:
        sched = exponent_schedule(gamma, p_exp, sigma)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    payload = {
        "gamma": sched.gamma,
        "p": "inf" if math.isinf(sched.p_exp) else sched.p_exp,
        "sigma": sched.sigma,
        "step": sched.step,
        "k0": sched.k0,
        "a": list(sched.a),
        "a_statement": list(sched.a_statement),
    }
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(f"gamma={_fmt(sched.gamma)} p={payload['p']} sigma={_fmt(sched.sigma)}")
        print(f"k0={sched.k0} step={_fmt(sched.step)}")
        print("k  a_k        a_statement_k")
        for k, (ak, sk) in enumerate(zip(sched.a, sched.a_statement)):
            print(f"{k}  {ak:<9g}  {sk:g}")
    return 0


def _cmd_rates(args) -> int:
    cfg = _load_config(args.config)
    report = run_separation_experiment(cfg)
    out = _out_dir(args, cfg)
    paths = write_report_files(report, out)
    for fit in report.fits:
        if fit["degenerate"]:
            print(f"k={fit['k']} degenerate fit ({fit.get('reason', 'all samples zero')})")
        else:
            print(
                f"k={fit['k']} slope={fit['slope']:+.4f} r2={fit['r2']:.5f} "
                f"scheduled={fit['scheduled_a_k']:g} passed={fit['passed']}"
            )
    print(f"wrote {paths['report']}")
    if report.flags["degenerate"]:
        return 4
    return 0


def _cmd_check(args) -> int:
    cfg = _load_config(args.config)
    grid = _grid_from(cfg)
    u0 = _datum_from(cfg, grid)
    T, M = _time_from(cfg)
    ball = _ball_from(cfg, grid)
    k_max = int(_cfg_get(cfg, "ladder.k_max", 1))
    q = float(_cfg_get(cfg, "check.q", 6.0))
    tail_R = float(_cfg_get(cfg, "check.tail.R", 2.0))
    tail_r = float(_cfg_get(cfg, "check.tail.r", 0.5))
    tail_times = [float(t) for t in _cfg_get(
        cfg, "check.tail.times", list(np.logspace(-3, 0, 13))
    )]

    picards = picard_ladder(u0, k_max, T, M)
    local_rows = picard_local_bounds(picards, ball, q, T)
    tail_rows = heat_tail_check(tail_R, tail_r, tail_times)
    tail_ratios = [heat_tail_ratio(tail_R, tail_r, t) for t in tail_times]

    oseen_times = [float(t) for t in _cfg_get(
        cfg, "check.oseen.times", [0.01 * 2.0**j for j in range(5)]
    )]
    ratios = [oseen_kernel_ratio(t, grid) for t in oseen_times]
    centers = [(t, oseen_center_magnitude(grid, t)) for t in oseen_times]
    center_slope = fit_rate(centers).slope if len(centers) >= 4 else None

    payload = {
        "heat_tail": {
            "R": tail_R,
            "r": tail_r,
            "rows": [[t, N, b] for t, N, b in tail_rows],
            "ratios": tail_ratios,
            "max_ratio": max(tail_ratios),
        },
        "local_bounds": {"q": q, "T": T, "rows": local_rows},
        "oseen": {
            "times": oseen_times,
            "ratios": ratios,
            "max_ratio": max(ratios),
            "center_slope": center_slope,
        },
    }
    out = _out_dir(args, cfg)
    path = out / "check.json"
    path.write_bytes((json.dumps(payload, indent=2, sort_keys=True) + "\n").encode())
    print(f"heat tail: max N/bound {payload['heat_tail']['max_ratio']:.4g}")
    for row in local_rows:
        print(f"local {row['kind']} k={row['k']}: {row['value']:.6g}")
    print(f"oseen: max ratio {payload['oseen']['max_ratio']:.4g}, "
          f"center slope {center_slope if center_slope is None else round(center_slope, 4)}")
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# parser / entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nslab",
        description="Pseudo-spectral Navier-Stokes separation laboratory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, out_help=None):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config file")
        if out_help is not None:
            p.add_argument("--out", help=out_help)
        p.set_defaults(func=func)
        return p

    add("gen", _cmd_gen, "generate the configured datum", "output directory")
    add("evolve", _cmd_evolve, "evolve the datum to a trajectory", "output directory")
    add("picard", _cmd_picard, "build the Picard ladder", "output directory")
    add("norms", _cmd_norms, "norm table for the datum", "output CSV file")
    sched = add("schedule", _cmd_schedule, "print the exponent schedule")
    sched.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    add("rates", _cmd_rates, "run the separation experiment", "output directory")
    add("check", _cmd_check, "tail / local-bound / kernel diagnostics", "output directory")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except StabilityError as exc:
        print(f"error: solver instability: {exc}", file=sys.stderr)
        return 3
    except DegenerateFitError as exc:
        print(f"error: degenerate fit: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
