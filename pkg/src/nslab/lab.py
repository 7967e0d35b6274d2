"""Experiment layer: separation-rate measurement, diagnostic checks, reports.

`run_separation_experiment` evolves a solution, builds the Picard ladder,
samples the separation norms ||u - P_k|| at dyadic times, fits log-log
slopes, and compares them to the exponent ladder.  Reports are plain
dictionaries with deterministic JSON/CSV serializations so identical
configurations yield identical bytes.

The ladder is built before the solution run, and intermediate Duhamel
arrays are dropped eagerly: peak memory stays near (k_max + 2) trajectory
blocks, which keeps 64^3 with M = 128 around 3.4 GB.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import solenoidal_bump, taylor_green, weak_l3_profile
from .errors import ConfigurationError, DegenerateFitError
from .norms import lebesgue_norm, mixed_norm_from_samples
from .picard import Trajectory, picard_ladder
from .schedule import ExponentSchedule, exponent_schedule
from .solver import energy_decay_samples, evolve
from .spectral import SPECTRAL, Ball, Grid3, VectorField

__all__ = [
    "RateFit",
    "RateReport",
    "fit_rate",
    "run_separation_experiment",
    "write_report_files",
    "heat_tail_check",
    "heat_tail_ratio",
    "picard_local_bounds",
]


@dataclass(frozen=True)
class RateFit:
    """Least-squares power law value ~ C t^slope from log-log samples."""

    slope: float
    intercept: float
    r2: float
    n_samples: int
    n_dropped: int = 0


@dataclass(frozen=True)
class RateReport:
    """Everything one separation experiment produced, JSON-ready.

    `samples` rows: {k, region, t, sup_norm, l2_norm, mixed_norm}.
    `fits` rows: the RateFit fields plus scheduled_a_k, slope_floor,
    passed, degenerate.  `energy` rows: {t, E, D}.
    """

    config: dict
    schedule: dict
    mixed: dict
    samples: list
    fits: list
    energy: list
    flags: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "schedule": self.schedule,
            "mixed": self.mixed,
            "samples": self.samples,
            "fits": self.fits,
            "energy": self.energy,
            "flags": self.flags,
        }


def fit_rate(samples) -> RateFit:
    """Fit log(value) = slope * log(t) + intercept.

    Non-positive times or values are dropped (their count is reported);
    fewer than four usable points raises DegenerateFitError.  Constant
    samples give slope 0 with r2 = 1.
    """
    pairs = [(float(t), float(v)) for t, v in samples]
    used = [(t, v) for t, v in pairs if t > 0.0 and v > 0.0]
    dropped = len(pairs) - len(used)
    if len(used) < 4:
        raise DegenerateFitError(
            f"need at least 4 positive samples for a rate fit, have {len(used)} "
            f"({dropped} dropped)"
        )
    logt = np.log([t for t, _ in used])
    logv = np.log([v for _, v in used])
    slope, intercept = np.polyfit(logt, logv, 1)
    ss_tot = float(np.sum((logv - np.mean(logv)) ** 2))
    ss_res = float(np.sum((logv - (slope * logt + intercept)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(float(slope), float(intercept), r2, len(used), dropped)


# ---------------------------------------------------------------------------
# configuration


_DATA_KINDS = {"taylor_green", "solenoidal_bump", "weak_l3_profile", "zero"}


def _cfg_get(cfg: dict, path: str, default=None, required: bool = False):
    node = cfg
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if required:
                raise ConfigurationError(f"config is missing required field '{path}'")
            return default
        node = node[part]
    return node


def _parse_p(value) -> float:
    if isinstance(value, str):
        if value.lower() in ("inf", "infinity"):
            return math.inf
        try:
            return float(value)
        except ValueError as exc:
            raise ConfigurationError(f"cannot parse exponent p from {value!r}") from exc
    return float(value)


def _make_data(kind: str, params: dict, grid: Grid3) -> VectorField:
    params = dict(params or {})
    try:
        if kind == "taylor_green":
            return taylor_green(float(params["amplitude"]), grid)
        if kind == "solenoidal_bump":
            half = grid.box_length / 2.0
            center = tuple(params.get("center", (half, half, half)))
            return solenoidal_bump(
                center, float(params["radius"]), float(params["amplitude"]), grid
            )
        if kind == "weak_l3_profile":
            center = params.get("center")
            return weak_l3_profile(
                float(params["epsilon"]), float(params["amplitude"]), grid,
                center=None if center is None else tuple(center),
            )
        if kind == "zero":
            data = np.zeros((3, *grid.spectral_shape), dtype=np.complex128)
            return VectorField(grid, SPECTRAL, data)
    except KeyError as exc:
        raise ConfigurationError(f"data kind '{kind}' is missing parameter {exc}") from exc
    except ValueError as exc:
        raise ConfigurationError(f"invalid data parameters for '{kind}': {exc}") from exc
    raise ConfigurationError(
        f"unknown data kind '{kind}'; expected one of {sorted(_DATA_KINDS)}"
    )


def _dyadic_nodes(T: float, M: int, j_min: int, j_max: int) -> list[int]:
    """Node indices of T 2^{-j}, snapped to the grid, deduplicated, ascending."""
    seen = []
    for j in range(j_min, j_max + 1):
        idx = round(M * 2.0**-j)
        if idx >= 1 and idx not in seen:
            seen.append(idx)
    return sorted(seen)


# ---------------------------------------------------------------------------
# the experiment


def run_separation_experiment(config: dict) -> RateReport:
    """Full pipeline: data -> ladder -> solution -> samples -> fits -> report."""
    n = int(_cfg_get(config, "grid.n", required=True))
    L = float(_cfg_get(config, "grid.L", required=True))
    try:
        grid = Grid3(n, L)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    T = float(_cfg_get(config, "time.T", required=True))
    M = int(_cfg_get(config, "time.M", required=True))
    if not T > 0.0:
        raise ConfigurationError("time.T must be positive")
    if M < 1 or M & (M - 1):
        raise ConfigurationError("time.M must be a positive power of two")
    k_max = int(_cfg_get(config, "ladder.k_max", required=True))
    if k_max < 0:
        raise ConfigurationError("ladder.k_max must be >= 0")
    ball_cfg = _cfg_get(config, "measure.ball", required=True)
    try:
        ball = Ball(tuple(ball_cfg["center"]), float(ball_cfg["radius"]))
        ball.validate_for(grid)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid measure.ball: {exc}") from exc
    gamma = float(_cfg_get(config, "schedule.gamma", 0.9))
    p_exp = _parse_p(_cfg_get(config, "schedule.p", "inf"))
    sigma = float(_cfg_get(config, "schedule.sigma", 1.45))
    try:
        sched = exponent_schedule(gamma, p_exp, sigma)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    j_min = int(_cfg_get(config, "dyadic.j_min", 2))
    j_max = int(_cfg_get(config, "dyadic.j_max", 10))
    mixed_q = float(_cfg_get(config, "measure.mixed_q", 2.0))
    if not 1.5 < mixed_q < 3.0:
        raise ConfigurationError("measure.mixed_q must lie in (3/2, 3)")
    mixed_r = 2.0 * mixed_q / (2.0 * mixed_q - 3.0)
    slope_tol = float(_cfg_get(config, "fit.slope_tolerance", 0.2))

    kind = _cfg_get(config, "data.kind", required=True)
    u0 = _make_data(kind, _cfg_get(config, "data.params", {}), grid)

    node_ids = _dyadic_nodes(T, M, j_min, j_max)
    if len(node_ids) < 4:
        raise ConfigurationError(
            f"only {len(node_ids)} distinct dyadic nodes for T={T}, M={M}, "
            f"j in [{j_min}, {j_max}]; need at least 4"
        )

    try:
        picards = picard_ladder(u0, k_max, T, M)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    u = evolve(u0, T, M, label="u")

    region = ball.label()
    vol = grid.box_length**3
    w = grid.spectral_weights
    samples = []
    fits = []
    any_degenerate = False
    slopes = []
    for k in range(k_max + 1):
        pk = picards[k]
        l2_nodes = np.empty(M + 1)
        for j in range(M + 1):
            d = u.data[j] - pk.data[j]
            l2_nodes[j] = math.sqrt(vol * float(np.sum(w * np.abs(d) ** 2)))
        if mixed_q == 2.0:
            q_nodes = l2_nodes
        else:
            q_nodes = np.array([
                lebesgue_norm(
                    VectorField(grid, SPECTRAL, u.data[j] - pk.data[j]), mixed_q
                )
                for j in range(M + 1)
            ])
        k_rows = []
        for idx in node_ids:
            t = float(u.times[idx])
            diff = VectorField(grid, SPECTRAL, u.data[idx] - pk.data[idx], t)
            sup_b = lebesgue_norm(diff, math.inf, ball)
            mix = mixed_norm_from_samples(u.times, q_nodes, mixed_r, t)
            row = {
                "k": k,
                "region": region,
                "t": t,
                "sup_norm": sup_b,
                "l2_norm": float(l2_nodes[idx]),
                "mixed_norm": mix,
            }
            k_rows.append(row)
            samples.append(row)
        scheduled = sched.a[k] if k <= sched.k0 else sched.sigma
        try:
            fit = fit_rate([(row["t"], row["sup_norm"]) for row in k_rows])
            fits.append({
                "k": k,
                "region": region,
                "slope": fit.slope,
                "intercept": fit.intercept,
                "r2": fit.r2,
                "n_samples": fit.n_samples,
                "n_dropped": fit.n_dropped,
                "scheduled_a_k": scheduled,
                "slope_floor": scheduled - slope_tol,
                "passed": bool(fit.slope >= scheduled - slope_tol),
                "degenerate": False,
            })
            slopes.append(fit.slope)
        except DegenerateFitError as exc:
            any_degenerate = True
            fits.append({
                "k": k,
                "region": region,
                "slope": None,
                "intercept": None,
                "r2": None,
                "n_samples": 0,
                "n_dropped": len(k_rows),
                "scheduled_a_k": scheduled,
                "slope_floor": scheduled - slope_tol,
                "passed": False,
                "degenerate": True,
                "reason": str(exc),
            })

    energy_times = [float(u.times[idx]) for idx in node_ids]
    energy = [
        {"t": t, "E": e, "D": d}
        for (t, e, d) in energy_decay_samples(u, picards, 0, energy_times)
    ]

    non_decreasing = all(b >= a - 1e-9 for a, b in zip(slopes, slopes[1:]))
    return RateReport(
        config=config,
        schedule={
            "gamma": sched.gamma,
            "p": "inf" if math.isinf(sched.p_exp) else sched.p_exp,
            "sigma": sched.sigma,
            "step": sched.step,
            "a": list(sched.a),
            "a_statement": list(sched.a_statement),
            "k0": sched.k0,
        },
        mixed={"q": mixed_q, "r": mixed_r},
        samples=samples,
        fits=fits,
        energy=energy,
        flags={
            "degenerate": any_degenerate,
            "non_decreasing_slopes": bool(slopes) and non_decreasing,
            "all_passed": bool(fits) and all(f["passed"] for f in fits),
        },
    )


def _as_dict(report) -> dict:
    return report.to_dict() if isinstance(report, RateReport) else report


def _json_bytes(report) -> bytes:
    return (json.dumps(_as_dict(report), indent=2, sort_keys=True) + "\n").encode()


def write_report_files(report, outdir) -> dict:
    """Persist report.json, samples.csv, fits.csv; returns the path map.

    Serialization is deterministic: sorted JSON keys, shortest-round-trip
    float formatting, LF line endings.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": outdir / "report.json",
        "samples": outdir / "samples.csv",
        "fits": outdir / "fits.csv",
    }
    rep = _as_dict(report)
    paths["report"].write_bytes(_json_bytes(rep))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "region", "t", "sup_norm", "l2_norm", "mixed_norm"])
    for row in rep["samples"]:
        writer.writerow([
            row["k"], row["region"], row["t"],
            row["sup_norm"], row["l2_norm"], row["mixed_norm"],
        ])
    paths["samples"].write_bytes(buf.getvalue().encode())

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "region", "slope", "intercept", "r2", "scheduled_a_k"])
    for f in rep["fits"]:
        writer.writerow([
            f["k"], f["region"],
            "" if f["slope"] is None else f["slope"],
            "" if f["intercept"] is None else f["intercept"],
            "" if f["r2"] is None else f["r2"],
            f["scheduled_a_k"],
        ])
    paths["fits"].write_bytes(buf.getvalue().encode())
    return paths


# ---------------------------------------------------------------------------
# diagnostic checks


def _shell_volume(R: float, d: float, rho: np.ndarray) -> np.ndarray:
    """Volume of B(x, rho) \\ B(0, R) for |x| = d, vectorized over rho."""
    rho = np.asarray(rho, dtype=float)
    ball = (4.0 * np.pi / 3.0) * rho**3
    if d < 1e-12 * R:
        return np.maximum(ball - (4.0 * np.pi / 3.0) * R**3, 0.0)
    inside = rho <= R - d
    engulfs = rho >= R + d
    lens = np.pi * (R + rho - d) ** 2 * (
        d * d + 2.0 * d * rho - 3.0 * rho * rho + 2.0 * d * R + 6.0 * rho * R - 3.0 * R * R
    ) / (12.0 * d)
    cap = (4.0 * np.pi / 3.0) * R**3
    overlap = np.where(inside, ball, np.where(engulfs, cap, lens))
    return np.maximum(ball - overlap, 0.0)


def _tail_norm_factor(R: float, d: float, t: float, quad_points: int, v_max: float) -> float:
    """L^{3/2,1} norm of the heat-tail profile, divided by exp(-(R-d)^2/(4t)).

    For x at distance d < R from the center, the function
    g(y) = exp(-|x-y|^2 / (4 t)) restricted to |y| > R has super-level sets
    B(x, rho(s)) \\ B_R with rho(s) = sqrt(-4 t log s), and

        ||g||_{3/2,1} = (3/2) * integral_0^{s_peak} mu(s)^{2/3} ds.

    Substituting s = s_peak e^{-v} turns this into a well-conditioned
    integral with rho = sqrt((R-d)^2 + 4 t v); the overall factor s_peak =
    exp(-(R-d)^2/(4t)) is divided out so the result never underflows.
    """
    v = np.linspace(0.0, v_max, quad_points)
    rho = np.sqrt((R - d) ** 2 + 4.0 * t * v)
    mu = _shell_volume(R, d, rho)
    return 1.5 * float(np.trapezoid(mu ** (2.0 / 3.0) * np.exp(-v), v))


def heat_tail_ratio(
    R: float,
    r: float,
    t: float,
    x_samples: int = 9,
    quad_points: int = 400,
    v_max: float = 60.0,
) -> float:
    """N(t) / exp(-(R-r)^2/(4t)), stable down to times where the bound
    itself underflows double precision (the quotient is computed in log
    space, never as a ratio of tiny numbers)."""
    if not 0.0 < r < R:
        raise ValueError(f"need 0 < r < R, got r={r}, R={R}")
    if not t > 0.0:
        raise ValueError("time must be positive")
    best = 0.0
    for d in np.linspace(0.0, r, x_samples):
        factor = _tail_norm_factor(R, d, t, quad_points, v_max)
        # s_peak(d) / bound <= 1, with equality at d = r
        rel = math.exp(((R - r) ** 2 - (R - d) ** 2) / (4.0 * t))
        best = max(best, rel * factor)
    return best


def heat_tail_check(
    R: float,
    r: float,
    times,
    x_samples: int = 9,
    quad_points: int = 400,
    v_max: float = 60.0,
) -> list[tuple[float, float, float]]:
    """Evaluate the heat-tail quantity N(t) against its Gaussian bound.

    N(t) is the sup over points x with |x| <= r of the L^{3/2,1} norm (in y)
    of exp(-|x-y|^2/(4t)) cut off to the complement of the ball of radius R.
    Returns rows (t, N(t), exp(-(R-r)^2/(4t))); the contract under test is
    that N(t)/bound stays bounded over the sweep.  For very small times the
    bound (and hence N) underflows to exactly zero; use `heat_tail_ratio`
    when the quotient itself is wanted there.
    """
    rows = []
    for t in times:
        t = float(t)
        ratio = heat_tail_ratio(R, r, t, x_samples, quad_points, v_max)
        bound = math.exp(-((R - r) ** 2) / (4.0 * t))
        rows.append((t, ratio * bound, bound))
    return rows


def picard_local_bounds(picards: list[Trajectory], ball: Ball, q: float, T: float):
    """Local boundedness report for the Picard ladder.

    For each iterate, the sup over nodes 0 < t <= T of ||P_k||_{L^q(ball)};
    plus the weighted heat-flow quantity sup_t t^{3/(2q)} ||P_0||_{L^inf(ball)}.
    """
    if not q > 3.0:
        raise ValueError(f"local bound check needs q > 3, got {q}")
    if not picards:
        raise ValueError("empty ladder")
    p0 = picards[0]
    if T > p0.horizon * (1 + 1e-12):
        raise ValueError(f"T = {T} exceeds ladder horizon {p0.horizon}")
    last = p0.node_index(T)
    rows = []
    for k, pk in enumerate(picards):
        val = max(
            lebesgue_norm(pk.snapshot(j), q, ball) for j in range(1, last + 1)
        )
        rows.append({"kind": "picard_lq_sup", "k": k, "q": q, "value": val})
    weight = 1.5 / q
    heat_val = max(
        p0.times[j] ** weight * lebesgue_norm(p0.snapshot(j), math.inf, ball)
        for j in range(1, last + 1)
    )
    rows.append({"kind": "heat_weighted_sup", "k": 0, "q": q, "value": heat_val})
    return rows
