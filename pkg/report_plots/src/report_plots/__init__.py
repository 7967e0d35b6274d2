"""Offline rendering of separation-experiment artifacts.

This package consumes only the files the experiment runner persists --
report.json, samples.csv, and optionally check.json -- and never recomputes
anything: the fitted lines are drawn from the stored slope/intercept pairs
(natural-log least squares, so value = exp(intercept) * t**slope) and the
dashed references from the stored schedule exponents.  Rendering is
read-only and output names are derived from a content hash of the report,
so re-running on the same artifacts writes the same file.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["render_rate_plot", "render_check_plot"]

_IMAGE_SUFFIXES = (".png", ".svg")

_SAMPLE_COLUMNS = ("k", "t", "sup_norm")


def _locate_inputs(report_path) -> tuple[Path, Path]:
    p = Path(report_path)
    if p.is_dir():
        report_file, samples_file = p / "report.json", p / "samples.csv"
    else:
        report_file, samples_file = p, p.parent / "samples.csv"
    if not report_file.is_file():
        raise FileNotFoundError(f"report file not found: {report_file}")
    if not samples_file.is_file():
        raise FileNotFoundError(f"samples file not found: {samples_file}")
    return report_file, samples_file


def _parse_report(report_file: Path) -> tuple[dict, bytes]:
    raw = report_file.read_bytes()
    try:
        report = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{report_file} is not valid JSON: {exc}") from exc
    if not isinstance(report, dict):
        raise ValueError(f"{report_file} does not hold a report object")
    return report, raw


def _group_samples(samples_file: Path) -> dict[int, list[tuple[float, float]]]:
    """Sample rows keyed by ladder depth k, preserving file (time) order."""
    with open(samples_file, newline="") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for column in _SAMPLE_COLUMNS:
            if column not in header:
                raise ValueError(f"{samples_file} is missing column {column!r}")
        groups: dict[int, list[tuple[float, float]]] = {}
        try:
            for row in reader:
                k = int(row["k"])
                groups.setdefault(k, []).append((float(row["t"]), float(row["sup_norm"])))
        except (TypeError, KeyError, ValueError) as exc:
            raise ValueError(f"{samples_file} has a malformed row: {exc}") from exc
    return dict(sorted(groups.items()))


def _resolve_output(output_path, stem: str, identity: bytes, fmt: str) -> Path:
    out = Path(output_path)
    if out.suffix.lower() in _IMAGE_SUFFIXES:
        return out
    digest = hashlib.sha256(identity).hexdigest()[:12]
    return out / f"{stem}_{digest}.{fmt}"


def _save(fig, output_path, stem: str, identity: bytes, fmt: str) -> Path:
    target = _resolve_output(output_path, stem, identity, fmt)
    target.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(target, dpi=150)
    plt.close(fig)
    return target


def render_rate_plot(report_path, output_path, fmt: str = "png") -> Path:
    """Render one log-log separation panel per ladder depth k.

    `report_path` is the artifact directory (or the report.json inside it);
    samples.csv must sit next to the report.  `output_path` may be a
    directory, in which case the file name is derived from the report's
    content hash, or an explicit .png/.svg path.  Returns the written path.

    Each panel shows the sampled sup-norm separations, the stored fitted
    line, and a dashed scheduled-exponent reference anchored at the first
    sample.  Raises ValueError("no samples ...") without writing anything
    when the sample file has no rows.
    """
    report_file, samples_file = _locate_inputs(report_path)
    report, raw = _parse_report(report_file)
    groups = _group_samples(samples_file)
    if not groups:
        raise ValueError(f"no samples to plot in {samples_file}")

    fits = {}
    for fit in report.get("fits", []):
        if isinstance(fit, dict) and "k" in fit:
            fits[int(fit["k"])] = fit

    ks = list(groups)
    fig, axes = plt.subplots(
        1, len(ks), figsize=(4.4 * len(ks), 3.8), squeeze=False, constrained_layout=True
    )
    for ax, k in zip(axes[0], ks):
        rows = groups[k]
        positive = [(t, v) for t, v in rows if t > 0 and v > 0]
        if positive:
            ts, vs = zip(*positive)
            ax.loglog(ts, vs, "o", color="tab:blue", label="samples")
            t_lo, t_hi = min(ts), max(ts)
            fit = fits.get(k, {})
            slope, intercept = fit.get("slope"), fit.get("intercept")
            if slope is not None and intercept is not None:
                line = [math.exp(intercept) * t**slope for t in (t_lo, t_hi)]
                ax.loglog(
                    (t_lo, t_hi), line, "-", color="tab:orange",
                    label=f"fit: slope {slope:.3f}",
                )
            a_k = fit.get("scheduled_a_k")
            if a_k is not None:
                t0, v0 = positive[0]
                ref = [v0 * (t / t0) ** a_k for t in (t_lo, t_hi)]
                ax.loglog(
                    (t_lo, t_hi), ref, "--", color="tab:gray",
                    label=f"reference: t^{a_k:g}",
                )
            ax.legend(fontsize=8)
        else:
            ax.text(0.5, 0.5, "no positive samples", ha="center", va="center",
                    transform=ax.transAxes)
        ax.set_title(f"k = {k}")
        ax.set_xlabel("t")
    axes[0][0].set_ylabel("separation sup-norm")
    return _save(fig, output_path, "rates", raw, fmt)


def render_check_plot(check_path, output_path, fmt: str = "png") -> Path:
    """Render the diagnostic panels stored in a check.json file.

    Three panels: the heat-tail ratio sweep, the per-depth local norm
    bounds, and the kernel-envelope sweep.  Output naming follows the same
    content-hash convention as render_rate_plot.
    """
    check_file = Path(check_path)
    if not check_file.is_file():
        raise FileNotFoundError(f"check file not found: {check_file}")
    raw = check_file.read_bytes()
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{check_file} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ValueError(f"{check_file} does not hold a check object")

    fig, axes = plt.subplots(1, 3, figsize=(12.6, 3.6), constrained_layout=True)

    tail = payload.get("heat_tail", {})
    times = [row[0] for row in tail.get("rows", [])]
    ratios = tail.get("ratios", [])
    if times and len(ratios) == len(times):
        axes[0].semilogx(times, ratios, "o-")
    axes[0].set_title("heat-tail ratio")
    axes[0].set_xlabel("t")

    local = payload.get("local_bounds", {})
    rows = [r for r in local.get("rows", []) if r.get("kind") == "picard_lq_sup"]
    if rows:
        axes[1].plot([r["k"] for r in rows], [r["value"] for r in rows], "s-")
    axes[1].set_title(f"local L^{local.get('q', '?')} sup by depth")
    axes[1].set_xlabel("k")

    oseen = payload.get("oseen", {})
    times = oseen.get("times", [])
    ratios = oseen.get("ratios", [])
    if times and len(ratios) == len(times):
        axes[2].semilogx(times, ratios, "o-")
    axes[2].set_title("kernel envelope ratio")
    axes[2].set_xlabel("t")

    return _save(fig, output_path, "check", raw, fmt)
