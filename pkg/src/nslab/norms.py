"""Norms of sampled fields: Lebesgue, Lorentz, mixed space-time, Kato.

All spatial norms treat a field as the piecewise-constant function taking
the cell-center value on each cell of volume h^3.  Lorentz norms are
evaluated *exactly* for that step function via the decreasing rearrangement,
so quadrature and definition coincide; L^{p,p} then reproduces L^p to
rounding.  The vector magnitude |u| = sqrt(sum_i u_i^2) is used throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import (
    Ball,
    VectorField,
    grad_l2_norm,
    l2_norm_spectral,
    to_physical,
    to_spectral,
)

__all__ = [
    "LorentzSpec",
    "MixedNormSpec",
    "KatoSpec",
    "lebesgue_norm",
    "lorentz_norm",
    "mixed_norm",
    "mixed_norm_from_samples",
    "kato_norm",
    "gn_ratio",
]


@dataclass(frozen=True)
class LorentzSpec:
    """Exponent pair (p, q) for the Lorentz space L^{p,q}."""

    p: float
    q: float

    def __post_init__(self):
        if not self.p > 1.0:
            raise ValueError(f"Lorentz p must be > 1, got {self.p}")
        if not self.q >= 1.0:
            raise ValueError(f"Lorentz q must be >= 1, got {self.q}")
        if math.isinf(self.p) and not math.isinf(self.q):
            raise ValueError("p = inf requires q = inf")


@dataclass(frozen=True)
class MixedNormSpec:
    """Time exponent r, space exponent q, and horizon T for L^r(0,T;L^q)."""

    r: float
    q: float
    T: float

    def __post_init__(self):
        if not self.r >= 1.0 or not self.q >= 1.0:
            raise ValueError("mixed-norm exponents must be >= 1")
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError("mixed-norm horizon must be positive")

    @classmethod
    def scaling_critical(cls, q: float, T: float) -> "MixedNormSpec":
        """Pairing r = 2q/(2q-3) that makes the norm scale like sqrt(T).

        Requires q in (3/2, 3); this is the exponent relation under which
        the separation of a solution from its heat flow obeys a T^{1/2}
        bound, so Q(T)/sqrt(T) is the natural dimensionless diagnostic.
        """
        if not 1.5 < q < 3.0:
            raise ValueError(f"scaling-critical pairing needs q in (3/2, 3), got {q}")
        return cls(r=2.0 * q / (2.0 * q - 3.0), q=q, T=T)


@dataclass(frozen=True)
class KatoSpec:
    """Exponent q > 3 and horizon for sup_t t^{1/2 - 3/(2q)} ||.||_q."""

    q: float
    T: float

    def __post_init__(self):
        if not self.q > 3.0:
            raise ValueError(f"Kato exponent must be > 3, got {self.q}")
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError("Kato horizon must be positive")

    @property
    def weight_exponent(self) -> float:
        return 0.5 if math.isinf(self.q) else 0.5 - 1.5 / self.q


def _magnitudes(f: VectorField, region: Ball | None) -> np.ndarray:
    """Flat array of |u| over the cells of `region` (whole box if None)."""
    phys = to_physical(f)
    mag = np.sqrt(np.sum(phys.data**2, axis=0))
    if region is None:
        return mag.ravel()
    mask = region.mask(f.grid)
    vals = mag[mask]
    if vals.size == 0:
        raise ValueError("region contains no grid cells")
    return vals


def lebesgue_norm(f: VectorField, p: float, region: Ball | None = None) -> float:
    """L^p norm of |u| over the region (cell-center quadrature)."""
    if not p >= 1.0:
        raise ValueError(f"Lebesgue exponent must be >= 1, got {p}")
    mag = _magnitudes(f, region)
    if math.isinf(p):
        return float(np.max(mag)) if mag.size else 0.0
    h3 = f.grid.cell_volume
    return float((np.sum(mag**p) * h3) ** (1.0 / p))


def lorentz_norm(f: VectorField, spec: LorentzSpec, region: Ball | None = None) -> float:
    """Lorentz L^{p,q} norm, exact for the piecewise-constant sampled field.

    Uses the decreasing rearrangement f*: with sorted cell magnitudes
    m_0 >= m_1 >= ... each occupying measure h^3,

        q < inf :  ( sum_i m_i^q * (p/q) * (t_{i+1}^{q/p} - t_i^{q/p}) )^{1/q}
        q = inf :  sup_i m_i * t_{i+1}^{1/p}

    where t_i = i h^3 are the rearrangement breakpoints.
    """
    mag = np.sort(_magnitudes(f, region))[::-1]
    mag = mag[mag > 0.0]
    if mag.size == 0:
        return 0.0
    h3 = f.grid.cell_volume
    if math.isinf(spec.q):
        if math.isinf(spec.p):
            return float(mag[0])
        t_right = h3 * np.arange(1, mag.size + 1)
        return float(np.max(mag * t_right ** (1.0 / spec.p)))
    qp = spec.q / spec.p
    edges = h3 * np.arange(mag.size + 1)
    increments = edges[1:] ** qp - edges[:-1] ** qp
    total = np.sum(mag**spec.q * increments) * (spec.p / spec.q)
    return float(total ** (1.0 / spec.q))


def mixed_norm_from_samples(times: np.ndarray, values: np.ndarray, r: float, T: float) -> float:
    """L^r in time of precomputed spatial-norm samples on [0, T].

    `times` must be uniform nodes covering T exactly; trapezoidal rule in
    time for finite r, max over nodes for r = inf.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    idx = np.nonzero(np.abs(times - T) <= 1e-9 * max(T, 1.0))[0]
    if idx.size == 0:
        raise ValueError(f"horizon T = {T} is not a trajectory node")
    last = int(idx[0])
    sel = values[: last + 1]
    if math.isinf(r):
        return float(np.max(sel))
    return float(np.trapezoid(sel**r, times[: last + 1]) ** (1.0 / r))


def mixed_norm(traj, spec: MixedNormSpec, region: Ball | None = None) -> float:
    """L^r(0, T; L^q) of a trajectory, trapezoid in time over the nodes."""
    if spec.T > traj.horizon * (1 + 1e-12):
        raise ValueError(
            f"horizon {spec.T} exceeds trajectory horizon {traj.horizon}"
        )
    vals = np.array(
        [lebesgue_norm(traj.snapshot(j), spec.q, region) for j in range(traj.steps + 1)]
    )
    return mixed_norm_from_samples(traj.times, vals, spec.r, spec.T)


def kato_norm(traj, spec: KatoSpec, region: Ball | None = None) -> float:
    """sup over nodes 0 < t <= T of t^{1/2 - 3/(2q)} ||u(t)||_q."""
    a = spec.weight_exponent
    best = 0.0
    for j in range(1, traj.steps + 1):
        t = float(traj.times[j])
        if t > spec.T * (1 + 1e-12):
            break
        val = t**a * lebesgue_norm(traj.snapshot(j), spec.q, region)
        best = max(best, val)
    return best


def gn_ratio(f: VectorField, q: float) -> float:
    """Lorentz-refined Gagliardo-Nirenberg ratio

        ||f||_{L^{2q,2}} / ( ||f||_2^theta ||grad f||_2^{1-theta} ),

    theta = 3/(2q) - 1/2, for q in (3/2, 3).  Scale-invariant: dilating f
    leaves the ratio unchanged, and the interpolation inequality says it is
    bounded by an absolute constant.
    """
    if not 1.5 < q < 3.0:
        raise ValueError(f"gn_ratio needs q in (3/2, 3), got {q}")
    theta = 1.5 / q - 0.5
    spec_f = to_spectral(f)
    l2 = l2_norm_spectral(spec_f)
    dl2 = grad_l2_norm(spec_f)
    if l2 == 0.0 or dl2 == 0.0:
        raise ValueError("gn_ratio undefined for fields with zero norm")
    numer = lorentz_norm(f, LorentzSpec(2.0 * q, 2.0))
    return float(numer / (l2**theta * dl2 ** (1.0 - theta)))
