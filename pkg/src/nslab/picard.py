"""Duhamel integrals and Picard iterates on uniformly sampled trajectories.

The bilinear operator computed here is

    B(f, g)(t) = integral_0^t exp((t-s) Lap) P div(f (x) g)(s) ds,

the Duhamel term of the mild Navier-Stokes formulation, so that the mild
solution satisfies u = P_0 - B(u, u) with P_0 the heat flow of the data.
Per Fourier mode the integral solves dB/dt = -|k|^2 B + F with F the
projected nonlinearity; it is advanced by an exponential recurrence that
treats the stiff factor exactly and interpolates F linearly between nodes
(second order in the node spacing, uniformly in |k|).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError
from .spectral import (
    SPECTRAL,
    Grid3,
    VectorField,
    _leray_raw,
    _nonlinear_div_raw,
    divergence_defect,
    to_spectral,
)

__all__ = ["Trajectory", "bilinear_B", "picard_step", "picard_ladder", "splitting_residual"]

#: below this value of |k|^2 * dt the closed-form quadrature weights lose
#: digits to cancellation and a Taylor series is used instead
_SERIES_THRESHOLD = 1e-4


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Spectral snapshots of a time-dependent field on uniform nodes.

    `data` has shape (M+1, 3, n, n, n//2+1); node j holds the field at
    `times[j]`.  Times start at zero and are uniformly spaced.
    """

    grid: Grid3
    times: np.ndarray
    data: np.ndarray
    label: str = ""

    def __post_init__(self):
        times = np.ascontiguousarray(self.times, dtype=np.float64)
        if times.ndim != 1 or times.size < 2:
            raise ValueError("need at least two time nodes")
        if times[0] != 0.0:
            raise ValueError("trajectories start at t = 0")
        dt = times[1] - times[0]
        if dt <= 0 or np.max(np.abs(np.diff(times) - dt)) > 1e-9 * dt:
            raise ValueError("time nodes must be uniform and increasing")
        arr = np.ascontiguousarray(self.data, dtype=np.complex128)
        expected = (times.size, 3, *self.grid.spectral_shape)
        if arr.shape != expected:
            raise ValueError(f"trajectory data must have shape {expected}, got {arr.shape}")
        if not np.all(np.isfinite(arr.view(np.float64))):
            raise ValueError("trajectory data contains NaN or Inf")
        times.flags.writeable = False
        arr.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "data", arr)

    @property
    def steps(self) -> int:
        return self.times.size - 1

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def snapshot(self, j: int) -> VectorField:
        return VectorField(self.grid, SPECTRAL, self.data[j], float(self.times[j]))

    def node_index(self, t: float) -> int:
        """Index of the node at time `t`; raises if `t` is not a node."""
        j = int(round(t / self.dt))
        if j < 0 or j > self.steps or abs(self.times[j] - t) > 1e-9 * max(self.dt, 1.0):
            raise ValueError(f"t = {t} is not a node of this trajectory")
        return j

    @classmethod
    def from_snapshots(cls, fields: list[VectorField], label: str = "") -> "Trajectory":
        if not fields:
            raise ValueError("no snapshots given")
        grid = fields[0].grid
        specs = [to_spectral(f) for f in fields]
        times = np.array([f.time for f in specs])
        data = np.stack([f.data for f in specs])
        return cls(grid, times, data, label)


def _check_compatible(f: Trajectory, g: Trajectory) -> None:
    if f.grid != g.grid:
        raise GridMismatchError("trajectories live on different grids")
    if f.times.size != g.times.size or np.max(np.abs(f.times - g.times)) > 1e-9 * f.dt:
        raise ValueError("trajectories are sampled at different times")


def _duhamel_weights(grid: Grid3, dt: float):
    """Exponential-trapezoidal weights (decay, w_prev, w_cur) for one step.

    w_prev and w_cur are the exact integrals of the linear interpolation
    basis against exp(-|k|^2 (t-s)) over one step, times dt.  A short Taylor
    series replaces the closed form where |k|^2 dt is small enough for the
    subtraction to cancel catastrophically.
    """
    z = grid.k2 * dt
    small = z < _SERIES_THRESHOLD
    zs = np.where(small, 1.0, z)  # keeps the discarded branch division safe
    em = np.exp(-z)
    w_cur = np.where(
        small,
        0.5 - z / 6.0 + z**2 / 24.0 - z**3 / 120.0,
        (zs - 1.0 + em) / zs**2,
    )
    w_prev = np.where(
        small,
        0.5 - z / 3.0 + z**2 / 8.0 - z**3 / 30.0,
        (1.0 - em * (1.0 + zs)) / zs**2,
    )
    return em, dt * w_prev, dt * w_cur


def _forcing(grid: Grid3, fhat: np.ndarray, ghat: np.ndarray, same: bool) -> np.ndarray:
    """Projected nonlinearity P div(f (x) g) at one node."""
    return _leray_raw(grid, _nonlinear_div_raw(grid, fhat, ghat, same=same))


def bilinear_B(f: Trajectory, g: Trajectory, upto: int | None = None) -> Trajectory:
    """Duhamel integral of the projected tensor nonlinearity of (f, g).

    Returns the trajectory of B(f, g) on the same nodes, through node
    `upto` (default: all of them).  B vanishes at t = 0 and is
    divergence-free at every node.
    """
    _check_compatible(f, g)
    last = f.steps if upto is None else int(upto)
    if not 0 <= last <= f.steps:
        raise ValueError(f"upto must be in [0, {f.steps}]")
    grid = f.grid
    same = f is g
    decay, w_prev, w_cur = _duhamel_weights(grid, f.dt)
    out = np.zeros((last + 1, 3, *grid.spectral_shape), dtype=np.complex128)
    force_prev = _forcing(grid, f.data[0], g.data[0], same)
    acc = np.zeros_like(force_prev)
    for j in range(1, last + 1):
        force_cur = _forcing(grid, f.data[j], g.data[j], same)
        acc = decay * acc + w_prev * force_prev + w_cur * force_cur
        out[j] = acc
        force_prev = force_cur
    label = f"B({f.label or 'f'},{g.label or 'g'})"
    return Trajectory(grid, f.times[: last + 1].copy(), out, label)


def _heat_trajectory(u0: VectorField, times: np.ndarray, label: str) -> Trajectory:
    grid = u0.grid
    data = np.empty((times.size, 3, *grid.spectral_shape), dtype=np.complex128)
    for j, t in enumerate(times):
        data[j] = u0.data * np.exp(-grid.k2 * t)
    return Trajectory(grid, times, data, label)


def picard_step(p0: Trajectory, pk: Trajectory, label: str = "") -> Trajectory:
    """One rung of the ladder: P_{k+1} = P_0 - B(P_k, P_k)."""
    _check_compatible(p0, pk)
    b = bilinear_B(pk, pk)
    data = p0.data - b.data
    return Trajectory(p0.grid, p0.times, data, label or f"picard({pk.label})")


def picard_ladder(u0: VectorField, k_max: int, T: float, M: int) -> list[Trajectory]:
    """Picard iterates [P_0, ..., P_k_max] on M+1 uniform nodes of [0, T].

    P_0 is the exact per-mode heat flow of `u0`; each further iterate adds
    one Duhamel correction.  `u0` must be divergence-free and mean-zero.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    if not (np.isfinite(T) and T > 0):
        raise ValueError("T must be positive")
    if M < 1:
        raise ValueError("M must be >= 1")
    u0 = to_spectral(u0)
    defect = divergence_defect(u0)
    if defect > 1e-8:
        raise ValueError(
            f"initial data is not divergence-free (defect {defect:.2e}); "
            "apply leray_project first"
        )
    scale = np.max(np.abs(u0.data))
    if scale > 0 and np.max(np.abs(u0.data[:, 0, 0, 0])) > 1e-10 * scale:
        raise ValueError("initial data must have zero mean")
    times = np.linspace(0.0, T, M + 1)
    ladder = [_heat_trajectory(u0, times, "P0")]
    for k in range(k_max):
        ladder.append(picard_step(ladder[0], ladder[-1], label=f"P{k + 1}"))
    return ladder


def splitting_residual(u: Trajectory, picards: list[Trajectory], k: int, t_index: int) -> float:
    """L2 norm at node `t_index` of the defect in the separation identity

        P_{k+1} - u = B(u-P_k, u-P_k) + B(u-P_k, P_k) + B(P_k, u-P_k),

    which holds exactly for mild solutions: with d = u - P_k the right side
    telescopes to B(u,u) - B(P_k,P_k) and P_{k+1} = P_0 - B(P_k,P_k).  (The
    difference is sometimes written with the opposite orientation; only the
    absolute size matters downstream.)  For numerical trajectories the
    residual is bounded by the stepper and quadrature errors.
    """
    if k < 0 or k + 1 >= len(picards):
        raise ValueError(f"need picards up to index {k + 1}, got {len(picards)}")
    pk, pk1 = picards[k], picards[k + 1]
    _check_compatible(u, pk)
    if not 0 <= t_index <= u.steps:
        raise ValueError("t_index out of range")
    d = Trajectory(u.grid, u.times, u.data - pk.data, label="d")
    resid = (pk1.data[t_index] - u.data[t_index]).copy()
    resid -= bilinear_B(d, d, upto=t_index).data[t_index]
    resid -= bilinear_B(d, pk, upto=t_index).data[t_index]
    resid -= bilinear_B(pk, d, upto=t_index).data[t_index]
    g = u.grid
    total = np.sum(g.spectral_weights * np.abs(resid) ** 2)
    return float(np.sqrt(g.box_length**3 * total))
