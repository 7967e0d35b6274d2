"""Initial data generators.

Every generator returns a spectral, divergence-free, mean-zero field.
Solenoidality is exact by construction where possible (Taylor-Green is
band-limited; the bump is a spectral curl, so k . (k x psi) = 0 mode by
mode) and restored by Leray projection otherwise (the swirl profile and
the localization cutoff are not band-limited, so sampling introduces an
aliasing-level defect that the projection removes).
"""

from __future__ import annotations

import numpy as np

from .spectral import (
    Ball,
    Grid3,
    PHYSICAL,
    SPECTRAL,
    VectorField,
    l2_norm_spectral,
    leray_project,
    to_physical,
    to_spectral,
)

__all__ = [
    "taylor_green",
    "solenoidal_bump",
    "weak_l3_profile",
    "localize",
    "localize_with_correction",
]

# Bump envelope: the vector potential is a Gaussian of width SHARPNESS * R,
# chosen so that both the real-space tail beyond 1.1 R and the spectral tail
# beyond the grid's band limit are negligible for resolvable R.
SHARPNESS = 0.15

# Amplitude compensation for the axial swirl: |u| = beta * A * sin(theta) /
# max(r, eps) has exactly the weak-L3 norm A * (4 pi / 3)^{1/3} that the
# isotropic profile A/|x| would have (the sin(theta) factor thins the
# super-level sets; beta re-inflates them).
SWIRL_BETA = (16.0 / (3.0 * np.pi)) ** (1.0 / 3.0)


def _box_center(grid: Grid3):
    half = grid.box_length / 2.0
    return (half, half, half)


def _finalize(grid: Grid3, phys: np.ndarray) -> VectorField:
    """Sample -> spectral -> Leray -> exact zero mean."""
    f = leray_project(to_spectral(VectorField(grid, PHYSICAL, phys)))
    data = f.data.copy()
    data[:, 0, 0, 0] = 0.0
    return VectorField(grid, SPECTRAL, data)


def taylor_green(amplitude: float, grid: Grid3) -> VectorField:
    """A (sin x cos y, -cos x sin y, 0); requires the 2 pi box.

    Band-limited, exactly divergence-free and mean-zero; its nonlinear term
    is a pure gradient, making it an exact-decay fixture for the solver.
    """
    if abs(grid.box_length - 2.0 * np.pi) > 1e-12 * 2.0 * np.pi:
        raise ValueError("taylor_green requires box_length = 2*pi")
    x = grid.axis_coords
    X = x[:, None, None]
    Y = x[None, :, None]
    data = np.zeros((3, *grid.physical_shape))
    data[0] = amplitude * np.sin(X) * np.cos(Y)
    data[1] = -amplitude * np.cos(X) * np.sin(Y)
    return to_spectral(VectorField(grid, PHYSICAL, data))


def solenoidal_bump(center, radius: float, amplitude: float, grid: Grid3) -> VectorField:
    """Curl of a Gaussian vector potential supported in the given ball.

    The potential is a * exp(-r^2 / (2 s^2)) with s = SHARPNESS * radius and
    a generic fixed direction; the curl is taken spectrally, so the result
    is divergence-free to rounding.  The peak speed is normalized to
    `amplitude`.  Supported in the ball up to Gaussian tails.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    if 4.0 * radius > grid.box_length:
        raise ValueError(
            f"ball of radius {radius} does not fit with margin >= radius "
            f"in a box of side {grid.box_length}"
        )
    r = grid.radial_distance(center)
    s = SHARPNESS * radius
    envelope = np.exp(-(r**2) / (2.0 * s**2))
    axis = np.array([0.36, 0.48, 0.80])
    psi = np.stack([a * envelope for a in axis])
    psi_hat = to_spectral(VectorField(grid, PHYSICAL, psi)).data
    kx, ky, kz = grid.k_deriv
    curl = np.empty_like(psi_hat)
    curl[0] = 1j * (ky * psi_hat[2] - kz * psi_hat[1])
    curl[1] = 1j * (kz * psi_hat[0] - kx * psi_hat[2])
    curl[2] = 1j * (kx * psi_hat[1] - ky * psi_hat[0])
    curl[:, 0, 0, 0] = 0.0
    phys = to_physical(VectorField(grid, SPECTRAL, curl)).data
    peak = float(np.sqrt(np.max(np.sum(phys**2, axis=0))))
    if peak == 0.0:
        return VectorField(grid, SPECTRAL, curl)
    return VectorField(grid, SPECTRAL, curl * (amplitude / peak))


def weak_l3_profile(
    epsilon: float, amplitude: float, grid: Grid3, center=None
) -> VectorField:
    """Divergence-free field with |u| ~ amplitude / max(|x - c|, epsilon).

    An axial swirl G(r) (e_z x (x - c)) is exactly solenoidal for any radial
    G; here G = SWIRL_BETA * amplitude / max(r, epsilon)^2, smoothly cut off
    beyond L/4, which reproduces the weak-L3 norm of the isotropic
    |x|^{-1} profile, amplitude * (4 pi / 3)^{1/3}.  Inside the
    mollification radius the speed tapers linearly (solid-body core).
    Sampling then Leray projection restores exact solenoidality on the grid.
    """
    if epsilon < 2.0 * grid.spacing:
        raise ValueError(
            f"mollification scale {epsilon} below the resolvable 2h = "
            f"{2.0 * grid.spacing}"
        )
    if center is None:
        center = _box_center(grid)
    c = np.asarray(center, dtype=float)
    r = grid.radial_distance(center)
    r0 = grid.box_length / 4.0
    g = SWIRL_BETA * amplitude / np.maximum(r, epsilon) ** 2
    g *= _bridge((r0 - r) / (r0 / 4.0))
    x = grid.axis_coords
    dx = _min_image(x - c[0], grid.box_length)[:, None, None]
    dy = _min_image(x - c[1], grid.box_length)[None, :, None]
    phys = np.empty((3, *grid.physical_shape))
    phys[0] = -g * dy
    phys[1] = g * dx
    phys[2] = 0.0
    return _finalize(grid, phys)


def _min_image(d: np.ndarray, L: float) -> np.ndarray:
    return (d + L / 2.0) % L - L / 2.0


def _bridge(s: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for s <= 0, 1 for s >= 1, strictly rising between."""
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        lo = np.where(s > 0.0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
        hi = np.where(s < 1.0, np.exp(-1.0 / np.maximum(1.0 - s, 1e-300)), 0.0)
    return lo / (lo + hi)


def localize_with_correction(u0: VectorField, ball: Ball) -> tuple[VectorField, float]:
    """Cutoff to the ball plus Leray repair; returns (field, correction norm).

    The cutoff is 1 on the inner 3/4 of the ball and falls to 0 at its
    boundary over a transition width radius/4.  Multiplying by the cutoff
    breaks solenoidality, so the result is re-projected; the L2 size of
    that projection correction is returned alongside (it vanishes when u0
    is already supported in the plateau region).
    """
    ball.validate_for(u0.grid)
    grid = u0.grid
    w = ball.radius / 4.0
    chi = _bridge((ball.radius - grid.radial_distance(ball.center)) / w)
    cut = to_physical(u0).data * chi
    out = _finalize(grid, cut)
    cut_hat = to_spectral(VectorField(grid, PHYSICAL, cut))
    diff = VectorField(grid, SPECTRAL, out.data - cut_hat.data)
    return out, l2_norm_spectral(diff)


def localize(u0: VectorField, ball: Ball) -> VectorField:
    return localize_with_correction(u0, ball)[0]
