"""Spectral fields on a periodic cube: grids, transforms, and Fourier symbols.

Conventions used throughout the package:

* The domain is the cube [0, L)^3 sampled on an n^3 uniform grid, n a power
  of two.  Cell centers sit at x_i = i * L / n.
* A physical field stores real samples with shape (3, n, n, n).  A spectral
  field stores Fourier amplitudes in half-spectrum (rfft) layout with shape
  (3, n, n, n//2 + 1): the redundant half implied by Hermitian symmetry of
  real data is not kept in memory.  Snapshot files still carry the full
  complex cube, see :mod:`nslab.pslf`.
* Amplitudes are coefficients of exp(i k.x): u(x) = sum_k uhat_k exp(i k.x)
  with k = 2*pi*index/L and integer indices in [-n/2, n/2).
* First-derivative symbols zero the Nyquist index (its sign is ambiguous);
  the heat semigroup uses the full |k|^2 including Nyquist.
* Products are dealiased by the 2/3 rule: modes with any |index| > n//3 are
  dropped before and after multiplication.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as _fft

from .errors import GridMismatchError, RepresentationError

__all__ = [
    "SPECTRAL",
    "PHYSICAL",
    "Grid3",
    "Ball",
    "VectorField",
    "to_spectral",
    "to_physical",
    "leray_project",
    "heat_semigroup",
    "nonlinear_divergence",
    "divergence_defect",
    "l2_norm_spectral",
    "grad_l2_norm",
    "oseen_kernel",
    "oseen_kernel_ratio",
    "oseen_center_magnitude",
]

SPECTRAL = "spectral"
PHYSICAL = "physical"


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid3:
    """Uniform periodic cube grid.

    Parameters
    ----------
    n : int
        Points per axis; must be a power of two (same for all axes).
    box_length : float
        Physical edge length L of the periodic box.
    """

    n: int
    box_length: float

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or not _is_power_of_two(int(self.n)):
            raise ValueError(f"grid size must be a power of two >= 2, got {self.n!r}")
        if not (np.isfinite(self.box_length) and self.box_length > 0):
            raise ValueError(f"box length must be positive and finite, got {self.box_length!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "box_length", float(self.box_length))

    @property
    def spacing(self) -> float:
        return self.box_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @property
    def nr(self) -> int:
        """Length of the (reduced) last spectral axis."""
        return self.n // 2 + 1

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.nr)

    @property
    def physical_shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @cached_property
    def axis_coords(self) -> np.ndarray:
        return np.arange(self.n) * self.spacing

    @cached_property
    def index_full(self) -> np.ndarray:
        """Integer mode indices along a full axis, in [-n/2, n/2)."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)

    @cached_property
    def index_half(self) -> np.ndarray:
        """Integer mode indices along the reduced last axis, 0..n/2."""
        return np.arange(self.nr, dtype=np.int64)

    def _wavenumbers(self, zero_nyquist: bool) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        scale = 2.0 * np.pi / self.box_length
        ix = self.index_full.astype(np.float64)
        iz = self.index_half.astype(np.float64)
        if zero_nyquist:
            ix = np.where(np.abs(self.index_full) == self.n // 2, 0.0, ix)
            iz = np.where(self.index_half == self.n // 2, 0.0, iz)
        kx = (scale * ix).reshape(self.n, 1, 1)
        ky = (scale * ix).reshape(1, self.n, 1)
        kz = (scale * iz).reshape(1, 1, self.nr)
        return kx, ky, kz

    @cached_property
    def k_deriv(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Derivative wavenumbers (kx, ky, kz), Nyquist zeroed, broadcastable."""
        return self._wavenumbers(zero_nyquist=True)

    @cached_property
    def k2(self) -> np.ndarray:
        """|k|^2 including the Nyquist index, shape (n, n, nr)."""
        kx, ky, kz = self._wavenumbers(zero_nyquist=False)
        return kx**2 + ky**2 + kz**2

    @cached_property
    def k2_deriv(self) -> np.ndarray:
        """|k|^2 built from the derivative wavenumbers (Nyquist zeroed)."""
        kx, ky, kz = self.k_deriv
        return kx**2 + ky**2 + kz**2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Boolean 2/3-rule mask on the reduced spectral shape."""
        cut = self.n // 3
        ax = np.abs(self.index_full) <= cut
        az = self.index_half <= cut
        return (
            ax.reshape(self.n, 1, 1)
            & ax.reshape(1, self.n, 1)
            & az.reshape(1, 1, self.nr)
        )

    @cached_property
    def spectral_weights(self) -> np.ndarray:
        """Multiplicity of each stored mode in the full spectrum (1 or 2).

        Modes with 0 < kz-index < n/2 stand for a conjugate pair; the kz = 0
        and kz = n/2 planes are their own mirror images.
        """
        w = np.full(self.spectral_shape, 2.0)
        w[:, :, 0] = 1.0
        w[:, :, -1] = 1.0
        return w

    def radial_distance(self, center) -> np.ndarray:
        """Periodic (minimum-image) distance from each cell center to `center`."""
        c = np.asarray(center, dtype=np.float64)
        if c.shape != (3,):
            raise ValueError("center must be a 3-vector")
        L = self.box_length
        d2 = np.zeros(self.physical_shape)
        shapes = [(self.n, 1, 1), (1, self.n, 1), (1, 1, self.n)]
        for axis in range(3):
            d = np.abs(self.axis_coords - c[axis])
            d = np.minimum(d, L - d)
            d2 = d2 + (d.reshape(shapes[axis])) ** 2
        return np.sqrt(d2)


@dataclass(frozen=True)
class Ball:
    """A ball inside the fundamental domain, used to localize measurements."""

    center: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        if len(c) != 3 or not all(np.isfinite(c)):
            raise ValueError("ball center must be a finite 3-vector")
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    def validate_for(self, grid: Grid3) -> None:
        if self.radius > grid.box_length / 2:
            raise ValueError(
                f"ball radius {self.radius} exceeds half the box length "
                f"{grid.box_length / 2}"
            )

    def mask(self, grid: Grid3) -> np.ndarray:
        """Boolean membership of cell centers, periodic distance."""
        self.validate_for(grid)
        return grid.radial_distance(self.center) <= self.radius

    def label(self) -> str:
        cx, cy, cz = self.center
        return f"ball[{cx:.6g},{cy:.6g},{cz:.6g};r={self.radius:.6g}]"


@dataclass(frozen=True, eq=False)
class VectorField:
    """An immutable 3-component field tied to a grid and a time tag.

    `data` is (3, n, n, n) real for the physical representation and
    (3, n, n, n//2+1) complex for the spectral one (half-spectrum layout).
    """

    grid: Grid3
    representation: str
    data: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if self.representation not in (SPECTRAL, PHYSICAL):
            raise RepresentationError(
                f"unknown representation {self.representation!r}"
            )
        expected = (
            (3, *self.grid.spectral_shape)
            if self.representation == SPECTRAL
            else (3, *self.grid.physical_shape)
        )
        arr = np.asarray(self.data)
        if arr.shape != expected:
            raise ValueError(
                f"{self.representation} data must have shape {expected}, "
                f"got {arr.shape}"
            )
        if self.representation == SPECTRAL:
            arr = np.ascontiguousarray(arr, dtype=np.complex128)
        else:
            if np.iscomplexobj(arr):
                raise ValueError("physical data must be real")
            arr = np.ascontiguousarray(arr, dtype=np.float64)
        if not np.all(np.isfinite(arr.view(np.float64))):
            raise ValueError("field data contains NaN or Inf")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "time", float(self.time))

    @property
    def is_spectral(self) -> bool:
        return self.representation == SPECTRAL

    def with_time(self, t: float) -> "VectorField":
        return VectorField(self.grid, self.representation, self.data, t)


def _require_same_grid(f: VectorField, g: VectorField) -> None:
    if f.grid != g.grid:
        raise GridMismatchError(
            f"grids differ: {f.grid} vs {g.grid}"
        )


def _require_spectral(f: VectorField) -> None:
    if not f.is_spectral:
        raise RepresentationError("operation requires a spectral field")


# ---------------------------------------------------------------------------
# raw-array transform kernels (hot path; no VectorField wrapping)
# ---------------------------------------------------------------------------

def _fwd_raw(grid: Grid3, phys: np.ndarray) -> np.ndarray:
    """rfft of (3, n, n, n) real samples, normalized to mode amplitudes."""
    return _fft.rfftn(phys, axes=(1, 2, 3)) * (1.0 / grid.n**3)


def _inv_raw(grid: Grid3, spec: np.ndarray) -> np.ndarray:
    """Inverse of `_fwd_raw`; returns real samples."""
    return _fft.irfftn(spec * float(grid.n**3), s=grid.physical_shape, axes=(1, 2, 3))


def to_spectral(f: VectorField) -> VectorField:
    if f.is_spectral:
        return f
    return VectorField(f.grid, SPECTRAL, _fwd_raw(f.grid, f.data), f.time)


def to_physical(f: VectorField) -> VectorField:
    if not f.is_spectral:
        return f
    return VectorField(f.grid, PHYSICAL, _inv_raw(f.grid, f.data), f.time)


# ---------------------------------------------------------------------------
# Fourier-symbol operators
# ---------------------------------------------------------------------------

def _leray_raw(grid: Grid3, spec: np.ndarray) -> np.ndarray:
    """Project onto divergence-free fields: uhat -> uhat - k (k.uhat)/|k|^2.

    The mean mode (and pure-Nyquist modes, whose derivative wavenumber is
    zero by convention) pass through unchanged.
    """
    kx, ky, kz = grid.k_deriv
    k2 = grid.k2_deriv
    k2_safe = np.where(k2 == 0.0, 1.0, k2)
    kdotu = kx * spec[0] + ky * spec[1] + kz * spec[2]
    scale = kdotu / k2_safe
    out = np.empty_like(spec)
    out[0] = spec[0] - kx * scale
    out[1] = spec[1] - ky * scale
    out[2] = spec[2] - kz * scale
    return out


def leray_project(f: VectorField) -> VectorField:
    _require_spectral(f)
    return VectorField(f.grid, SPECTRAL, _leray_raw(f.grid, f.data), f.time)


def _heat_raw(grid: Grid3, spec: np.ndarray, t: float) -> np.ndarray:
    return spec * np.exp(-grid.k2 * t)


def heat_semigroup(f: VectorField, t: float) -> VectorField:
    """Apply exp(t*Laplacian) mode by mode; exact for each retained mode."""
    _require_spectral(f)
    if not (np.isfinite(t) and t >= 0.0):
        raise ValueError(f"heat semigroup requires t >= 0, got {t!r}")
    return VectorField(f.grid, SPECTRAL, _heat_raw(f.grid, f.data, t), f.time + t)


def _nonlinear_div_raw(
    grid: Grid3,
    fhat: np.ndarray,
    ghat: np.ndarray,
    same: bool = False,
    fphys: np.ndarray | None = None,
) -> np.ndarray:
    """div(f (x) g) with 2/3-rule dealiasing; output spectral, unprojected.

    Component i of the result is sum_j ik_j * FFT(f_i g_j) with the product
    formed in physical space from mask-truncated inputs.  Pass `same=True`
    when f and g are known to be the same field (halves the transforms);
    `fphys` may carry precomputed dealiased physical samples of `fhat`.
    """
    mask = grid.dealias_mask
    same = same or ghat is fhat
    if fphys is None:
        fphys = _inv_raw(grid, fhat * mask)
    gphys = fphys if same else _inv_raw(grid, ghat * mask)
    kd = grid.k_deriv
    out = np.zeros((3, *grid.spectral_shape), dtype=np.complex128)
    # cache symmetric products when f and g are the same array
    prod_hat: dict[tuple[int, int], np.ndarray] = {}
    norm = 1.0 / grid.n**3
    for i in range(3):
        for j in range(3):
            key = (min(i, j), max(i, j)) if same else (i, j)
            if key not in prod_hat:
                a, b = key
                prod_hat[key] = _fft.rfftn(fphys[a] * gphys[b]) * norm
            out[i] += (1j * kd[j]) * prod_hat[key]
    out *= mask
    return out


def nonlinear_divergence(f: VectorField, g: VectorField) -> VectorField:
    """Spectral divergence of the dealiased tensor product f (x) g.

    The result is *not* Leray-projected; pair with :func:`leray_project`
    to form the Navier-Stokes nonlinearity.
    """
    _require_same_grid(f, g)
    fs = to_spectral(f)
    gs = fs if g is f else to_spectral(g)
    out = _nonlinear_div_raw(f.grid, fs.data, gs.data)
    return VectorField(f.grid, SPECTRAL, out, f.time)


# ---------------------------------------------------------------------------
# diagnostics and Parseval-side norms
# ---------------------------------------------------------------------------

def divergence_defect(f: VectorField) -> float:
    """max_k |k . uhat_k| / max_k |uhat_k|; zero for solenoidal fields."""
    _require_spectral(f)
    kx, ky, kz = f.grid.k_deriv
    div = kx * f.data[0] + ky * f.data[1] + kz * f.data[2]
    scale = float(np.max(np.abs(f.data)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(div))) / scale


def l2_norm_spectral(f: VectorField) -> float:
    """Whole-box L2 norm evaluated via Parseval on the half spectrum."""
    _require_spectral(f)
    g = f.grid
    s = np.sum(g.spectral_weights * (np.abs(f.data) ** 2))
    return float(np.sqrt(g.box_length**3 * s))


def grad_l2_norm(f: VectorField) -> float:
    """L2 norm of the full velocity gradient, sqrt(sum_ij ||d_j u_i||^2)."""
    _require_spectral(f)
    g = f.grid
    s = np.sum(g.spectral_weights * g.k2_deriv * (np.abs(f.data) ** 2))
    return float(np.sqrt(g.box_length**3 * s))


# ---------------------------------------------------------------------------
# Oseen (projected heat) kernel diagnostics
# ---------------------------------------------------------------------------

def _oseen_symbol(grid: Grid3, t: float, i: int, j: int) -> np.ndarray:
    """Half-spectrum symbol of component (i, j) of exp(t*Lap) Leray."""
    kx, ky, kz = grid.k_deriv
    k2 = grid.k2_deriv
    k2_safe = np.where(k2 == 0.0, 1.0, k2)
    kvec = (kx, ky, kz)
    proj = -kvec[i] * kvec[j] / k2_safe
    if i == j:
        proj = proj + 1.0
    return np.exp(-grid.k2 * t) * proj


def oseen_kernel(grid: Grid3, t: float) -> np.ndarray:
    """Synthesize the periodized Oseen kernel K(., t), shape (3, 3, n, n, n).

    The kernel is the inverse transform of exp(-|k|^2 t) (I - k k^T/|k|^2)
    with the continuum normalization 1/L^3 per lattice mode, so for
    sqrt(t) << L it approximates the free-space kernel near the origin.
    """
    if not (np.isfinite(t) and t > 0.0):
        raise ValueError("oseen kernel requires t > 0")
    n3 = float(grid.n**3)
    vol = grid.box_length**3
    out = np.empty((3, 3, *grid.physical_shape))
    for i in range(3):
        for j in range(i, 3):
            sym = _oseen_symbol(grid, t, i, j) * (n3 / vol)
            out[i, j] = _fft.irfftn(sym, s=grid.physical_shape)
            if j != i:
                out[j, i] = out[i, j]
    return out


def _oseen_frob(kernel: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(kernel**2, axis=(0, 1)))


def oseen_kernel_ratio(t: float, grid: Grid3, radius: float | None = None) -> float:
    """max over |x| <= radius of |K(x,t)|_F * (|x| + sqrt(t))^3.

    Bounded in (x, t) when the pointwise decay |K| <~ (|x|+sqrt(t))^-3
    holds; `radius` defaults to L/4 to stay clear of periodic images.
    """
    if radius is None:
        radius = grid.box_length / 4.0
    frob = _oseen_frob(oseen_kernel(grid, t))
    r = grid.radial_distance((0.0, 0.0, 0.0))
    sel = r <= radius
    return float(np.max(frob[sel] * (r[sel] + np.sqrt(t)) ** 3))


def oseen_center_magnitude(grid: Grid3, t: float) -> float:
    """|K(0, t)|_F by direct lattice summation of the symbol (no FFT)."""
    if not (np.isfinite(t) and t > 0.0):
        raise ValueError("requires t > 0")
    w = grid.spectral_weights
    vol = grid.box_length**3
    total = 0.0
    for i in range(3):
        for j in range(i, 3):
            comp = np.sum(w * _oseen_symbol(grid, t, i, j)) / vol
            total += (1.0 if i == j else 2.0) * comp**2
    return float(np.sqrt(total))
