"""Binary snapshot format and JSON trajectory manifests.

A snapshot file stores one vector field:

    magic           4 bytes  b"PSLF"
    version         u32      currently 1
    n1, n2, n3      u32 x 3  grid points per axis
    box_length      f64
    representation  u8       0 = spectral, 1 = physical
    time            f64
    payload         3 * n1*n2*n3 pairs (re, im) of f64, row-major

Everything is little-endian.  Spectral payloads hold the *full* complex
cube (coefficients of exp(i kappa.x) for every index triple), so files are
self-contained and layout-agnostic even though the in-memory spectral
representation keeps only the non-negative half of the last axis.  On read,
spectral data is checked for Hermitian symmetry before being reduced back
to the half-spectrum layout; physical data must have vanishing imaginary
parts.

A trajectory is a JSON manifest listing uniformly spaced snapshot files.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import GridMismatchError, RepresentationError
from .picard import Trajectory
from .spectral import PHYSICAL, SPECTRAL, Grid3, VectorField

__all__ = [
    "FORMAT_VERSION",
    "full_from_rfft",
    "rfft_from_full",
    "write_snapshot",
    "read_snapshot",
    "save_trajectory",
    "load_trajectory",
]

MAGIC = b"PSLF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIIdBd")
HERMITIAN_TOL = 1e-12


def _mirror(grid: Grid3, full: np.ndarray) -> np.ndarray:
    """conj(full) evaluated at the negated index triple, axis by axis."""
    neg = (-np.arange(grid.n)) % grid.n
    return np.conj(full[:, neg][:, :, neg][:, :, :, neg])


def full_from_rfft(grid: Grid3, half: np.ndarray) -> np.ndarray:
    """Expand half-spectrum data (3, n, n, n//2+1) to the full complex cube."""
    n, nr = grid.n, grid.nr
    if half.shape != (3, *grid.spectral_shape):
        raise RepresentationError(
            f"expected half-spectrum shape {(3, *grid.spectral_shape)}, got {half.shape}"
        )
    full = np.zeros((3, n, n, n), dtype=np.complex128)
    full[..., :nr] = half
    neg = (-np.arange(n)) % n
    tail = np.conj(half[:, neg][:, :, neg][..., 1 : n // 2])
    full[..., nr:] = tail[..., ::-1]
    return full


def rfft_from_full(grid: Grid3, full: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Reduce a full complex cube to half-spectrum layout.

    Raises RepresentationError when the cube is not Hermitian symmetric to
    within `tol` relative to its largest coefficient (such data would not
    describe a real-valued field).
    """
    if full.shape != (3, grid.n, grid.n, grid.n):
        raise RepresentationError(
            f"expected full-spectrum shape {(3, grid.n, grid.n, grid.n)}, got {full.shape}"
        )
    scale = max(float(np.max(np.abs(full))), 1.0)
    defect = float(np.max(np.abs(full - _mirror(grid, full))))
    if defect > tol * scale:
        raise RepresentationError(
            f"spectral data violates Hermitian symmetry: defect {defect:.3e} "
            f"exceeds {tol:.1e} * {scale:.3e}"
        )
    return np.ascontiguousarray(full[..., : grid.nr])


def write_snapshot(field: VectorField, path) -> Path:
    """Serialize one field to `path`, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = field.grid
    if field.is_spectral:
        flag = 0
        cube = full_from_rfft(grid, field.data)
    else:
        flag = 1
        cube = field.data.astype(np.complex128)
    payload = np.empty((3, grid.n, grid.n, grid.n, 2), dtype="<f8")
    payload[..., 0] = cube.real
    payload[..., 1] = cube.imag
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, grid.n, grid.n, grid.n,
        grid.box_length, flag, field.time,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())
    return path


def read_snapshot(path, expected_grid: Grid3 | None = None) -> VectorField:
    """Load a snapshot written by `write_snapshot`, validating the header."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise RepresentationError(f"{path}: truncated header")
    magic, version, n1, n2, n3, box_length, flag, time = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise RepresentationError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise RepresentationError(
            f"{path}: unsupported format version {version} (expected {FORMAT_VERSION})"
        )
    if not (n1 == n2 == n3):
        raise RepresentationError(f"{path}: non-cubic grid {n1}x{n2}x{n3}")
    if flag not in (0, 1):
        raise RepresentationError(f"{path}: unknown representation flag {flag}")
    grid = Grid3(int(n1), float(box_length))
    if expected_grid is not None and grid != expected_grid:
        raise GridMismatchError(
            f"{path}: snapshot grid (n={grid.n}, L={grid.box_length}) does not "
            f"match expected (n={expected_grid.n}, L={expected_grid.box_length})"
        )
    expected_bytes = _HEADER.size + 3 * n1 * n2 * n3 * 2 * 8
    if len(raw) != expected_bytes:
        raise RepresentationError(
            f"{path}: payload has {len(raw)} bytes, expected {expected_bytes}"
        )
    flat = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    pairs = flat.reshape(3, n1, n2, n3, 2)
    cube = pairs[..., 0] + 1j * pairs[..., 1]
    if flag == 0:
        data = rfft_from_full(grid, cube)
        return VectorField(grid, SPECTRAL, data, float(time))
    imag_peak = float(np.max(np.abs(cube.imag)))
    scale = max(float(np.max(np.abs(cube.real))), 1.0)
    if imag_peak > HERMITIAN_TOL * scale:
        raise RepresentationError(
            f"{path}: physical payload has imaginary parts up to {imag_peak:.3e}"
        )
    return VectorField(grid, PHYSICAL, np.ascontiguousarray(cube.real), float(time))


def save_trajectory(traj: Trajectory, directory, stem: str = "snap") -> Path:
    """Write every node of `traj` plus a manifest.json; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for j in range(traj.steps + 1):
        name = f"{stem}_{j:05d}.pslf"
        write_snapshot(traj.snapshot(j), directory / name)
        names.append(name)
    manifest = {
        "format": "nslab-trajectory",
        "version": FORMAT_VERSION,
        "label": traj.label,
        "n": traj.grid.n,
        "box_length": traj.grid.box_length,
        "steps": traj.steps,
        "time_horizon": traj.horizon,
        "snapshots": names,
    }
    manifest_path = directory / "manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest_path


def load_trajectory(manifest_path) -> Trajectory:
    """Rebuild a Trajectory from a manifest written by `save_trajectory`."""
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "manifest.json"
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("format") != "nslab-trajectory":
        raise RepresentationError(f"{manifest_path}: not a trajectory manifest")
    if manifest.get("version") != FORMAT_VERSION:
        raise RepresentationError(
            f"{manifest_path}: unsupported manifest version {manifest.get('version')}"
        )
    grid = Grid3(int(manifest["n"]), float(manifest["box_length"]))
    names = manifest["snapshots"]
    if len(names) != int(manifest["steps"]) + 1:
        raise RepresentationError(
            f"{manifest_path}: lists {len(names)} snapshots for {manifest['steps']} steps"
        )
    fields = [read_snapshot(manifest_path.parent / name, grid) for name in names]
    return Trajectory.from_snapshots(fields, label=manifest.get("label", ""))
