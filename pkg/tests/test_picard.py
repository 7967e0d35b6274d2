"""Tests for trajectories, the Duhamel operator, and Picard iterates.

The Duhamel recurrence is checked against a closed-form oracle: for
constant-in-time single-mode inputs the integral per output mode k is
F_k (1 - exp(-|k|^2 t)) / |k|^2 with F_k assembled by hand from the
projected divergence of the tensor product.
"""

import numpy as np
import pytest

from nslab.errors import GridMismatchError
from nslab.picard import (
    Trajectory,
    bilinear_B,
    picard_ladder,
    picard_step,
    splitting_residual,
)
from nslab.spectral import (
    PHYSICAL,
    SPECTRAL,
    Grid3,
    VectorField,
    divergence_defect,
    l2_norm_spectral,
    to_physical,
)

from conftest import TWO_PI, random_solenoidal


def constant_trajectory(grid, spec_data, T, M, label=""):
    times = np.linspace(0.0, T, M + 1)
    block = np.broadcast_to(spec_data, (M + 1, *spec_data.shape)).copy()
    return Trajectory(grid, times, block, label)


def cosine_mode(grid, kvec, amp):
    """Real field amp * 2 cos(k.x) as a half-spectrum array."""
    data = np.zeros((3, *grid.spectral_shape), dtype=complex)
    i, j, k = kvec
    n = grid.n
    data[:, i % n, j % n, k] = amp
    if k % (n // 2) == 0:
        # mirror lives inside the stored kz plane
        data[:, (-i) % n, (-j) % n, k] += np.conj(amp)
    return data


def sup_magnitude(field):
    phys = to_physical(field)
    return float(np.max(np.sqrt(np.sum(phys.data**2, axis=0))))


def kato_infinity(traj):
    """sup over positive nodes of sqrt(t) * ||.||_inf (independent helper)."""
    vals = [
        np.sqrt(traj.times[j]) * sup_magnitude(traj.snapshot(j))
        for j in range(1, traj.steps + 1)
    ]
    return max(vals)


class TestTrajectory:
    def test_rejects_non_uniform_times(self, grid8):
        times = np.array([0.0, 0.1, 0.3])
        data = np.zeros((3, 3, *grid8.spectral_shape), dtype=complex)
        with pytest.raises(ValueError, match="uniform"):
            Trajectory(grid8, times, data)

    def test_rejects_nonzero_start(self, grid8):
        times = np.array([0.1, 0.2, 0.3])
        data = np.zeros((3, 3, *grid8.spectral_shape), dtype=complex)
        with pytest.raises(ValueError, match="t = 0"):
            Trajectory(grid8, times, data)

    def test_snapshot_and_node_lookup(self, grid8):
        times = np.linspace(0.0, 1.0, 5)
        data = np.zeros((5, 3, *grid8.spectral_shape), dtype=complex)
        traj = Trajectory(grid8, times, data, label="z")
        snap = traj.snapshot(2)
        assert snap.time == pytest.approx(0.5)
        assert snap.representation == SPECTRAL
        assert traj.node_index(0.75) == 3
        with pytest.raises(ValueError, match="not a node"):
            traj.node_index(0.33)

    def test_from_snapshots(self, grid8):
        fields = [
            VectorField(grid8, SPECTRAL,
                        np.full((3, *grid8.spectral_shape), j, dtype=complex),
                        time=0.5 * j)
            for j in range(3)
        ]
        traj = Trajectory.from_snapshots(fields, label="s")
        assert traj.steps == 2
        assert traj.horizon == pytest.approx(1.0)
        assert traj.data[1, 0, 0, 0, 0] == 1.0


class TestBilinearOracle:
    def test_two_mode_closed_form(self, grid16):
        T, M = 0.5, 512
        k1 = np.array([1, 0, 0])
        k2 = np.array([0, 0, 1])
        a = np.array([0.0, 1.0, 0.5])
        b = np.array([0.3, 0.0, -0.7])
        f = constant_trajectory(grid16, cosine_mode(grid16, k1, a), T, M, "f")
        g = constant_trajectory(grid16, cosine_mode(grid16, k2, b), T, M, "g")
        result = bilinear_B(f, g)

        def oracle(kout, t):
            k = kout.astype(float)
            k2n = k @ k
            # coefficient of the tensor product at kout is a (x) b for every
            # sign combination of the two cosine inputs
            div = 1j * a * (b @ k)
            proj = div - k * (k @ div) / k2n
            return proj * (1.0 - np.exp(-k2n * t)) / k2n

        checks = 0
        for kout in (k1 + k2, k1 - k2, -k1 + k2):
            if kout[2] < 0:
                continue
            pos = (kout[0] % 16, kout[1] % 16, kout[2])
            for j in (1, 7, 128, 512):
                t = result.times[j]
                got = result.data[j][:, pos[0], pos[1], pos[2]]
                want = oracle(kout, t)
                assert np.max(np.abs(got - want)) <= 1e-8 * max(np.max(np.abs(want)), 1e-30)
                checks += 1
        assert checks >= 8

    def test_vanishes_at_zero_and_solenoidal(self, grid16):
        u0 = random_solenoidal(grid16, seed=30)
        p0 = picard_ladder(u0, 0, 0.5, 16)[0]
        b = bilinear_B(p0, p0)
        assert np.max(np.abs(b.data[0])) == 0.0
        assert divergence_defect(b.snapshot(8)) <= 1e-12

    def test_homogeneity_exact(self, grid8):
        u0 = random_solenoidal(grid8, seed=31)
        p0 = picard_ladder(u0, 0, 0.4, 8)[0]
        doubled = Trajectory(grid8, p0.times, 2.0 * p0.data, "2f")
        b1 = bilinear_B(p0, p0)
        b2 = bilinear_B(doubled, doubled)
        assert np.max(np.abs(b2.data - 4.0 * b1.data)) <= 1e-14 * np.max(np.abs(b1.data))

    def test_additivity(self, grid8):
        ua = random_solenoidal(grid8, seed=32)
        ub = random_solenoidal(grid8, seed=33)
        pa = picard_ladder(ua, 0, 0.4, 8)[0]
        pb = picard_ladder(ub, 0, 0.4, 8)[0]
        psum = Trajectory(grid8, pa.times, pa.data + pb.data, "sum")
        lhs = bilinear_B(psum, pa)
        rhs = bilinear_B(pa, pa).data + bilinear_B(pb, pa).data
        assert np.max(np.abs(lhs.data - rhs)) <= 1e-12 * np.max(np.abs(rhs))

    def test_self_convergence_second_order(self, grid16):
        u0 = random_solenoidal(grid16, seed=34, amplitude=0.5)
        T = 0.5
        finals = {}
        for M in (32, 64, 128, 256):
            p0 = picard_ladder(u0, 0, T, M)[0]
            finals[M] = bilinear_B(p0, p0).data[-1]
        errs = [
            np.max(np.abs(finals[M] - finals[2 * M])) for M in (32, 64, 128)
        ]
        orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert all(o >= 1.8 for o in orders), orders

    def test_incompatible_inputs(self, grid8, grid16):
        ua = random_solenoidal(grid8, seed=35)
        ub = random_solenoidal(grid16, seed=36)
        pa = picard_ladder(ua, 0, 0.4, 8)[0]
        pb = picard_ladder(ub, 0, 0.4, 8)[0]
        with pytest.raises(GridMismatchError):
            bilinear_B(pa, pb)
        pc = picard_ladder(ua, 0, 0.2, 8)[0]
        with pytest.raises(ValueError, match="different times"):
            bilinear_B(pa, pc)


class TestPicardLadder:
    def test_p0_is_exact_heat_flow(self, grid16):
        u0 = random_solenoidal(grid16, seed=40)
        p0 = picard_ladder(u0, 0, 0.5, 8)[0]
        t = p0.times[5]
        want = u0.data * np.exp(-grid16.k2 * t)
        assert np.max(np.abs(p0.data[5] - want)) <= 1e-14 * np.max(np.abs(want))

    def test_rejects_bad_data(self, grid16):
        rng = np.random.default_rng(41)
        raw = VectorField(grid16, PHYSICAL, rng.standard_normal((3, *grid16.physical_shape)))
        with pytest.raises(ValueError, match="divergence-free"):
            picard_ladder(raw, 1, 0.5, 8)
        u0 = random_solenoidal(grid16, seed=42)
        with_mean = u0.data.copy()
        with_mean[:, 0, 0, 0] = 0.5
        bad = VectorField(grid16, SPECTRAL, with_mean)
        with pytest.raises(ValueError, match="zero mean"):
            picard_ladder(bad, 1, 0.5, 8)
        with pytest.raises(ValueError, match="k_max"):
            picard_ladder(u0, -1, 0.5, 8)

    def test_contraction_at_small_amplitude(self, grid16):
        u0 = random_solenoidal(grid16, seed=43)
        T, M = 0.5, 64
        scale = 0.04 / kato_infinity(picard_ladder(u0, 0, T, M)[0])
        small = VectorField(grid16, SPECTRAL, u0.data * scale)
        ladder = picard_ladder(small, 3, T, M)
        dist = []
        for k in range(3):
            diff = Trajectory(grid16, ladder[0].times,
                              ladder[k + 1].data - ladder[k].data)
            dist.append(kato_infinity(diff))
        ratios = [dist[1] / dist[0], dist[2] / dist[1]]
        assert all(r <= 0.5 for r in ratios), ratios


class TestSplittingResidual:
    def test_matches_mild_residual_route(self, grid16):
        # for any trajectory u the bilinear expansion collapses so that
        # the splitting residual equals || u - P0 + B(u,u) ||, giving an
        # independent second route to the same number
        u0 = random_solenoidal(grid16, seed=50, amplitude=0.8)
        T, M = 0.4, 32
        ladder = picard_ladder(u0, 2, T, M)
        v0 = random_solenoidal(grid16, seed=51, amplitude=0.6)
        u = picard_ladder(v0, 1, T, M)[1]  # some mild-solution-like trajectory
        r_split = splitting_residual(u, ladder, k=1, t_index=M)
        buu = bilinear_B(u, u)
        resid = u.data[M] - ladder[0].data[M] + buu.data[M]
        g = grid16
        r_direct = float(
            np.sqrt(g.box_length**3 * np.sum(g.spectral_weights * np.abs(resid) ** 2))
        )
        assert r_split == pytest.approx(r_direct, rel=1e-9, abs=1e-15)

    def test_small_for_converged_iterate(self, grid16):
        # a high iterate of small data is nearly a mild solution, so its
        # splitting residual should sit far below the field scale
        u0 = random_solenoidal(grid16, seed=52)
        T, M = 0.5, 32
        scale = 0.04 / kato_infinity(picard_ladder(u0, 0, T, M)[0])
        small = VectorField(grid16, SPECTRAL, u0.data * scale)
        ladder = picard_ladder(small, 4, T, M)
        u = ladder[4]
        r = splitting_residual(u, ladder, k=0, t_index=M)
        assert r <= 1e-3 * l2_norm_spectral(u.snapshot(M))

    def test_index_validation(self, grid16):
        u0 = random_solenoidal(grid16, seed=53)
        ladder = picard_ladder(u0, 1, 0.4, 8)
        with pytest.raises(ValueError, match="picards up to"):
            splitting_residual(ladder[0], ladder, k=1, t_index=4)
