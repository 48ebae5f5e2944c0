import numpy as np
import pytest

import qcmd.classical as cl
import qcmd._verlet_py as vpy
from qcmd.errors import SingularApproach, SupportViolation
from qcmd.potential import (
    Harmonic,
    PairInteraction,
    PotentialSpec,
    Zero,
    dimer_relative_spec,
)
from qcmd.quantum import PacketSpec
from qcmd.wigner import TestFunction

HARMONIC = PotentialSpec(1, "flat", Harmonic((1.0,)))
FREE = PotentialSpec(1, "flat", Zero())


def dimer_spec(c=1.0, guard=1e-8):
    return PotentialSpec(
        6, "nuclear", Zero(), (PairInteraction(0, 1, c),), guard_radius=guard
    )


def head_on(p, separation=1.2):
    x = np.array([[0.0, 0.0, -separation / 2, 0.0, 0.0, separation / 2]])
    mom = np.array([[0.0, 0.0, p, 0.0, 0.0, -p]])
    return cl.Ensemble(x, mom, np.array([1.0]))


def pair_distance(ens):
    return float(np.linalg.norm(ens.x[0, :3] - ens.x[0, 3:]))


def refine_min(ts, rs):
    """Vertex of the parabola through the three samples around the minimum."""
    i = int(np.argmin(rs))
    r0, r1, r2 = rs[i - 1], rs[i], rs[i + 1]
    denom = r0 - 2.0 * r1 + r2
    return r1 - 0.125 * (r0 - r2) ** 2 / denom


class TestSampling:
    def test_delta_mode(self):
        ens = cl.sample_initial(PacketSpec((0.0,), (1.0,)), "delta")
        assert len(ens) == 1
        assert ens.x[0, 0] == 0.0 and ens.p[0, 0] == 1.0 and ens.w[0] == 1.0

    def test_husimi_cloud_statistics(self):
        pk = PacketSpec((0.5,), (1.0,))
        ens = cl.sample_initial(pk, "husimi", n=10_000, seed=3, eps=0.1)
        sigma = np.sqrt(pk.position_spread(0.1)[0] ** 2 + 0.05)
        assert abs(np.mean(ens.x) - 0.5) <= 3.0 * sigma / 100.0
        assert ens.total_weight == pytest.approx(1.0, abs=1e-12)

    def test_deterministic_given_seed(self):
        pk = PacketSpec((0.0,), (0.0,))
        a = cl.sample_initial(pk, "wigner", n=64, seed=9, eps=0.2)
        b = cl.sample_initial(pk, "wigner", n=64, seed=9, eps=0.2)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.p, b.p)

    def test_gauss_hermite_moments_exact(self):
        pk = PacketSpec((0.3,), (-0.7,))
        ens = cl.sample_initial(pk, "wigner-gh", n=12, seed=0, eps=0.1)
        assert ens.total_weight == pytest.approx(1.0, abs=1e-12)
        assert float(ens.w @ ens.x[:, 0]) == pytest.approx(0.3, abs=1e-12)
        var = float(ens.w @ (ens.x[:, 0] - 0.3) ** 2)
        assert var == pytest.approx(pk.position_spread(0.1)[0] ** 2, rel=1e-10)


class TestIntegrator:
    def test_harmonic_quarter_period(self):
        ens = cl.sample_initial(PacketSpec((0.0,), (1.0,)), "delta")
        out = cl.push_forward(ens, HARMONIC, np.pi / 2, 1e-4)
        assert out.x[0, 0] == pytest.approx(1.0, abs=1e-7)
        assert out.p[0, 0] == pytest.approx(0.0, abs=1e-7)

    def test_free_flight_exact(self):
        ens = cl.Ensemble(np.array([[0.25]]), np.array([[1.5]]), np.array([1.0]))
        out = cl.push_forward(ens, FREE, 2.0, 1e-2)
        assert out.x[0, 0] == pytest.approx(0.25 + 3.0, abs=1e-12)

    def test_coulomb_turning_radius_and_energy(self):
        spec = dimer_spec(1.0)
        ens = head_on(1.0)
        e0 = float(cl.particle_energy(ens, spec)[0])
        r_star = 1.0 / e0  # closed form: both particles at rest at turning
        times = np.arange(0.0, 1.0, 2e-3)
        snaps = cl.trajectory(ens, spec, times, 1e-3, eta=0.02)
        rs = np.array([pair_distance(s) for s in snaps])
        assert rs.min() < 0.6  # the encounter actually happened
        r_min = refine_min(times, rs)
        assert abs(r_min - r_star) / r_star <= 1e-6
        energies = np.array([float(cl.particle_energy(s, spec)[0]) for s in snaps])
        assert np.max(np.abs(energies - e0)) / abs(e0) <= 1e-6

    def test_push_forward_identity_at_T0(self):
        ens = cl.sample_initial(PacketSpec((0.1,), (0.2,)), "delta")
        assert cl.push_forward(ens, HARMONIC, 0.0, 1e-3) is ens

    def test_reversibility(self):
        pk = PacketSpec((0.4,), (0.8,))
        ens = cl.sample_initial(pk, "wigner", n=32, seed=1, eps=0.2)
        fwd = cl.push_forward(ens, HARMONIC, 1.0, 1e-3)
        back = cl.push_forward(fwd, HARMONIC, -1.0, 1e-3)
        assert np.max(np.abs(back.x - ens.x)) <= 1e-6
        assert np.max(np.abs(back.p - ens.p)) <= 1e-6

    def test_weight_conservation_exact(self):
        pk = PacketSpec((0.4,), (0.8,))
        ens = cl.sample_initial(pk, "husimi", n=128, seed=2, eps=0.2)
        out = cl.push_forward(ens, HARMONIC, 0.7, 1e-3)
        assert np.array_equal(out.w, ens.w)
        assert abs(out.total_weight - 1.0) <= 1e-12

    def test_per_particle_energy_conservation(self):
        spec = dimer_spec(0.8)
        rng = np.random.default_rng(8)
        x = rng.normal(scale=1.0, size=(16, 6))
        x[:, 2] -= 1.0
        x[:, 5] += 1.0
        p = rng.normal(scale=0.4, size=(16, 6))
        ens = cl.Ensemble(x, p, np.full(16, 1.0 / 16))
        e0 = cl.particle_energy(ens, spec)
        out = cl.push_forward(ens, spec, 1.0, 1e-3, eta=0.02)
        e1 = cl.particle_energy(out, spec)
        assert np.max(np.abs(e1 - e0) / np.abs(e0)) <= 1e-6

    def test_singular_approach_raises_and_drop_records(self):
        spec = dimer_spec(1.0, guard=0.5)  # wide guard so a head-on hit is reachable
        ens = head_on(2.0)  # energy 4/1.2 + ... turning would be at ~0.23 < guard
        with pytest.raises(SingularApproach):
            cl.push_forward(ens, spec, 1.0, 1e-3)
        out = cl.push_forward(ens, spec, 1.0, 1e-3, on_singular="drop")
        assert len(out) == 0
        assert out.dropped_weight == pytest.approx(1.0)

    def test_symplectic_ring_area(self):
        # ring of particles in phase space: enclosed area preserved over a period
        n = 256
        theta = np.linspace(0, 2 * np.pi, n, endpoint=False)
        x = (1.0 + 0.3 * np.cos(theta))[:, None]
        p = (0.3 * np.sin(theta))[:, None]
        ens = cl.Ensemble(x, p, np.full(n, 1.0 / n))
        out = cl.push_forward(ens, HARMONIC, 2 * np.pi, 1e-3)

        def shoelace(ens):
            xs, ps = ens.x[:, 0], ens.p[:, 0]
            return 0.5 * abs(np.sum(xs * np.roll(ps, -1) - np.roll(xs, -1) * ps))

        assert shoelace(out) == pytest.approx(shoelace(ens), rel=1e-4)

    def test_backend_parity(self):
        if cl.BACKEND != "compiled":
            pytest.skip("compiled backend unavailable")
        spec = dimer_spec(1.0)
        ens = head_on(1.0)
        layout, code, sparams, pair_idx, pair_c, cmax = cl._encode_spec(spec)
        xc, pc = ens.x.copy(), ens.p.copy()
        sc = np.zeros(1, dtype=np.int64)
        from qcmd import _verlet

        _verlet.advance(xc, pc, sc, 0.5, 1e-3, 0.05, spec.guard_radius,
                        layout, code, sparams, pair_idx, pair_c, cmax)
        xp, pp = ens.x.copy(), ens.p.copy()
        sp = np.zeros(1, dtype=np.int64)
        vpy.advance(xp, pp, sp, 0.5, 1e-3, 0.05, spec.guard_radius,
                    layout, code, sparams, pair_idx, pair_c, cmax)
        assert np.max(np.abs(xc - xp)) <= 1e-12
        assert np.max(np.abs(pc - pp)) <= 1e-12


class TestMeasure:
    def test_single_particle_exact(self):
        ens = cl.sample_initial(PacketSpec((0.3,), (0.6,)), "delta")
        phi = TestFunction((0.1,), (0.5,), (1.0,), (1.0,), amplitude=2.0)
        expected = float(phi.value(np.array([[0.3]]), np.array([[0.6]]))[0])
        assert cl.measure_pair(ens, phi) == pytest.approx(expected, rel=1e-14)

    def test_wide_probe_near_constant(self):
        pk = PacketSpec((0.0,), (0.0,))
        ens = cl.sample_initial(pk, "husimi", n=4000, seed=5, eps=0.1)
        phi = TestFunction((0.0,), (0.0,), (60.0,), (60.0,), amplitude=1.3)
        assert cl.measure_pair(ens, phi) == pytest.approx(1.3, rel=1e-3)

    def test_against_binned_density_oracle(self):
        pk = PacketSpec((0.0,), (0.5,))
        ens = cl.sample_initial(pk, "wigner", n=10_000, seed=6, eps=0.2)
        phi = TestFunction((0.1,), (0.4,), (0.8,), (0.8,))
        direct = cl.measure_pair(ens, phi)
        # oracle: histogram the empirical measure, then quadrature phi
        bins = 60
        H, xe, pe = np.histogram2d(
            ens.x[:, 0], ens.p[:, 0], bins=bins,
            range=[[-1.5, 1.5], [-1.0, 2.0]], weights=ens.w,
        )
        xc = 0.5 * (xe[:-1] + xe[1:])
        pc = 0.5 * (pe[:-1] + pe[1:])
        X, P = np.meshgrid(xc, pc, indexing="ij")
        binned = float(
            np.sum(H * phi.value(np.stack([X], -1), np.stack([P], -1)))
        )
        assert direct == pytest.approx(binned, rel=2e-3)


class TestLiouvilleResidual:
    def make_snaps(self, spec, pk, T=1.0, nsnap=1001, dt=1e-3, mode="delta", n=1, eps=None):
        ens = cl.sample_initial(pk, mode, n=n, seed=0, eps=eps)
        times = np.linspace(0.0, T, nsnap)
        return cl.trajectory(ens, spec, times, dt)

    def test_harmonic_delta_residual_small(self):
        snaps = self.make_snaps(HARMONIC, PacketSpec((0.0,), (1.0,)))
        phi = TestFunction((0.5,), (0.5,), (0.8,), (0.8,), window=(0.1, 0.9))
        assert cl.liouville_residual(snaps, HARMONIC, phi) <= 1e-4

    def test_zero_probe(self):
        snaps = self.make_snaps(HARMONIC, PacketSpec((0.0,), (1.0,)), nsnap=101)
        phi = TestFunction((0.5,), (0.5,), (0.8,), (0.8,), amplitude=0.0, window=(0.1, 0.9))
        assert cl.liouville_residual(snaps, HARMONIC, phi) == 0.0

    def test_stationary_point(self):
        snaps = self.make_snaps(HARMONIC, PacketSpec((0.0,), (0.0,)), nsnap=101)
        phi = TestFunction((0.0,), (0.0,), (1.0,), (1.0,), window=(0.1, 0.9))
        assert cl.liouville_residual(snaps, HARMONIC, phi) <= 1e-10

    def test_at_least_second_order_in_snapshot_spacing(self):
        # trapezoid is nominally second order; with the smooth compactly
        # supported window the boundary terms vanish and the decay is
        # faster, so halving must gain at least the second-order factor
        pk = PacketSpec((0.0,), (1.0,))
        phi = TestFunction((0.5,), (0.5,), (0.8,), (0.8,), window=(0.1, 0.9))
        res = {}
        for nsnap in (126, 251, 501):
            snaps = self.make_snaps(HARMONIC, pk, nsnap=nsnap, dt=2e-4)
            res[nsnap] = cl.liouville_residual(snaps, HARMONIC, phi)
        assert res[501] > 1e-10  # above the integrator floor
        assert res[126] / res[251] >= 3.5
        assert res[251] / res[501] >= 3.5

    def test_window_violation(self):
        snaps = self.make_snaps(HARMONIC, PacketSpec((0.0,), (1.0,)), nsnap=101)
        phi = TestFunction((0.5,), (0.5,), (0.8,), (0.8,), window=(0.5, 1.5))
        with pytest.raises(SupportViolation):
            cl.liouville_residual(snaps, HARMONIC, phi)

    def test_support_near_singular_rejected(self):
        spec = dimer_relative_spec(1.0)
        ens = cl.Ensemble(
            np.array([[0.0, 0.0, 1.5]]), np.array([[0.0, 0.0, 0.2]]), np.array([1.0])
        )
        snaps = cl.trajectory(ens, spec, np.linspace(0, 0.5, 51), 1e-3)
        phi = TestFunction(
            (0.0, 0.0, 0.3), (0.0, 0.0, 0.0), (0.4, 0.4, 0.4), (1.0, 1.0, 1.0),
            window=(0.1, 0.4),
        )
        with pytest.raises(SupportViolation):
            cl.liouville_residual(snaps, spec, phi)
