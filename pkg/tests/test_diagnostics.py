import math

import numpy as np
import pytest

from kvnmd.constants import kelvin_to_hartree
from kvnmd.diagnostics import (canonical_reference, kinetic_temperature,
                               kl_divergence, mean_R, mean_energy, relax)
from kvnmd.electronic import PesModel, morse_pes
from kvnmd.errors import FilterBandWarning
from kvnmd.grid import (Basis, KvnState, build_grid, density, encode_gaussian,
                        fourier_R, norm_squared)
from kvnmd.oracles import canonical_sampler
from kvnmd.propagator import LangevinParams, calibrate

MU = 918.0
T_PHYS = kelvin_to_hartree(947.0)
MORSE = dict(de=0.1744, alpha=1.02764, re=1.40201)


def h2_like_pes():
    return morse_pes(**MORSE)


def flat_pes() -> PesModel:
    arr = lambda r: np.asarray(r, float)
    return PesModel(kind="flat", domain=(-math.inf, math.inf),
                    v=lambda r: np.zeros_like(arr(r)),
                    f=lambda r: np.zeros_like(arr(r)),
                    curvature=lambda r: np.zeros_like(arr(r)))


def canonical_state(grid, pes, mu, t):
    rho = canonical_reference(grid, pes, mu, t)
    return KvnState(np.sqrt(rho).astype(complex), Basis.RP, grid)


class TestMeanR:
    def test_symmetric_packet_center(self):
        grid = build_grid(6, 6, (0.0, 4.0), (-10.0, 10.0))
        st = encode_gaussian(grid, 1.7, 0.0, 0.3, 1.5)
        assert abs(mean_R(st) - 1.7) < 0.5 * grid.dR

    def test_canonical_state_matches_metropolis(self):
        grid = build_grid(7, 7, (0.5, 4.5), (-42.5, 42.5))
        st = canonical_state(grid, h2_like_pes(), MU, T_PHYS)
        r, _ = canonical_sampler(h2_like_pes(), MU, T_PHYS, 200_000, 5,
                                 (0.5, 4.5))
        sigma_mc = np.std(r) / math.sqrt(len(r))
        assert abs(mean_R(st) - np.mean(r)) < 3.0 * sigma_mc


class TestKineticTemperature:
    def test_maxwell_packet_reads_back_temperature(self):
        t = kelvin_to_hartree(800.0)
        s_p = math.sqrt(MU * t)
        grid = build_grid(6, 7, (0.0, 4.0), (-8.0 * s_p, 8.0 * s_p))
        st = encode_gaussian(grid, 2.0, 0.0, 0.3, s_p)
        assert kinetic_temperature(st, MU) == pytest.approx(t, rel=5e-3)


class TestCanonicalReference:
    def test_flat_potential_factorizes(self):
        grid = build_grid(5, 6, (0.0, 2.0), (-12.0, 12.0))
        rho = canonical_reference(grid, flat_pes(), 1.0, 2.0)
        marg_r = rho.sum(axis=1) * grid.dP
        marg_p = rho.sum(axis=0) * grid.dR
        # uniform in R, Maxwellian in P, and rank one overall
        np.testing.assert_allclose(marg_r, marg_r[0], rtol=1e-12)
        maxwell = np.exp(-grid.P ** 2 / (2.0 * 1.0 * 2.0))
        maxwell /= maxwell.sum() * grid.dP
        np.testing.assert_allclose(marg_p, maxwell, rtol=1e-12)
        np.testing.assert_allclose(rho, np.outer(marg_r, marg_p), rtol=1e-12)

    def test_position_marginal_is_boltzmann(self):
        grid = build_grid(6, 6, (0.5, 4.5), (-42.5, 42.5))
        pes = h2_like_pes()
        rho = canonical_reference(grid, pes, MU, T_PHYS)
        marg = rho.sum(axis=1) * grid.dP
        boltz = np.exp(-(pes.v(grid.R) - pes.v(grid.R).min()) / T_PHYS)
        boltz /= boltz.sum() * grid.dR
        np.testing.assert_allclose(marg, boltz, rtol=1e-12)

    def test_partition_sum_matches_fine_quadrature(self):
        grid = build_grid(6, 6, (0.5, 4.5), (-42.5, 42.5))
        pes = h2_like_pes()
        v_shift = pes.v(grid.R).min()
        z_grid = np.sum(np.exp(-(grid.P[None, :] ** 2 / (2 * MU)
                                 + pes.v(grid.R)[:, None] - v_shift)
                               / T_PHYS)) * grid.cell
        # the Hamiltonian separates, so the reference is two 1D quadratures
        r_fine = np.linspace(0.5, 4.5, 4096)
        p_fine = np.linspace(-42.5, 42.5, 4096)
        z_fine = (np.trapezoid(np.exp(-(pes.v(r_fine) - v_shift) / T_PHYS),
                               r_fine)
                  * np.trapezoid(np.exp(-p_fine ** 2 / (2 * MU * T_PHYS)),
                                 p_fine))
        assert z_grid == pytest.approx(z_fine, rel=1e-3)
        rho = canonical_reference(grid, pes, MU, T_PHYS)
        assert np.sum(rho) * grid.cell == pytest.approx(1.0, abs=1e-12)

    def test_rejects_nonpositive_temperature(self):
        grid = build_grid(5, 5, (0.0, 2.0), (-5.0, 5.0))
        with pytest.raises(ValueError):
            canonical_reference(grid, flat_pes(), 1.0, 0.0)


class TestKlDivergence:
    def test_self_divergence_is_zero(self):
        grid = build_grid(6, 6, (0.5, 4.5), (-42.5, 42.5))
        rho = canonical_reference(grid, h2_like_pes(), MU, T_PHYS)
        d = kl_divergence(rho, rho, grid.cell)
        assert abs(d) < 1e-12

    def test_offset_gaussians_match_closed_form(self):
        grid = build_grid(7, 7, (-14.0, 14.0), (-14.0, 14.0))
        rho0 = density(encode_gaussian(grid, 0.4, -0.3, 1.0, 1.3))
        rho1 = density(encode_gaussian(grid, -0.5, 0.6, 1.4, 0.9))

        def gauss_kl_1d(m0, s0, m1, s1):
            return (math.log(s1 / s0)
                    + (s0 ** 2 + (m0 - m1) ** 2) / (2.0 * s1 ** 2) - 0.5)

        expected = (gauss_kl_1d(0.4, 1.0, -0.5, 1.4)
                    + gauss_kl_1d(-0.3, 1.3, 0.6, 0.9))
        got = kl_divergence(rho0, rho1, grid.cell)
        assert got == pytest.approx(expected, rel=1e-2)

    def test_nonnegative_on_random_densities(self):
        rng = np.random.default_rng(3)
        cell = 0.01
        for _ in range(5):
            a = rng.random((32, 32))
            b = rng.random((32, 32))
            a /= a.sum() * cell
            b /= b.sum() * cell
            assert kl_divergence(a, b, cell) >= -1e-12

    def test_floor_keeps_disjoint_support_finite(self):
        grid = build_grid(6, 6, (-20.0, 20.0), (-6.0, 6.0))
        rho0 = density(encode_gaussian(grid, -9.0, 0.0, 1.5, 1.0))
        rho1 = density(encode_gaussian(grid, 9.0, 0.0, 1.5, 1.0))
        d = kl_divergence(rho0, rho1, grid.cell)
        assert math.isfinite(d) and d > 10.0

    def test_shape_mismatch_raises(self):
        with pytest.raises(ValueError):
            kl_divergence(np.ones((4, 4)), np.ones((4, 8)), 0.1)


class TestRelax:
    def params(self):
        return calibrate(mu=MU, gamma=0.02, dt=0.5, t_phys=T_PHYS)

    def test_canonical_start_stays_canonical(self):
        grid = build_grid(7, 7, (0.5, 4.5), (-42.5, 42.5))
        pes = h2_like_pes()
        st = canonical_state(grid, pes, MU, T_PHYS)
        trace, _, _ = relax(st, pes, self.params(), 100)
        assert max(trace.d_kl_nats) < 1e-2
        # drift from the stationary point over 100 steps
        assert trace.d_kl_nats[-1] - trace.d_kl_nats[0] < 1e-3

    def test_hot_packet_cools_onto_particle_langevin_curve(self):
        # thermal packet prepared at 3x the bath temperature; reference
        # values are a 1e5-trajectory kick/drift/thermostat ensemble with
        # the same initial density and thermostat setting
        frozen = {40: 1938.644685528531, 200: 1321.9179239680523,
                  400: 991.4071003689835, 600: 958.9673663605878}
        grid = build_grid(7, 7, (0.6, 2.6), (-42.5, 42.5))
        st = encode_gaussian(grid, MORSE["re"], 0.0, 0.1563, 2.8739)
        trace, _, _ = relax(st, h2_like_pes(), self.params(), 600,
                            record_every=20)

        t_kin = np.array(trace.t_kin_kelvin)
        assert np.all(np.diff(t_kin) < 0.0)  # cools at every record
        for step, ref in frozen.items():
            assert t_kin[step // 20] == pytest.approx(ref, rel=0.05)

        assert np.all(np.diff(trace.time_fs) > 0.0)
        assert np.all(t_kin > 0.0)
        d_kl = np.array(trace.d_kl_nats)
        assert np.all(d_kl >= -1e-12)
        assert d_kl[-1] < 0.1 * d_kl[len(d_kl) // 5:].max()
        cum = np.array(trace.cum_success_prob)
        assert np.all(np.diff(cum) <= 0.0) and cum[-1] > 0.0

    def test_frictionless_limit_conserves_energy(self):
        # gamma = 0 and a transparent filter reduce the step to pure
        # transport; params built by hand since calibrate rejects gamma=0
        params = LangevinParams(mu=MU, gamma=0.0, dt=0.2, t_phys=T_PHYS,
                                t_int=T_PHYS, sigma_h=0.0)
        grid = build_grid(7, 7, (0.5, 4.5), (-42.5, 42.5))
        pes = h2_like_pes()
        st = encode_gaussian(grid, 1.8, 0.0, 0.15, 1.66)
        e0 = mean_energy(st, pes, MU)
        trace, final, _ = relax(st, pes, params, 1600)
        assert abs(mean_energy(final, pes, MU) - e0) < 1e-6 * abs(e0)
        assert abs(norm_squared(final) - 1.0) < 1e-12
        swings = np.diff(np.array(trace.t_kin_kelvin))
        assert (swings > 0).any() and (swings < 0).any()  # oscillates

    @pytest.mark.parametrize("phase", [-1.0, 1j, -1j])
    def test_monitors_read_density_only(self, phase):
        # an exact phase rotation leaves every monitor bit-identical
        grid = build_grid(6, 6, (0.6, 2.6), (-22.0, 22.0))
        st = encode_gaussian(grid, 1.5, 0.0, 0.15, 2.5)
        rotated = KvnState(phase * st.amplitudes, st.basis, st.grid)
        pes = h2_like_pes()
        assert mean_R(rotated) == mean_R(st)
        assert kinetic_temperature(rotated, MU) == kinetic_temperature(st, MU)
        assert mean_energy(rotated, pes, MU) == mean_energy(st, pes, MU)
        rho_eq = canonical_reference(grid, pes, MU, T_PHYS)
        assert (kl_divergence(density(rotated), rho_eq, grid.cell)
                == kl_divergence(density(st), rho_eq, grid.cell))

    def test_sign_flip_leaves_trace_bit_identical(self):
        grid = build_grid(6, 6, (0.6, 2.6), (-22.0, 22.0))
        pes = h2_like_pes()
        st = encode_gaussian(grid, 1.5, 0.0, 0.15, 2.5)
        rotated = KvnState(-st.amplitudes, st.basis, st.grid)
        trace_a, _, _ = relax(st, pes, self.params(), 30)
        trace_b, _, _ = relax(rotated, pes, self.params(), 30)
        assert trace_a.mean_r_angstrom == trace_b.mean_r_angstrom
        assert trace_a.t_kin_kelvin == trace_b.t_kin_kelvin
        assert trace_a.d_kl_nats == trace_b.d_kl_nats
        assert trace_a.cum_success_prob == trace_b.cum_success_prob

    @pytest.mark.parametrize("phase", [1j, np.exp(0.3j)])
    def test_generic_phase_leaves_trace_close(self, phase):
        # complex rotations pick up ulp noise inside the FFT kernels, so
        # the evolved traces agree to rounding rather than bitwise
        grid = build_grid(6, 6, (0.6, 2.6), (-22.0, 22.0))
        pes = h2_like_pes()
        st = encode_gaussian(grid, 1.5, 0.0, 0.15, 2.5)
        rotated = KvnState(phase * st.amplitudes, st.basis, st.grid)
        trace_a, _, _ = relax(st, pes, self.params(), 30)
        trace_b, _, _ = relax(rotated, pes, self.params(), 30)
        np.testing.assert_allclose(trace_a.d_kl_nats, trace_b.d_kl_nats,
                                   rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(trace_a.t_kin_kelvin,
                                   trace_b.t_kin_kelvin, rtol=1e-10)

    def test_filter_collapse_truncates_trace(self):
        # a pure momentum-plane-wave sits on one k_P node; tuning the
        # filter zero onto that node kills the whole state in one step
        grid = build_grid(4, 5, (0.0, 2.0), (-8.0, 8.0))
        k_star = grid.k_P_sorted[3 * 32 // 4]
        amps = np.exp(1j * k_star * grid.P)[None, :] * np.ones((16, 1))
        amps = amps / math.sqrt(np.sum(np.abs(amps) ** 2) * grid.cell)
        st = KvnState(amps.astype(complex), Basis.RP, grid)
        params = LangevinParams(mu=MU, gamma=0.0, dt=0.5, t_phys=T_PHYS,
                                t_int=T_PHYS,
                                sigma_h=0.5 * math.pi / abs(k_star))
        with pytest.warns(FilterBandWarning):  # intentionally oversized
            trace, final, _ = relax(st, flat_pes(), params, 50)
        assert trace.collapsed
        assert len(trace) == 1  # only the initial record survives
        assert abs(norm_squared(final) - 1.0) < 1e-12

    def test_record_stride_and_snapshots(self):
        grid = build_grid(6, 6, (0.6, 2.6), (-22.0, 22.0))
        pes = h2_like_pes()
        st = encode_gaussian(grid, 1.5, 0.0, 0.15, 2.5)
        trace, _, snaps = relax(st, pes, self.params(), 10, record_every=3,
                                snapshot_steps=(0, 7))
        assert len(trace) == 5  # steps 0, 3, 6, 9, 10
        assert trace.time_fs == sorted(trace.time_fs)
        assert set(snaps) == {0, 7}
        assert snaps[0].shape == grid.shape
        assert np.sum(snaps[7]) * grid.cell == pytest.approx(1.0, abs=1e-12)

    def test_requires_position_momentum_basis(self):
        grid = build_grid(6, 6, (0.6, 2.6), (-22.0, 22.0))
        st = fourier_R(encode_gaussian(grid, 1.5, 0.0, 0.15, 2.5))
        with pytest.raises(ValueError):
            relax(st, h2_like_pes(), self.params(), 5)
