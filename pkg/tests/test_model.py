import numpy as np
import pytest

from spinturnstile.constants import G_NUCLEAR_P31, MU_B_PER_HBAR
from spinturnstile.model import (
    HierarchyReport,
    SpinModelParams,
    TunnelParams,
    build_ancilla_zeeman,
    build_gate_hamiltonian,
    build_interaction_hamiltonian,
    build_total_hamiltonian,
    characteristic_times,
    effective_exchange,
    gamma_rate,
)

from oracles import hubbard_dimer_exchange


def rand_params(rng):
    return SpinModelParams(
        b_field=tuple(rng.normal(scale=0.01, size=3)),
        g_electron=rng.uniform(-2, 2),
        g_nuclear=rng.uniform(-2e-3, 2e-3),
        g_ancilla=rng.uniform(-2, 2),
        hyperfine_gate=rng.normal(scale=1e7),
        hyperfine_ancilla=rng.normal(scale=1e7),
        exchange=rng.normal(scale=1e7),
        level_offset=rng.normal(scale=1e6),
    )


class TestGateHamiltonian:
    def test_all_zero(self):
        h = build_gate_hamiltonian(SpinModelParams())
        assert np.allclose(h, 0)

    def test_electron_zeeman_spectrum(self):
        bz = 0.004
        p = SpinModelParams(b_field=(0, 0, bz), g_electron=2.0)
        w = np.linalg.eigvalsh(build_gate_hamiltonian(p))
        scale = 2.0 * MU_B_PER_HBAR * bz
        # +/- g mu_B B_z, each 4-fold degenerate
        assert np.allclose(np.sort(w), [-scale] * 4 + [scale] * 4, rtol=1e-12)

    def test_hyperfine_spectrum(self):
        a = 3.7e6
        p = SpinModelParams(hyperfine_gate=a)
        w = np.sort(np.linalg.eigvalsh(build_gate_hamiltonian(p)))
        # singlet/triplet structure of sigma.sigma, doubled by the ancilla
        assert np.allclose(w, [-3 * a] * 2 + [a] * 6, rtol=1e-9)

    def test_exactly_hermitian(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            h = build_gate_hamiltonian(rand_params(rng))
            assert np.array_equal(h, h.conj().T)

    def test_commutes_with_total_sz_for_axial_field(self):
        p = SpinModelParams(b_field=(0, 0, 0.01), g_electron=2.0, g_nuclear=G_NUCLEAR_P31)
        h = build_gate_hamiltonian(p)
        from spinturnstile.algebra import spin_operators

        ops = spin_operators(3)
        total_sz = sum(ops.op(site, "z") for site in range(3))
        comm = h @ total_sz - total_sz @ h
        assert np.abs(comm).max() < 1e-10 * max(1.0, np.abs(h).max())


class TestInteractionHamiltonian:
    def test_zero_couplings(self):
        assert np.allclose(build_interaction_hamiltonian(SpinModelParams()), 0)

    def test_exchange_spectrum(self):
        j = 5.5e6
        p = SpinModelParams(exchange=j)
        w = np.sort(np.linalg.eigvalsh(build_interaction_hamiltonian(p)))
        assert np.allclose(w, [-3 * j] * 2 + [j] * 6, rtol=1e-9)

    def test_hermitian_for_random_params(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            h = build_interaction_hamiltonian(rand_params(rng))
            assert np.array_equal(h, h.conj().T)

    def test_total_includes_ancilla_zeeman_only_when_gate_terms_on(self):
        p = SpinModelParams(b_field=(0, 0, 0.01), g_ancilla=2.0, exchange=1e6)
        full = build_total_hamiltonian(p, include_gate_hamiltonian=True)
        bare = build_total_hamiltonian(p, include_gate_hamiltonian=False)
        assert np.allclose(bare, build_interaction_hamiltonian(p))
        assert np.allclose(full, build_interaction_hamiltonian(p) + build_gate_hamiltonian(p) + build_ancilla_zeeman(p))


class TestEffectiveExchange:
    def test_zero_hopping(self):
        assert effective_exchange(0.0, 0.0) == 0.0

    def test_formula_point(self):
        assert effective_exchange(1.0, 4.0) == pytest.approx(1.0)

    def test_large_scale_point(self):
        assert effective_exchange(1e6, 1e9) == pytest.approx(4e3)

    @pytest.mark.parametrize("t_hop,u_rep", [(1.0, 4.0), (1e6, 1e9), (2.0, 5e3)])
    def test_matches_hubbard_dimer_at_small_t_over_u(self, t_hop, u_rep):
        exact = hubbard_dimer_exchange(t_hop, u_rep)
        approx = effective_exchange(t_hop, u_rep)
        # superexchange is the t << U limit; correction is O((t/U)^2)
        rel = abs(approx - exact) / exact
        assert rel < 10 * (t_hop / u_rep) ** 2 + 1e-12

    def test_invalid_coulomb(self):
        with pytest.raises(ValueError):
            effective_exchange(1.0, 0.0)
        with pytest.raises(ValueError):
            SpinModelParams(hopping=1.0, coulomb_u=0.0)

    def test_params_derive_exchange(self):
        p = SpinModelParams(hopping=1e6, coulomb_u=1e9)
        assert p.exchange_value() == pytest.approx(4e3)
        q = SpinModelParams(hopping=1e6, coulomb_u=1e9, exchange=7.0)
        assert q.exchange_value() == 7.0


class TestGammaRate:
    def test_resonant_value_exact(self):
        tp = TunnelParams(gamma0=1e9, interdot_sq=3.3e8)
        assert gamma_rate(0.0, tp) == 3.3e8

    def test_far_detuned_limit(self):
        g0 = 1e9
        tp = TunnelParams(gamma0=g0, interdot_sq=g0)
        got = gamma_rate(10 * g0, tp)
        limit = g0 * (g0**2 / (10 * g0) ** 2)
        assert abs(got - limit) / limit < 0.01

    def test_half_width_point(self):
        g0 = 2e9
        tp = TunnelParams(gamma0=g0, interdot_sq=g0)
        assert gamma_rate(g0, tp) == pytest.approx(g0 / 2)

    def test_even_and_maximal_at_zero(self):
        tp = TunnelParams(gamma0=1e9, interdot_sq=1e9)
        rng = np.random.default_rng(2)
        peak = gamma_rate(0.0, tp)
        for _ in range(100):
            d = rng.uniform(-1e12, 1e12)
            assert gamma_rate(d, tp) == gamma_rate(-d, tp)
            assert gamma_rate(d, tp) <= peak


class TestCharacteristicTimes:
    def nuclear_only(self):
        return SpinModelParams(b_field=(0, 0, 0.01), g_nuclear=G_NUCLEAR_P31)

    def test_resonant_time_nanosecond(self):
        tp = TunnelParams(gamma0=1e9, interdot_sq=1e9)
        report = characteristic_times(self.nuclear_only(), tp)
        assert report.tau_res == pytest.approx(1e-9)

    def test_nuclear_larmor_megahertz_scale(self):
        tp = TunnelParams(gamma0=1e9, interdot_sq=1e9)
        report = characteristic_times(self.nuclear_only(), tp)
        assert 1e5 <= 1.0 / report.tau_dyn <= 1e7

    def test_non_resonant_ratio(self):
        g0 = 1e9
        tp = TunnelParams(gamma0=g0, interdot_sq=g0, detuning=1000 * g0)
        report = characteristic_times(self.nuclear_only(), tp, delta_off=1000 * g0)
        assert report.tau_non / report.tau_res == pytest.approx(1e6, rel=1e-2)

    def test_monotone_in_detuning(self):
        tp = TunnelParams()
        p = self.nuclear_only()
        taus = [characteristic_times(p, tp, delta_off=d).tau_non for d in (1e10, 1e11, 1e12, 1e13)]
        assert all(a <= b for a, b in zip(taus, taus[1:]))

    def test_zero_hamiltonian_flagged_not_thrown(self):
        report = characteristic_times(SpinModelParams(), TunnelParams())
        assert not report.tau_dyn_finite
        assert not report.satisfied
        assert np.isinf(report.tau_dyn)

    def test_level_offset_does_not_change_tau_dyn(self):
        tp = TunnelParams()
        a = characteristic_times(self.nuclear_only(), tp)
        shifted = SpinModelParams(b_field=(0, 0, 0.01), g_nuclear=G_NUCLEAR_P31, level_offset=1e12)
        b = characteristic_times(shifted, tp)
        assert a.tau_dyn == pytest.approx(b.tau_dyn, rel=1e-12)

    def test_satisfied_definition(self):
        report = characteristic_times(self.nuclear_only(), TunnelParams(), threshold=100.0)
        expect = report.ratio_dyn_res >= 100.0 and report.ratio_non_dyn >= 100.0
        assert report.satisfied == expect
        assert isinstance(report, HierarchyReport)
