import numpy as np
import pytest

from spinturnstile.constants import ELEMENTARY_CHARGE, G_NUCLEAR_P31
from spinturnstile.cycle import MeasurementSetting, PulseSchedule, run_cycle
from spinturnstile.experiment import (
    calibrate,
    derive_setting_seed,
    estimate_current,
    propagate_cycles,
    run_sweep,
    sample_cycles,
)
from spinturnstile.model import SpinModelParams, TunnelParams

from oracles import random_density


def quiet_model(**overrides):
    defaults = dict(
        b_field=(0.0, 0.0, 1e-4), g_nuclear=G_NUCLEAR_P31, g_ancilla=2.0,
        exchange=3e5, hyperfine_ancilla=1e5,
    )
    defaults.update(overrides)
    return SpinModelParams(**defaults)


def quiet_tunnel():
    return TunnelParams(gamma0=1e9, interdot_sq=1e9, detuning=1e14, tau_detect=1e-10, tau_cycle=1e-6)


class TestSampleCycles:
    def test_zero_probability(self):
        rec = sample_cycles(0.0, 1000, seed=1)
        assert rec.n_pulses == 0 and rec.pr_hat == 0.0

    def test_unit_probability(self):
        rec = sample_cycles(1.0, 1000, seed=1)
        assert rec.n_pulses == 1000 and rec.pr_hat == 1.0

    def test_identical_seed_identical_record(self):
        assert sample_cycles(0.37, 10_000, seed=99) == sample_cycles(0.37, 10_000, seed=99)

    def test_binomial_concentration(self):
        # |pr_hat - pr| < 3 sigma in at least 99 of 100 seeds
        pr, n = 0.3, 10**6
        bound = 3 * np.sqrt(pr * (1 - pr) / n)
        hits = sum(abs(sample_cycles(pr, n, seed=s).pr_hat - pr) < bound for s in range(100))
        assert hits >= 99

    def test_error_scaling_minus_half(self):
        pr = 0.3
        sizes = [10**3, 10**4, 10**5, 10**6]
        errs = []
        for n in sizes:
            errors = [abs(sample_cycles(pr, n, seed=s).pr_hat - pr) for s in range(60)]
            errs.append(np.mean(errors))
        slope = np.polyfit(np.log10(sizes), np.log10(errs), 1)[0]
        assert slope == pytest.approx(-0.5, abs=0.1)

    def test_invalid_probability(self):
        with pytest.raises(ValueError):
            sample_cycles(1.2, 10, seed=0)


class TestEstimateCurrent:
    def test_zero(self):
        rec = sample_cycles(0.0, 10, seed=0)
        assert estimate_current(rec, 1e-6).amperes == 0.0

    def test_unit_probability_value(self):
        rec = sample_cycles(1.0, 10, seed=0)
        assert estimate_current(rec, 1e-6).amperes == pytest.approx(ELEMENTARY_CHARGE / 1e-6)

    def test_halving_period_doubles_current(self):
        rec = sample_cycles(0.4, 10**5, seed=3)
        assert estimate_current(rec, 0.5e-6).amperes == pytest.approx(
            2 * estimate_current(rec, 1e-6).amperes
        )

    def test_linear_in_pr_hat(self):
        a = sample_cycles(0.2, 10**6, seed=5)
        b = sample_cycles(0.4, 10**6, seed=5)
        ia = estimate_current(a, 1e-6).amperes
        ib = estimate_current(b, 1e-6).amperes
        assert ia / a.pr_hat == pytest.approx(ib / b.pr_hat)


class TestCalibrate:
    def test_noiseless_unit_constant(self):
        tau, t_sq = 1e-10, 1e9
        pr = 1.0 * tau * t_sq * (1 + 1.0 * 1.0)
        res = calibrate(pr, 1.0, 1.0, tau, t_sq)
        assert res.c_hat == pytest.approx(1.0, abs=1e-12)
        assert res.residual < 1e-12

    def test_forward_then_inverse_half(self):
        tau, t_sq = 1e-10, 1e9
        pr = 0.5 * tau * t_sq * (1 + 1.0)
        assert pr == pytest.approx(tau * t_sq)
        res = calibrate(pr, 1.0, 1.0, tau, t_sq)
        assert res.c_hat == pytest.approx(0.5, abs=1e-12)

    def test_shot_noise_percent_accuracy(self):
        tau, t_sq, c_true = 1e-10, 1e9, 0.5
        mag = 0.8
        pr = c_true * tau * t_sq * (1 + mag * mag)  # ~0.082
        rec = sample_cycles(pr, 10**6, seed=7)
        res = calibrate(rec.pr_hat, mag, mag, tau, t_sq)
        assert abs(res.c_hat - c_true) / c_true < 0.01

    def test_invalid_magnitudes(self):
        with pytest.raises(ValueError):
            calibrate(0.1, 0.0, 1.0, 1e-10, 1e9)
        with pytest.raises(ValueError):
            calibrate(0.1, 1.0, 1.5, 1e-10, 1e9)


class TestSettingSeeds:
    def test_equal_settings_equal_seed(self):
        a = MeasurementSetting(u_left=(0, 0, 1), u_right=(1, 0, 0), t_interact=1e-6)
        b = MeasurementSetting(u_left=(0, 0, 1), u_right=(1, 0, 0), t_interact=1e-6)
        assert derive_setting_seed(42, a) == derive_setting_seed(42, b)

    def test_different_settings_differ(self):
        a = MeasurementSetting(u_left=(0, 0, 1), u_right=(1, 0, 0), t_interact=1e-6)
        b = MeasurementSetting(u_left=(0, 0, 1), u_right=(0, 1, 0), t_interact=1e-6)
        assert derive_setting_seed(42, a) != derive_setting_seed(42, b)

    def test_master_seed_matters(self):
        a = MeasurementSetting(u_left=(0, 0, 1), u_right=(1, 0, 0), t_interact=1e-6)
        assert derive_setting_seed(1, a) != derive_setting_seed(2, a)


class TestSweep:
    def axes_settings(self, t=4e-6):
        axes = [(1.0, 0, 0), (0, 1.0, 0), (0, 0, 1.0)]
        return [MeasurementSetting(u_left=(0, 0, 1.0), u_right=ax, t_interact=t) for ax in axes]

    def common(self):
        return dict(model=quiet_model(), tunnel=quiet_tunnel(),
                    schedule=PulseSchedule(t_interact=4e-6, tau_detect=1e-10, tau_cycle=1e-6),
                    c=1.0, n_cycles=10_000, seed=123)

    def test_single_point_composes_cycle_and_sampling(self):
        kw = self.common()
        setting = self.axes_settings()[2]
        rows = run_sweep([setting], rho_gate=np.eye(4) / 4, **kw)
        assert len(rows) == 1 and rows[0].status == "ok"
        outcome = run_cycle(kw["model"], kw["tunnel"],
                            PulseSchedule(t_interact=setting.t_interact, tau_detect=1e-10, tau_cycle=1e-6),
                            setting.u_left, setting.u_right, np.eye(4) / 4, 1.0)
        assert rows[0].pr == pytest.approx(outcome.pr_pulse, abs=1e-15)
        expected = sample_cycles(outcome.pr_pulse, 10_000, derive_setting_seed(123, setting))
        assert rows[0].record == expected

    def test_deterministic(self):
        kw = self.common()
        rows1 = run_sweep(self.axes_settings(), rho_gate=np.eye(4) / 4, **kw)
        rows2 = run_sweep(self.axes_settings(), rho_gate=np.eye(4) / 4, **kw)
        assert rows1 == rows2

    def test_permutation_moves_rows_intact(self):
        kw = self.common()
        settings = self.axes_settings()
        rows = run_sweep(settings, rho_gate=np.eye(4) / 4, **kw)
        perm = [2, 0, 1]
        rows_perm = run_sweep([settings[i] for i in perm], rho_gate=np.eye(4) / 4, **kw)
        for new_idx, old_idx in enumerate(perm):
            assert rows_perm[new_idx].setting == rows[old_idx].setting
            assert rows_perm[new_idx].record == rows[old_idx].record
            assert rows_perm[new_idx].pr == rows[old_idx].pr

    def test_zero_time_axis_probes_recover_left_lead(self):
        # at t=0 the ancilla carries u_left unchanged, so the three axis
        # probabilities linearly encode its components
        kw = self.common()
        u_l = np.array([0.48, -0.36, 0.6])
        settings = [
            MeasurementSetting(u_left=tuple(u_l), u_right=ax, t_interact=0.0)
            for ax in [(1.0, 0, 0), (0, 1.0, 0), (0, 0, 1.0)]
        ]
        rows = run_sweep(settings, rho_gate=np.eye(4) / 4, **kw)
        kappa = 2 * kw["c"] * 1e-10 * kw["tunnel"].gamma0
        recovered = np.array([2 * row.pr / kappa - 1.0 for row in rows])
        assert np.allclose(recovered, u_l, atol=1e-12)

    def test_recovers_lead_polarization_at_swap_time(self):
        # exchange-swap transfers the gate-electron polarization onto the
        # ancilla; right-axis probes then read off its components
        j = 3e5
        model = quiet_model(exchange=j, hyperfine_ancilla=0.0, g_ancilla=0.0,
                            g_nuclear=0.0, b_field=(0.0, 0.0, 0.0))
        t_swap = np.pi / (4 * j)
        kw = self.common()
        kw["model"] = model
        u_el = np.array([0.3, -0.5, 0.6])
        from spinturnstile.algebra import bloch_to_density, kron

        rho_gate = kron(bloch_to_density(u_el), np.eye(2) / 2)
        import warnings

        from spinturnstile.cycle import HierarchyWarning

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", HierarchyWarning)
            rows = run_sweep(self.axes_settings(t=t_swap), rho_gate=rho_gate, **kw)
        kappa = 2 * 1.0 * 1e-10 * 1e9
        for row, comp in zip(rows, u_el):
            assert row.pr == pytest.approx(kappa / 2 * (1 + comp), abs=1e-10)

    def test_error_rows_do_not_abort(self):
        kw = self.common()
        kw["c"] = 100.0  # unphysical detection strength: every row fails
        rows = run_sweep(self.axes_settings(), rho_gate=np.eye(4) / 4, **kw)
        assert len(rows) == 3
        assert all(r.status.startswith("error:") for r in rows)
        assert all(r.record is None for r in rows)

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            run_sweep([], rho_gate=np.eye(4) / 4, **self.common())


class TestPropagate:
    def make_instrument(self):
        from spinturnstile.cycle import induced_instrument
        from spinturnstile.model import build_total_hamiltonian

        model = quiet_model()
        h = build_total_hamiltonian(model)
        return induced_instrument([0, 0, 1.0], [1.0, 0, 0], h, 4e-6, 1.0, 1e-10, 1e9)

    def test_deterministic(self):
        inst = self.make_instrument()
        rng = np.random.default_rng(50)
        rho = random_density(rng, 4)
        a = propagate_cycles(inst, rho, 500, seed=7)
        b = propagate_cycles(inst, rho, 500, seed=7)
        assert np.array_equal(a.outcomes, b.outcomes)
        assert a.n_pulses == b.n_pulses

    def test_uninformative_chain_matches_binomial(self):
        # a zero-time instrument has no back-action: the chain is iid and
        # must reproduce the plain binomial draw statistics
        from spinturnstile.cycle import induced_instrument
        from spinturnstile.model import build_total_hamiltonian

        h = build_total_hamiltonian(quiet_model())
        inst = induced_instrument([0, 0, 1.0], [1.0, 0, 0], h, 0.0, 1.0, 1e-10, 1e9)
        pr = inst.pulse_probability(np.eye(4) / 4)
        rec = propagate_cycles(inst, np.eye(4) / 4, 20_000, seed=11)
        assert abs(rec.pr_hat - pr) < 4 * np.sqrt(pr * (1 - pr) / 20_000)

    def test_final_state_valid(self):
        from spinturnstile.algebra import check_density_matrix

        inst = self.make_instrument()
        rec = propagate_cycles(inst, np.eye(4) / 4, 2_000, seed=13)
        check_density_matrix(rec.rho_final, tol=1e-8)
        assert rec.outcomes.shape == (2_000,)
        assert 0 <= rec.pr_hat <= 1
