import math

import numpy as np
import pytest
from scipy.special import roots_hermite

import fluxmod.twoqubit as tq
from fluxmod.errors import DomainError
from fluxmod.modulation import ModulationSpec
from fluxmod.noise import NoiseSpec
from fluxmod.twoqubit import (
    DecoherenceConfig,
    ProcessMatrix,
    TwoQubitSystem,
    asymptotic_fidelity,
    average_fidelity,
    coherent_noise_average,
    effective_coupling,
    evolve_density_matrix,
    evolve_process,
    gate_decoherence_config,
    gate_frequencies,
    gate_time,
    ideal_ptm,
    lambda_weight,
)

TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def sys5(dev5):
    return TwoQubitSystem(fixed_f=TWO_PI * 4.0e9, fixed_eta=TWO_PI * 0.2e9,
                          tunable=dev5, g=TWO_PI * 7e6)


class TestGateFrequencies:
    def test_small_amplitude_values(self, sys5):
        gf = gate_frequencies(sys5, 0.0, 1e-4)
        assert gf.f_cz02 == pytest.approx(0.45e9, rel=2e-3)
        assert gf.f_cz20 == pytest.approx(0.65e9, rel=2e-3)
        assert gf.f_iswap == pytest.approx(0.55e9, rel=2e-3)
        assert gf.f_cz02_2nd == 2 * gf.f_cz02

    def test_monotone_decrease_toward_sweet_spot(self, sys5):
        grid = np.linspace(0.02, 0.6, 9)
        c02 = [gate_frequencies(sys5, 0.0, float(p)).f_cz02 for p in grid]
        c20 = [gate_frequencies(sys5, 0.0, float(p)).f_cz20 for p in grid]
        isw = [gate_frequencies(sys5, 0.0, float(p)).f_iswap for p in grid]
        for seq in (c02, c20, isw):
            assert all(a > b for a, b in zip(seq, seq[1:]))


class TestEffectiveCoupling:
    def test_zero_amplitude(self, sys5):
        ec = effective_coupling(sys5, 0.0, 0.0, 0.45e9, numeric=False)
        assert ec.closed_form == 0.0

    def test_bessel_bound(self, sys5):
        bound = math.sqrt(2.0) * sys5.g * 0.5819
        for pac in np.linspace(0.05, 0.75, 12):
            ec = effective_coupling(sys5, 0.0, float(pac), 3e8, numeric=False)
            assert abs(ec.closed_form) <= bound * (1 + 1e-9)

    def test_numeric_matches_closed_form(self, sys5):
        gf = gate_frequencies(sys5, 0.0, 0.4)
        ec = effective_coupling(sys5, 0.0, 0.4, gf.f_cz02)
        assert ec.numeric == pytest.approx(abs(ec.closed_form), rel=0.10)


class TestGateTime:
    def test_values(self, sys5):
        g = TWO_PI * 2.5e6
        assert gate_time(sys5, 0.3, 10e-9, g_eff=g) == pytest.approx(220e-9, rel=1e-6)
        assert gate_time(sys5, 0.3, 0.0, g_eff=g) == pytest.approx(math.pi / g, rel=1e-12)
        assert gate_time(sys5, 0.3, 0.0, g_eff=2 * g) == pytest.approx(
            0.5 * math.pi / g, rel=1e-12
        )

    def test_degenerate(self, sys5):
        with pytest.raises(DomainError):
            gate_time(sys5, 0.3, 0.0, g_eff=0.0)


class TestLindbladClosedForms:
    def test_relaxation(self, dev5):
        sysd = TwoQubitSystem(fixed_f=TWO_PI * 4.0e9, fixed_eta=TWO_PI * 0.2e9,
                              tunable=dev5, g=0.0, gamma1_f=2e6)
        rho0 = np.zeros((9, 9), complex)
        rho0[3, 3] = 1.0  # fixed qubit excited
        ts = np.linspace(0.0, 4e-7, 5)
        mod = ModulationSpec(0.0, 0.0, 1e8, t_f=1e-6)
        traj = evolve_density_matrix(sysd, mod, DecoherenceConfig(), rho0, ts, rtol=1e-11)
        for t, rho in zip(ts, traj):
            assert np.real(rho[3, 3]) == pytest.approx(math.exp(-2e6 * t), abs=1e-8)

    def test_pure_dephasing(self, dev5):
        sysp = TwoQubitSystem(fixed_f=TWO_PI * 4.0e9, fixed_eta=TWO_PI * 0.2e9,
                              tunable=dev5, g=0.0, gammaphi_f=2e6)
        rho0 = np.zeros((9, 9), complex)
        rho0[0, 0] = rho0[3, 3] = 0.5
        rho0[0, 3] = rho0[3, 0] = 0.5
        ts = np.linspace(0.0, 2e-7, 5)
        mod = ModulationSpec(0.0, 0.0, 1e8, t_f=1e-6)
        traj = evolve_density_matrix(sysp, mod, DecoherenceConfig(), rho0, ts, rtol=1e-11)
        for t, rho in zip(ts, traj):
            assert abs(rho[0, 3]) / 0.5 == pytest.approx(math.exp(-2e6 * t), abs=1e-8)

    def test_trace_and_positivity_under_modulation(self, sys5):
        rng = np.random.default_rng(3)
        v = rng.standard_normal((9, 2)) @ np.array([[1], [1j]])
        v = v.ravel()
        rho0 = np.outer(v, v.conj())
        rho0 /= np.trace(rho0)
        mod = ModulationSpec(0.0, 0.3, 3e8, t_ramp=5e-9, t_f=4e-8)
        ts = np.linspace(0.0, 4e-8, 5)
        traj = evolve_density_matrix(sys5, mod, None, rho0, ts, rtol=1e-10)
        for rho in traj:
            assert abs(np.trace(rho) - 1.0) < 1e-8
            eig = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
            assert eig.min() > -1e-8


class TestProcessAndFidelity:
    def test_identity_process(self, dev5):
        sys0 = TwoQubitSystem(fixed_f=TWO_PI * 4.0e9, fixed_eta=TWO_PI * 0.2e9,
                              tunable=dev5, g=0.0)
        proc = evolve_process(sys0, ModulationSpec(0.0, 0.0, 3e8, t_f=5e-8), None)
        res = average_fidelity(proc, "identity")
        assert res.fidelity == pytest.approx(1.0, abs=1e-6)
        assert proc.leakage < 1e-6
        assert np.allclose(proc.entries[0], np.eye(16)[0], atol=1e-6)

    def test_identity_vs_cz_no_optimization(self):
        # Tr of the CZ transfer matrix by brute-force Pauli enumeration
        cz = np.diag([1, 1, 1, -1]).astype(complex)
        tr = sum(
            0.25 * np.real(np.trace(p @ cz @ p @ cz.conj().T)) for p in tq.PAULI2
        )
        proc = ProcessMatrix(entries=np.eye(16))
        res = average_fidelity(proc, "CZ02", optimize=False)
        assert res.fidelity == pytest.approx((tr + 4.0) / 20.0, abs=1e-12)
        assert res.fidelity == pytest.approx(0.4, abs=1e-12)

    def test_depolarizing_closed_form(self):
        # uniformly attenuated process: fidelity 1 - p d/(d+1)
        for p in (0.05, 0.2, 0.5):
            proc = ProcessMatrix(entries=(1 - p) * ideal_ptm("CZ02"))
            res = average_fidelity(proc, "CZ02", optimize=False)
            assert res.fidelity == pytest.approx(1.0 - 0.8 * p, abs=1e-12)

    def test_ideal_process_perfect(self):
        for gate in ("CZ02", "CZ20", "iSWAP", "identity"):
            proc = ProcessMatrix(entries=ideal_ptm(gate))
            assert average_fidelity(proc, gate, optimize=False).fidelity == pytest.approx(
                1.0, abs=1e-12
            )

    def test_optimizer_undoes_z_rotations(self):
        rng = np.random.default_rng(4)
        for _ in range(3):
            a, b = rng.uniform(0, 2 * np.pi, 2)
            rz = np.kron(np.diag([1, np.exp(1j * a)]), np.diag([1, np.exp(1j * b)]))
            u = rz @ np.diag([1, 1, 1, -1]).astype(complex)
            r = np.empty((16, 16))
            for j, pj in enumerate(tq.PAULI2):
                upu = u @ pj @ u.conj().T
                for i, pi in enumerate(tq.PAULI2):
                    r[i, j] = 0.25 * np.real(np.trace(pi @ upu))
            res = average_fidelity(ProcessMatrix(entries=r), "CZ02")
            assert res.fidelity == pytest.approx(1.0, abs=1e-6)

    def test_unknown_gate(self):
        with pytest.raises(DomainError):
            ideal_ptm("CNOT")


class TestLambdaWeight:
    def test_near_one_for_transmon_devices(self, dev4, dev5):
        for dev in (dev4, dev5):
            lam = lambda_weight(dev)
            assert abs(lam - 1.0) < 0.02

    def test_decoherence_config_guard(self):
        with pytest.raises(DomainError):
            DecoherenceConfig(lambda_qutrit=1.5)
        with pytest.raises(DomainError):
            DecoherenceConfig(gammaphi_w=-1.0)


class TestAsymptoticFidelity:
    def test_direct_evaluation(self):
        # direct evaluation of 1 - (61/80) (t/T)^beta
        val = asymptotic_fidelity(0.18e-6, 18e-6, 1.9, "CZ02")
        assert val == pytest.approx(1.0 - (61.0 / 80.0) * 0.01**1.9, rel=1e-12)

    def test_gate_ratio_exact(self):
        i02 = 1.0 - asymptotic_fidelity(0.18e-6, 18e-6, 1.9, "CZ02")
        i20 = 1.0 - asymptotic_fidelity(0.18e-6, 18e-6, 1.9, "CZ20")
        assert i02 / i20 == pytest.approx(61.0 / 29.0, rel=1e-12)

    def test_zero_gate_time(self):
        assert asymptotic_fidelity(0.0, 18e-6, 1.9, "CZ02") == 1.0

    def test_regime_guard(self):
        with pytest.raises(DomainError):
            asymptotic_fidelity(4e-6, 18e-6, 1.9, "CZ02")


class TestHarness:
    def test_trajectory_propagator_matches_expm_oracle(self):
        # brute-force oracle: per-step scipy matrix exponentials of the full
        # ideal Hamiltonian on identical piecewise-constant noise windows
        from scipy.linalg import expm

        rng = np.random.default_rng(8)
        dt = 12.5e-9
        g = TWO_PI * 5e6
        t_cz = math.pi / g
        n_steps = int(math.ceil(t_cz / dt))
        windows = 2e4 * rng.standard_normal((3, n_steps + 2))
        eta_ratio = -0.003
        for gate, partner in (("CZ02", 2), ("CZ20", 6)):
            e_fast = tq._trajectory_ptms(windows, dt, g, t_cz, gate, eta_ratio)
            steps = np.full(n_steps, dt)
            steps[-1] = t_cz - (n_steps - 1) * dt
            e_ref = np.zeros((4, 4, 4, 4), complex)
            for traj in windows:
                u = np.eye(9, dtype=complex)
                for k in range(n_steps):
                    dw = traj[k]
                    h = np.zeros((9, 9), dtype=complex)
                    h[1, 1] = dw
                    h[4, 4] = dw
                    if gate == "CZ02":
                        h[2, 2] = (2.0 - eta_ratio) * dw
                    h[4, partner] = g
                    h[partner, 4] = g
                    u = expm(-1j * h * steps[k]) @ u
                uc = u[np.ix_((0, 1, 3, 4), (0, 1, 3, 4))]
                e_ref += np.einsum("ca,db->abcd", uc, uc.conj())
            e_ref /= len(windows)
            assert np.max(np.abs(e_fast - e_ref)) < 1e-9

    def test_noise_calibration_roundtrip(self):
        # the rescaled windows reproduce gamma(t) = (t/T_phi)^beta exactly at
        # the calibration time (Gaussian identity gamma = Var[phase]/2) and to
        # infrared-limited accuracy at half that time; the long-window Ramsey
        # fit at the calibrated amplitude recovers the target pair
        t_phi, beta = 18e-6, 1.9
        windows, dt, fit = tq._calibrated_freq_noise(t_phi, beta, 4096, 0.5e-6, seed=3)
        k_star = windows.shape[1] - 2
        phase = np.cumsum(windows, axis=1) * dt
        gamma_star = 0.5 * float(np.var(phase[:, k_star - 1]))
        assert gamma_star == pytest.approx((k_star * dt / t_phi) ** beta, rel=1e-9)
        k_half = k_star // 2
        gamma_half = 0.5 * float(np.var(phase[:, k_half - 1]))
        assert gamma_half == pytest.approx((k_half * dt / t_phi) ** beta, rel=0.35)
        assert fit.gamma == pytest.approx(1.0 / t_phi, rel=0.30)
        assert fit.beta == pytest.approx(beta, abs=0.20)

    def test_quasi_static_oracle_bounds(self, dev4):
        # Gauss-Hermite static-detuning oracle; the synthesized noise also
        # carries intra-gate dynamics, so agreement is to a factor, not exact
        t_phi = 18e-6
        gamma = 1.0 / t_phi
        g = TWO_PI * 8e6
        t = math.pi / g

        def oracle(gate):
            x, w = roots_hermite(61)
            deltas = x * 2.0 * gamma
            wts = w / math.sqrt(math.pi)
            e_units = np.zeros((4, 4, 4, 4), complex)
            for dlt, wt in zip(deltas, wts):
                h11, h22 = (dlt, 2.0 * dlt) if gate == "CZ02" else (dlt, 0.0)
                davg, dd = 0.5 * (h11 + h22), 0.5 * (h11 - h22)
                om = math.hypot(dd, g)
                ph = np.exp(-1j * davg * t)
                u11 = ph * (math.cos(om * t) - 1j * dd * math.sin(om * t) / om)
                uc = np.diag([1.0, np.exp(-1j * dlt * t), 1.0, u11]).astype(complex)
                e_units += wt * np.einsum("ca,db->abcd", uc, uc.conj())
            ptm = tq._ptm_from_comp_superop(e_units)
            return average_fidelity(ProcessMatrix(entries=ptm), gate).fidelity

        pts = coherent_noise_average(dev4, t_phi, 2.0, 3e8, [g], n_traj=2048, seed=11)
        for p in pts:
            ref_infid = 1.0 - oracle(p.gate)
            got_infid = 1.0 - p.f_avg_coherent
            assert 0.5 < got_infid / ref_infid < 2.0

    def test_zero_noise_gives_perfect_gate(self):
        # trajectory machinery with silent windows must return an exact CZ
        dt = 12.5e-9
        g = TWO_PI * 5e6
        t_cz = math.pi / g
        windows = np.zeros((2, int(math.ceil(t_cz / dt)) + 2))
        for gate in ("CZ02", "CZ20"):
            e_units = tq._trajectory_ptms(windows, dt, g, t_cz, gate, 0.0)
            ptm = tq._ptm_from_comp_superop(e_units)
            res = average_fidelity(ProcessMatrix(entries=ptm), gate)
            assert res.fidelity == pytest.approx(1.0, abs=1e-9)

    def test_me_below_average_and_close(self, dev4):
        g = TWO_PI * 5e6
        pts = coherent_noise_average(dev4, 18e-6, 1.9, 3e8, [g], n_traj=768, seed=5)
        for p in pts:
            assert p.f_me <= p.f_avg_coherent
            assert abs(p.f_me - p.f_avg_coherent) < 2e-3
            assert p.f_me == pytest.approx(p.f_asymptotic, abs=2e-4)


class TestDecoherenceBridge:
    def test_rates_flow_from_noise_spec(self, dev5):
        noise = NoiseSpec(a_dc_pink=3.63e-6, a_ac_pink=3.63e-6,
                          a_dc_white=1e-8, a_ac_white=1e-8)
        dec = gate_decoherence_config(dev5, 0.0, 0.3, 3.25e8, noise, 300e-9)
        assert dec.gammaphi_w > 0
        assert dec.gammaphi_pink > 0
        assert dec.beta == 2.0
        assert 0.9 <= dec.lambda_qutrit <= 1.1
        filt = NoiseSpec(a_dc_white=1e-8, a_ac_white=1e-8, lowpass_cutoff=1.5 * 3.25e8)
        dec_f = gate_decoherence_config(dev5, 0.0, 0.3, 3.25e8, filt, 300e-9)
        assert dec_f.gammaphi_w < dec.gammaphi_w
