import json

import pytest

from fluxmod.cli import run


def invoke(*argv):
    return run(list(argv))


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), lines[1:]


class TestBasicCommands:
    def test_calibrate(self, tmp_path):
        out = tmp_path / "cal"
        assert invoke("calibrate", "--out", str(out)) == 0
        payload = json.loads((out / "params.json").read_text())
        assert payload["e_c_hz"] > 0
        assert abs(payload["roundtrip_rel_err"]["f_max"]) < 1e-6
        run_meta = json.loads((out / "run.json").read_text())
        assert run_meta["command"] == "calibrate"
        assert run_meta["config"]["device"]["f_max_hz"] == 5.1e9

    def test_calibrate_from_energies(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "device": {"e_c_hz": 0.185e9, "e_j1_hz": 15.7e9, "e_j2_hz": 3.2e9}
        }))
        out = tmp_path / "cal2"
        assert invoke("calibrate", "--out", str(out), "--config", str(cfg)) == 0

    def test_spectrum_and_fourier(self, tmp_path):
        out = tmp_path / "s"
        assert invoke("spectrum", "--out", str(out)) == 0
        header, rows = read_csv(out / "band.csv")
        assert header == ["phi_dc_phi0", "f_hz"]
        assert len(rows) == 241
        assert invoke("fourier", "--out", str(out)) == 0
        header, rows = read_csv(out / "fourier.csv")
        assert header == ["phi_ac_phi0", "f_avg_hz", "ddc_k1_radps_per_phi0",
                          "dac_k0_radps_per_phi0"]

    def test_sweet_spot(self, tmp_path):
        out = tmp_path / "ss"
        assert invoke("sweet-spot", "--out", str(out)) == 0
        payload = json.loads((out / "sweet_spot.json").read_text())
        assert 0.58 <= payload["phi_ac_star_phi0"] <= 0.64

    def test_noise_outputs(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"noise_gen": {"dt_s": 1e-6, "n_samples": 2**14,
                                                 "psd_segments": 4}}))
        out = tmp_path / "n"
        assert invoke("noise-gen", "--out", str(out), "--config", str(cfg)) == 0
        header, _ = read_csv(out / "white_trace.csv")
        assert header == ["t_s", "dphi_phi0"]
        assert invoke("noise-psd", "--out", str(out), "--config", str(cfg)) == 0
        for name in ("white_psd.csv", "pink_psd.csv", "total_psd.csv"):
            header, _ = read_csv(out / name)
            assert header == ["f_hz", "psd_phi0sq_per_hz"]


class TestDephasingCommand:
    def test_analytic_sweep_and_clamp(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sweep": {"start_phi0": 0.0, "stop_phi0": 0.4,
                                             "points": 3}}))
        out = tmp_path / "d"
        assert invoke("dephasing", "--mode", "analytic", "--noise", "pink",
                      "--out", str(out), "--config", str(cfg)) == 0
        header, rows = read_csv(out / "dephasing.csv")
        assert header == ["phi_ac_phi0", "tphi_pink_s", "tphi_white_s",
                          "tphi_white_lp_s", "beta", "mode"]
        first = rows[0].split(",")
        assert float(first[1]) == 10.0  # parked point clamps at the sentinel
        flags = json.loads((out / "dephasing_flags.json").read_text())
        assert 0.0 in flags["clamped_phi_ac_phi0"]

    def test_mc_smoke_deterministic(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "sweep": {"start_phi0": 0.3, "stop_phi0": 0.3, "points": 1},
            "mc": {"n_windows": 24},
        }))
        out1, out2 = tmp_path / "m1", tmp_path / "m2"
        for out in (out1, out2):
            assert invoke("dephasing", "--mode", "mc", "--noise", "pink",
                          "--out", str(out), "--config", str(cfg), "--seed", "5") == 0
        assert (out1 / "dephasing.csv").read_bytes() == (out2 / "dephasing.csv").read_bytes()


class TestGateCommands:
    def test_gate_freqs(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sweep": {"start_phi0": 0.05, "stop_phi0": 0.6,
                                             "points": 4}}))
        out = tmp_path / "g"
        assert invoke("gate-freqs", "--out", str(out), "--config", str(cfg)) == 0
        header, rows = read_csv(out / "gate_freqs.csv")
        assert header[0] == "phi_ac_phi0"
        assert len(rows) == 4
        first = rows[0].split(",")
        assert float(first[1]) == pytest.approx(0.447e9, rel=0.01)

    @pytest.mark.slow
    def test_gate_fidelity_single_point(self, tmp_path):
        # strong coupling keeps the calibration probes short
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "twoqubit": {"g_hz": 3.0e7, "t_ramp_s": 5e-9},
            "sweep": {"start_phi0": 0.45, "stop_phi0": 0.45, "points": 1},
            "noise": {"a_dc_white_phi0_per_sqrthz": 2e-8,
                      "a_ac_white_phi0_per_sqrthz": 2e-8},
        }))
        out = tmp_path / "gf"
        assert invoke("gate-fidelity", "--out", str(out), "--config", str(cfg)) == 0
        header, rows = read_csv(out / "gate_fidelity.csv")
        assert header == ["phi_ac_phi0", "f_m_hz", "geff_hz", "tcz_s", "infidelity",
                          "infidelity_nodecoherence", "leakage"]
        vals = dict(zip(header, map(float, rows[0].split(","))))
        assert 0 < vals["infidelity_nodecoherence"] < vals["infidelity"] < 0.1
        assert vals["geff_hz"] > 5e6

    def test_appendix_c_smoke(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"appendix": {"points": 2, "n_traj": 128,
                                                "geff_min_hz": 4e6,
                                                "geff_max_hz": 1e7}}))
        out = tmp_path / "ac"
        assert invoke("appendix-c", "--out", str(out), "--config", str(cfg)) == 0
        header, rows = read_csv(out / "appendix_c.csv")
        assert header == ["tcz_over_tphi", "f_me", "f_avg_coherent",
                          "f_asymptotic", "gate"]
        assert len(rows) == 4  # two gates per grid point


class TestErrors:
    def test_config_error_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"device": {"f_max_hz": 1.0}}))
        code = invoke("calibrate", "--out", str(tmp_path / "x"), "--config", str(cfg))
        assert code == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "ConfigError"
        assert err["exit_code"] == 2

    def test_ambiguous_device_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"device": {"f_max_hz": 5e9, "f_min_hz": 4e9,
                                              "eta0_hz": 2e8, "e_c_hz": 2e8}}))
        assert invoke("calibrate", "--out", str(tmp_path / "x"),
                      "--config", str(cfg)) == 2
        capsys.readouterr()

    def test_domain_error_exit_3(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "modulation": {"phi_dc_phi0": 0.3},
            "bracket_phi0": [0.01, 0.02],
        }))
        code = invoke("sweet-spot", "--out", str(tmp_path / "x"), "--config", str(cfg))
        assert code == 3
        err = json.loads(capsys.readouterr().err)
        assert err["exit_code"] == 3

    def test_unreadable_config_exit_2(self, tmp_path, capsys):
        code = invoke("calibrate", "--out", str(tmp_path / "x"),
                      "--config", str(tmp_path / "missing.json"))
        assert code == 2
        capsys.readouterr()
