import json
import math

import numpy as np
import pytest

from spinorbit_hardy.cli import OUTPUT_DIR_ENV, main, matrix_from_json, matrix_to_json


def run_json(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr().out
    return rc, (json.loads(out) if rc == 0 else None)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def strip_timestamp(text):
    doc = json.loads(text)
    doc.get("manifest", doc).pop("timestamp")
    return doc


class TestPredict:
    def test_optimum(self, capsys):
        rc, doc = run_json(capsys, "predict", "--gamma-deg", "24.9")
        assert rc == 0
        res = doc["result"]
        assert res["hardy"]["P4"] == pytest.approx(0.0902, abs=5e-5)
        assert max(res["hardy"][k] for k in ("P1", "P2", "P3")) <= 1e-12
        assert res["concurrence"] == pytest.approx(math.sin(math.radians(49.8)), abs=1e-10)
        assert doc["manifest"]["command"] == "predict"

    def test_zero_angle(self, capsys):
        _, doc = run_json(capsys, "predict", "--gamma-rad", "0")
        assert doc["result"]["hardy"]["P4"] == 0
        assert doc["result"]["basis"]["L-1"] == 1

    def test_eighth_pi(self, capsys):
        _, doc = run_json(capsys, "predict", "--gamma-deg", "22.5")
        assert doc["result"]["hardy"]["P4"] == pytest.approx(0.0876, abs=5e-5)

    def test_out_of_range(self, capsys):
        assert main(["predict", "--gamma-deg", "91"]) == 2

    def test_angle_required(self):
        with pytest.raises(SystemExit) as info:
            main(["predict"])
        assert info.value.code == 2

    def test_csv(self, capsys):
        assert main(["predict", "--gamma-deg", "24.9", "--format", "csv"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "quantity,value"
        assert any(line.startswith("hardy.P4,") for line in lines)


class TestOptimize:
    def test_matches_predict(self, capsys):
        _, opt = run_json(capsys, "optimize")
        res = opt["result"]
        assert abs(res["gamma_deg"] - 24.9) <= 0.05
        assert res["abs_difference"] <= 1e-6
        _, pred = run_json(capsys, "predict", "--gamma-rad", repr(res["gamma_rad"]))
        assert abs(pred["result"]["hardy"]["P4"] - res["p_star"]) <= 1e-9


class TestSimulate:
    def test_ideal(self, capsys, tmp_path):
        cfg = write(tmp_path, "cfg.json", json.dumps({"gamma_deg": 24.9, "seed": 3}))
        rc, doc = run_json(capsys, "simulate", cfg)
        assert rc == 0
        res = doc["result"]
        assert abs(res["n_tot"] - 12000) < 600
        assert res["violated"] and res["n_sigmas"] >= 7
        assert doc["manifest"]["seed"] == 3

    def test_figure_override(self, capsys, tmp_path):
        noise = {"override_frequencies": {"P1": 0.021, "P2": 0.010, "P3": 0.0045, "P4": 0.074}}
        cfg = write(tmp_path, "cfg.json", json.dumps({"gamma_deg": 24.9, "noise": noise}))
        _, doc = run_json(capsys, "simulate", cfg, "--seed", "1")
        assert doc["result"]["n_sigmas"] >= 7

    def test_zero_window(self, capsys, tmp_path):
        cfg = write(tmp_path, "cfg.json", json.dumps({"window": 0}))
        assert main(["simulate", cfg]) == 2
        assert "window" in capsys.readouterr().err

    def test_malformed_json(self, capsys, tmp_path):
        cfg = write(tmp_path, "cfg.json", '{\n  "gamma_deg": 24.9,\n  "seed": ,\n}')
        assert main(["simulate", cfg]) == 2
        assert "cfg.json:3:" in capsys.readouterr().err

    def test_unknown_key_line(self, capsys, tmp_path):
        cfg = write(tmp_path, "cfg.json", '{\n  "gamma_deg": 24.9,\n  "windw": 5\n}')
        assert main(["simulate", cfg]) == 2
        err = capsys.readouterr().err
        assert "cfg.json:3" in err and "windw" in err

    def test_bad_noise(self, capsys, tmp_path):
        cfg = write(tmp_path, "cfg.json", json.dumps({"noise": {"depolarizing_p": 2}}))
        assert main(["simulate", cfg]) == 2

    def test_reproducible_files(self, tmp_path):
        cfg = write(tmp_path, "cfg.json", json.dumps({"gamma_deg": 24.9, "seed": 7}))
        a, b = tmp_path / "a" / "run.json", tmp_path / "b" / "run.json"
        assert main(["simulate", cfg, "--output", str(a)]) == 0
        assert main(["simulate", cfg, "--output", str(b)]) == 0
        assert strip_timestamp(a.read_text()) == strip_timestamp(b.read_text())
        assert (tmp_path / "a" / "run.counts.csv").read_bytes() == (tmp_path / "b" / "run.counts.csv").read_bytes()

    def test_csv_sidecars(self, tmp_path):
        cfg = write(tmp_path, "cfg.json", "{}")
        out = tmp_path / "sim.csv"
        assert main(["simulate", cfg, "--format", "csv", "--output", str(out)]) == 0
        assert out.read_text().startswith("label,counts,window_s,rate_hz")
        man = json.loads((tmp_path / "sim.csv.manifest.json").read_text())
        assert man["command"] == "simulate" and "version" in man
        assert json.loads((tmp_path / "sim.violation.json").read_text())["result"]["violated"]


class TestLhv:
    def test_flags(self, capsys):
        _, doc = run_json(capsys, "lhv", "--p1", "0", "--p2", "0", "--p3", "0", "--p4", "0.0902")
        assert doc["result"]["gap"] == pytest.approx(0.0902)
        assert not doc["result"]["satisfied"]
        assert doc["result"]["max_gap_over_models"] == 0

    def test_json_input(self, capsys, tmp_path):
        path = write(tmp_path, "m.json", json.dumps({"P1": 0.25, "P2": 0.25, "P3": 0.25, "P4": 0.25}))
        _, doc = run_json(capsys, "lhv", "--input", path)
        assert doc["result"]["gap"] == pytest.approx(-0.5)
        assert doc["result"]["satisfied"]

    def test_csv_input_with_flag_override(self, capsys, tmp_path):
        path = write(tmp_path, "m.csv", "label,probability\nP1,0.1\nP2,0.1\nP3,0.1\nP4,0.1\n")
        _, doc = run_json(capsys, "lhv", "--input", path, "--p4", "0.5")
        assert doc["result"]["gap"] == pytest.approx(0.2)

    def test_missing_entry(self, capsys):
        assert main(["lhv", "--p1", "0", "--p2", "0"]) == 2

    def test_missing_file(self, capsys, tmp_path):
        assert main(["lhv", "--input", str(tmp_path / "nope.json")]) == 2


class TestTomo:
    def test_round_trip(self, capsys, tmp_path):
        cfg = write(tmp_path, "t.json", json.dumps({"gamma_rad": math.pi / 8, "counts_per_setting": 1e5, "seed": 2}))
        out = tmp_path / "tomo.json"
        assert main(["tomo", cfg, "--output", str(out)]) == 0
        res = json.loads(out.read_text())["result"]
        assert res["fidelity"] >= 0.999
        rho = matrix_from_json(json.loads((tmp_path / "tomo.rho.json").read_text())["rho_hat"])
        assert np.allclose(rho, rho.conj().T) and abs(np.trace(rho) - 1) < 1e-12

    def test_sweep(self, tmp_path):
        cfg = write(tmp_path, "t.json", json.dumps({"counts_per_setting": 1e5, "sweep": {"points": 4}}))
        out = tmp_path / "tomo.json"
        assert main(["tomo", cfg, "--output", str(out)]) == 0
        rows = (tmp_path / "tomo.sweep.csv").read_text().splitlines()
        assert rows[0] == "gamma_rad,gamma_deg,concurrence,theory"
        conc = [float(r.split(",")[2]) for r in rows[1:]]
        assert len(conc) == 4 and conc == sorted(conc)

    def test_missing_config(self, tmp_path):
        assert main(["tomo", str(tmp_path / "absent.json")]) == 2

    def test_gamma_out_of_range(self, tmp_path):
        cfg = write(tmp_path, "t.json", json.dumps({"gamma_deg": 60}))
        assert main(["tomo", cfg]) == 2


class TestOutputDirectory:
    def test_env_var(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "reports"))
        assert main(["optimize"]) == 0
        assert capsys.readouterr().out == ""
        doc = json.loads((tmp_path / "reports" / "optimize.json").read_text())
        assert doc["manifest"]["version"]

    def test_matrix_json_round_trip(self):
        m = np.array([[1, 2j], [-2j, 3]])
        assert np.array_equal(matrix_from_json(matrix_to_json(m)), m)
