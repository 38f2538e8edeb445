import json

import numpy as np
import pytest

from beamstab import cli

REF1_BASE = {
    "model": "BGP",
    "coefficients": {"rho1": 1, "rho2": 1, "rho3": 1, "k": 1, "k0": 2, "b": 2,
                     "varpi": 1, "gamma": 1, "l": 0.5,
                     "ell": 3.141592653589793},
    "kernel_g": {"type": "prony", "terms": [[1.0, 1.0]]},
    "kernel_h": {"type": "prony", "terms": [[1.0, 1.0]]},
}


def write_config(tmp_path, name="cfg.json", **extra):
    cfg = dict(REF1_BASE)
    cfg.update(extra)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


class TestConfigErrors:
    def test_missing_kernel_h(self, tmp_path, capsys):
        cfg = dict(REF1_BASE)
        del cfg["kernel_h"]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(cfg))
        rc = cli.main(["stability", "--config", str(path)])
        assert rc == 2
        assert "kernel_h" in capsys.readouterr().err

    def test_missing_coefficient(self, tmp_path, capsys):
        cfg = dict(REF1_BASE)
        cfg["coefficients"] = {k: v for k, v in cfg["coefficients"].items()
                               if k != "rho2"}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(cfg))
        rc = cli.main(["stability", "--config", str(path)])
        assert rc == 2
        assert "rho2" in capsys.readouterr().err

    def test_unknown_model(self, tmp_path, capsys):
        path = write_config(tmp_path, model="QQQ")
        assert cli.main(["stability", "--config", str(path)]) == 2

    def test_missing_file(self, tmp_path, capsys):
        rc = cli.main(["stability", "--config", str(tmp_path / "nope.json")])
        assert rc == 2

    def test_bad_sweep_block(self, tmp_path, capsys):
        path = write_config(tmp_path,
                            sweep={"lambda_min": 10, "lambda_max": 5, "points": 4})
        assert cli.main(["sweep", "--config", str(path)]) == 2

    def test_no_partial_output_on_config_error(self, tmp_path):
        out = tmp_path / "never"
        path = write_config(tmp_path, output={"dir": str(out)},
                            limit={"eps_list": [0.1, 0.2]})
        assert cli.main(["limit", "--config", str(path)]) == 2
        assert not out.exists()


class TestStability:
    def test_ref1_report(self, tmp_path, capsys):
        out = tmp_path / "out"
        path = write_config(tmp_path, output={"dir": str(out)})
        assert cli.main(["stability", "--config", str(path)]) == 0
        text = capsys.readouterr().out
        assert "PolynomialSqrtOptimal" in text
        data = json.loads((out / "stability.json").read_text())
        assert data["classification"] == "PolynomialSqrtOptimal"
        assert data["numbers"]["chi_g"] == pytest.approx(1.0)
        assert data["config_hash"]

    def test_exponential_case(self, tmp_path, capsys):
        cfg = dict(REF1_BASE)
        cfg["coefficients"] = dict(cfg["coefficients"], varpi=2)
        path = tmp_path / "cfg.json"
        out = tmp_path / "out"
        cfg["output"] = {"dir": str(out)}
        path.write_text(json.dumps(cfg))
        assert cli.main(["stability", "--config", str(path)]) == 0
        data = json.loads((out / "stability.json").read_text())
        assert data["classification"] == "ExponentiallyStable"


class TestOutputs:
    def test_byte_identical_reruns(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        path = write_config(
            tmp_path,
            sweep={"lambda_min": 5, "lambda_max": 50, "points": 8, "n_max": 8},
            output={"dir": str(out1), "formats": ["csv", "svg"]})
        assert cli.main(["sweep", "--config", str(path)]) == 0
        assert cli.main(["sweep", "--config", str(path), "--out", str(out2)]) == 0
        for name in ("sweep.csv", "sweep_fit.json", "sweep.svg"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_threads_do_not_change_bytes(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        path = write_config(
            tmp_path,
            sweep={"lambda_min": 5, "lambda_max": 50, "points": 8, "n_max": 8},
            output={"dir": str(out1)})
        assert cli.main(["sweep", "--config", str(path)]) == 0
        assert cli.main(["sweep", "--config", str(path), "--out", str(out2),
                         "--threads", "4"]) == 0
        assert (out1 / "sweep.csv").read_bytes() == (out2 / "sweep.csv").read_bytes()

    def test_header_line_and_ratio_column(self, tmp_path):
        out = tmp_path / "out"
        path = write_config(tmp_path, output={"dir": str(out)},
                            lowerbound={"n_list": [16, 64, 256]})
        assert cli.main(["lowerbound", "--config", str(path)]) == 0
        lines = (out / "lowerbound.csv").read_text().splitlines()
        assert lines[0].startswith("# beamstab 0.1.0 config=")
        cols = lines[1].split(",")
        ratios = [float(row.split(",")[cols.index("ratio")]) for row in lines[2:]]
        # the amplitude ratio approaches the predicted constant 1/2
        gaps = [abs(r - 0.5) for r in ratios]
        assert gaps[2] < gaps[1] < gaps[0]
        assert gaps[2] < 1e-4

    def test_limit_csv(self, tmp_path):
        out = tmp_path / "out"
        path = write_config(tmp_path, output={"dir": str(out)},
                            limit={"eps_list": [0.1, 0.01]})
        assert cli.main(["limit", "--config", str(path)]) == 0
        lines = (out / "limit.csv").read_text().splitlines()
        assert lines[1].split(",")[0] == "eps"
        assert len(lines) == 4

    def test_decay_and_spectrum(self, tmp_path):
        out = tmp_path / "out"
        path = write_config(
            tmp_path, output={"dir": str(out)},
            decay={"t_min": 1, "t_max": 50, "points": 8, "n_max": 8},
            spectrum={"n_max": 8})
        assert cli.main(["decay", "--config", str(path)]) == 0
        assert cli.main(["spectrum", "--config", str(path)]) == 0
        fit = json.loads((out / "decay_fit.json").read_text())
        assert fit["kind"] == "algebraic"
        spec = json.loads((out / "spectrum.json").read_text())
        assert spec["global_max"] < 0
        assert (out / "decay_energy.csv").exists()

    def test_decay_auto_detects_exponential_case(self, tmp_path):
        cfg = dict(REF1_BASE)
        cfg["coefficients"] = dict(cfg["coefficients"], varpi=2)
        out = tmp_path / "out"
        cfg["output"] = {"dir": str(out)}
        cfg["decay"] = {"t_min": 1, "t_max": 100, "points": 8, "n_max": 8}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        assert cli.main(["decay", "--config", str(path)]) == 0
        fit = json.loads((out / "decay_fit.json").read_text())
        assert fit["kind"] == "exponential"
        assert fit["rate"] > 0

    def test_tabulated_kernel_config(self, tmp_path):
        import beamstab as bs
        s = np.linspace(0.0, 23.0, 2001)
        tab = bs.normalized(
            bs.tabulated_kernel(s, np.exp(-s), delta_tail=1.0, delta=1.0))
        cfg = {
            "model": "TGP",
            "coefficients": dict(REF1_BASE["coefficients"]),
            "kernel_g": {"type": "tabulated", "s": list(s),
                         "mu": [float(x) for x in tab.mu],
                         "delta_tail": 1.0, "delta": 1.0},
            "memory": {"nodes": 32},
            "output": {"dir": str(tmp_path / "out")},
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        assert cli.main(["stability", "--config", str(path)]) == 0
        data = json.loads((tmp_path / "out" / "stability.json").read_text())
        assert data["numbers"]["chi_g"] == pytest.approx(1.0, abs=1e-4)
        assert cli.main(["check", "--config", str(path)]) == 0


class TestCheck:
    def test_all_pass_and_dump(self, tmp_path, capsys):
        out = tmp_path / "out"
        dump = tmp_path / "modes"
        path = write_config(tmp_path, output={"dir": str(out)})
        rc = cli.main(["check", "--config", str(path),
                       "--dump-modes", str(dump)])
        assert rc == 0
        text = capsys.readouterr().out
        assert "FAIL" not in text
        data = json.loads((out / "check.json").read_text())
        assert data["status"] == "pass"
        assert (dump / "mode_1.txt").read_text().startswith("% mode n=1")

    def test_relaxed_model_check(self, tmp_path, capsys):
        cfg = {
            "model": "TMC",
            "coefficients": dict(REF1_BASE["coefficients"], sigma=1.0),
            "output": {"dir": str(tmp_path / "out")},
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        assert cli.main(["check", "--config", str(path)]) == 0
        assert "FAIL" not in capsys.readouterr().out
