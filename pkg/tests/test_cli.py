import json

import numpy as np
import pytest

from floquet_vqe import cli
from floquet_vqe.ansatz import PI, Regime
from floquet_vqe.diagnostics import entropy_growth, otoc_trace
from floquet_vqe.errors import ConfigurationError
from floquet_vqe.gradients import gradient_variance
from floquet_vqe.results import (ENTROPY_HEADER, OTOC_HEADER, VARIANCE_HEADER, VQE_HEADER, entropy_rows,
                                 otoc_rows, read_csv, sha256, variance_rows, vqe_rows, write_csv)
from floquet_vqe.vqe import XxzSpec, build_xxz, run_vqe


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = cli.main([*argv, "--out", str(out), "--seed", "7"])
    return code, out


class TestHeaders:
    def test_bit_exact(self):
        assert ",".join(VARIANCE_HEADER) == "regime,num_qubits,depth,param_index,num_instances,mean_grad,var_grad,seed"
        assert ",".join(ENTROPY_HEADER) == "regime,num_qubits,depth,mean_entropy_bits,std_entropy_bits,num_instances,seed"
        assert ",".join(OTOC_HEADER) == "regime,num_qubits,depth,mean_otoc,stderr,method,num_instances,seed"
        assert ",".join(VQE_HEADER) == ("regime,iteration,mean_cost,var_cost,mean_entropy_bits,"
                                        "var_entropy_bits,exact_ground_energy,num_instances,seed")


class TestCsvRoundTrip:
    def check(self, path, header, rows):
        write_csv(path, header, rows)
        assert path.read_text().splitlines()[0] == ",".join(header)
        back = read_csv(path)
        assert len(back) == len(rows)
        for row, parsed in zip(rows, back):
            for key, value in zip(header, row):
                got = parsed[key]
                if isinstance(value, (float, np.floating)):
                    assert np.float64(got).tobytes() == np.float64(value).tobytes()
                else:
                    assert got == value

    def test_variance(self, tmp_path):
        records = [gradient_variance("mbl", 4, 4, Regime.thermal(), build_xxz(XxzSpec(4)), 11, 6, 3),
                   gradient_variance("hea", 4, 4, None, build_xxz(XxzSpec(4)), 0, 6, 3)]
        self.check(tmp_path / "v.csv", VARIANCE_HEADER, variance_rows(records))

    def test_entropy(self, tmp_path):
        self.check(tmp_path / "e.csv", ENTROPY_HEADER,
                   entropy_rows([entropy_growth("mbl", 4, Regime.dtc(), 4, 3, 1)]))

    def test_otoc(self, tmp_path):
        self.check(tmp_path / "o.csv", OTOC_HEADER, otoc_rows([otoc_trace("mbl", 4, Regime.pm(), 3, 3, 1)]))

    def test_vqe(self, tmp_path):
        self.check(tmp_path / "q.csv", VQE_HEADER,
                   vqe_rows([run_vqe("mbl", 4, 2, Regime.pm(), XxzSpec(4), 3, 2, 5)]))

    def test_awkward_floats(self, tmp_path):
        values = [0.1, 1 / 3, -2.5e-300, 5e-324, 1.7976931348623157e308, np.nextafter(1.0, 2.0)]
        self.check(tmp_path / "f.csv", ("regime", "mean_grad"), [("PM", v) for v in values])


class TestParseRegime:
    @pytest.mark.parametrize("token,kind,label,lo,hi", [
        ("hea", "hea", None, None, None),
        ("pm", "mbl", "PM", 0.0, 0.2 * PI),
        ("DTC", "mbl", "DTC", 0.84 * PI, PI),
        ("thermal", "mbl", "THERMAL", 0.5 * PI, 0.5 * PI),
        ("pm=0.1", "mbl", "PM", 0.1 * PI, 0.1 * PI),
        ("dtc=window", "mbl", "DTC", 0.84 * PI, PI),
        ("thermal=0.4:0.6", "mbl", "THERMAL", 0.4 * PI, 0.6 * PI),
    ])
    def test_tokens(self, token, kind, label, lo, hi):
        choice = cli.parse_regime(token)
        assert choice.ansatz_kind == kind
        if label is None:
            assert choice.regime is None
        else:
            r = choice.regime
            assert (r.label, r.g_low, r.g_high) == (label, pytest.approx(lo), pytest.approx(hi))

    @pytest.mark.parametrize("token", ["mbl", "hea=1", "pm=abc", "pm=0.5", "thermal=window", "custom"])
    def test_rejected(self, token):
        with pytest.raises(ConfigurationError):
            cli.parse_regime(token)


class TestRun:
    def test_variance_outputs_and_manifest(self, tmp_path):
        code, out = run(tmp_path, "variance-vs-n", "--regimes", "pm,hea", "--qubits", "4",
                        "--instances", "4", "--workers", "1")
        assert code == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["manifest.json", "variance_vs_n.csv", "variance_vs_n.svg"]
        manifest = json.loads((out / "manifest.json").read_text())
        assert set(manifest) == {"artifact_version", "config", "files", "total_runtime_s"}
        assert set(manifest["files"]) == {"variance_vs_n.csv", "variance_vs_n.svg"}
        for name, digest in manifest["files"].items():
            assert sha256(out / name) == digest
        assert manifest["config"]["seed"] == "7"
        rows = read_csv(out / "variance_vs_n.csv")
        assert [r["regime"] for r in rows] == ["PM", "HEA"]
        assert rows[0]["param_index"] == 11 and rows[0]["depth"] == 8

    def test_svg_is_reproducible(self, tmp_path):
        argv = ("otoc", "--regimes", "pm", "--qubits", "4", "--max-depth", "3", "--instances", "2")
        _, a = run(tmp_path, *argv, name="a")
        _, b = run(tmp_path, *argv, name="b")
        assert (a / "otoc.svg").read_bytes() == (b / "otoc.svg").read_bytes()

    @pytest.mark.parametrize("argv", [
        ("variance-vs-depth", "--regimes", "thermal,hea", "--qubits", "4", "--depths", "2,4",
         "--instances", "5"),
        ("otoc", "--regimes", "pm,thermal=0.7", "--qubits", "4", "--max-depth", "4", "--instances", "3"),
        ("otoc", "--regimes", "dtc", "--qubits", "4", "--max-depth", "2", "--instances", "2",
         "--method", "stochastic", "--samples", "6"),
        ("entropy", "--regimes", "dtc=0.9,hea", "--qubits", "4", "--max-depth", "5", "--instances", "4"),
        ("vqe", "--regimes", "dtc=0.9,thermal", "--qubits", "4", "--iterations", "4", "--instances", "3"),
    ])
    def test_worker_count_does_not_change_csv(self, tmp_path, argv):
        code1, one = run(tmp_path, *argv, "--workers", "1", "--no-plot", name="one")
        code2, two = run(tmp_path, *argv, "--workers", "2", "--no-plot", name="two")
        assert code1 == code2 == 0
        csv_one = sorted(one.glob("*.csv"))
        assert len(csv_one) == 1
        assert csv_one[0].read_bytes() == (two / csv_one[0].name).read_bytes()
        assert not list(one.glob("*.svg"))

    def test_tied_flag(self, tmp_path):
        argv = ("entropy", "--regimes", "thermal", "--qubits", "4", "--max-depth", "3", "--instances", "3",
                "--no-plot")
        _, a = run(tmp_path, *argv, name="a")
        _, b = run(tmp_path, *argv, "--tied", name="b")
        assert (a / "entropy.csv").read_bytes() != (b / "entropy.csv").read_bytes()


class TestExitCodes:
    def test_empty_qubit_list(self, tmp_path, capsys):
        code, _ = run(tmp_path, "variance-vs-n", "--qubits", ",")
        assert code == 2
        assert "qubits: empty list" in capsys.readouterr().err

    @pytest.mark.parametrize("argv", [
        ("entropy", "--qubits", "5"),
        ("otoc", "--method", "magic"),
        ("vqe", "--qubits", "4,6"),
        ("variance-vs-n", "--instances", "0"),
        ("variance-vs-n", "--regimes", "qaoa"),
        ("reproduce-fig", "7"),
        ("reproduce-fig", "2a", "--scale", "huge"),
    ])
    def test_configuration_errors(self, tmp_path, argv):
        assert run(tmp_path, *argv)[0] == 2

    def test_resource_cap(self, tmp_path, capsys):
        code, _ = run(tmp_path, "otoc", "--regimes", "pm", "--qubits", "14", "--max-depth", "1",
                      "--instances", "1", "--method", "exact")
        assert code == 3
        assert "otoc_stochastic" in capsys.readouterr().err

    def test_non_finite(self, tmp_path, monkeypatch):
        def nan_variance(*args, **kwargs):
            real = gradient_variance(*args, **kwargs)
            return type(real)(**{**real.__dict__, "variance": float("nan")})
        monkeypatch.setattr(cli, "gradient_variance", nan_variance)
        code, out = run(tmp_path, "variance-vs-n", "--regimes", "hea", "--qubits", "4", "--instances", "2")
        assert code == 4
        assert not (out / "variance_vs_n.csv").exists()


class TestConfigFile:
    def test_flags_override_file(self, tmp_path):
        cfg = tmp_path / "exp.ini"
        cfg.write_text("[experiment]\nregimes = dtc\nqubits = 4\nmax-depth = 2\ninstances = 3\nseed = 99\n")
        out = tmp_path / "o"
        assert cli.main(["entropy", "--config", str(cfg), "--instances", "2", "--out", str(out),
                         "--no-plot"]) == 0
        rows = read_csv(out / "entropy.csv")
        assert {r["num_instances"] for r in rows} == {2}
        assert {r["seed"] for r in rows} == {99}
        assert [r["depth"] for r in rows] == [0, 1, 2]

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "exp.ini"
        cfg.write_text("[experiment]\nqbits = 4\n")
        assert cli.main(["entropy", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_missing_section_and_file(self, tmp_path):
        cfg = tmp_path / "exp.ini"
        cfg.write_text("[other]\nqubits = 4\n")
        assert cli.main(["entropy", "--config", str(cfg)]) == 2
        assert cli.main(["entropy", "--config", str(tmp_path / "missing.ini")]) == 2


class TestFigures:
    def test_presets_cover_every_figure(self):
        assert set(cli.FIGURES) == {"2a", "2b", "2c", "2d", "3", "4a", "4b", "5", "6"}
        for command, desk, paper in cli.FIGURES.values():
            assert command in cli.COMMANDS
            assert int(desk["instances"]) <= 200

    def test_reduced_preset_runs(self, tmp_path, monkeypatch):
        # shrink the preset so the test stays fast; the plumbing is what is under test
        command, desk, paper = cli.FIGURES["4a"]
        monkeypatch.setitem(cli.FIGURES, "4a", (command, {**desk, "qubits": "4", "instances": "2"}, paper))
        out = tmp_path / "f"
        assert cli.main(["reproduce-fig", "4a", "--out", str(out), "--seed", "1"]) == 0
        assert sorted(p.name for p in out.iterdir()) == ["fig4a.csv", "fig4a.svg", "manifest.json"]
        config = json.loads((out / "manifest.json").read_text())["config"]
        assert (config["figure"], config["scale"], config["experiment"]) == ("4a", "desk", "entropy")
        assert {r["regime"] for r in read_csv(out / "fig4a.csv")} == {"DTC"}
