"""End-to-end tests of the command-line interface: every subcommand, the
exit-code contract, and byte determinism of the emitted artifacts."""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from nslab.cli import main
from nslab.data import taylor_green
from nslab.norms import KatoSpec, kato_norm
from nslab.picard import picard_ladder
from nslab.pslf import load_trajectory, read_snapshot
from nslab.spectral import Grid3, l2_norm_spectral

TWO_PI = 2.0 * np.pi


def write_cfg(tmp_path, name="cfg.json", **sections):
    cfg = {
        "grid": {"n": 16, "L": TWO_PI},
        "data": {"kind": "taylor_green", "params": {"amplitude": 0.2}},
        "time": {"T": 0.25, "M": 32},
        "ladder": {"k_max": 1},
        "measure": {"ball": {"center": [np.pi, np.pi, np.pi], "radius": 0.6}},
        "schedule": {"gamma": 0.5, "p": "inf", "sigma": 1.4},
    }
    cfg.update(sections)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


class TestSchedule:
    def test_json_output(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        assert main(["schedule", "--config", str(cfg), "--json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["a"] == [0.25, 0.75, 1.25, 1.4]
        assert payload["k0"] == 3
        assert payload["p"] == "inf"

    def test_table_output(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        assert main(["schedule", "--config", str(cfg)]) == 0
        out = capsys.readouterr().out
        assert "k0=3" in out
        assert "a_statement" in out

    def test_bad_parameters_exit_2(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, schedule={"gamma": 1.5, "p": "inf", "sigma": 1.4})
        assert main(["schedule", "--config", str(cfg)]) == 2


class TestArtifacts:
    def test_gen_writes_readable_snapshot(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        out = tmp_path / "out"
        assert main(["gen", "--config", str(cfg), "--out", str(out)]) == 0
        grid = Grid3(16, TWO_PI)
        field = read_snapshot(out / "u0.pslf", expected_grid=grid)
        expected = taylor_green(0.2, grid)
        assert np.allclose(field.data, expected.data, atol=1e-15)

    def test_evolve_writes_trajectory(self, tmp_path):
        cfg = write_cfg(tmp_path, grid={"n": 8, "L": TWO_PI}, time={"T": 0.1, "M": 8})
        out = tmp_path / "out"
        assert main(["evolve", "--config", str(cfg), "--out", str(out)]) == 0
        traj = load_trajectory(out / "u")
        assert traj.steps == 8
        assert traj.horizon == pytest.approx(0.1)

    def test_picard_writes_every_rung(self, tmp_path):
        cfg = write_cfg(tmp_path, grid={"n": 8, "L": TWO_PI}, time={"T": 0.1, "M": 8})
        out = tmp_path / "out"
        assert main(["picard", "--config", str(cfg), "--out", str(out)]) == 0
        p0 = load_trajectory(out / "p0")
        p1 = load_trajectory(out / "p1")
        grid = Grid3(8, TWO_PI)
        direct = picard_ladder(taylor_green(0.2, grid), 1, 0.1, 8)
        assert np.allclose(p0.data, direct[0].data, atol=1e-15)
        assert np.allclose(p1.data, direct[1].data, atol=1e-15)


class TestNorms:
    def test_table_values_recompute(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        assert main(["norms", "--config", str(cfg)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "norm_kind,p,q,r,T,region,value"
        grid = Grid3(16, TWO_PI)
        u0 = taylor_green(0.2, grid)
        rows = [line.split(",") for line in lines[1:]]
        l2_row = next(r for r in rows if r[0] == "lebesgue" and r[1] == "2.0" and r[5] == "global")
        assert float(l2_row[6]) == pytest.approx(l2_norm_spectral(u0), rel=1e-12)
        kato_row = next(r for r in rows if r[0] == "kato")
        p0 = picard_ladder(u0, 0, 0.25, 32)[0]
        assert float(kato_row[6]) == pytest.approx(
            kato_norm(p0, KatoSpec(math.inf, 0.25)), rel=1e-12
        )
        assert kato_row[4] == "0.25"

    def test_file_output_matches_stdout(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        assert main(["norms", "--config", str(cfg)]) == 0
        stdout_text = capsys.readouterr().out
        target = tmp_path / "norms.csv"
        assert main(["norms", "--config", str(cfg), "--out", str(target)]) == 0
        assert target.read_text() == stdout_text


class TestRates:
    def rates_cfg(self, tmp_path, name="r.json", data=None):
        data = data or {
            "kind": "weak_l3_profile",
            "params": {"epsilon": 0.8, "amplitude": 0.3},
        }
        return write_cfg(
            tmp_path, name=name, data=data, time={"T": 0.5, "M": 32},
        )

    def test_outputs_and_determinism(self, tmp_path, capsys):
        cfg = self.rates_cfg(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["rates", "--config", str(cfg), "--out", str(out_a)]) == 0
        assert "slope=" in capsys.readouterr().out
        assert main(["rates", "--config", str(cfg), "--out", str(out_b)]) == 0
        for name in ("report.json", "samples.csv", "fits.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_output_dir_from_config(self, tmp_path):
        out = tmp_path / "from_config"
        cfg = write_cfg(
            tmp_path,
            data={"kind": "weak_l3_profile", "params": {"epsilon": 0.8, "amplitude": 0.3}},
            time={"T": 0.5, "M": 32},
            output={"dir": str(out)},
        )
        assert main(["rates", "--config", str(cfg)]) == 0
        assert (out / "report.json").exists()

    def test_degenerate_data_exit_4(self, tmp_path, capsys):
        cfg = self.rates_cfg(tmp_path, data={"kind": "zero", "params": {}})
        out = tmp_path / "z"
        assert main(["rates", "--config", str(cfg), "--out", str(out)]) == 4
        report = json.loads((out / "report.json").read_text())
        assert report["flags"]["degenerate"] is True

    def test_stability_exit_3(self, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path,
            grid={"n": 32, "L": TWO_PI},
            data={"kind": "solenoidal_bump", "params": {"radius": 1.5, "amplitude": 300.0}},
            time={"T": 2.0, "M": 8},
            ladder={"k_max": 0},
            dyadic={"j_min": 0, "j_max": 10},
        )
        assert main(["rates", "--config", str(cfg), "--out", str(tmp_path / "s")]) == 3
        assert "instability" in capsys.readouterr().err


class TestCheck:
    def test_writes_diagnostics(self, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path,
            grid={"n": 16, "L": TWO_PI},
            time={"T": 0.1, "M": 8},
            check={"tail": {"times": [0.01, 0.1, 0.5, 1.0]}},
        )
        out = tmp_path / "out"
        assert main(["check", "--config", str(cfg), "--out", str(out)]) == 0
        payload = json.loads((out / "check.json").read_text())
        assert math.isfinite(payload["heat_tail"]["max_ratio"])
        assert len(payload["heat_tail"]["rows"]) == 4
        kinds = [r["kind"] for r in payload["local_bounds"]["rows"]]
        assert kinds.count("picard_lq_sup") == 2
        assert kinds.count("heat_weighted_sup") == 1
        assert math.isfinite(payload["oseen"]["max_ratio"])
        assert isinstance(payload["oseen"]["center_slope"], float)


class TestExitCodes:
    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["gen", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2

    def test_malformed_json(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("not json {")
        assert main(["gen", "--config", str(bad), "--out", str(tmp_path)]) == 2

    def test_bad_step_count(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, time={"T": 0.5, "M": 12})
        assert main(["evolve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_unknown_subcommand_and_missing_args(self, capsys):
        assert main(["frobnicate"]) == 2
        assert main(["gen"]) == 2

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0

    def test_module_entry_point(self, tmp_path):
        cfg = write_cfg(tmp_path)
        proc = subprocess.run(
            [sys.executable, "-m", "nslab.cli", "schedule", "--config", str(cfg), "--json"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["k0"] == 3
