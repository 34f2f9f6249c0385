import json
import math
import subprocess
import sys

import pytest

from lpns import cli
from lpns.config import ConfigError, criteria_config, parse_init, parse_text, solver_config
from lpns.io import read_csv, read_manifest

STOKES = """# exact single-mode Stokes run
grid_n = 16
viscosity = 1
dt = 0.01
t_end = 1
init = shear(1.0)
output_stride = 50
"""

TG = """grid_n = 16
dt = 0.01
t_end = 0.2
init = taylor_green(1)
output_stride = 10
"""

CRITERIA = """criteria.logE_list = 1, 10
criteria.p_alpha_list = 2:0.25, 4:0
criteria.qp_list = 3:3
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestParse:
    def test_comments_and_values(self):
        raw = parse_text("grid_n = 32   # cube\n\n# note\ninit = taylor_green(2.5)\n")
        assert raw.values == {"grid_n": "32", "init": "taylor_green(2.5)"}
        assert raw.normalized() == {"grid_n": "32", "init": "taylor_green(2.5)"}

    @pytest.mark.parametrize("text,key", [("gird_n = 3\n", "gird_n"), ("dt = 1\ndt = 2\n", "dt"),
                                          ("dt =\n", "dt")])
    def test_key_errors(self, text, key):
        with pytest.raises(ConfigError) as exc:
            parse_text(text)
        assert exc.value.key == key and str(exc.value).startswith(key)

    def test_malformed_line(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_text("dt = 1\njust words\n")

    def test_sha_tracks_text(self):
        assert parse_text("dt = 1\n").sha256 != parse_text("dt = 1 \n").sha256

    @pytest.mark.parametrize("text,expected", [
        ("taylor_green(1.0)", ("taylor_green", {"amplitude": 1.0})),
        ("taylor_green", ("taylor_green", {})),
        ("shear(amplitude=2)", ("shear", {"amplitude": 2.0})),
        ("random_divfree(band=1:4, amplitude=3)", ("random_divfree", {"band": (1, 4), "amplitude": 3.0})),
        ("zero", ("zero", {})),
        ("file(/tmp/u.lpns)", ("file", {"path": "/tmp/u.lpns"})),
    ])
    def test_init(self, text, expected):
        assert parse_init(text) == expected

    @pytest.mark.parametrize("text", ["vortex(1)", "taylor_green(x)", "random_divfree(band=4)", "zero(1)", "file()",
                                      "taylor_green(inf)", "shear(1, band=1:2)", "taylor_green(seed=2)"])
    def test_init_errors(self, text):
        with pytest.raises(ConfigError) as exc:
            parse_init(text)
        assert exc.value.key == "init"

    def test_solver_config(self):
        cfg = solver_config(parse_text("grid_n = 16,16,32\nbox_length = 2\nviscosity = 0.5\n"))
        assert cfg.grid.n == (16, 16, 32) and cfg.grid.box_length == 2.0
        assert cfg.viscosity == 0.5 and cfg.init == "taylor_green"

    @pytest.mark.parametrize("text,key", [("dt = 0.1\n", "grid_n"), ("grid_n = 16,16\n", "grid_n"),
                                          ("grid_n = 6\n", "grid_n"), ("grid_n = 16\ndt = -1\n", "dt"),
                                          ("grid_n = 16\nviscosity = nan\n", "viscosity"),
                                          ("grid_n = 16\noutput_stride = 1.5\n", "output_stride"),
                                          ("grid_n = 16\ncfl_safety = 2\n", "cfl_safety")])
    def test_solver_config_errors(self, text, key):
        with pytest.raises(ConfigError) as exc:
            solver_config(parse_text(text))
        assert exc.value.key == key

    def test_criteria_config(self):
        cfg = criteria_config(parse_text(CRITERIA + "criteria.c_gronwall = 2.5\n"))
        assert cfg.log_E == [1.0, 10.0] and cfg.p_alpha == [(2.0, 0.25), (4.0, 0.0)]
        assert cfg.qp == [(3.0, 3.0)] and cfg.c_gronwall == 2.5

    @pytest.mark.parametrize("text,key", [("criteria.p_alpha_list = 4:0.1\n", "criteria.p_alpha_list"),
                                          ("criteria.m_beta_list = 5:0\n", "criteria.m_beta_list"),
                                          ("criteria.qp_list = 2:3\n", "criteria.qp_list"),
                                          ("criteria.logE_list = 0\n", "criteria.logE_list"),
                                          ("criteria.p_alpha_list = 2\n", "criteria.p_alpha_list"),
                                          ("criteria.c_gronwall = -3\n", "criteria.c_gronwall")])
    def test_criteria_errors(self, text, key):
        with pytest.raises(ConfigError) as exc:
            criteria_config(parse_text(text))
        assert exc.value.key == key


class TestCli:
    def test_simulate_stokes(self, tmp_path, capsys):
        out = tmp_path / "traj"
        assert cli.main(["simulate", "--config", write(tmp_path, "s.cfg", STOKES), "--out", str(out)]) == 0
        header, rows = read_csv(out / "scalars.csv")
        assert header == ["t", "energy", "enstrophy", "max_div", "dt"]
        e0, e1 = rows[0][1], rows[-1][1]
        assert rows[-1][0] == pytest.approx(1.0)
        assert abs(e1 - math.exp(-2) * e0) <= 1e-8 * math.exp(-2) * e0
        man = read_manifest(out)
        assert man["times"] == pytest.approx([0.0, 0.5, 1.0]) and len(man["files"]) == 3
        assert "wrote 3 snapshots" in capsys.readouterr().out

    def test_monitor_deterministic(self, tmp_path):
        traj = tmp_path / "traj"
        crit = write(tmp_path, "c.cfg", CRITERIA)
        assert cli.main(["simulate", "--config", write(tmp_path, "t.cfg", TG), "--out", str(traj)]) == 0
        outs = []
        for name in ("a.json", "b.json"):
            assert cli.main(["monitor", "--traj", str(traj), "--criteria", crit, "--out", str(tmp_path / name)]) == 0
            outs.append((tmp_path / name).read_bytes())
        assert outs[0] == outs[1]
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        rep = json.loads(outs[0])
        assert rep["schema"] == "lpns-report/1" and rep["grid"] == [16, 16, 16]
        assert "periodic box" in rep["notice"] and rep["contrapositive_notice"]
        assert rep["report"]["all_finite"] and rep["report"]["gronwall_dominates"]
        assert len(rep["config_sha256"]) == 64 and rep["code_version"]

    def test_monitor_rejects_parameters(self, tmp_path, capsys):
        traj = tmp_path / "traj"
        cli.main(["simulate", "--config", write(tmp_path, "t.cfg", TG), "--out", str(traj)])
        bad = write(tmp_path, "bad.cfg", "criteria.p_alpha_list = 4:0.1\n")
        code = cli.main(["monitor", "--traj", str(traj), "--criteria", bad, "--out", str(tmp_path / "r.json")])
        err = capsys.readouterr().err
        assert code == cli.EXIT_USAGE
        assert "criteria.p_alpha_list" in err and "alpha in [0, 2/p - 1/2]" in err
        assert not (tmp_path / "r.json").exists()

    def test_monitor_missing_traj(self, tmp_path, capsys):
        crit = write(tmp_path, "c.cfg", CRITERIA)
        code = cli.main(["monitor", "--traj", str(tmp_path / "nope"), "--criteria", crit, "--out", "x.json"])
        assert code == cli.EXIT_USAGE and "--traj" in capsys.readouterr().err

    def test_verify_deterministic(self, tmp_path):
        outs = []
        for name in ("a.json", "b.json"):
            code = cli.main(["verify", "--lemma", "B4", "--grid", "32", "--samples", "3", "--seed", "7",
                             "--out", str(tmp_path / name)])
            assert code == 0
            outs.append((tmp_path / name).read_bytes())
        assert outs[0] == outs[1]
        rep = json.loads(outs[0])
        assert rep["grid"] == [[16, 16, 16], [32, 32, 32]]
        assert rep["harness"]["max_ratio"] <= math.sqrt(2) * 1.05

    def test_verify_grid_list(self, tmp_path):
        assert cli.main(["verify", "--lemma", "RIESZ", "--grid", "16,24", "--samples", "1",
                         "--out", str(tmp_path / "r.json")]) == 0
        assert json.loads((tmp_path / "r.json").read_text())["harness"]["grids"] == [[16, 16, 16], [24, 24, 24]]

    @pytest.mark.parametrize("argv,flag", [
        (["verify", "--lemma", "B9", "--out", "x.json"], "--lemma"),
        (["verify", "--lemma", "B4", "--grid", "a", "--out", "x.json"], "--grid"),
        (["verify", "--lemma", "B4", "--samples", "0", "--out", "x.json"], "--samples"),
        (["info", "--bank", "6"], "--bank"),
    ])
    def test_usage_errors(self, argv, flag, capsys):
        assert cli.main(argv) == cli.EXIT_USAGE
        err = capsys.readouterr().err
        assert err.startswith("error: ") and flag in err

    def test_config_key_named(self, tmp_path, capsys):
        cfg = write(tmp_path, "bad.cfg", "grid_n = 16\nviscocity = 1\n")
        assert cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "t")]) == cli.EXIT_USAGE
        assert "viscocity" in capsys.readouterr().err

    def test_cfl_error_names_dt(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.cfg", "grid_n = 16\ninit = taylor_green(100)\ndt = 0.1\nt_end = 0.1\n")
        assert cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "t")]) == cli.EXIT_USAGE
        assert "dt: CFL violation" in capsys.readouterr().err

    def test_info(self, capsys):
        assert cli.main(["info", "--bank", "16"]) == 0
        desc = json.loads(capsys.readouterr().out)
        assert desc["kinds"]["h"]["active_range"] == [-1, 3]
        assert desc["kinds"]["iso"]["active_range"] == [-1, 4]

    def test_console_script(self):
        out = subprocess.run([sys.executable, "-m", "lpns.cli", "info", "--bank", "8"], capture_output=True,
                             text=True, check=True)
        assert json.loads(out.stdout)["grid"] == [8, 8, 8]
