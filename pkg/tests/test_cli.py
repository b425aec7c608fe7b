"""CLI tests: config validation, output determinism, exit-code contract."""

import os

import numpy as np
import pytest

from hyperwalk.cli import main, parse_config
from hyperwalk.errors import ConfigError

SIM_CFG = """\
# minimal simulate run
curvature.kind = hyperbolic
curvature.k = 1.0
curvature.d = 2
law.kind = elliptic
law.a = const:1.0
law.b = const:1.0
sim.steps = 400
sim.walks = 8
sim.seed = 42
"""

CLASSIFY_TRANSIENT = """\
curvature.k = 1.0
curvature.d = 2
law.kind = elliptic
law.a = const:1.0
law.b = const:1.0
sim.seed = 7
grid.start = 10
grid.stop = 200
grid.count = 8
grid.spacing = log
"""

CLASSIFY_RECURRENT = CLASSIFY_TRANSIENT.replace("law.b = const:1.0",
                                                "law.b = powerdecay:1.0,1.0")


def run_cli(tmp_path, name, text, command, extra=()):
    cfg = tmp_path / name
    cfg.write_text(text)
    out = tmp_path / (name + ".out")
    code = main([command, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


class TestParseConfig:
    def test_minimal_simulate_defaults(self):
        cfg = parse_config(SIM_CFG, "simulate")
        assert cfg.stride == 1          # max(1, 400 // 1000)
        assert cfg.burn_in == 40        # 400 // 10
        assert cfg.theta == 0.5
        assert cfg.mode == "radialonly"
        keys = dict(cfg.resolved)
        assert keys["sim.stride"] == "1"
        assert keys["sim.burn_in"] == "40"
        assert keys["sim.seed"] == "42"

    def test_unknown_key_names_key_and_line(self):
        with pytest.raises(ConfigError) as err:
            parse_config("curvture.k = 1.0\n", "simulate")
        assert "curvture.k" in str(err.value) and "line 1" in str(err.value)

    def test_negative_curvature_parameter(self):
        bad = SIM_CFG.replace("curvature.k = 1.0", "curvature.k = -1.0")
        with pytest.raises(ConfigError) as err:
            parse_config(bad, "simulate")
        assert "curvature.k" in str(err.value)

    def test_heavytail_exponent_requirement_cited(self):
        text = (
            "curvature.k = 1.0\ncurvature.d = 2\nlaw.kind = heavytail\n"
            "law.m = 2.5\nsim.seed = 1\nsim.steps = 10\nsim.walks = 1\n"
        )
        with pytest.raises(ConfigError) as err:
            parse_config(text, "simulate")
        msg = str(err.value)
        assert "law.m" in msg and "3" in msg

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError) as err:
            parse_config(SIM_CFG + "sim.seed = 43\n", "simulate")
        assert "duplicate" in str(err.value)

    def test_type_mismatch_names_key(self):
        bad = SIM_CFG.replace("sim.steps = 400", "sim.steps = many")
        with pytest.raises(ConfigError) as err:
            parse_config(bad, "simulate")
        assert "sim.steps" in str(err.value)

    def test_missing_required_key(self):
        with pytest.raises(ConfigError) as err:
            parse_config("curvature.k = 1.0\n", "simulate")
        assert "required" in str(err.value)

    def test_command_mismatch_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("command = classify\n" + SIM_CFG, "simulate")

    def test_profile_mini_language(self):
        cfg = parse_config(CLASSIFY_RECURRENT, "classify")
        assert cfg.law.b(0.5) == 1.0
        assert cfg.law.b(4.0) == pytest.approx(0.25)

    def test_table_profile_loaded_relative_to_config(self, tmp_path):
        (tmp_path / "prof.csv").write_text("0.0,1.0\n10.0,0.5\n# comment\n")
        text = CLASSIFY_TRANSIENT.replace("law.b = const:1.0", "law.b = table:prof.csv")
        cfg = parse_config(text, "classify", base_dir=str(tmp_path))
        assert cfg.law.b(5.0) == pytest.approx(0.75)

    def test_seed_overrides(self, monkeypatch):
        monkeypatch.setenv("HYPERWALK_SEED", "777")
        cfg = parse_config(SIM_CFG, "simulate")
        assert cfg.seed == 777
        cfg = parse_config(SIM_CFG, "simulate", seed_override=888)
        assert cfg.seed == 888
        monkeypatch.delenv("HYPERWALK_SEED")
        cfg = parse_config(SIM_CFG, "simulate")
        assert cfg.seed == 42

    def test_grid_spacings(self):
        cfg = parse_config(CLASSIFY_TRANSIENT, "classify")
        assert cfg.grid == pytest.approx(list(np.geomspace(10, 200, 8)))
        lin = CLASSIFY_TRANSIENT.replace("grid.spacing = log", "grid.spacing = linear")
        cfg = parse_config(lin, "classify")
        assert cfg.grid == pytest.approx(list(np.linspace(10, 200, 8)))


class TestSimulateCommand:
    def test_writes_deterministic_outputs(self, tmp_path, capsys):
        code1, out1 = run_cli(tmp_path, "a.cfg", SIM_CFG, "simulate")
        code2, out2 = run_cli(tmp_path, "b.cfg", SIM_CFG, "simulate")
        assert code1 == code2 == 0
        for name in ("trajectories.csv", "summary.csv"):
            b1 = (out1 / name).read_bytes()
            b2 = (out2 / name).read_bytes()
            assert b1 == b2
        assert b"walk_id,step,R" in (out1 / "trajectories.csv").read_bytes()

    def test_worker_count_keeps_bytes_identical(self, tmp_path, capsys):
        _, out1 = run_cli(tmp_path, "w1.cfg", SIM_CFG, "simulate", ("--workers", "1"))
        _, out2 = run_cli(tmp_path, "w2.cfg", SIM_CFG, "simulate", ("--workers", "2"))
        assert (out1 / "trajectories.csv").read_bytes() == \
            (out2 / "trajectories.csv").read_bytes()

    def test_header_contains_resolved_config(self, tmp_path, capsys):
        _, out = run_cli(tmp_path, "h.cfg", SIM_CFG, "simulate")
        head = (out / "summary.csv").read_text().splitlines()
        assert "# sim.seed = 42" in head
        assert "# sim.burn_in = 40" in head        # default echoed
        assert any(line.startswith("# law = elliptic") for line in head)

    def test_seed_flag_changes_output(self, tmp_path, capsys):
        _, out1 = run_cli(tmp_path, "s1.cfg", SIM_CFG, "simulate")
        _, out2 = run_cli(tmp_path, "s2.cfg", SIM_CFG, "simulate", ("--seed", "43"))
        assert (out1 / "summary.csv").read_bytes() != (out2 / "summary.csv").read_bytes()

    def test_env_seed_override(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("HYPERWALK_SEED", "43")
        _, out_env = run_cli(tmp_path, "e1.cfg", SIM_CFG, "simulate")
        monkeypatch.delenv("HYPERWALK_SEED")
        _, out_flag = run_cli(tmp_path, "e2.cfg", SIM_CFG, "simulate", ("--seed", "43"))
        assert (out_env / "summary.csv").read_text().splitlines()[-1] == \
            (out_flag / "summary.csv").read_text().splitlines()[-1]


class TestClassifyCommand:
    def test_transient_exit_code_and_margins(self, tmp_path, capsys):
        code, out = run_cli(tmp_path, "t.cfg", CLASSIFY_TRANSIENT, "classify")
        assert code == 1
        text = (out / "margins.csv").read_text()
        assert "r,quantity,estimate,half_width,margin,criterion" in text
        assert "elliptic-analytic-transient" in text
        assert "transient" in capsys.readouterr().out

    def test_recurrent_exit_code(self, tmp_path, capsys):
        code, _ = run_cli(tmp_path, "r.cfg", CLASSIFY_RECURRENT, "classify")
        assert code == 0

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("curvature.k = -2\n")
        assert main(["classify", "--config", str(cfg)]) == 3

    def test_missing_config_file(self, capsys):
        assert main(["classify", "--config", "/nonexistent/x.cfg"]) == 3

    def test_classify_deterministic_bytes(self, tmp_path, capsys):
        _, out1 = run_cli(tmp_path, "c1.cfg", CLASSIFY_TRANSIENT, "classify")
        _, out2 = run_cli(tmp_path, "c2.cfg", CLASSIFY_TRANSIENT, "classify")
        assert (out1 / "margins.csv").read_bytes() == (out2 / "margins.csv").read_bytes()

    def test_euclidean_dispatch(self, tmp_path, capsys):
        text = (
            "curvature.kind = euclidean\ncurvature.d = 2\nlaw.kind = elliptic\n"
            "law.a = const:1.2\nlaw.b = const:1.0\nsim.seed = 2\n"
            "grid.start = 10\ngrid.stop = 50\ngrid.count = 3\n"
        )
        code, out = run_cli(tmp_path, "eu.cfg", text, "classify")
        assert code == 0  # 2U = 2.88 > V = 2.44
        assert "euclidean-2u-v" in (out / "margins.csv").read_text()
        text3 = text.replace("curvature.d = 2", "curvature.d = 3").replace(
            "law.a = const:1.2", "law.a = const:1.0")
        code, _ = run_cli(tmp_path, "eu3.cfg", text3, "classify")
        assert code == 1  # d=3 a=b=1: 2U=2 < V=3


class TestMomentsCommand:
    CFG = (
        "curvature.k = 1.0\ncurvature.d = 3\nlaw.kind = elliptic\n"
        "law.a = const:2.0\nlaw.b = const:1.0\nsim.seed = 3\n"
        "grid.start = 5\ngrid.stop = 5\ngrid.count = 1\n"
        "classify.samples = 100000\n"
    )

    def test_elliptic_moments_within_three_se(self, tmp_path, capsys):
        code, out = run_cli(tmp_path, "m.cfg", self.CFG, "moments")
        assert code == 0
        rows = {}
        for line in (out / "moments.csv").read_text().splitlines():
            if line.startswith("#") or line.startswith("r,"):
                continue
            parts = line.split(",")
            rows[parts[1]] = (float(parts[2]), float(parts[3]), parts[4])
        est, hw_, ref = rows["E[d_tot^2]"]
        assert abs(est - 6.0) < 3 * hw_ / 2.5758 * 3 or abs(est - 6.0) < 1.2 * hw_
        assert ref == "6.0"
        est, hw_, ref = rows["E[d_rad^2]"]
        assert abs(est - 4.0) < 1.2 * hw_
        assert ref == "4.0"

    def test_inward_biased_mean(self, tmp_path, capsys):
        text = self.CFG.replace("law.kind = elliptic", "law.kind = inwardbiased")
        text = text.replace("law.a = const:2.0\nlaw.b = const:1.0\n", "law.n = 1.0\n")
        code, out = run_cli(tmp_path, "mi.cfg", text, "moments")
        assert code == 0
        content = (out / "moments.csv").read_text()
        row = [l for l in content.splitlines() if ",E[d_rad]," in l][0]
        parts = row.split(",")
        assert float(parts[2]) == pytest.approx(-1.0, abs=1.2 * float(parts[3]) + 1e-6)
        assert parts[4] == "-1.0"

    def test_heavytail_bound_columns(self, tmp_path, capsys):
        text = (
            "curvature.k = 1.0\ncurvature.d = 2\nlaw.kind = heavytail\nlaw.m = 4.0\n"
            "sim.seed = 3\ngrid.start = 100\ngrid.stop = 100\ngrid.count = 1\n"
            "classify.samples = 400000\n"
        )
        code, out = run_cli(tmp_path, "mh.cfg", text, "moments")
        assert code == 0
        lines = (out / "moments.csv").read_text().splitlines()
        trans = [l for l in lines if "transverse-second-moment" in l][0].split(",")
        est, hw_, bound = float(trans[2]), float(trans[3]), float(trans[4])
        assert trans[5] == "upper"
        assert est <= bound + 3 * hw_ / 2.5758 * 3
        nu1 = [l for l in lines if "nu1-lower-bound" in l][0].split(",")
        est, hw_, bound = float(nu1[2]), float(nu1[3]), float(nu1[4])
        assert nu1[5] == "lower"
        assert est >= bound - 1.2 * hw_


class TestValidateCommand:
    def test_healthy_build_passes(self, tmp_path, capsys):
        cfg = tmp_path / "v.cfg"
        cfg.write_text("sim.seed = 5\n")
        assert main(["validate", "--config", str(cfg)]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 5 and "FAIL" not in out


class TestPinchedDispatch:
    def test_kmin_kmax_profiles_route_to_pinched(self, tmp_path, capsys):
        text = (
            "curvature.kind = hyperbolic\ncurvature.k_min = const:1.0\n"
            "curvature.k_max = const:1.0\ncurvature.d = 2\n"
            "law.kind = inwardbiased\nlaw.n = 1.0\nsim.seed = 4\n"
            "grid.start = 10\ngrid.stop = 200\ngrid.count = 6\ngrid.spacing = log\n"
            "classify.samples = 60000\n"
        )
        code, out = run_cli(tmp_path, "p.cfg", text, "classify")
        assert code == 1
        assert "pinched-transient" in (out / "margins.csv").read_text()

    def test_half_specified_profiles_rejected(self):
        with pytest.raises(ConfigError) as err:
            parse_config("curvature.k_min = const:1.0\ncurvature.d = 2\n"
                         "law.kind = box\nlaw.a = const:1\nlaw.b = const:1\n"
                         "sim.seed = 1\ngrid.start = 1\ngrid.stop = 2\n"
                         "grid.count = 2\n", "classify")
        assert "k_max" in str(err.value)


GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


class TestGoldenRuns:
    """Frozen-output regression: the three sample ensembles must reproduce
    their first validated run byte for byte.  Pinned to this environment's
    numpy stream implementation; regenerate the golden files when the rng
    backend changes."""

    @pytest.mark.parametrize("name", ["sim-small", "sim-recurrent-small",
                                      "sim-euclid-small"])
    def test_byte_identical_to_golden(self, name, tmp_path, capsys):
        cfg = os.path.join(GOLDEN, name + ".cfg")
        out = tmp_path / name
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        for fname in ("trajectories.csv", "summary.csv"):
            got = (out / fname).read_bytes()
            want_path = os.path.join(GOLDEN, name + ".out", fname)
            with open(want_path, "rb") as fh:
                assert got == fh.read(), f"{name}/{fname} diverged from golden"
