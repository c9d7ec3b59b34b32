import io
import os
import subprocess
import sys

import pytest

from lsai import cli, config
from lsai.config import ConfigError, load_scenario

MINI_SCENARIO = """\
[world]
arena_size = 60
cell_size = 5
n_robots = 3
n_targets = 4
sensing_radius = 10.0

[ddpg]
batch_size = 16
buffer_capacity = 512
reward_energy = 0.2

[experiment]
method = distributed
rounds = 1
act_seconds = 8
mission_seconds = 20
"""


@pytest.fixture
def scenario_path(tmp_path):
    p = tmp_path / "mini.ini"
    p.write_text(MINI_SCENARIO)
    return str(p)


class TestLoadScenario:
    def test_values_land_in_right_configs(self, scenario_path):
        sc = load_scenario(scenario_path)
        assert sc.world.arena_size == 60.0
        assert sc.world.n_robots == 3
        assert sc.method.method == "distributed"
        assert sc.method.rounds == 1
        assert sc.method.ddpg.batch_size == 16
        assert sc.method.reward.energy == 0.2

    def test_defaults_fill_missing(self, scenario_path):
        sc = load_scenario(scenario_path)
        assert sc.method.temperature == 0.5
        assert sc.method.comms.backhaul_delay == 2.0

    def test_overrides(self, scenario_path):
        sc = load_scenario(scenario_path, {"method": "lsai"})
        assert sc.method.method == "lsai"

    def test_unknown_section(self, tmp_path):
        p = tmp_path / "bad.ini"
        p.write_text("[worlds]\narena_size = 60\n")
        with pytest.raises(ConfigError) as ei:
            load_scenario(str(p))
        assert ei.value.path == "worlds"

    def test_unknown_key_has_full_path(self, tmp_path):
        p = tmp_path / "bad.ini"
        p.write_text("[world]\narena_sizee = 60\n")
        with pytest.raises(ConfigError) as ei:
            load_scenario(str(p))
        assert ei.value.path == "world.arena_sizee"

    def test_unparseable_value(self, tmp_path):
        p = tmp_path / "bad.ini"
        p.write_text("[world]\nn_robots = many\n")
        with pytest.raises(ConfigError) as ei:
            load_scenario(str(p))
        assert ei.value.path == "world.n_robots"

    def test_semantic_violation(self, tmp_path):
        p = tmp_path / "bad.ini"
        p.write_text("[world]\narena_size = 17\ncell_size = 5\n")
        with pytest.raises(ConfigError):
            load_scenario(str(p))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_scenario(str(tmp_path / "absent.ini"))

    def test_committed_scenarios_parse(self):
        root = os.path.join(os.path.dirname(__file__), "..", "scenarios")
        for name in ("desk.ini", "paper.ini"):
            sc = load_scenario(os.path.join(root, name))
            assert sc.world.n_robots >= 1


class TestCliExitCodes:
    def test_run_config_error_exits_2(self, tmp_path):
        p = tmp_path / "bad.ini"
        p.write_text("[world]\nn_robots = many\n")
        code = cli.main(["run", "--config", str(p), "--out", str(tmp_path / "o")])
        assert code == cli.EXIT_CONFIG

    def test_sweep_bad_method_exits_2(self, scenario_path, tmp_path):
        code = cli.main(["sweep", "--config", scenario_path, "--robots", "3",
                         "--seeds", "1", "--method", "telepathy",
                         "--out", str(tmp_path / "o")])
        assert code == cli.EXIT_CONFIG

    def test_sweep_bad_robot_list_exits_2(self, scenario_path, tmp_path):
        code = cli.main(["sweep", "--config", scenario_path, "--robots", "3,x",
                         "--seeds", "1", "--out", str(tmp_path / "o")])
        assert code == cli.EXIT_CONFIG

    def test_replay_missing_trace_exits_2(self, tmp_path):
        code = cli.main(["replay", "--trace", str(tmp_path / "absent.txt")])
        assert code == cli.EXIT_CONFIG

    def test_replay_bad_trace_exits_1(self, tmp_path):
        p = tmp_path / "junk.txt"
        p.write_text("not a trace\n")
        code = cli.main(["replay", "--trace", str(p)])
        assert code == cli.EXIT_RUNTIME


class TestCliRun:
    def test_run_writes_artifacts(self, scenario_path, tmp_path, capsys):
        out = tmp_path / "out"
        code = cli.main(["run", "--config", scenario_path, "--seed", "0",
                         "--out", str(out)])
        assert code == cli.EXIT_OK
        for name in ("results.csv", "round_reports.jsonl", "packets.csv",
                     "trace.txt"):
            assert (out / name).exists(), name
        captured = capsys.readouterr().out
        assert "rows=1" in captured

    def test_run_then_replay_roundtrip(self, scenario_path, tmp_path):
        out = tmp_path / "out"
        assert cli.main(["run", "--config", scenario_path,
                         "--out", str(out)]) == cli.EXIT_OK
        assert cli.main(["replay", "--trace", str(out / "trace.txt")]) == cli.EXIT_OK

    def test_method_override(self, scenario_path, tmp_path):
        out = tmp_path / "out"
        code = cli.main(["run", "--config", scenario_path, "--method", "lsai",
                         "--out", str(out)])
        assert code == cli.EXIT_OK
        assert ",lsai," in (out / "results.csv").read_text()


class TestCliSweep:
    def test_sweep_outputs(self, scenario_path, tmp_path, capsys):
        out = tmp_path / "sweep"
        code = cli.main(["sweep", "--config", scenario_path, "--robots", "3,4",
                         "--seeds", "2", "--method", "distributed",
                         "--out", str(out)])
        assert code == cli.EXIT_OK
        csv_lines = (out / "results.csv").read_text().splitlines()
        assert len(csv_lines) == 1 + 4
        assert (out / "summary.json").exists()

    def test_sweep_deterministic_bytes(self, scenario_path, tmp_path):
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            assert cli.main(["sweep", "--config", scenario_path,
                             "--robots", "3", "--seeds", "2",
                             "--method", "distributed",
                             "--out", str(out)]) == cli.EXIT_OK
            outs.append((out / "results.csv").read_bytes()
                        + (out / "summary.json").read_bytes())
        assert outs[0] == outs[1]
