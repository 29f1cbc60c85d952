import io
import json

import pytest

from mpo.cli import main
from mpo.netsim import Scenario, preset_dependable, run
from mpo.scenario_io import (
    ScenarioParseError,
    dump_scenario,
    dump_scenario_file,
    parse_scenario,
    parse_scenario_file,
)


GOOD_CONFIG = """
[scenario]
n = 3
horizon = 4000
seed = 5

[timers]
sender_timeout = 16
initial_receiver_timeout = 24
timeout_increment = 1

[channels]
default = timely b=3
0->1 = eventually_timely b=2 until=100
1->0 = fair_lossy q=0.5 delay=4:8
2->1 = fair_lossy drop=2
1->2 = strongly_non_timely burst=8 cap=64 delay=1:4

[crashes]
2 = 3000

[labels]
note = smoke
"""


class TestScenarioIO:
    def test_parse_and_run(self):
        scn = parse_scenario(io.StringIO(GOOD_CONFIG))
        assert scn.n == 3 and scn.horizon == 4000
        assert scn.crash_schedule == {2: 3000}
        trace = run(scn)
        assert trace.events

    def test_round_trip_preserves_fingerprint(self, tmp_path):
        scn = preset_dependable(4, seed=9, horizon=3000,
                                crash_victims=(2,), crash_steps=(1500,))
        path = tmp_path / "scn.cfg"
        dump_scenario_file(scn, str(path))
        again = parse_scenario_file(str(path))
        assert again.fingerprint() == scn.fingerprint()
        assert run(again).events == run(scn).events

    def test_missing_section_rejected(self):
        with pytest.raises(ScenarioParseError, match=r"\[scenario\]"):
            parse_scenario(io.StringIO("[timers]\nsender_timeout = 4\n"))

    def test_bad_pair_key_rejected(self):
        cfg = "[scenario]\nn = 3\nhorizon = 100\n[channels]\n0-1 = lossy\n"
        with pytest.raises(ScenarioParseError, match="0-1"):
            parse_scenario(io.StringIO(cfg))

    def test_bad_channel_spec_anchored(self):
        cfg = "[scenario]\nn = 3\nhorizon = 100\n[channels]\n0->1 = warp speed\n"
        with pytest.raises(ScenarioParseError, match="channels"):
            parse_scenario(io.StringIO(cfg))

    def test_syntax_error_carries_line(self):
        cfg = "[scenario]\nn = 3\nhorizon = 100\njunk line without equals\n"
        with pytest.raises(ScenarioParseError, match="line"):
            parse_scenario(io.StringIO(cfg))

    def test_topology_requires_all_processes(self):
        cfg = "[scenario]\nn = 3\nhorizon = 100\n[topology]\n0 = 1 2\n"
        with pytest.raises(ScenarioParseError, match="topology"):
            parse_scenario(io.StringIO(cfg))

    def test_propagation_section(self):
        cfg = ("[scenario]\nn = 3\nhorizon = 100\n"
               "[propagation]\np_reliable = 0.8\np_timely = 0.5\nbound = 3\n")
        scn = parse_scenario(io.StringIO(cfg))
        assert scn.propagation.p_reliable == 0.8
        assert scn.propagation.bound == 3

    def test_per_origin_section(self):
        cfg = ("[scenario]\nn = 3\nhorizon = 100\n"
               "[channels]\ndefault = lossy\n"
               "[channels:origin=1]\n0->2 = timely b=2\n"
               "[labels]\nx = 1\n")
        scn = parse_scenario(io.StringIO(cfg))
        assert (0, 2) in scn.origin_channels[1]
        out = io.StringIO()
        dump_scenario(scn, out)
        again = parse_scenario(io.StringIO(out.getvalue()))
        assert again.fingerprint() == scn.fingerprint()


class TestCliRun:
    def run_config(self, tmp_path, horizon=4000):
        scn = preset_dependable(3, seed=2, horizon=horizon)
        path = tmp_path / "scn.cfg"
        dump_scenario_file(scn, str(path))
        return path

    def test_run_writes_trace(self, tmp_path, capsys):
        cfg = self.run_config(tmp_path)
        out = tmp_path / "t.jsonl"
        assert main(["run", "--scenario", str(cfg), "--out", str(out)]) == 0
        assert out.exists()
        assert "wrote" in capsys.readouterr().out

    def test_run_is_reproducible_bytes(self, tmp_path):
        cfg = self.run_config(tmp_path)
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        assert main(["run", "--scenario", str(cfg), "--out", str(a)]) == 0
        assert main(["run", "--scenario", str(cfg), "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_run_missing_file_is_usage_error(self, tmp_path, capsys):
        out = tmp_path / "t.jsonl"
        rc = main(["run", "--scenario", str(tmp_path / "no.cfg"), "--out", str(out)])
        assert rc == 2
        assert "error" in capsys.readouterr().err

    def test_run_malformed_scenario_is_usage_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("[scenario]\nn = banana\nhorizon = 10\n")
        rc = main(["run", "--scenario", str(bad), "--out", str(tmp_path / "t.jsonl")])
        assert rc == 2
        assert "error" in capsys.readouterr().err


class TestCliAudit:
    def make_trace(self, tmp_path, scn):
        cfg = tmp_path / "scn.cfg"
        dump_scenario_file(scn, str(cfg))
        out = tmp_path / "t.jsonl"
        assert main(["run", "--scenario", str(cfg), "--out", str(out)]) == 0
        return out

    def test_converged_preset_passes(self, tmp_path, capsys):
        trace = self.make_trace(tmp_path, preset_dependable(4, seed=3, horizon=8000))
        report = tmp_path / "rep.json"
        rc = main(["audit", "--trace", str(trace), "--report", str(report)])
        assert rc == 0
        obj = json.loads(report.read_text())
        assert obj["leader"] == 0 and obj["converged"]

    def test_dead_network_fails_audit(self, tmp_path):
        scn = Scenario(n=3, horizon=3000, seed=1)
        scn.default_channel = __import__("mpo.channels", fromlist=["Lossy"]).Lossy()
        trace = self.make_trace(tmp_path, scn)
        assert main(["audit", "--trace", str(trace)]) == 1

    def test_cutoff_zero_fails_efficiency(self, tmp_path):
        trace = self.make_trace(tmp_path, preset_dependable(4, seed=3, horizon=8000))
        assert main(["audit", "--trace", str(trace), "--cutoff", "0"]) == 1

    def test_unreadable_trace_is_usage_error(self, tmp_path, capsys):
        bad = tmp_path / "t.jsonl"
        bad.write_text("not json\n")
        assert main(["audit", "--trace", str(bad)]) == 2
        assert main(["audit", "--trace", str(tmp_path / "none.jsonl")]) == 2


class TestCliMc:
    def test_existence_grid_csv(self, tmp_path, capsys):
        out = tmp_path / "mc.csv"
        rc = main(["mc", "--mode", "existence", "--n", "3,5", "--p", "0.8",
                   "--trials", "2000", "--seed", "1", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("mode,n,p,trials,estimate,stderr,closed_form")
        assert len(lines) == 1 + 4  # two sizes x two modes

    def test_stability_mode_json(self, capsys):
        rc = main(["mc", "--mode", "stability-single", "--n", "4", "--p", "0.9",
                   "--trials", "2000", "--seed", "2", "--json"])
        assert rc == 0
        rows = json.loads(capsys.readouterr().out)
        q = 0.9 ** 3
        assert abs(rows[0]["estimate"] - q / (1 - q)) < 0.3

    def test_zero_trials_usage_error(self, capsys):
        rc = main(["mc", "--mode", "existence", "--n", "4", "--p", "0.5",
                   "--trials", "0"])
        assert rc == 2

    def test_bad_grid_usage_error(self):
        with pytest.raises(SystemExit):
            main(["mc", "--mode", "existence", "--n", "4,banana", "--p", "0.5",
                  "--trials", "10"])


class TestCliSweepAndDemo:
    def test_sweep_emits_rows(self, capsys):
        rc = main(["sweep", "--target", "3", "--n", "6,10", "--trials", "400",
                   "--seed", "3", "--cap", "500", "--json"])
        assert rc == 0
        rows = json.loads(capsys.readouterr().out)
        assert [r["n"] for r in rows] == [6, 10]
        assert all(r["mean"] >= 0 for r in rows)

    def test_demo_small_network(self, capsys):
        rc = main(["demo", "--n", "2", "--seed", "4", "--horizon", "6000"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "leader=0" in out
        assert "max packets per tail message: " in out
        budget_line = [l for l in out.splitlines() if "max packets" in l][0]
        assert "(linear budget 2)" in budget_line

    def test_demo_with_leader_crash_reports_reelection(self, capsys):
        # crashing the designated leader wires in a backup hub; survivors
        # re-converge on it
        rc = main(["demo", "--n", "4", "--seed", "1", "--horizon", "30000",
                   "--crash", "0@5000"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "crashes: 0@5000" in out
        assert "converged: leader=1" in out

    def test_demo_crash_of_everyone_rejected(self, capsys):
        rc = main(["demo", "--n", "2", "--seed", "1", "--crash", "0@100,1@200"])
        assert rc == 2
        assert "error" in capsys.readouterr().err

    def test_demo_crash_of_follower_converges(self, capsys):
        rc = main(["demo", "--n", "5", "--seed", "6", "--horizon", "20000",
                   "--crash", "2@4000,3@9000"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "converged: leader=0" in out
        assert "crashes: 2@4000, 3@9000" in out

    def test_env_seed_respected(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("MPO_SEED", "77")
        rc = main(["demo", "--n", "3", "--horizon", "5000"])
        assert rc == 0
        assert "seed=77" in capsys.readouterr().out
