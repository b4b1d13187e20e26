import json

import pytest
from click.testing import CliRunner

from odlc.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def write_config(tmp_path, **overrides):
    payload = {
        "version": 1,
        "horizon": {"slots": 6},
        "baseload": {"mean": [12.0, 11.2, 10.4, 9.6, 8.8, 8.0],
                     "filter": [1.0, 0.5],
                     "noise_std": 0.1, "noise_bound": 0.3},
        "arrivals": {"mean": 8.0, "std": 0.4, "bound": 1.0},
        "runs": 6,
        "seed": 4,
    }
    payload.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload))
    return path


def write_trace(tmp_path, rows=12):
    lines = ["slot,baseload_kw,renewable_kw"]
    lines += [f"{i},100.0,10.0" for i in range(1, rows + 1)]
    path = tmp_path / "trace.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


class TestBoundsCommand:
    def test_writes_report(self, runner, tmp_path):
        config = write_config(tmp_path)
        out = tmp_path / "out"
        result = runner.invoke(main, ["bounds", "--config", str(config),
                                      "--output-dir", str(out)])
        assert result.exit_code == 0, result.output
        report = json.loads((out / "report.json").read_text())
        assert report["kind"] == "bounds"
        assert report["analytics"]["lambda1"]["used_for_bounds"] == "statement"

    def test_byte_identical_reruns(self, runner, tmp_path):
        config = write_config(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            result = runner.invoke(main, ["bounds", "--config", str(config),
                                          "--output-dir", str(out)])
            assert result.exit_code == 0, result.output
        assert (out_a / "report.json").read_bytes() \
            == (out_b / "report.json").read_bytes()

    def test_bad_config_exit_code(self, runner, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"version": 1}))
        result = runner.invoke(main, ["bounds", "--config", str(path)])
        assert result.exit_code == 2
        assert "error [config]" in result.output


class TestSimulateCommand:
    def test_seed_and_trajectories(self, runner, tmp_path):
        config = write_config(tmp_path)
        out = tmp_path / "out"
        result = runner.invoke(main, [
            "simulate", "--config", str(config), "--seed", "9",
            "--trajectories", "--output-dir", str(out)])
        assert result.exit_code == 0, result.output
        report = json.loads((out / "report.json").read_text())
        assert report["simulation"]["seed"] == 9
        assert len(report["simulation"]["trajectory"]) == 6


class TestMcCommand:
    def test_writes_cdf_and_report(self, runner, tmp_path):
        config = write_config(tmp_path)
        out = tmp_path / "out"
        result = runner.invoke(main, [
            "mc", "--config", str(config), "--runs", "8", "--seed", "7",
            "--output-dir", str(out)])
        assert result.exit_code == 0, result.output
        lines = (out / "cdf.csv").read_text().strip().splitlines()
        report = json.loads((out / "report.json").read_text())
        assert lines[0].startswith("# config_digest=")
        assert report["config_digest"] in lines[0]
        assert "base_seed=7" in lines[0]
        assert lines[1] == "v,prob"
        assert len(lines) == 2 + 8  # stamp + header + one row per run
        assert report["ensemble"]["runs"] == 8

    def test_byte_identical_reruns(self, runner, tmp_path):
        config = write_config(tmp_path)
        blobs = []
        for name in ("a", "b"):
            out = tmp_path / name
            result = runner.invoke(main, ["mc", "--config", str(config),
                                          "--output-dir", str(out)])
            assert result.exit_code == 0, result.output
            blobs.append(((out / "report.json").read_bytes(),
                          (out / "cdf.csv").read_bytes()))
        assert blobs[0] == blobs[1]

    def test_engine_flag(self, runner, tmp_path):
        config = write_config(tmp_path)
        out = tmp_path / "out"
        result = runner.invoke(main, [
            "mc", "--config", str(config), "--runs", "3",
            "--engine", "qp", "--output-dir", str(out)])
        assert result.exit_code == 0, result.output
        report = json.loads((out / "report.json").read_text())
        assert report["engine"] == "qp"

    def test_solver_error_exit_code(self, runner, tmp_path):
        config = write_config(tmp_path, engine="qp",
                              qp={"max_iters": 1, "kkt_tol": 1e-14})
        result = runner.invoke(main, ["mc", "--config", str(config),
                                      "--runs", "2",
                                      "--output-dir", str(tmp_path / "out")])
        assert result.exit_code == 4
        assert "error [solver]" in result.output


class TestWorstCaseCommand:
    def test_match_reported(self, runner, tmp_path):
        config = write_config(tmp_path)
        out = tmp_path / "out"
        result = runner.invoke(main, ["worst-case", "--config", str(config),
                                      "--output-dir", str(out)])
        assert result.exit_code == 0, result.output
        assert "match=True" in result.output
        report = json.loads((out / "report.json").read_text())
        assert report["worst_case"]["matches_closed_form"] is True


class TestIngestCommand:
    def test_trace_preview(self, runner, tmp_path):
        trace = write_trace(tmp_path)
        result = runner.invoke(main, ["ingest", "--trace", str(trace),
                                      "--slots", "6",
                                      "--penetration", "0.3"])
        assert result.exit_code == 0, result.output
        assert "rows=12 block=2" in result.output
        assert "profile[6]" in result.output

    def test_profile_written(self, runner, tmp_path):
        trace = write_trace(tmp_path)
        profile = tmp_path / "profile.csv"
        result = runner.invoke(main, ["ingest", "--trace", str(trace),
                                      "--slots", "6",
                                      "--write-profile", str(profile)])
        assert result.exit_code == 0, result.output
        lines = profile.read_text().strip().splitlines()
        assert lines[0] == "slot,net_kw"
        assert len(lines) == 7

    def test_config_with_trace_end_to_end(self, runner, tmp_path):
        write_trace(tmp_path)
        config = write_config(tmp_path, penetration=0.3)
        payload = json.loads(config.read_text())
        payload["baseload"] = {"trace": "trace.csv", "noise_std": 0.1,
                               "noise_bound": 0.3}
        config.write_text(json.dumps(payload))
        out = tmp_path / "out"
        result = runner.invoke(main, ["simulate", "--config", str(config),
                                      "--output-dir", str(out)])
        assert result.exit_code == 0, result.output
        report = json.loads((out / "report.json").read_text())
        assert report["kind"] == "simulate"

    def test_penetration_flag_overrides_config(self, runner, tmp_path):
        write_trace(tmp_path)
        config = write_config(tmp_path)
        payload = json.loads(config.read_text())
        payload["baseload"] = {"trace": "trace.csv"}
        payload["arrivals"] = {"mean": 8.0}
        config.write_text(json.dumps(payload))
        out = tmp_path / "out"
        result = runner.invoke(main, ["simulate", "--config", str(config),
                                      "--penetration", "0.5",
                                      "--trajectories",
                                      "--output-dir", str(out)])
        assert result.exit_code == 0, result.output
        report = json.loads((out / "report.json").read_text())
        # mean baseload 100, renewable scaled to 50 -> net 50 everywhere
        assert report["simulation"]["realized_baseload"] == [50.0] * 6

    def test_penetration_needs_trace(self, runner, tmp_path):
        config = write_config(tmp_path)
        result = runner.invoke(main, ["bounds", "--config", str(config),
                                      "--penetration", "0.5"])
        assert result.exit_code == 2
        assert "requires a trace" in result.output

    def test_missing_arguments(self, runner):
        result = runner.invoke(main, ["ingest"])
        assert result.exit_code == 2

    def test_bad_trace_data_exit_code(self, runner, tmp_path):
        bad = tmp_path / "trace.csv"
        bad.write_text("slot,baseload_kw,renewable_kw\n1,-5,0\n")
        result = runner.invoke(main, ["ingest", "--trace", str(bad),
                                      "--slots", "1"])
        assert result.exit_code == 3
        assert "error [data]" in result.output


class TestOutputDirPrecedence:
    def test_env_var_used_when_no_flag(self, runner, tmp_path, monkeypatch):
        config = write_config(tmp_path)
        env_dir = tmp_path / "env_out"
        monkeypatch.setenv("ODLC_OUTPUT_DIR", str(env_dir))
        result = runner.invoke(main, ["bounds", "--config", str(config)])
        assert result.exit_code == 0, result.output
        assert (env_dir / "report.json").exists()

    def test_flag_beats_env(self, runner, tmp_path, monkeypatch):
        config = write_config(tmp_path)
        monkeypatch.setenv("ODLC_OUTPUT_DIR", str(tmp_path / "env_out"))
        flag_dir = tmp_path / "flag_out"
        result = runner.invoke(main, ["bounds", "--config", str(config),
                                      "--output-dir", str(flag_dir)])
        assert result.exit_code == 0, result.output
        assert (flag_dir / "report.json").exists()
        assert not (tmp_path / "env_out").exists()

    def test_config_output_dir_fallback(self, runner, tmp_path, monkeypatch):
        monkeypatch.delenv("ODLC_OUTPUT_DIR", raising=False)
        target = tmp_path / "from_config"
        config = write_config(tmp_path, output_dir=str(target))
        result = runner.invoke(main, ["bounds", "--config", str(config)])
        assert result.exit_code == 0, result.output
        assert (target / "report.json").exists()
