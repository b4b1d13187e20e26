import pytest

from odlc.config import validate_config
from odlc.experiment import run_bounds, run_mc, run_simulate, run_worst_case
from odlc.jsonio import dumps_canonical


def make_config(**overrides):
    payload = {
        "version": 1,
        "horizon": {"slots": 8},
        "baseload": {"mean": [12.0, 11.4, 10.9, 10.3, 9.7, 9.1, 8.6, 8.0],
                     "filter": [1.0, 0.5, 0.25],
                     "noise_std": 0.1, "noise_bound": 0.3},
        "arrivals": {"mean": 8.0, "std": 0.4, "bound": 1.0},
        "runs": 20,
        "seed": 11,
    }
    payload.update(overrides)
    return validate_config(payload)


class TestBounds:
    def test_report_shape(self):
        report = run_bounds(make_config())
        assert report["kind"] == "bounds"
        assert report["horizon"] == 8
        analytics = report["analytics"]
        assert set(analytics["lambda1"]) == {"statement", "trace",
                                             "used_for_bounds"}
        assert analytics["tail_curve"][0] == [0.0, 1.0]
        assert "simulation" not in report and "ensemble" not in report

    def test_serializable_and_deterministic(self):
        a = dumps_canonical(run_bounds(make_config()))
        b = dumps_canonical(run_bounds(make_config()))
        assert a == b


class TestSimulate:
    def test_variance_identity_in_report(self):
        report = run_simulate(make_config(), include_trajectory=True)
        block = report["simulation"]
        assert block["v"] == pytest.approx(
            block["v_arrival"] + block["v_baseload"] + block["v_interaction"],
            rel=1e-9)
        assert block["v_decomposed"] == pytest.approx(
            block["v_arrival"] + block["v_baseload"], rel=1e-12)
        assert len(block["trajectory"]) == 8

    def test_seed_override(self):
        base = run_simulate(make_config())
        other = run_simulate(make_config(), seed=99)
        assert base["simulation"]["seed"] == 11
        assert other["simulation"]["seed"] == 99
        assert base["simulation"]["v"] != other["simulation"]["v"]

    def test_trajectory_omitted_by_default(self):
        report = run_simulate(make_config())
        assert "trajectory" not in report["simulation"]

    def test_qp_engine(self):
        report = run_simulate(make_config(), engine="qp")
        assert report["engine"] == "qp"
        assert report["simulation"]["v"] >= 0.0


class TestMc:
    def test_row_count_and_summary(self):
        report, rows = run_mc(make_config(), runs=25)
        assert len(rows) == 25  # continuous samples: all unique
        ensemble = report["ensemble"]
        assert ensemble["runs"] == 25
        assert len(ensemble["seeds"]) == 25
        assert ensemble["bound_checks"]["dominated_by_worst_case"] is True
        assert ensemble["bound_checks"]["p90_within_bound"] is True
        probs = [p for _, p in rows]
        assert probs == sorted(probs)
        assert probs[-1] == pytest.approx(1.0)

    def test_reproducible(self):
        a, rows_a = run_mc(make_config(), runs=10)
        b, rows_b = run_mc(make_config(), runs=10)
        assert dumps_canonical(a) == dumps_canonical(b)
        assert rows_a == rows_b

    def test_overrides(self):
        report, _ = run_mc(make_config(), runs=5, seed=123)
        assert report["ensemble"]["base_seed"] == 123


class TestWorstCase:
    def test_adversarial_matches_closed_form(self):
        report = run_worst_case(make_config())
        block = report["worst_case"]
        assert block["matches_closed_form"] is True
        assert block["relative_gap"] <= 1e-9
        assert block["adversarial_decomposed_v"] == pytest.approx(
            block["closed_form"], rel=1e-9)
        # The realized adversarial run differs by the interaction term.
        assert block["adversarial_realized_v"] == pytest.approx(
            block["adversarial_decomposed_v"] + block["adversarial_interaction"],
            rel=1e-9)

    def test_trajectory_flag(self):
        report = run_worst_case(make_config(), include_trajectory=True)
        assert len(report["worst_case"]["trajectory"]) == 8
