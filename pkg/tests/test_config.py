import json

import numpy as np
import pytest

from odlc.config import (ExperimentConfig, build_run_config, config_digest,
                         load_config, validate_config)
from odlc.errors import ConfigError
from odlc.jsonio import digest, dumps_canonical


def base_payload(**overrides):
    payload = {
        "version": 1,
        "horizon": {"slots": 6},
        "baseload": {"constant": 10.0, "filter": [1.0, 0.5],
                     "noise_std": 0.1, "noise_bound": 0.3},
        "arrivals": {"mean": 5.0, "std": 0.4, "bound": 1.0},
    }
    payload.update(overrides)
    return payload


class TestValidation:
    def test_minimal_config(self):
        config = validate_config(base_payload())
        assert config.engine == "valley"
        assert config.runs == 100

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="extra_forbidden|Extra"):
            validate_config(base_payload(extra_knob=1))

    def test_unknown_nested_key_rejected(self):
        payload = base_payload()
        payload["baseload"]["sigma"] = 0.1  # classic typo: sigma vs noise_std
        with pytest.raises(ConfigError):
            validate_config(payload)

    def test_version_checked(self):
        with pytest.raises(ConfigError, match="version"):
            validate_config(base_payload(version=2))

    def test_std_bound_consistency(self):
        payload = base_payload()
        payload["baseload"]["noise_std"] = 0.5
        with pytest.raises(ConfigError, match="noise_bound"):
            validate_config(payload)

    def test_arrival_bound_consistency(self):
        payload = base_payload()
        payload["arrivals"] = {"mean": 1.0, "std": 0.5, "bound": 2.0}
        with pytest.raises(ConfigError, match="allow_negative"):
            validate_config(payload)

    def test_mean_profile_length(self):
        payload = base_payload()
        payload["baseload"] = {"mean": [1.0, 2.0]}
        with pytest.raises(ConfigError, match="length"):
            validate_config(payload)

    def test_exactly_one_baseload_source(self):
        payload = base_payload()
        payload["baseload"] = {"constant": 5.0, "trace": "x.csv"}
        with pytest.raises(ConfigError, match="exactly one"):
            validate_config(payload)

    def test_penetration_requires_trace(self):
        with pytest.raises(ConfigError, match="penetration"):
            validate_config(base_payload(penetration=0.3))


class TestResolve:
    def test_inline_config_resolves_to_itself(self):
        config = validate_config(base_payload())
        assert config.resolve() is config

    def test_trace_resolution(self, tmp_path):
        rows = "\n".join(f"{i},{100.0},{10.0}" for i in range(1, 7))
        (tmp_path / "t.csv").write_text(
            "slot,baseload_kw,renewable_kw\n" + rows + "\n")
        payload = base_payload(penetration=0.5)
        payload["baseload"] = {"trace": "t.csv"}
        config_file = tmp_path / "c.json"
        config_file.write_text(json.dumps(payload))
        config = load_config(config_file).resolve(base_dir=tmp_path)
        assert config.resolved
        assert config.baseload.mean == pytest.approx([50.0] * 6)

    def test_digest_requires_resolved(self):
        payload = base_payload()
        payload["baseload"] = {"trace": "t.csv"}
        config = validate_config(payload)
        with pytest.raises(ConfigError):
            config_digest(config)

    def test_digest_stable_and_content_sensitive(self):
        a = validate_config(base_payload())
        b = validate_config(base_payload())
        assert config_digest(a) == config_digest(b)
        c = validate_config(base_payload(seed=99))
        assert config_digest(a) != config_digest(c)


class TestBuildModels:
    def test_core_models_roundtrip(self):
        config = validate_config(base_payload())
        run_config = build_run_config(config)
        assert run_config.horizon == 6
        assert run_config.baseload.mean_profile == pytest.approx([10.0] * 6)
        assert run_config.arrivals.mean_energy == 5.0
        assert run_config.qp_options.kkt_tol == 1e-8

    def test_engine_override(self):
        config = validate_config(base_payload())
        assert build_run_config(config, engine="qp").engine == "qp"


class TestCanonicalJson:
    def test_seventeen_digit_floats_roundtrip(self):
        values = [0.1, 1 / 3, 2.0, 1e-300, 123456789.123456789]
        text = dumps_canonical({"values": values})
        parsed = json.loads(text)
        assert parsed["values"] == values

    def test_sorted_keys(self):
        assert dumps_canonical({"b": 1, "a": 2}) == '{"a": 2, "b": 1}'

    def test_digest_deterministic(self):
        payload = {"x": [1.5, 2.5], "y": "z"}
        assert digest(payload) == digest({"y": "z", "x": [1.5, 2.5]})

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            dumps_canonical({"x": float("nan")})

    def test_loading_bad_json(self, tmp_path):
        bad = tmp_path / "c.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(bad)
