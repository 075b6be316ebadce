"""Configuration defaults, validation, and serialization."""

import json

import pytest

from kgfuse.config import ModelConfig
from kgfuse.errors import ConfigError


class TestDefaults:
    def test_full_scale_values(self):
        config = ModelConfig()
        assert config.d1 == 768
        assert config.d2 == 200
        assert config.layers == 12
        assert config.heads == 12
        assert config.k == 10
        assert config.mu == 10.0
        assert config.lambda1 == 2.0
        assert config.lambda2 == 4.0
        assert config.injection_layer == 10
        assert config.alpha == 0.85
        assert config.dtype == "float64"

    def test_defaults_validate(self):
        assert ModelConfig().validate() is not None


class TestValidation:
    @pytest.mark.parametrize(
        "changes, message",
        [
            ({"d1": 0}, "dimensions"),
            ({"d2": -4}, "dimensions"),
            ({"d1": 10, "heads": 3}, "divisible"),
            ({"injection_layer": 0}, "injection_layer"),
            ({"injection_layer": 13}, "injection_layer"),
            ({"alpha": 0.0}, "alpha"),
            ({"alpha": 1.0}, "alpha"),
            ({"k": 0}, "k="),
            ({"k_neg": -1}, "k_neg"),
            ({"max_len": 3}, "max_len"),
            ({"mu": 0.0}, "mu"),
            ({"dtype": "float16"}, "dtype"),
        ],
    )
    def test_rejects(self, changes, message):
        config = ModelConfig(**changes)
        with pytest.raises(ConfigError, match=message):
            config.validate()

    def test_replace_validates(self):
        with pytest.raises(ConfigError):
            ModelConfig().replace(alpha=2.0)

    def test_replace_does_not_mutate(self):
        config = ModelConfig()
        other = config.replace(d2=16)
        assert config.d2 == 200
        assert other.d2 == 16


class TestSerialization:
    def test_dict_round_trip(self):
        config = ModelConfig(d1=64, d2=16, layers=2, heads=4,
                             injection_layer=1, seed=3)
        assert ModelConfig.from_dict(config.to_dict()) == config

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            ModelConfig.from_dict({"bogus": 1})

    def test_partial_dict_fills_defaults(self):
        config = ModelConfig.from_dict({"d2": 16})
        assert config.d2 == 16
        assert config.d1 == 768

    def test_from_json(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"d2": 16, "seed": 9}))
        config = ModelConfig.from_json(path)
        assert config.d2 == 16
        assert config.seed == 9

    def test_from_json_rejects_non_object(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="JSON object"):
            ModelConfig.from_json(path)

    def test_from_json_rejects_bad_json(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError, match="invalid JSON"):
            ModelConfig.from_json(path)
