import dataclasses

import pytest
import yaml

from mlofdm.harness.config import (DETECTORS, OUTPUT_ENV, ExperimentConfig, config_from_dict,
                                   dump_config, load_config)


class TestDefaults:
    def test_reference_scenario(self):
        c = ExperimentConfig()
        assert (c.modulation, c.users, c.n_subcarriers, c.n_pilots) == (4, 4, 64, 64)
        assert c.cp_len == 16
        assert c.snr_db == [5.0, 10.0, 15.0, 20.0, 25.0]
        assert c.dnn.hidden == [500, 250, 120] and c.dnn.outputs == 64
        assert (c.elm.hidden, c.elm.pilots) == (50, 100)
        assert (c.trials, c.elm_trials) == (10_000, 1_000)
        assert c.channel.n_taps == 8
        assert tuple(c.detectors) == DETECTORS

    def test_empty_file_gives_defaults(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("")
        assert load_config(p) == ExperimentConfig()


class TestValidation:
    def test_unknown_top_level_key(self):
        with pytest.raises(ValueError, match="unknown keys"):
            config_from_dict({"modulaton": 4})

    @pytest.mark.parametrize("data", [{"channel": {"taps": 4}}, {"dnn": {"train": {"epoch": 3}}},
                                      {"elm": {"hidden_nodes": 10}}])
    def test_unknown_nested_key(self, data):
        with pytest.raises(ValueError, match="unknown keys"):
            config_from_dict(data)

    @pytest.mark.parametrize("data", [{"modulation": 8}, {"n_pilots": 0}, {"n_pilots": 65},
                                      {"detectors": ["zf"]}, {"trials": 0}, {"snr_db": []},
                                      {"cp_fraction": -0.1}])
    def test_bad_values(self, data):
        with pytest.raises(ValueError):
            config_from_dict(data)

    def test_nested_must_be_mapping(self):
        with pytest.raises(ValueError):
            config_from_dict({"channel": [1, 2]})


class TestRoundTrip:
    def test_yaml_round_trip(self, tmp_path):
        c = config_from_dict({"scenario": "x", "n_pilots": 8, "channel": {"n_taps": 4},
                              "dnn": {"train": {"epochs": 3}}, "seed": 9})
        p = tmp_path / "c.yaml"
        dump_config(c, p)
        assert load_config(p) == c
        assert yaml.safe_load(p.read_text())["dnn"]["train"]["epochs"] == 3

    def test_digest_ignores_output_dir(self):
        a = ExperimentConfig()
        assert a.digest() == dataclasses.replace(a, output_dir="elsewhere").digest()
        assert a.digest() != dataclasses.replace(a, seed=1).digest()


class TestOutputOverride:
    def test_env_overrides_output_dir(self, monkeypatch, tmp_path):
        monkeypatch.setenv(OUTPUT_ENV, str(tmp_path))
        assert ExperimentConfig(output_dir="ignored").resolved_output_dir() == tmp_path

    def test_no_env(self, monkeypatch):
        monkeypatch.delenv(OUTPUT_ENV, raising=False)
        assert str(ExperimentConfig(output_dir="out").resolved_output_dir()) == "out"

    def test_env_touches_nothing_else(self, monkeypatch, tmp_path):
        monkeypatch.setenv(OUTPUT_ENV, str(tmp_path))
        monkeypatch.setenv("MLOFDM_SEED", "5")
        assert ExperimentConfig().seed == 0
