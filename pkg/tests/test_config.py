"""Tests for configuration assembly: defaults, file, overrides, seed."""

import json

import pytest

from touchmap.config import (
    ConfigError,
    DspConfig,
    PathsConfig,
    PipelineConfig,
    load_config,
)


class TestDefaults:
    def test_no_inputs_yield_documented_defaults(self):
        cfg = load_config()
        assert cfg.seed == 0
        assert cfg.dsp == DspConfig(sample_rate=16000, window=480, hop=160, fft_size=512)
        assert cfg.detector.energy_prominence_ratio == 4.0
        assert cfg.detector.flatness_min == 0.3
        assert cfg.detector.onset_ratio_min == 3.0
        assert cfg.manifold.n_neighbors == 15
        assert cfg.regressor.lr == 1e-3
        assert cfg.paths == PathsConfig()

    def test_dsp_validation(self):
        with pytest.raises(ValueError):
            DspConfig(window=600, fft_size=512)
        with pytest.raises(ValueError):
            DspConfig(hop=0)


class TestConfigFile:
    def test_file_values_override_defaults(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(
            json.dumps(
                {
                    "seed": 5,
                    "detector": {"flatness_min": 0.4},
                    "manifold": {"n_neighbors": 10},
                    "paths": {"events": "found.jsonl"},
                }
            )
        )
        cfg = load_config(path)
        assert cfg.seed == 5
        assert cfg.detector.flatness_min == 0.4
        assert cfg.detector.energy_prominence_ratio == 4.0  # untouched default
        assert cfg.manifold.n_neighbors == 10
        assert cfg.paths.events == "found.jsonl"

    @pytest.mark.parametrize(
        "payload,match",
        [
            ("{not json", "JSON"),
            ("[1, 2]", "object"),
            (json.dumps({"detectors": {}}), "unknown section"),
            (json.dumps({"detector": {"bogus_knob": 1}}), "unknown key"),
            (json.dumps({"detector": {"flatness_min": 2.0}}), "detector"),
            (json.dumps({"detector": 7}), "object"),
            (json.dumps({"seed": "twelve"}), "seed"),
        ],
    )
    def test_rejects_malformed_files(self, tmp_path, payload, match):
        path = tmp_path / "cfg.json"
        path.write_text(payload)
        with pytest.raises(ConfigError, match=match):
            load_config(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.json")


class TestOverrides:
    def test_set_overrides_beat_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"detector": {"flatness_min": 0.4}}))
        cfg = load_config(path, overrides=["detector.flatness_min=0.6"])
        assert cfg.detector.flatness_min == 0.6

    def test_values_parse_as_json_then_string(self):
        cfg = load_config(
            overrides=[
                "manifold.n_neighbors=8",
                "manifold.init=random",  # bare string
                "paths.events=my events.jsonl",  # embedded space stays a string
            ]
        )
        assert cfg.manifold.n_neighbors == 8
        assert cfg.manifold.init == "random"
        assert cfg.paths.events == "my events.jsonl"

    def test_top_level_seed_override(self):
        assert load_config(overrides=["seed=9"]).seed == 9

    @pytest.mark.parametrize(
        "override,match",
        [
            ("detector.flatness_min", "section.key=value"),
            ("rocket.fuel=1", "unknown section"),
            ("volume=11", "unknown top-level"),
            ("detector.bogus_knob=1", "unknown key"),
            ("manifold.n_neighbors=1", "manifold"),
        ],
    )
    def test_rejects_bad_overrides(self, override, match):
        with pytest.raises(ConfigError, match=match):
            load_config(overrides=[override])


class TestSeedFlag:
    def test_seed_flag_wins_over_file_and_overrides(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"seed": 5}))
        cfg = load_config(path, overrides=["seed=7"], seed=11)
        assert cfg.seed == 11

    def test_seed_flag_fills_module_seeds_left_at_default(self, tmp_path):
        cfg = load_config(seed=13)
        assert cfg.manifold.seed == 13
        assert cfg.regressor.seed == 13
        # but an explicit module seed is preserved
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"manifold": {"seed": 3}}))
        cfg = load_config(path, seed=13)
        assert cfg.manifold.seed == 3
        assert cfg.regressor.seed == 13


class TestDump:
    def test_dump_round_trips_through_file(self, tmp_path):
        cfg = load_config(overrides=["detector.flatness_min=0.45", "seed=4"])
        path = tmp_path / "dumped.json"
        path.write_text(cfg.dump())
        reloaded = load_config(path)
        assert reloaded == cfg

    def test_dump_is_valid_json_with_all_sections(self):
        doc = json.loads(PipelineConfig().dump())
        assert set(doc) == {"seed", "dsp", "detector", "manifold", "regressor", "paths"}
