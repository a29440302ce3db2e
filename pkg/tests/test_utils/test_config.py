"""Tests for run configuration parsing and validation."""

import pytest

from src.utils.config import (
    Config,
    RunConfig,
    build_run_config,
    load_run_config,
    parse_config_lines,
)
from src.utils.exceptions import ConfigurationError


class TestParseConfigLines:
    """Test the line-based config format."""

    def test_comments_and_blanks(self):
        """Test comments and blank lines are skipped and values trimmed."""
        lines = ["# run", "", "seed = 7  # inline", "train.micro_batches=8"]
        assert parse_config_lines(lines) == {"seed": "7", "train.micro_batches": "8"}

    def test_missing_equals(self):
        """Test a line without '=' names its source and line number."""
        with pytest.raises(ConfigurationError, match="cfg.txt:2"):
            parse_config_lines(["seed = 1", "oops"], "cfg.txt")


class TestBuildRunConfig:
    """Test validation of flat dotted keys."""

    def test_defaults(self):
        """Test an empty file gives the documented defaults."""
        run_config = build_run_config({})
        assert run_config.seed == 0
        assert run_config.arch.conv_channels == (8, 16, 32)
        assert run_config.train.micro_batches == 4
        assert run_config.featuremap.map_size == 16

    def test_tuple_values(self):
        """Test comma lists, including a one-element list with a trailing comma."""
        run_config = build_run_config({"arch.conv_channels": "4,", "arch.seg_channels": "8, 16"})
        assert run_config.arch.conv_channels == (4,)
        assert run_config.arch.seg_channels == (8, 16)

    @pytest.mark.parametrize(
        "values",
        [
            {"nosuch.key": "1"},
            {"train.nosuch": "1"},
            {"train.micro_batches": "0"},
            {"featuremap.overflow": "wrap"},
            {"aug.crop_size": "32"},
            {"preprocess.patch_size": "32"},
        ],
    )
    def test_rejected(self, values):
        """Test unknown keys, out-of-range values and inconsistent crop sizes."""
        with pytest.raises(ConfigurationError):
            build_run_config(values)

    def test_resolved_arch(self):
        """Test the architecture takes the map size of the active regime."""
        run_config = build_run_config(
            {"featuremap.per_lump": "false", "featuremap.slide_map_size": "64"}
        )
        assert run_config.resolved_arch().map_size == 64


class TestLoadRunConfig:
    """Test files, overrides and the round trip through to_lines."""

    def test_overrides(self, tmp_path):
        """Test --set, --seed and --out take precedence over the file."""
        path = tmp_path / "run.txt"
        path.write_text("seed = 1\ntrain.micro_batches = 2\n", encoding="utf-8")
        run_config = load_run_config(path, ["train.micro_batches=8"], seed=9, out_dir="elsewhere")
        assert run_config.seed == 9
        assert run_config.train.micro_batches == 8
        assert run_config.paths.out_dir == "elsewhere"

    def test_missing_file(self, tmp_path):
        """Test a missing config file is a configuration error."""
        with pytest.raises(ConfigurationError):
            load_run_config(tmp_path / "absent.txt")

    def test_to_lines_round_trip(self, tmp_path, tiny_run_config):
        """Test a serialized config reloads to an equal config."""
        path = tmp_path / "echo.txt"
        path.write_text("\n".join(tiny_run_config.to_lines()) + "\n", encoding="utf-8")
        reloaded = load_run_config(path)
        assert isinstance(reloaded, RunConfig)
        assert reloaded == tiny_run_config


class TestEnvironmentConfig:
    """Test environment settings."""

    def test_validate(self):
        """Test precision and log level checks."""
        assert Config(precision="float32").validate()
        assert not Config(precision="float16").validate()
        assert not Config(log_level="LOUD").validate()
