"""Tests for the command-line interface and individual stages."""

import pytest

from src.main import build_parser, main
from src.models.params import EXTRACTOR, SEGMENTATION
from src.stages import STAGES, RunPaths, SynthStage, TrainEndToEndStage
from src.utils.exceptions import StageInputError

SMALL = [
    "--set", "gen.width=256",
    "--set", "gen.height=256",
    "--set", "gen.patch_size=32",
    "--set", "gen.max_lumps=2",
    "--set", "gen.n_slides=5",
]


class TestParser:
    """Test the argument parser."""

    def test_subcommands(self):
        """Test every stage and the pipeline are subcommands."""
        parser = build_parser()
        for command in list(STAGES) + ["pipeline", "summarize"]:
            args = parser.parse_args([command, "--seed", "3"])
            assert args.command == command
            assert args.seed == 3

    def test_summarize_runs(self):
        """Test summarize takes --runs and defaults to three runs."""
        parser = build_parser()
        assert parser.parse_args(["summarize"]).runs == 3
        assert parser.parse_args(["summarize", "--runs", "5"]).runs == 5

    def test_repeatable_set(self):
        """Test --set collects overrides in order."""
        args = build_parser().parse_args(["eval", "--set", "a.b=1", "--set", "c.d=2"])
        assert args.overrides == ["a.b=1", "c.d=2"]


class TestMain:
    """Test exit codes and stage runs through main."""

    def test_unknown_key(self, tmp_path):
        """Test an invalid configuration exits with 1."""
        assert main(["synth", "--out", str(tmp_path), "--set", "nosuch.key=1"]) == 1

    def test_missing_config_file(self, tmp_path):
        """Test a missing --config file exits with 1."""
        assert main(["synth", "--config", str(tmp_path / "absent.txt")]) == 1

    def test_missing_inputs(self, tmp_path, capsys):
        """Test a stage without its inputs exits with 1 and names them."""
        assert main(["preprocess", "--out", str(tmp_path)] + SMALL) == 1
        assert "manifest.txt" in capsys.readouterr().err

    def test_synth_twice_identical(self, tmp_path):
        """Test running synth twice with one seed produces identical datasets."""
        for name in ("a", "b"):
            assert main(["synth", "--seed", "4", "--out", str(tmp_path / name)] + SMALL) == 0
        first = tmp_path / "a"
        files = sorted(p.relative_to(first) for p in (first / "dataset").rglob("*"))
        assert files
        for rel in files:
            if (tmp_path / "a" / rel).is_file():
                assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
        assert (tmp_path / "a" / "manifests" / "synth.txt").is_file()
        assert "Running synth" in (tmp_path / "a" / "run.log").read_text(encoding="utf-8")


class TestStages:
    """Test stage preconditions."""

    def test_e2e_needs_checkpoints(self, tiny_run_config):
        """Test warm-started end-to-end training names both missing checkpoints."""
        with pytest.raises(StageInputError) as exc_info:
            TrainEndToEndStage().run(tiny_run_config)
        paths = RunPaths(tiny_run_config.out_dir)
        assert exc_info.value.missing == [
            str(paths.checkpoint(EXTRACTOR)),
            str(paths.checkpoint(SEGMENTATION)),
        ]

    def test_execute_reports_errors(self, tiny_run_config):
        """Test the workflow node turns a failure into a state error."""
        update = TrainEndToEndStage().execute({"run_config": tiny_run_config})
        assert update["current_stage"] == "train-e2e"
        assert "checkpoint" in update["errors"][0]

    def test_synth_result(self, tiny_run_config):
        """Test the synth stage reports its split sizes."""
        result = SynthStage().run(tiny_run_config)
        assert result.notes == ["split train = 3", "split val = 1", "split test = 1"]
        assert (tiny_run_config.out_dir / "dataset" / "manifest.txt").is_file()


class TestMainErrors:
    """Test exit codes for interruption and pipeline failures."""

    def test_keyboard_interrupt(self, mocker, tmp_path):
        """Test an interrupted run exits with 130."""
        mocker.patch("src.main.run_command", side_effect=KeyboardInterrupt)
        assert main(["synth", "--out", str(tmp_path)]) == 130

    def test_pipeline_error(self, mocker, tmp_path, capsys):
        """Test a pipeline state with errors exits with 1 and prints the first error."""
        mocker.patch(
            "src.main.PipelineWorkflow.execute",
            return_value={"errors": ["train-seg: no labeled cells"], "completed": []},
        )
        assert main(["pipeline", "--out", str(tmp_path)]) == 1
        assert "no labeled cells" in capsys.readouterr().err

    def test_summarize_command(self, mocker, tmp_path):
        """Test summarize hands the run count to the repeated-runs workflow."""
        repeated = mocker.patch("src.main.RepeatedRuns")
        assert main(["summarize", "--runs", "4", "--out", str(tmp_path)]) == 0
        repeated.assert_called_once_with(4)
        assert repeated.return_value.execute.call_count == 1

    def test_summarize_zero_runs(self, tmp_path, capsys):
        """Test summarize with no runs exits with 1."""
        assert main(["summarize", "--runs", "0", "--out", str(tmp_path)]) == 1
        assert "at least one run" in capsys.readouterr().err

    def test_invalid_environment(self, mocker, tmp_path):
        """Test unusable environment settings exit with 2."""
        mocker.patch("src.main.config.validate", return_value=False)
        assert main(["synth", "--out", str(tmp_path)]) == 2
