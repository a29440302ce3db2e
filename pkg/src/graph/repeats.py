"""Repeated training runs on one dataset, summarized as mean and deviation."""
from typing import Dict, List, Tuple

from src.evaluation.report import (
    read_metrics_csv,
    runs_summary_text,
    summarize_method_runs,
    write_runs_summary_csv,
)
from src.graph.workflow import PipelineWorkflow
from src.stages import DATA_STAGES, REPEATED_STAGES, RunPaths
from src.utils.config import RunConfig
from src.utils.exceptions import TileSegException, ValidationError
from src.utils.logger import logger
from src.utils.seeding import derive_seed

RUNS_DIR = "runs"
RUNS_SUMMARY_NAME = "runs_summary.csv"

MethodSummary = Dict[str, Dict[str, Tuple[float, float]]]


class RepeatedRuns:
    """Generates the dataset once, then trains and evaluates ``runs`` times.

    Run ``k`` lives in ``<out_dir>/runs/run_<k>``, reads the shared dataset
    and patches, and draws every seed from ``derive_seed(seed, "run", k)``.
    """

    def __init__(self, runs: int):
        if runs < 1:
            raise ValidationError(f"need at least one run, got {runs}")
        self.logger = logger
        self.runs = runs
        self.data_workflow = PipelineWorkflow(DATA_STAGES)
        self.run_workflow = PipelineWorkflow(REPEATED_STAGES)

    @staticmethod
    def run_config_for(run_config: RunConfig, k: int) -> RunConfig:
        """Configuration of run ``k``: derived seed, own output, shared data."""
        paths = run_config.paths.model_copy(
            update={
                "out_dir": str(run_config.out_dir / RUNS_DIR / f"run_{k:02d}"),
                "data_dir": str(run_config.data_dir),
            }
        )
        return run_config.model_copy(
            update={"seed": derive_seed(run_config.seed, "run", k), "paths": paths}
        )

    def _check(self, state: Dict) -> None:
        if state["errors"]:
            raise TileSegException(state["errors"][0])

    def execute(self, run_config: RunConfig) -> MethodSummary:
        """Run everything and write ``metrics/runs_summary.csv`` under the output directory.

        Returns:
            Mean and sample standard deviation per method and metric

        Raises:
            TileSegException: With the first error of a failing stage
        """
        self.logger.info(f"Starting {self.runs} repeated run(s) in {run_config.out_dir}")
        self._check(self.data_workflow.execute(run_config))

        metrics: List[Dict[str, Dict[str, float]]] = []
        for k in range(self.runs):
            child = self.run_config_for(run_config, k)
            self.logger.info(f"Run {k + 1}/{self.runs} (seed {child.seed}) in {child.out_dir}")
            self._check(self.run_workflow.execute(child))
            metrics.append(read_metrics_csv(RunPaths(child.out_dir).metrics / "metrics.csv"))

        summary = summarize_method_runs(metrics)
        target = RunPaths(run_config.out_dir).metrics
        write_runs_summary_csv(target / RUNS_SUMMARY_NAME, summary, self.runs)
        text = runs_summary_text(summary, self.runs)
        (target / "runs_summary.txt").write_text(text, encoding="utf-8")
        print(text, end="")
        self.logger.info(f"✓ Summarized {self.runs} run(s) in {target / RUNS_SUMMARY_NAME}")
        return summary
