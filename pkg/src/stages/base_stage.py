"""Base class for all pipeline stages."""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence

from src.synth.dataset import MANIFEST_NAME, DatasetManifest
from src.tools.manifest_tool import ManifestTool
from src.utils.config import RunConfig
from src.utils.exceptions import StageExecutionError, StageInputError, TileSegException
from src.utils.logger import logger


class RunPaths:
    """Artifact locations below a run's output directory.

    Dataset and patches resolve below ``data_dir`` when it is given, so
    several runs can train on one generated dataset.
    """

    def __init__(self, out_dir, data_dir=None):
        self.root = Path(out_dir)
        self.data_root = Path(data_dir) if data_dir is not None else self.root

    @property
    def dataset(self) -> Path:
        return self.data_root / "dataset"

    @property
    def patches(self) -> Path:
        return self.data_root / "patches"

    @property
    def features(self) -> Path:
        return self.root / "features"

    @property
    def models(self) -> Path:
        return self.root / "models"

    @property
    def traces(self) -> Path:
        return self.root / "traces"

    @property
    def predictions(self) -> Path:
        return self.root / "predictions"

    @property
    def metrics(self) -> Path:
        return self.root / "metrics"

    @property
    def heatmaps(self) -> Path:
        return self.root / "heatmaps"

    def checkpoint(self, kind: str, end_to_end: bool = False) -> Path:
        suffix = "_e2e" if end_to_end else ""
        return self.models / f"{kind}{suffix}.tns"


@dataclass
class StageResult:
    """What a stage produced: named artifacts plus provenance notes."""

    stage: str
    outputs: Dict[str, str] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)


class BaseStage(ABC):
    """Abstract base class for the pipeline's stages.

    A stage reads its inputs from files under the run directory, writes its
    outputs there, and records a manifest. ``run`` raises on failure; the
    workflow node ``execute`` turns failures into state errors instead.

    Attributes:
        name: Stage identifier used in logs
        command: CLI subcommand and manifest name
        inputs: Run-relative paths hashed into the manifest
    """

    name: str = "Stage"
    command: str = "stage"

    def __init__(self):
        self.logger = logger

    @abstractmethod
    def _run(self, run_config: RunConfig, paths: RunPaths) -> StageResult:
        """Do the stage's work and return its artifacts."""

    def input_paths(self, paths: RunPaths) -> Sequence[Path]:
        return ()

    def run(self, run_config: RunConfig) -> StageResult:
        """Run the stage and write its manifest.

        Raises:
            TileSegException: On any library failure, wrapped in
                ``StageExecutionError`` unless it already names its cause
        """
        paths = RunPaths(run_config.out_dir, run_config.data_dir)
        self._log_execution("Starting...")
        try:
            result = self._run(run_config, paths)
        except (StageInputError, StageExecutionError):
            raise
        except TileSegException as e:
            raise StageExecutionError(self.command, str(e), e) from e

        ManifestTool(paths.root).execute(
            self.command, run_config, self.input_paths(paths), result.outputs, result.notes
        )
        self._log_execution("✓ Complete")
        return result

    def execute(self, state: Dict) -> Dict:
        """Workflow node: run the stage and return a partial state update.

        Args:
            state: Pipeline state holding ``run_config``

        Returns:
            Update with the stage's artifacts, or with the error message
        """
        try:
            result = self.run(state["run_config"])
            return {
                "completed": [self.command],
                "artifacts": {f"{self.command}.{k}": v for k, v in result.outputs.items()},
                "manifest_lines": result.notes,
                "current_stage": self.command,
            }
        except Exception as e:
            self.logger.error(f"Error in {self.name}: {str(e)}")
            return {"errors": [str(e)], "current_stage": self.command}

    def _dataset(self, paths: RunPaths) -> DatasetManifest:
        return DatasetManifest.read(paths.dataset / MANIFEST_NAME)

    def _require(self, *files: Path) -> None:
        missing = [str(f) for f in files if not f.is_file()]
        if missing:
            raise StageInputError(f"{self.command} needs earlier stage outputs", missing)

    def _log_execution(self, message: str):
        """Log stage execution with a stage-specific prefix.

        Args:
            message: Log message describing current execution step
        """
        self.logger.info(f"[{self.name}] {message}")
