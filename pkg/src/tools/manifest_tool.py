"""Stage manifests: config echo, input hashes and the run-wide manifest."""

import hashlib
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Union

from src.utils.config import RunConfig
from src.utils.logger import logger

PathLike = Union[str, Path]


class ManifestTool:
    """Writes ``manifests/<stage>.txt`` and appends to ``run_manifest.txt``.

    A stage manifest starts with the full run configuration, so it is itself
    a valid ``--config`` file; provenance follows as ``#`` comment lines.
    """

    def __init__(self, out_dir: PathLike):
        self.out_dir = Path(out_dir)
        self.manifest_dir = self.out_dir / "manifests"
        self.run_manifest = self.out_dir / "run_manifest.txt"

    def hash_path(self, path: PathLike) -> str:
        """SHA-256 of a file, or of every file below a directory in sorted order."""
        path = Path(path)
        digest = hashlib.sha256()
        files = [path] if path.is_file() else sorted(p for p in path.rglob("*") if p.is_file())
        for file in files:
            if path.is_dir():
                digest.update(file.relative_to(path).as_posix().encode("utf-8") + b"\0")
            with open(file, "rb") as f:
                for block in iter(lambda: f.read(1 << 20), b""):
                    digest.update(block)
        return digest.hexdigest()

    def execute(
        self,
        stage: str,
        run_config: RunConfig,
        inputs: Sequence[PathLike] = (),
        outputs: Dict[str, PathLike] = None,
        notes: Iterable[str] = (),
    ) -> Path:
        """Write the manifest of one finished stage.

        Args:
            stage: Command name of the stage
            run_config: Configuration the stage ran with
            inputs: Files or directories the stage consumed
            outputs: Named artifacts the stage produced
            notes: Extra provenance lines, e.g. memory reports

        Returns:
            Path of the stage manifest
        """
        lines: List[str] = list(run_config.to_lines())
        lines.append(f"# stage = {stage}")
        for path in inputs:
            path = Path(path)
            if path.exists():
                lines.append(f"# input {path.as_posix()} sha256={self.hash_path(path)}")
        for name, path in sorted((outputs or {}).items()):
            lines.append(f"# output {name} = {Path(path).as_posix()}")
        notes = list(notes)
        lines.extend(f"# {note}" for note in notes)

        self.manifest_dir.mkdir(parents=True, exist_ok=True)
        manifest = self.manifest_dir / f"{stage}.txt"
        manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")

        with open(self.run_manifest, "a", encoding="utf-8") as f:
            f.write(f"{stage} seed={run_config.seed} manifest={manifest.as_posix()}\n")
            for note in notes:
                f.write(f"{stage} {note}\n")
        logger.debug(f"Wrote manifest {manifest}")
        return manifest
