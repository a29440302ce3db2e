"""Loss traces written as ``epoch,step,loss,peak_live_elements`` CSV."""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

TRACE_HEADER = ("epoch", "step", "loss", "peak_live_elements")


@dataclass
class LossTrace:
    """Training rows plus an optional per-epoch validation loss."""

    rows: List[Tuple[int, int, float, int]] = field(default_factory=list)
    validation: List[Tuple[int, float]] = field(default_factory=list)

    def add(self, epoch: int, step: int, loss: float, peak_live_elements: int) -> None:
        self.rows.append((epoch, step, float(loss), int(peak_live_elements)))

    def add_validation(self, epoch: int, loss: float) -> None:
        self.validation.append((epoch, float(loss)))

    def epoch_mean(self, epoch: int) -> float:
        losses = [row[2] for row in self.rows if row[0] == epoch]
        return float(np.mean(losses)) if losses else float("nan")

    @property
    def final_validation(self) -> float:
        return self.validation[-1][1] if self.validation else float("nan")

    def write_csv(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(TRACE_HEADER)
            for epoch, step, loss, peak in self.rows:
                writer.writerow([epoch, step, repr(loss), peak])
