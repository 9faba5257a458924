"""Training run reports.

The structured form (`to_structured`) is the stable machine-readable output
of `train` and `ablate`. Its keys are:

    per_seed_rmse   {seed: best validation RMSE in mm, or null if the seed failed}
    mean, std       over successful seeds; std uses the n - 1 denominator (0.0 for one seed)
    epochs          {seed: {"best": epoch of best RMSE, "stopped": last epoch run}}
    wall_seconds    {seed: training wall time}
    failures        {seed: diagnostic} for seeds aborted by a numeric failure
"""

import json
from pathlib import Path
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict
from rich.console import Console
from rich.table import Table

from phase2_dataset_store.binary import atomic_write

console = Console()


class SeedResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int
    best_val_rmse: Optional[float] = None
    best_epoch: Optional[int] = None
    stop_epoch: int = 0
    wall_seconds: float = 0.0
    history: list[float] = []
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.best_val_rmse is not None


def mean_std(values: list[float]) -> tuple[Optional[float], Optional[float]]:
    if not values:
        return None, None
    arr = np.asarray(values, dtype=np.float64)
    std = float(np.std(arr, ddof=1)) if len(arr) > 1 else 0.0
    return float(np.mean(arr)), std


class RunReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    seeds: list[SeedResult]
    mean: Optional[float] = None
    std: Optional[float] = None
    label: str = "EEGViT-TCNet"

    @classmethod
    def from_results(cls, results: list[SeedResult], label: str = "EEGViT-TCNet") -> "RunReport":
        mean, std = mean_std([r.best_val_rmse for r in results if r.ok])
        return cls(seeds=results, mean=mean, std=std, label=label)

    @property
    def failed(self) -> list[SeedResult]:
        return [r for r in self.seeds if not r.ok]

    def recompute(self) -> tuple[Optional[float], Optional[float]]:
        return mean_std([r.best_val_rmse for r in self.seeds if r.ok])

    def to_structured(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "per_seed_rmse": {str(r.seed): r.best_val_rmse for r in self.seeds},
            "mean": self.mean,
            "std": self.std,
            "epochs": {str(r.seed): {"best": r.best_epoch, "stopped": r.stop_epoch}
                       for r in self.seeds},
            "wall_seconds": {str(r.seed): r.wall_seconds for r in self.seeds},
            "failures": {str(r.seed): r.error for r in self.seeds if r.error is not None},
        }

    def deterministic_view(self) -> dict[str, Any]:
        """Structured form without wall-clock fields, for reproducibility comparisons."""
        view = self.to_structured()
        view.pop("wall_seconds")
        view["history"] = {str(r.seed): r.history for r in self.seeds}
        return view

    def to_text(self) -> str:
        return json.dumps(self.to_structured(), indent=2, sort_keys=True)

    def write(self, path: Path) -> None:
        atomic_write(Path(path), (self.to_text() + "\n").encode("utf-8"))

    def print_summary(self) -> None:
        table = Table(title=f"{self.label}: validation RMSE (mm)")
        table.add_column("Seed", justify="right", style="cyan")
        table.add_column("Best RMSE", justify="right", style="green")
        table.add_column("Best epoch", justify="right")
        table.add_column("Stopped", justify="right")
        table.add_column("Wall s", justify="right")
        for r in self.seeds:
            rmse = f"{r.best_val_rmse:.2f}" if r.ok else f"[red]failed: {r.error}[/red]"
            table.add_row(str(r.seed), rmse, str(r.best_epoch), str(r.stop_epoch),
                          f"{r.wall_seconds:.1f}")
        console.print(table)
        if self.mean is not None:
            console.print(f"[bold]mean ± std: {self.mean:.2f} ± {self.std:.2f} mm[/bold]")
