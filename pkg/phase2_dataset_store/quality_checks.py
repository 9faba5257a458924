"""Data quality checks over a loaded Dataset."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
from rich.console import Console
from rich.table import Table

from config.model_profile import EEG_CHANNELS, SCREEN_MM
from phase2_dataset_store.records import Dataset

console = Console()


def run_quality_checks(ds: Dataset, expected_channels: int = EEG_CHANNELS,
                       verbose: bool = True) -> tuple[int, int]:
    """Run all quality checks. Returns (passed_count, failed_count)."""
    if verbose:
        console.print("\n[bold blue]Data Quality Checks[/bold blue]\n")

    passed = 0
    failed = 0
    results = []

    def record(ok: bool, check: str, detail: str) -> None:
        nonlocal passed, failed
        results.append(("PASS" if ok else "FAIL", check, detail))
        if ok:
            passed += 1
        else:
            failed += 1

    record(ds.channels == expected_channels, f"channels == {expected_channels}",
           f"{ds.channels} channels")

    record(bool(np.isfinite(ds.signals).all()), "signals finite", f"{ds.signals.size:,} values")
    record(bool(np.isfinite(ds.labels).all()), "labels finite", f"{len(ds)} labels")

    flat = int((ds.signals.std(axis=(0, 2)) == 0).sum())
    record(flat == 0, "no flat channels", f"{flat} channels with zero variance")

    width, height = SCREEN_MM["width_mm"], SCREEN_MM["height_mm"]
    off_screen = int((
        (ds.labels[:, 0] < 0) | (ds.labels[:, 0] > width)
        | (ds.labels[:, 1] < 0) | (ds.labels[:, 1] > height)
    ).sum())
    record(off_screen == 0, f"labels within {width} x {height} mm", f"{off_screen} off screen")

    n_subjects = len(ds.subjects)
    record(n_subjects >= 2, "subjects >= 2 (splittable)", f"{n_subjects} subjects")

    counts = np.unique(ds.subject_ids, return_counts=True)[1]
    results.append(("INFO", "samples per subject", f"min {counts.min()} / max {counts.max()}"))

    if verbose:
        table = Table(title="Quality Check Results")
        table.add_column("Status", style="bold")
        table.add_column("Check")
        table.add_column("Detail")

        for status, check, detail in results:
            style = {"PASS": "green", "FAIL": "red", "INFO": "dim"}[status]
            table.add_row(f"[{style}]{status}[/{style}]", check, detail)

        console.print(table)
        console.print(f"\n[{'green' if failed == 0 else 'red'}]Passed: {passed} | Failed: {failed}[/]")

    return passed, failed
