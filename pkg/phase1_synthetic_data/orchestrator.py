"""Orchestrator: generates the synthetic dataset and validates output."""

import sys
from pathlib import Path
from typing import Optional

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from rich.console import Console
from rich.panel import Panel

from config.settings import RANDOM_SEED, ensure_data_dirs
from phase1_synthetic_data.generators.eeg_generator import SyntheticEEGGenerator, SyntheticSpec

console = Console()


def run_phase1(spec: Optional[SyntheticSpec] = None, out_path: Optional[Path] = None,
               verbose: bool = True) -> bool:
    """Execute the Phase 1 synthetic data generation pipeline."""
    spec = spec or SyntheticSpec(seed=RANDOM_SEED)

    if verbose:
        console.print(Panel.fit(
            "[bold green]Phase 1: Synthetic Data Generation[/bold green]\n"
            f"{spec.n_subjects} subjects x {spec.trials_per_subject} trials, "
            f"{spec.channels} channels x {spec.timepoints} samples, noise {spec.noise_std}",
            title="EEGViT-TCNet",
        ))

    if out_path is None:
        ensure_data_dirs()
    generator = SyntheticEEGGenerator(spec, out_path=out_path, verbose=verbose)
    success = generator.run()

    if not success:
        console.print(f"[bold red]FAILED: {generator.name}[/bold red]")
        return False

    if verbose:
        console.print()
        console.print(Panel.fit(
            f"[bold green]Generation Complete![/bold green]\n\n"
            f"Samples:  {len(generator.dataset)}\n"
            f"Subjects: {len(generator.dataset.subjects)}\n"
            f"Output:   {generator.out_path}",
            title="Phase 1 Summary",
        ))
    return True


if __name__ == "__main__":
    sys.exit(0 if run_phase1() else 1)
