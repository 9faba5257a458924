"""Abstract base class for dataset generators."""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Optional

from rich.console import Console
from rich.table import Table

from config.model_profile import EEG_CHANNELS
from config.settings import DATASETS_DIR
from phase2_dataset_store.eegds_format import write_dataset
from phase2_dataset_store.quality_checks import run_quality_checks
from phase2_dataset_store.records import Dataset

console = Console()


class BaseGenerator(ABC):
    """Base class that all dataset generators must inherit from."""

    name: str = "base"
    expected_channels: int = EEG_CHANNELS

    def __init__(self, out_path: Optional[Path] = None, verbose: bool = True):
        self.out_path = Path(out_path) if out_path else DATASETS_DIR / f"{self.name}.eegd"
        self.verbose = verbose
        self.dataset: Optional[Dataset] = None

    @abstractmethod
    def generate(self) -> Dataset:
        """Build the dataset and store it on self.dataset."""
        ...

    def validate(self) -> list[str]:
        """Validate generated data. Returns list of error messages (empty = pass)."""
        if self.dataset is None:
            return [f"{self.name}: nothing generated"]
        _, failed = run_quality_checks(self.dataset, self.expected_channels, verbose=self.verbose)
        return [f"{self.name}: {failed} quality check(s) failed"] if failed else []

    def save(self) -> None:
        """Write the dataset as an EEGDS file."""
        write_dataset(self.dataset, self.out_path)

    def summary(self) -> None:
        """Print a summary table of the generated dataset."""
        ds = self.dataset
        table = Table(title=f"{self.name} Generator Summary")
        table.add_column("Field", style="cyan")
        table.add_column("Value", justify="right", style="green")

        table.add_row("Samples", str(len(ds)))
        table.add_row("Subjects", str(len(ds.subjects)))
        table.add_row("Channels x T", f"{ds.channels} x {ds.timepoints}")
        table.add_row("Digest", ds.digest()[:16])
        table.add_row("File", str(self.out_path))

        console.print(table)

    def run(self) -> bool:
        """Full pipeline: generate -> validate -> save -> summary."""
        if self.verbose:
            console.print(f"\n[bold blue]Generating {self.name}...[/bold blue]")
        self.generate()

        errors = self.validate()
        if errors:
            for err in errors:
                console.print(f"  [red]ERROR: {err}[/red]")
            return False

        self.save()
        if self.verbose:
            self.summary()
        return True
