"""Central configuration for the EEGViT-TCNet project."""

from pathlib import Path
from dotenv import load_dotenv
import os

load_dotenv()

# Project root
PROJECT_ROOT = Path(__file__).parent.parent

# Data paths (overridable through .env)
DATA_DIR = Path(os.getenv("EEGVIT_DATA_DIR", PROJECT_ROOT / "data"))
DATASETS_DIR = DATA_DIR / "datasets"
REPORTS_DIR = DATA_DIR / "reports"
CACHE_DIR = Path(os.getenv("EEGVIT_CACHE_DIR", DATA_DIR / "ablation_cache"))

# Random seed for reproducibility
RANDOM_SEED = 42


def ensure_data_dirs() -> None:
    """Create the data directories used by the CLI defaults."""
    for d in [DATASETS_DIR, REPORTS_DIR, CACHE_DIR]:
        d.mkdir(parents=True, exist_ok=True)


def _flag(name: str) -> bool:
    return os.getenv(name, "0").strip().lower() in ("1", "true", "yes", "on")


def deterministic_mode() -> bool:
    """EEGVIT_DETERMINISTIC=1 forces sequential, bit-reproducible execution."""
    return _flag("EEGVIT_DETERMINISTIC")


def validation_mode() -> bool:
    """EEGVIT_VALIDATE=1 makes every forward op check its output is finite."""
    return _flag("EEGVIT_VALIDATE")
