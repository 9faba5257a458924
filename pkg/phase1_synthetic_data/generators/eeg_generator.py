"""Synthetic EEG generator: gaze-dependent latent rhythms mixed onto 129 electrodes."""

from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from autodiff.rng import RngStream
from config.errors import ConfigError
from config.model_profile import (
    DESK_ARCHITECTURE,
    EEG_CHANNELS,
    GRID_INSET_FRACTION,
    GRID_POSITIONS_PER_AXIS,
    SAMPLING_RATE_HZ,
    SCREEN_MM,
)
from phase1_synthetic_data.generators.base_generator import BaseGenerator
from phase1_synthetic_data.generators.distributions import (
    balanced_positions,
    gaze_grid,
    latent_sources,
    mixing_matrix,
    pink_noise,
)
from phase2_dataset_store.records import Dataset

SOURCE_FREQS_HZ = (10.0, 17.0)  # alpha and low-beta band rhythms
SOURCE_AMPLITUDE_UV = 10.0
POSITION_GAIN = 0.5  # amplitude = 1 + 0.5 * normalised coordinate


class SyntheticSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_subjects: int = 10
    trials_per_subject: int = 50
    grid_per_axis: int = GRID_POSITIONS_PER_AXIS
    grid_inset: float = GRID_INSET_FRACTION
    screen_width_mm: float = SCREEN_MM["width_mm"]
    screen_height_mm: float = SCREEN_MM["height_mm"]
    noise_std: float = 0.0
    gain_jitter: float = 0.1
    channels: int = EEG_CHANNELS
    timepoints: int = DESK_ARCHITECTURE["timepoints"]
    sampling_rate: float = SAMPLING_RATE_HZ
    seed: int = 0

    @model_validator(mode="after")
    def _check(self) -> "SyntheticSpec":
        if self.n_subjects < 1 or self.trials_per_subject < 1:
            raise ConfigError("n_subjects and trials_per_subject must be >= 1")
        if self.grid_per_axis < 2:
            raise ConfigError("grid_per_axis must be >= 2 so the grid spans the screen")
        if not 0.0 <= self.grid_inset < 0.5:
            raise ConfigError(f"grid_inset must be in [0, 0.5), got {self.grid_inset}")
        if self.screen_width_mm <= 0 or self.screen_height_mm <= 0:
            raise ConfigError("screen dimensions must be positive")
        if self.noise_std < 0:
            raise ConfigError(f"noise_std must be >= 0, got {self.noise_std}")
        if self.gain_jitter < 0:
            raise ConfigError(f"gain_jitter must be >= 0, got {self.gain_jitter}")
        if self.channels < 1 or self.timepoints < 1 or self.sampling_rate <= 0:
            raise ConfigError("channels, timepoints and sampling_rate must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        return self

    @property
    def grid(self) -> np.ndarray:
        return gaze_grid(self.screen_width_mm, self.screen_height_mm,
                         self.grid_per_axis, self.grid_inset)


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Build a dataset whose signals encode gaze position linearly per subject.

    Two latent sinusoids carry the normalised x and y coordinate in their
    amplitudes; a fixed mixing matrix projects them onto the electrodes and
    each subject scales every electrode by its own gain. Gaussian and 1/f
    noise are added with standard deviation `noise_std` (microvolts) each.
    """
    rng = RngStream(spec.seed)
    grid = spec.grid
    mixing = mixing_matrix(rng.substream("mixing"), spec.channels)
    phases = rng.substream("phases").uniform(0.0, 2 * np.pi, 2)
    sources = latent_sources(spec.timepoints, spec.sampling_rate, SOURCE_FREQS_HZ, phases)
    screen = np.array([spec.screen_width_mm, spec.screen_height_mm])

    signals, labels, subjects = [], [], []
    for s in range(spec.n_subjects):
        subject_rng = rng.substream(f"subject{s}")
        gain = 1.0 + spec.gain_jitter * subject_rng.normal(1.0, spec.channels)
        positions = balanced_positions(subject_rng.substream("positions"), s,
                                       spec.trials_per_subject, len(grid))
        gaze = grid[positions]  # [trials, 2] mm
        amplitude = 1.0 + POSITION_GAIN * gaze / screen  # [trials, 2]
        # [trials, channels, T] = sum_k amplitude[:, k] * mixing[:, k] * sources[k]
        clean = np.einsum("nk,ck,kt->nct", amplitude, mixing, sources)
        signal = SOURCE_AMPLITUDE_UV * gain[None, :, None] * clean
        if spec.noise_std > 0:
            shape = signal.shape
            noise_rng = subject_rng.substream("noise")
            signal = signal + spec.noise_std * (
                noise_rng.normal(1.0, shape)
                + pink_noise(noise_rng.substream("pink"), shape, spec.sampling_rate)
            )
        signals.append(signal.astype(np.float32))
        labels.append(gaze.astype(np.float32))
        subjects.append(np.full(spec.trials_per_subject, s, dtype=np.uint32))

    return Dataset(
        signals=np.concatenate(signals),
        labels=np.concatenate(labels),
        subject_ids=np.concatenate(subjects),
        provenance=f"synthetic:seed={spec.seed}:noise={spec.noise_std}",
    )


class SyntheticEEGGenerator(BaseGenerator):
    """Generates the desk-scale gaze regression dataset."""

    name = "synthetic_eeg"

    def __init__(self, spec: SyntheticSpec, out_path: Optional[Path] = None, verbose: bool = True):
        super().__init__(out_path, verbose)
        self.spec = spec
        self.expected_channels = spec.channels

    def generate(self) -> Dataset:
        self.dataset = generate_synthetic(self.spec)
        return self.dataset
