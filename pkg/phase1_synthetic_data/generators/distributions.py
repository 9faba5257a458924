"""Signal and label building blocks for synthetic EEG generation."""

import numpy as np

from autodiff.rng import RngStream


def gaze_grid(width_mm: float, height_mm: float, per_axis: int = 5,
              inset: float = 0.1) -> np.ndarray:
    """Fixation targets on a per_axis x per_axis grid inset from the screen edges. Shape [n*n, 2]."""
    xs = np.linspace(inset * width_mm, (1 - inset) * width_mm, per_axis)
    ys = np.linspace(inset * height_mm, (1 - inset) * height_mm, per_axis)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def balanced_positions(rng: RngStream, subject_index: int, trials: int, n_positions: int) -> np.ndarray:
    """Grid indices for one subject's trials.

    Trial k overall gets position k mod n_positions, so every position is used
    within one of N / n_positions times across the dataset; the order within
    a subject is shuffled.
    """
    start = subject_index * trials
    positions = (start + np.arange(trials)) % n_positions
    return positions[rng.permutation(trials)]


def latent_sources(timepoints: int, sampling_rate: float, freqs_hz: tuple[float, float],
                   phases: np.ndarray) -> np.ndarray:
    """Two unit sinusoids, shape [2, T]."""
    t = np.arange(timepoints) / sampling_rate
    return np.stack([np.sin(2 * np.pi * f * t + p) for f, p in zip(freqs_hz, phases)])


def mixing_matrix(rng: RngStream, channels: int, n_sources: int = 2) -> np.ndarray:
    """Fixed random projection of latent sources onto electrodes, shape [channels, n_sources]."""
    return rng.normal(1.0, (channels, n_sources)) / np.sqrt(n_sources)


def pink_noise(rng: RngStream, shape: tuple[int, ...], sampling_rate: float) -> np.ndarray:
    """1/f background: white noise shaped by 1/sqrt(f) in the frequency domain, unit std, no DC."""
    white = rng.normal(1.0, shape)
    n = shape[-1]
    if n < 2:
        return np.zeros(shape)
    spectrum = np.fft.rfft(white, axis=-1)
    freqs = np.fft.rfftfreq(n, d=1.0 / sampling_rate)
    scale = np.zeros_like(freqs)
    scale[1:] = 1.0 / np.sqrt(freqs[1:])
    pink = np.fft.irfft(spectrum * scale, n=n, axis=-1)
    std = pink.std()
    return pink / std if std > 0 else pink
