"""Synthetic heterodyne beat notes and boxcar IQ demodulation.

A transmitted field of complex amplitude ``field`` beats against a local
oscillator at the intermediate frequency, giving the digitised voltage

    v(t_n) = |field| * cos(2 pi f_if t_n + arg field) + noise

Demodulation is a plain boxcar IQ sum over each window; with an integer
number of beat periods per window this is the maximum-likelihood amplitude
and phase estimator for white noise.  Phases are always used relative to a
reference channel, so the arbitrary demodulation epoch cancels.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .fitting import PhaseHistogram


class ConfigError(ValueError):
    """Invalid acquisition configuration."""


class LeakageWarning(UserWarning):
    """Non-integer beat periods per window: IQ sums pick up spectral leakage."""


@dataclass(frozen=True)
class BeatNoteConfig:
    """Acquisition settings for one heterodyne record.

    ``snr_per_window`` is the amplitude signal-to-noise ratio that a field
    of magnitude ``reference_amplitude`` achieves in a single window; the
    per-sample noise sigma is derived from it.  ``None`` disables noise.
    The defaults (1 MHz beat, 50 MS/s, 10 us windows) give 500 samples and
    exactly 10 beat periods per window.
    """

    if_freq_mhz: float = 1.0
    sample_rate_msps: float = 50.0
    window_us: float = 10.0
    snr_per_window: float | None = None
    reference_amplitude: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.if_freq_mhz <= 0.0:
            raise ConfigError(f"beat frequency must be positive, got {self.if_freq_mhz}")
        if self.sample_rate_msps <= 2.0 * self.if_freq_mhz:
            raise ConfigError(
                f"sample rate {self.sample_rate_msps} MS/s does not satisfy Nyquist for a "
                f"{self.if_freq_mhz} MHz beat"
            )
        if self.window_us <= 0.0:
            raise ConfigError("window length must be positive")
        if self.if_freq_mhz * self.window_us < 5.0:
            raise ConfigError(
                f"window must span at least 5 beat periods, got "
                f"{self.if_freq_mhz * self.window_us}"
            )
        n = self.window_us * self.sample_rate_msps
        if abs(n - round(n)) > 1e-9 or round(n) < 2:
            raise ConfigError(
                f"window must hold an integer number (>= 2) of samples, got {n}"
            )
        if self.snr_per_window is not None and self.snr_per_window <= 0.0:
            raise ConfigError("snr_per_window must be positive (or None for noiseless)")
        if self.reference_amplitude <= 0.0:
            raise ConfigError("reference_amplitude must be positive")

    @property
    def samples_per_window(self) -> int:
        return round(self.window_us * self.sample_rate_msps)

    @property
    def periods_per_window(self) -> float:
        return self.if_freq_mhz * self.window_us

    @property
    def noise_sigma(self) -> float:
        """Per-sample noise sigma implied by the per-window amplitude SNR."""
        if self.snr_per_window is None:
            return 0.0
        n = self.samples_per_window
        return self.reference_amplitude * math.sqrt(n / 2.0) / self.snr_per_window


@dataclass(frozen=True)
class IQSample:
    """Demodulated amplitude/phase of one window."""

    window: int
    i: float
    q: float
    amplitude: float
    phase_rad: float


def synthesize(field: complex, config: BeatNoteConfig, windows: int = 1) -> np.ndarray:
    """Digitised beat-note trace for a steady field, ``windows`` windows long.

    Noise is drawn independently per window from a generator seeded by
    ``(config.seed, window_index)``, so traces are reproducible and windows
    are statistically independent.
    """
    if windows < 1:
        raise ValueError("windows must be >= 1")
    n = config.samples_per_window
    t = np.arange(windows * n) / config.sample_rate_msps  # microseconds
    trace = abs(field) * np.cos(2.0 * math.pi * config.if_freq_mhz * t + np.angle(field))
    sigma = config.noise_sigma
    if sigma > 0.0:
        for w in range(windows):
            rng = np.random.default_rng(np.random.SeedSequence((config.seed, w)))
            trace[w * n : (w + 1) * n] += rng.normal(0.0, sigma, size=n)
    return trace


def iq_windows(trace: np.ndarray, config: BeatNoteConfig) -> list[IQSample]:
    """Boxcar IQ demodulation of each complete window in the trace.

    Warns with :class:`LeakageWarning` when the window does not hold an
    integer number of beat periods, in which case the quadrature sums leak
    a bias of order 1/periods into amplitude and phase.
    """
    trace = np.asarray(trace, dtype=float)
    n = config.samples_per_window
    if trace.ndim != 1 or trace.size < n:
        raise ValueError(f"trace must hold at least one window of {n} samples")
    if trace.size % n != 0:
        raise ValueError(f"trace length {trace.size} is not a multiple of the window ({n})")
    p = config.periods_per_window
    if abs(p - round(p)) > 1e-9:
        warnings.warn(
            f"{p} beat periods per window is not an integer; IQ sums will leak",
            LeakageWarning,
            stacklevel=2,
        )
    t = np.arange(n) / config.sample_rate_msps
    phase = 2.0 * math.pi * config.if_freq_mhz * t
    cos_ref = np.cos(phase)
    sin_ref = np.sin(phase)
    out = []
    for w in range(trace.size // n):
        seg = trace[w * n : (w + 1) * n]
        i = float(seg @ cos_ref)
        q = float(seg @ sin_ref)
        out.append(
            IQSample(
                window=w,
                i=i,
                q=q,
                amplitude=2.0 * math.hypot(i, q) / n,
                phase_rad=math.atan2(-q, i),
            )
        )
    return out


def demodulate(trace: np.ndarray, config: BeatNoteConfig) -> tuple[np.ndarray, np.ndarray]:
    """Amplitudes and phases (radians) of every window in the trace."""
    samples = iq_windows(trace, config)
    return (
        np.array([s.amplitude for s in samples]),
        np.array([s.phase_rad for s in samples]),
    )


def write_trace_csv(trace: np.ndarray, config: BeatNoteConfig, path: str | Path) -> None:
    """Write a digitised trace as (t_us, current) rows."""
    t = np.arange(len(trace)) / config.sample_rate_msps
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_us", "current"])
        for ti, vi in zip(t, np.asarray(trace, dtype=float)):
            writer.writerow([f"{ti:.17g}", f"{vi:.17g}"])


def accumulate_histogram(
    phases_rad: Iterable[float],
    reference_rad: Iterable[float] | float,
    bins: int = 72,
) -> PhaseHistogram:
    """Histogram of phase differences (signal minus reference) in degrees.

    Differences are wrapped into [-180, 180); the edges always span exactly
    that period so histograms from different runs can be added bin-wise.
    """
    phases = np.atleast_1d(np.asarray(phases_rad, dtype=float))
    reference = np.asarray(reference_rad, dtype=float)
    if phases.size == 0:
        raise ValueError("cannot histogram an empty phase record")
    if bins < 4:
        raise ValueError(f"need at least 4 bins, got {bins}")
    diff_deg = np.degrees(phases - reference)
    wrapped = (diff_deg + 180.0) % 360.0 - 180.0
    edges = np.linspace(-180.0, 180.0, bins + 1)
    counts, _ = np.histogram(wrapped, bins=edges)
    return PhaseHistogram(edges=edges, counts=counts.astype(float))
