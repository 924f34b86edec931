"""WAV input/output, peak normalization, hard clipping and clip-mask detection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.io import wavfile

__all__ = [
    "Signal",
    "ClipMask",
    "ClipResult",
    "peak_normalize",
    "hard_clip",
    "detect_mask",
    "read_wav",
    "load_wav",
    "write_wav",
]


@dataclass(eq=False)
class Signal:
    """Mono waveform: float64 sample array plus its sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise ValueError("signal must be a non-empty 1-D array")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("signal contains NaN or Inf samples")
        self.sample_rate = int(self.sample_rate)
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be a positive integer")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(eq=False)
class ClipMask:
    """Partition of sample indices into reliable / clipped-high / clipped-low.

    The three boolean arrays are pairwise disjoint and cover every index;
    `threshold` is the saturation level the mask was built against.
    """

    reliable: np.ndarray
    clipped_high: np.ndarray
    clipped_low: np.ndarray
    threshold: float

    def __post_init__(self):
        self.reliable = np.asarray(self.reliable, dtype=bool)
        self.clipped_high = np.asarray(self.clipped_high, dtype=bool)
        self.clipped_low = np.asarray(self.clipped_low, dtype=bool)
        n = self.reliable.size
        if self.clipped_high.size != n or self.clipped_low.size != n:
            raise ValueError("mask arrays must have equal length")
        self.threshold = float(self.threshold)
        if not self.threshold > 0:
            raise ValueError("clipping threshold must be positive")
        both = (self.reliable & self.clipped_high) | (self.reliable & self.clipped_low) | (
            self.clipped_high & self.clipped_low
        )
        if np.any(both):
            raise ValueError("mask sets must be pairwise disjoint")
        if not np.all(self.reliable | self.clipped_high | self.clipped_low):
            raise ValueError("mask sets must cover every sample")

    def __len__(self) -> int:
        return self.reliable.size

    @property
    def num_clipped(self) -> int:
        return int(np.count_nonzero(self.clipped_high | self.clipped_low))

    @property
    def clipped_fraction(self) -> float:
        return self.num_clipped / self.reliable.size


class ClipResult(NamedTuple):
    signal: Signal
    mask: ClipMask


def peak_normalize(s: Signal) -> Signal:
    """Scale the signal so its largest absolute sample equals 1."""
    peak = float(np.max(np.abs(s.samples)))
    if peak == 0.0:
        raise ValueError("cannot peak-normalize an all-zero signal")
    return Signal(s.samples / peak, s.sample_rate)


def hard_clip(x: Signal, threshold: float) -> ClipResult:
    """Saturate samples with |x| >= threshold and report the resulting mask.

    Samples exactly at the threshold count as clipped, so a mask detected
    from the output never misses a clipped sample.
    """
    threshold = float(threshold)
    if not threshold > 0:
        raise ValueError("clipping threshold must be positive")
    s = x.samples
    high = s >= threshold
    low = s <= -threshold
    y = np.where(high, threshold, np.where(low, -threshold, s))
    mask = ClipMask(~(high | low), high, low, threshold)
    return ClipResult(Signal(y, x.sample_rate), mask)


def detect_mask(y: Signal, threshold: float, tolerance: float = 0.0) -> ClipMask:
    """Classify the samples of an observed clipped signal.

    Comparison against the threshold is exact by default, which matches
    signals produced by :func:`hard_clip`.  For externally clipped material
    whose plateaus are inexact, `tolerance` widens the clip bands: samples
    with y >= threshold - tolerance count as clipped-high (and symmetrically
    for clipped-low), and only |y| > threshold + tolerance is rejected.
    """
    threshold = float(threshold)
    tolerance = float(tolerance)
    if not threshold > 0:
        raise ValueError("clipping threshold must be positive")
    if tolerance < 0 or tolerance >= threshold:
        raise ValueError("tolerance must lie in [0, threshold)")
    s = y.samples
    peak = float(np.max(np.abs(s)))
    if peak > threshold + tolerance:
        raise ValueError(
            f"signal exceeds the clipping threshold (peak {peak:.6g} > {threshold + tolerance:.6g}); "
            "not a consistent clipped observation"
        )
    high = s >= threshold - tolerance
    low = s <= -(threshold - tolerance)
    return ClipMask(~(high | low), high, low, threshold)


_PCM16_SCALE = 32767.0


def load_wav(path, downmix: bool = False) -> tuple[Signal, str]:
    """Read a WAV file; returns the signal and its sample format.

    Supports PCM 16-bit and IEEE float (32/64 bit).  Multi-channel files
    keep channel 0 unless `downmix` averages all channels.
    """
    rate, data = wavfile.read(path)
    if data.ndim == 2:
        data = data.astype(np.float64).mean(axis=1) if downmix else data[:, 0]
    if data.dtype == np.int16:
        fmt = "pcm16"
        samples = data.astype(np.float64) / _PCM16_SCALE
    elif data.dtype == np.float32:
        fmt = "float32"
        samples = data.astype(np.float64)
    elif data.dtype == np.float64:
        fmt = "float64"
        samples = data
    else:
        raise ValueError(f"unsupported WAV sample format: {data.dtype}")
    return Signal(samples, rate), fmt


def read_wav(path, downmix: bool = False) -> Signal:
    return load_wav(path, downmix=downmix)[0]


def write_wav(path, s: Signal, fmt: str = "float32") -> None:
    """Write a mono WAV file as PCM 16-bit or IEEE float."""
    if fmt == "pcm16":
        ints = np.round(s.samples * _PCM16_SCALE)
        data = np.clip(ints, -32768, 32767).astype(np.int16)
    elif fmt == "float32":
        data = s.samples.astype(np.float32)
    elif fmt == "float64":
        data = s.samples.astype(np.float64)
    else:
        raise ValueError(f"unsupported WAV sample format: {fmt}")
    wavfile.write(path, s.sample_rate, data)
