"""Discrete Gabor transform (STFT) analysis and synthesis on a Parseval tight frame.

Coefficients are stored two-sided as complex grids of shape
(channels, frames); real signals yield conjugate-symmetric grids, but the
symmetry is not enforced structurally.  Signals are zero-padded with a
half-window lead-in/out to a multiple of the hop, frames are taken
cyclically on the padded length, and synthesis strips the padding again.
Analysis preserves energy and synthesis-after-analysis is the identity, so
the feasibility projection of the solver has a closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as _fft

__all__ = [
    "GaborFrame",
    "make_frame",
    "analyze",
    "synthesize",
    "pad_signal",
    "trim_signal",
    "time_segments",
]

_TIGHTNESS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GaborFrame:
    """Immutable tight-frame STFT configuration bound to one signal length.

    window          tight-normalized prototype (length divides into hops)
    hop             analysis step in samples
    channels        FFT length / number of frequency channels M
    signal_length   padded length, a multiple of the hop
    original_length caller-facing length before padding
    pad_left        lead-in zeros in the padded domain
    """

    window: np.ndarray
    hop: int
    channels: int
    signal_length: int
    original_length: int
    pad_left: int

    @property
    def window_length(self) -> int:
        return self.window.size

    @property
    def num_frames(self) -> int:
        return self.signal_length // self.hop

    @property
    def segments_per_window(self) -> int:
        return self.window.size // self.hop

    @property
    def grid_shape(self) -> tuple[int, int]:
        return (self.channels, self.num_frames)


def _hann_periodic(length: int) -> np.ndarray:
    n = np.arange(length)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / length)


def make_frame(window_len: int, overlap_fraction: float, channels: int, signal_len: int) -> GaborFrame:
    """Build a Parseval tight Gabor frame from a Hann prototype.

    The prototype is normalized pointwise by sqrt(channels * OLA2(n)), where
    OLA2 is the squared overlap-add sum of the window; at 75 % overlap that
    sum is constant and this reduces to a plain rescaling.  A final check
    verifies the tight-frame identity before the frame is handed out.
    """
    window_len = int(window_len)
    channels = int(channels)
    signal_len = int(signal_len)
    if overlap_fraction not in (0.5, 0.75):
        raise ValueError("overlap fraction must be 0.5 or 0.75")
    steps = round(1.0 / (1.0 - overlap_fraction))
    if window_len < steps or window_len % steps != 0:
        raise ValueError(f"window length must be a positive multiple of {steps}")
    hop = window_len // steps
    if channels < window_len:
        raise ValueError("painless case requires channels >= window length")
    if signal_len < window_len:
        raise ValueError("signal must be at least one window long")

    proto = _hann_periodic(window_len)
    ola2 = proto.reshape(steps, hop) ** 2
    base = ola2.sum(axis=0)
    if np.any(base <= 0):
        raise ValueError("window/hop combination has uncovered samples")
    window = proto / np.sqrt(channels * np.tile(base, steps))
    window.setflags(write=False)

    check = channels * (window.reshape(steps, hop) ** 2).sum(axis=0)
    if np.max(np.abs(check - 1.0)) > _TIGHTNESS_TOL:
        raise RuntimeError("tight-window verification failed")

    pad_left = window_len // 2
    padded = -(-(signal_len + window_len) // hop) * hop
    return GaborFrame(window, hop, channels, padded, signal_len, pad_left)


def pad_signal(frame: GaborFrame, samples: np.ndarray) -> np.ndarray:
    """Zero-pad an original-length signal to the frame's padded length."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size != frame.original_length:
        raise ValueError(
            f"expected {frame.original_length} samples, got {samples.size}"
        )
    out = np.zeros(frame.signal_length)
    out[frame.pad_left : frame.pad_left + samples.size] = samples
    return out


def trim_signal(frame: GaborFrame, padded: np.ndarray) -> np.ndarray:
    """Strip the padding, returning the original-length portion."""
    return padded[frame.pad_left : frame.pad_left + frame.original_length]


def _as_padded(frame: GaborFrame, signal) -> np.ndarray:
    samples = signal.samples if hasattr(signal, "samples") else np.asarray(signal, dtype=np.float64)
    if samples.size == frame.original_length:
        return pad_signal(frame, samples)
    if samples.size == frame.signal_length:
        return np.asarray(samples, dtype=np.float64)
    raise ValueError(
        f"signal length {samples.size} matches neither the original length "
        f"{frame.original_length} nor the padded length {frame.signal_length}"
    )


def time_segments(frame: GaborFrame, signal) -> np.ndarray:
    """Window-aligned raw signal segments, shape (frames, window_length).

    Segment t covers padded samples [t*hop, t*hop + window_length), wrapping
    cyclically; the padding guarantees wrapped segments never mix signal
    head with signal tail.
    """
    x = _as_padded(frame, signal)
    hops = x.reshape(frame.num_frames, frame.hop)
    return np.concatenate(
        [np.roll(hops, -j, axis=0) for j in range(frame.segments_per_window)], axis=1
    )


def analyze(frame: GaborFrame, signal) -> np.ndarray:
    """Analysis operator: windowed FFT of every segment, shape (channels, frames)."""
    segments = time_segments(frame, signal) * frame.window
    return _fft.fft(segments, n=frame.channels, axis=1).T


def synthesize(frame: GaborFrame, grid: np.ndarray, trim: bool = True) -> np.ndarray:
    """Synthesis operator: real part of the overlap-added inverse FFTs.

    Exact adjoint of :func:`analyze`; with the tight window the round trip
    synthesize(analyze(x)) returns x up to FFT rounding.
    """
    grid = np.asarray(grid)
    if grid.shape != frame.grid_shape:
        raise ValueError(f"expected grid shape {frame.grid_shape}, got {grid.shape}")
    lw, hop, q = frame.window_length, frame.hop, frame.segments_per_window
    u = _fft.ifft(grid, axis=0)
    frames = (u[:lw].real.T * frame.window) * frame.channels
    frames = frames.reshape(frame.num_frames, q, hop)
    acc = np.zeros((frame.num_frames, hop))
    for j in range(q):
        acc += np.roll(frames[:, j, :], j, axis=0)
    out = acc.reshape(-1)
    return trim_signal(frame, out) if trim else out
