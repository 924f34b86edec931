"""Hearing-threshold and masking curves over one-sided frequency bins.

The masking analysis follows the classic MPEG Model-1 recipe with every
masker treated as tonal: Hann-windowed power spectrum, prominent-peak
picking with the standard bin neighborhoods, per-masker spread thresholds
on the Bark scale, and a power-additive combination with the threshold in
quiet.  Digital full scale is anchored at 96 dB SPL.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as _fft

__all__ = [
    "ThresholdCurve",
    "Masker",
    "hz_to_bark",
    "ath_db",
    "ath_curve",
    "ath_vector",
    "psd_estimate",
    "find_tonal_maskers",
    "gmt_from_psd",
    "global_masking_threshold",
    "ATH_CLAMP_DB",
    "PSD_FLOOR_DB",
]

ATH_CLAMP_DB = 100.0        # cap for the diverging low-frequency tail (and DC)
PSD_FLOOR_DB = -100.0
FULL_SCALE_PEAK_DB = 96.0   # level of a full-scale sinusoid at a bin center
_PROMINENCE_DB = 7.0
_DECIMATION_BARK = 0.5
_SPREAD_REACH_BARK = 8.0


@dataclass(eq=False)
class ThresholdCurve:
    """Per-bin level curve in dB over the one-sided frequency grid."""

    values_db: np.ndarray
    bin_freqs: np.ndarray

    def __post_init__(self):
        self.values_db = np.asarray(self.values_db, dtype=np.float64)
        self.bin_freqs = np.asarray(self.bin_freqs, dtype=np.float64)
        if self.values_db.shape != self.bin_freqs.shape or self.values_db.ndim != 1:
            raise ValueError("curve values and bin frequencies must be matching 1-D arrays")
        if not np.all(np.isfinite(self.values_db)):
            raise ValueError("curve values must be finite")
        if self.bin_freqs[0] != 0 or np.any(np.diff(self.bin_freqs) <= 0):
            raise ValueError("bin frequencies must increase strictly from 0")

    def __len__(self) -> int:
        return self.values_db.size


@dataclass(frozen=True)
class Masker:
    """A tonal masker: spectral bin, combined level and Bark position."""

    bin_index: int
    level_db: float
    bark: float


def hz_to_bark(f):
    """Critical-band rate (Zwicker): 13 atan(0.00076 f) + 3.5 atan((f/7500)^2)."""
    f = np.asarray(f, dtype=np.float64)
    z = 13.0 * np.arctan(0.00076 * f) + 3.5 * np.arctan((f / 7500.0) ** 2)
    return z if z.ndim else float(z)


def ath_db(f):
    """Absolute threshold of hearing in dB SPL (Terhardt approximation).

    Evaluates 3.64 g^-0.8 - 6.5 exp(-0.6 (g-3.3)^2) + 1e-3 g^4 with g the
    frequency in kHz, clamped from above at ATH_CLAMP_DB.  Frequencies must
    be positive; the formula diverges at 0.
    """
    arr = np.asarray(f, dtype=np.float64)
    if np.any(arr <= 0):
        raise ValueError("frequency must be positive")
    g = arr / 1000.0
    t = 3.64 * g ** -0.8 - 6.5 * np.exp(-0.6 * (g - 3.3) ** 2) + 1e-3 * g ** 4
    t = np.minimum(t, ATH_CLAMP_DB)
    return t if t.ndim else float(t)


def _ath_at(freqs: np.ndarray) -> np.ndarray:
    """ATH over a bin grid that may include DC; DC gets the clamp value."""
    out = np.full(freqs.shape, ATH_CLAMP_DB)
    positive = freqs > 0
    out[positive] = ath_db(freqs[positive])
    return out


def ath_curve(fft_len: int, sample_rate: int) -> ThresholdCurve:
    """ATH sampled on the one-sided bins k*fs/fft_len, k = 0..fft_len//2."""
    freqs = np.arange(fft_len // 2 + 1) * (sample_rate / fft_len)
    return ThresholdCurve(_ath_at(freqs), freqs)


def ath_vector(frame, sample_rate: int) -> ThresholdCurve:
    """ATH over the nonnegative-frequency channels of a Gabor frame."""
    return ath_curve(frame.channels, sample_rate)


def psd_estimate(frame_samples, sample_rate: int, nfft: int | None = None) -> ThresholdCurve:
    """One-sided power spectral density estimate of one frame, in dB SPL.

    The frame is Hann-windowed and Fourier-transformed; levels are offset so
    a full-scale sinusoid at a bin center peaks at FULL_SCALE_PEAK_DB.
    Values are floored at PSD_FLOOR_DB (an all-zero frame sits entirely on
    the floor).  `nfft` zero-pads the windowed frame, e.g. to place the bins
    on a wider channel grid.
    """
    x = np.asarray(frame_samples, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("frame must be a 1-D array with at least 2 samples")
    nfft = x.size if nfft is None else int(nfft)
    if nfft < x.size:
        raise ValueError("nfft must be at least the frame length")
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(x.size) / x.size)
    spectrum = _fft.fft(window * x, n=nfft)[: nfft // 2 + 1]
    offset = FULL_SCALE_PEAK_DB - 20.0 * np.log10(window.sum() / 2.0)
    with np.errstate(divide="ignore"):
        level = offset + 20.0 * np.log10(np.abs(spectrum))
    level = np.maximum(level, PSD_FLOOR_DB)
    freqs = np.arange(nfft // 2 + 1) * (sample_rate / nfft)
    return ThresholdCurve(level, freqs)


def _neighborhood_reach(num_bins: int) -> np.ndarray:
    """Largest probe offset per bin for tonal prominence (Model-1 zones)."""
    k = np.arange(num_bins)
    return np.select([k < 63, k < 127, k < 255], [2, 3, 6], default=12)


def find_tonal_maskers(psd: ThresholdCurve) -> list[Masker]:
    """Pick prominent spectral peaks of a PSD as tonal maskers.

    A bin qualifies when it is a strict local maximum and exceeds its
    neighbors at offsets 2..reach(k) by at least 7 dB (out-of-range
    neighbors are ignored).  The masker level combines the three adjacent
    bins power-additively.  Maskers below the hearing threshold are
    dropped, and of two maskers within 0.5 Bark only the stronger survives.
    """
    p = psd.values_db
    n = p.size
    if n < 3:
        return []
    candidate = np.zeros(n, dtype=bool)
    candidate[1:-1] = (p[1:-1] > p[:-2]) & (p[1:-1] > p[2:])

    reach = _neighborhood_reach(n)
    padded = np.pad(p, 12, constant_values=-np.inf)
    for d in range(2, 13):
        prominent = (p >= padded[12 - d : 12 - d + n] + _PROMINENCE_DB) & (
            p >= padded[12 + d : 12 + d + n] + _PROMINENCE_DB
        )
        candidate &= prominent | (reach < d)

    ath = _ath_at(psd.bin_freqs)
    found = []
    for k in np.nonzero(candidate)[0]:
        level = 10.0 * np.log10(np.sum(10.0 ** (p[k - 1 : k + 2] / 10.0)))
        if level < ath[k]:
            continue
        found.append(Masker(int(k), float(level), float(hz_to_bark(psd.bin_freqs[k]))))

    found.sort(key=lambda m: (-m.level_db, m.bin_index))
    kept: list[Masker] = []
    for m in found:
        if all(abs(m.bark - other.bark) > _DECIMATION_BARK for other in kept):
            kept.append(m)
    kept.sort(key=lambda m: m.bin_index)
    return kept


def _spread_db(dbark: np.ndarray, masker_level: float) -> np.ndarray:
    """Two-slope spreading function in dB at Bark distances dbark.

    Falls 27 dB/Bark towards lower frequencies and
    27 - 0.37*max(level - 40, 0) dB/Bark towards higher ones; no masking
    beyond 8 Bark.
    """
    upper = -27.0 + 0.37 * max(masker_level - 40.0, 0.0)
    sf = np.where(dbark < 0, 27.0 * dbark, upper * dbark)
    return np.where(np.abs(dbark) <= _SPREAD_REACH_BARK, sf, -np.inf)


def gmt_from_psd(psd: ThresholdCurve) -> ThresholdCurve:
    """Global masking threshold for one analyzed frame.

    Power-additive combination of the hearing threshold with each tonal
    masker's spread threshold level - 0.275*bark - 6.025 + SF(dbark);
    clamped at ATH_CLAMP_DB like the hearing threshold itself.  With no
    maskers the result is exactly the hearing threshold.
    """
    ath = _ath_at(psd.bin_freqs)
    maskers = find_tonal_maskers(psd)
    if not maskers:
        return ThresholdCurve(ath, psd.bin_freqs.copy())
    bark_bins = hz_to_bark(psd.bin_freqs)
    power = 10.0 ** (ath / 10.0)
    for m in maskers:
        threshold = m.level_db - 0.275 * m.bark - 6.025 + _spread_db(bark_bins - m.bark, m.level_db)
        power += 10.0 ** (threshold / 10.0)
    gmt = np.minimum(10.0 * np.log10(power), ATH_CLAMP_DB)
    return ThresholdCurve(gmt, psd.bin_freqs.copy())


def global_masking_threshold(frame_samples, sample_rate: int, nfft: int | None = None) -> ThresholdCurve:
    """GMT of one raw signal frame (PSD estimation plus masking analysis)."""
    return gmt_from_psd(psd_estimate(frame_samples, sample_rate, nfft=nfft))
