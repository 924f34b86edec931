"""Peak-normalized weight grids for the coefficient shrinkage step.

Weights live on the two-sided channel axis of the coefficient grid;
conjugate channel pairs always share a weight so a real reconstruction
sees symmetric shrinkage.  ATH and parabola recipes produce one
per-channel vector broadcast across frames; GMT recipes produce one curve
per analysis frame (from a reference signal) and are normalized by a
single global peak so relative frame loudness survives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gabor import GaborFrame, time_segments
from .psychoacoustics import ThresholdCurve, ath_vector, global_masking_threshold

__all__ = [
    "RECIPE_KINDS",
    "WeightRecipe",
    "WeightGrid",
    "weights_from_curve",
    "parabola_weights",
    "assemble_weight_grid",
    "mirror_to_channels",
]

RECIPE_KINDS = ("none", "ath1", "ath2", "ath3", "gmt1", "gmt2", "gmt3", "parabola")

# Normalized weights are floored here so they stay strictly positive even
# where a clamped curve touches tau exactly; the resulting shrinkage
# threshold is numerically inert.
WEIGHT_FLOOR = 1e-12


@dataclass(frozen=True)
class WeightRecipe:
    """Which weight construction to use, and its tau (dB) parameter."""

    kind: str
    tau: float = 100.0

    def __post_init__(self):
        if self.kind not in RECIPE_KINDS:
            raise ValueError(f"unknown weight recipe {self.kind!r}; choose from {RECIPE_KINDS}")
        if not np.isfinite(self.tau) or self.tau <= 0:
            raise ValueError("tau must be a positive finite dB value")

    @property
    def needs_reference(self) -> bool:
        return self.kind.startswith("gmt")

    @property
    def variant(self) -> int | None:
        return int(self.kind[-1]) if self.kind[-1].isdigit() else None


@dataclass(eq=False)
class WeightGrid:
    """Nonnegative weights aligned with a coefficient grid, global peak 1."""

    values: np.ndarray
    tau: float = 100.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("weight grid must be 2-D (channels x frames)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("weights must be finite")
        if np.min(self.values) <= 0:
            raise ValueError("weights must be strictly positive")
        if abs(float(np.max(self.values)) - 1.0) > 1e-9:
            raise ValueError("weight grid must be peak-normalized to 1")


def mirror_to_channels(onesided: np.ndarray, channels: int) -> np.ndarray:
    """Mirror a one-sided per-bin vector onto the two-sided channel axis.

    Works along the first axis, so (bins,) vectors and (bins, frames)
    grids are both accepted.  Channel m > channels/2 copies bin channels-m.
    """
    onesided = np.asarray(onesided, dtype=np.float64)
    half = channels // 2 + 1
    if onesided.shape[0] != half:
        raise ValueError(f"expected {half} one-sided bins for {channels} channels")
    out = np.empty((channels,) + onesided.shape[1:])
    out[:half] = onesided
    out[half:] = onesided[1 : channels - half + 1][::-1]
    return out


def _variant_transform(values: np.ndarray, variant: int, tau: float, floor_ref: float | None = None):
    """Raw (unnormalized) curve-to-weight transforms.

    variant 1: (t - min(t) + 1)^-1     (floor_ref overrides min(t))
    variant 2: tau - t                 (requires tau >= max(t))
    variant 3: 2e-5 * 10^((tau - t)/20)
    """
    if variant == 1:
        t0 = float(np.min(values)) if floor_ref is None else float(floor_ref)
        return 1.0 / (values - t0 + 1.0)
    if variant == 2:
        if tau < float(np.max(values)):
            raise ValueError(f"tau={tau} is below the curve maximum {float(np.max(values)):.6g}")
        return tau - values
    if variant == 3:
        return 2e-5 * 10.0 ** ((tau - values) / 20.0)
    raise ValueError("variant must be 1, 2 or 3")


def _normalize(raw: np.ndarray) -> np.ndarray:
    peak = float(np.max(raw))
    if peak <= 0:
        raise ValueError("degenerate weights: curve coincides with tau everywhere")
    return np.maximum(raw / peak, WEIGHT_FLOOR)


def weights_from_curve(curve, variant: int, tau: float = 100.0) -> np.ndarray:
    """Per-channel weight vector from a one-sided threshold curve.

    Applies the selected transform elementwise, peak-normalizes to 1 and
    mirrors the result onto the two-sided channel axis; the returned vector
    has 2*(bins-1) entries.
    """
    t = curve.values_db if isinstance(curve, ThresholdCurve) else np.asarray(curve, dtype=np.float64)
    w = _normalize(_variant_transform(t, variant, tau))
    return mirror_to_channels(w, 2 * (t.size - 1))


def parabola_weights(channels: int) -> np.ndarray:
    """Quadratically increasing per-channel weights, peak 1 at Nyquist.

    w_k = k^2 over the nonnegative-frequency bins k = 1..channels/2+1,
    normalized and mirrored onto the conjugate channels.
    """
    if channels < 2:
        raise ValueError("need at least 2 channels")
    k = np.arange(1, channels // 2 + 2, dtype=np.float64)
    onesided = (k / k[-1]) ** 2
    return mirror_to_channels(onesided, channels)


def assemble_weight_grid(recipe: WeightRecipe, frame: GaborFrame, sample_rate: int, reference=None) -> WeightGrid:
    """Build the weight grid for a solve, shape (channels, frames).

    GMT recipes need `reference`: the signal whose masking curves define
    the weights (in the two-pass pipeline, the first-pass reconstruction).
    Other recipes ignore it.
    """
    channels, frames = frame.grid_shape
    if recipe.kind == "none":
        return WeightGrid(np.ones((channels, frames)), tau=recipe.tau)

    if recipe.kind == "parabola":
        vector = parabola_weights(channels)
    elif recipe.kind.startswith("ath"):
        vector = weights_from_curve(ath_vector(frame, sample_rate), recipe.variant, recipe.tau)
    else:
        if reference is None:
            raise ValueError(f"recipe {recipe.kind!r} needs a reference signal")
        if reference.sample_rate != sample_rate:
            raise ValueError("reference sample rate disagrees with the requested rate")
        if len(reference) != frame.original_length:
            raise ValueError("reference length disagrees with the frame's signal length")
        segments = time_segments(frame, reference.samples)
        curves = np.stack(
            [
                global_masking_threshold(segments[t], sample_rate, nfft=channels).values_db
                for t in range(frames)
            ],
            axis=1,
        )
        floor_ref = float(np.min(curves)) if recipe.variant == 1 else None
        raw = _variant_transform(curves, recipe.variant, recipe.tau, floor_ref=floor_ref)
        return WeightGrid(mirror_to_channels(_normalize(raw), channels), tau=recipe.tau)

    return WeightGrid(np.repeat(vector[:, None], frames, axis=1), tau=recipe.tau)
