"""Signal-to-distortion ratio measures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["SdrReport", "sdr", "delta_sdr"]


@dataclass(frozen=True)
class SdrReport:
    sdr_clipped_db: float
    sdr_restored_db: float
    delta_sdr_db: float


def _as_array(x) -> np.ndarray:
    samples = x.samples if hasattr(x, "samples") else x
    return np.asarray(samples, dtype=np.float64)


def sdr(u, v) -> float:
    """10 log10(||u||^2 / ||u - v||^2); +inf when the signals coincide."""
    u = _as_array(u)
    v = _as_array(v)
    if u.shape != v.shape:
        raise ValueError("signals must have equal length")
    reference = float(np.sum(u * u))
    if reference == 0.0:
        raise ValueError("reference signal has zero energy")
    error = float(np.sum((u - v) ** 2))
    if error == 0.0:
        return math.inf
    return 10.0 * math.log10(reference / error)


def delta_sdr(x, y, restored) -> SdrReport:
    """SDR of the clipped and restored signals against the ground truth x.

    delta is the improvement sdr(x, restored) - sdr(x, y); when both terms
    are infinite (nothing was clipped and nothing changed) it is 0.
    """
    clipped_db = sdr(x, y)
    restored_db = sdr(x, restored)
    if math.isinf(restored_db) and math.isinf(clipped_db):
        delta = 0.0
    else:
        delta = restored_db - clipped_db
    return SdrReport(clipped_db, restored_db, delta)
