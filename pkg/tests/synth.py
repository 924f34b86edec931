"""Synthetic test signals shared across the suite."""

import numpy as np

from declip import Signal, peak_normalize


def sine_mixture(freqs, amps, fs=44100, duration=1.0, noise_db=None, seed=0):
    """Peak-normalized sum of sinusoids with random phases, optional noise."""
    rng = np.random.default_rng(seed)
    t = np.arange(int(duration * fs)) / fs
    x = np.zeros_like(t)
    for f, a in zip(freqs, amps):
        x += a * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
    x /= np.abs(x).max()
    if noise_db is not None:
        noise = rng.standard_normal(t.size)
        noise *= np.sqrt(np.mean(x**2)) * 10 ** (noise_db / 20) / np.sqrt(np.mean(noise**2))
        x = x + noise
    return peak_normalize(Signal(x, fs))


def music_like(seed, fs=44100, duration=1.2):
    """Harmonic chord with decaying partials up to 8 kHz plus a -35 dB floor.

    Stands in for a short music excerpt: broadband harmonic ladders are what
    make high-frequency-suppressing weights meaningful.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(int(duration * fs)) / fs
    x = np.zeros_like(t)
    notes = rng.choice([110.0, 146.8, 196.0, 220.0, 261.6, 329.6], size=3, replace=False)
    for f0 in notes:
        for k in range(1, int(8000.0 // f0) + 1):
            a = rng.uniform(0.6, 1.0) / k**1.1
            decay = np.exp(-t * rng.uniform(0.2, 1.2))
            x += a * np.sin(2 * np.pi * f0 * k * t + rng.uniform(0, 2 * np.pi)) * decay
    x /= np.abs(x).max()
    x += 10 ** (-35 / 20) * rng.standard_normal(t.size)
    return peak_normalize(Signal(x, fs))
