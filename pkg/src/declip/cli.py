"""Command-line front end: clip, declip, experiment and curves subcommands."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio_io import Signal, detect_mask, hard_clip, load_wav, peak_normalize, write_wav
from .gabor import make_frame, time_segments
from .metrics import delta_sdr
from .psychoacoustics import ath_curve, gmt_from_psd, psd_estimate
from .solver import SolverConfig, declip_signal
from .weights import RECIPE_KINDS, WeightRecipe, parabola_weights, weights_from_curve

__all__ = [
    "main",
    "PROFILES",
    "ExperimentConfig",
    "ResultRow",
    "load_experiment_config",
    "run_experiment",
]

PROFILES = {
    "full": {"window": 8192, "overlap": 0.75, "channels": 8192, "iterations": 1000},
    "fast": {"window": 2048, "overlap": 0.75, "channels": 2048, "iterations": 300},
}

_SCHEMA = "v1"
_DEFAULT_THRESHOLDS = [round(0.1 * k, 1) for k in range(1, 10)]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    return str(value)


# ---------------------------------------------------------------------------
# clip
# ---------------------------------------------------------------------------

def cmd_clip(args) -> int:
    signal, fmt = load_wav(args.input, downmix=args.downmix)
    clipped, mask = hard_clip(peak_normalize(signal), args.threshold)
    write_wav(args.output, clipped, fmt)
    print(
        f"clipped {mask.num_clipped} of {len(mask)} samples "
        f"({100.0 * mask.clipped_fraction:.2f} %) at threshold {args.threshold:g}"
    )
    print(f"wrote {args.output}")
    return 0


# ---------------------------------------------------------------------------
# declip
# ---------------------------------------------------------------------------

def _build_frame(profile: str, signal_len: int):
    p = PROFILES[profile]
    return make_frame(p["window"], p["overlap"], p["channels"], signal_len)


def cmd_declip(args) -> int:
    y, fmt = load_wav(args.input, downmix=args.downmix)
    profile = "fast" if args.fast else "full"
    frame = _build_frame(profile, len(y))
    iterations = args.iterations if args.iterations is not None else PROFILES[profile]["iterations"]
    config = SolverConfig(
        gamma=args.gamma,
        lam=1.0,
        max_iter=iterations,
        record_objective=args.trace is not None,
    )
    recipe = WeightRecipe(args.weights, args.tau)
    result = declip_signal(y, args.threshold, frame, recipe, config, tolerance=args.tolerance)

    mask = detect_mask(y, args.threshold, args.tolerance)
    r = result.restored.samples
    reliable_dev = float(np.max(np.abs(r[mask.reliable] - y.samples[mask.reliable]))) if mask.reliable.any() else 0.0
    high_margin = float(np.min(r[mask.clipped_high]) - args.threshold) if mask.clipped_high.any() else math.inf
    low_margin = float(-args.threshold - np.max(r[mask.clipped_low])) if mask.clipped_low.any() else math.inf
    print(
        f"consistency: reliable max deviation {reliable_dev:.3g}, "
        f"clipped-high margin {high_margin:.3g}, clipped-low margin {low_margin:.3g}"
    )
    print(f"restored peak {float(np.max(np.abs(r))):.4f} over {result.iterations_run} iterations")

    if args.reference is not None:
        reference, _ = load_wav(args.reference, downmix=args.downmix)
        report = delta_sdr(reference, y, result.restored)
        print(
            f"SDR clipped {_fmt(report.sdr_clipped_db)} dB, restored {_fmt(report.sdr_restored_db)} dB, "
            f"improvement {_fmt(report.delta_sdr_db)} dB"
        )
    if args.trace is not None:
        with open(args.trace, "w", newline="") as fh:
            fh.write(f"# declip-trace {_SCHEMA}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iteration", "weighted_l1_objective"])
            for i, value in enumerate(result.objective_trace):
                writer.writerow([i, _fmt(float(value))])
        print(f"wrote objective trace to {args.trace}")

    write_wav(args.output, result.restored, fmt)
    print(f"wrote {args.output}")
    return 0


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    inputs: list[str]
    thresholds: list[float] = field(default_factory=lambda: list(_DEFAULT_THRESHOLDS))
    recipes: list[str] = field(default_factory=lambda: list(RECIPE_KINDS))
    profile: str = "full"
    iterations: int | None = None
    gamma: float = 1.0
    tau: float = 100.0
    output_dir: str = "declip_results"
    jobs: int = 1
    downmix: bool = False

    def __post_init__(self):
        if not self.inputs:
            raise ValueError("experiment needs at least one input file")
        for t in self.thresholds:
            if not 0 < t < 1:
                raise ValueError(f"clipping thresholds must lie in (0, 1); got {t}")
        for r in self.recipes:
            if r not in RECIPE_KINDS:
                raise ValueError(f"unknown recipe {r!r}")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.iterations is None:
            self.iterations = PROFILES[self.profile]["iterations"]


@dataclass
class ResultRow:
    file: str
    threshold: float
    recipe: str
    sdr_clipped_db: float | None
    sdr_restored_db: float | None
    delta_sdr_db: float | None
    iterations: int
    wall_time_s: float
    error: str = ""


def load_experiment_config(path) -> ExperimentConfig:
    with open(path) as fh:
        raw = json.load(fh)
    known = {f for f in ExperimentConfig.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown experiment config keys: {sorted(unknown)}")
    return ExperimentConfig(**raw)


def _run_cell(cell: tuple) -> ResultRow:
    path, threshold, recipe_kind, cfg_dict = cell
    started = time.perf_counter()
    try:
        clean = peak_normalize(load_wav(path, downmix=cfg_dict["downmix"])[0])
        clipped, _ = hard_clip(clean, threshold)
        profile = PROFILES[cfg_dict["profile"]]
        frame = make_frame(profile["window"], profile["overlap"], profile["channels"], len(clipped))
        config = SolverConfig(gamma=cfg_dict["gamma"], max_iter=cfg_dict["iterations"])
        recipe = WeightRecipe(recipe_kind, cfg_dict["tau"])
        result = declip_signal(clipped, threshold, frame, recipe, config)
        report = delta_sdr(clean, clipped, result.restored)
        return ResultRow(
            file=path,
            threshold=threshold,
            recipe=recipe_kind,
            sdr_clipped_db=report.sdr_clipped_db,
            sdr_restored_db=report.sdr_restored_db,
            delta_sdr_db=report.delta_sdr_db,
            iterations=cfg_dict["iterations"],
            wall_time_s=time.perf_counter() - started,
        )
    except Exception as exc:  # noqa: BLE001 - per-cell failures must not stop the grid
        return ResultRow(
            file=path,
            threshold=threshold,
            recipe=recipe_kind,
            sdr_clipped_db=None,
            sdr_restored_db=None,
            delta_sdr_db=None,
            iterations=cfg_dict["iterations"],
            wall_time_s=time.perf_counter() - started,
            error=f"{type(exc).__name__}: {exc}",
        )


def run_experiment(cfg: ExperimentConfig, jobs: int | None = None) -> list[ResultRow]:
    """Run the files x thresholds x recipes grid and write the result CSVs.

    results.csv and summary.csv contain only deterministic columns, so
    re-running an identical config reproduces them byte for byte; wall
    times go to a separate timings.csv.
    """
    jobs = jobs if jobs is not None else cfg.jobs
    cfg_dict = {
        "profile": cfg.profile,
        "iterations": cfg.iterations,
        "gamma": cfg.gamma,
        "tau": cfg.tau,
        "downmix": cfg.downmix,
    }
    cells = [
        (path, threshold, recipe, cfg_dict)
        for path in cfg.inputs
        for threshold in cfg.thresholds
        for recipe in cfg.recipes
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(cell) for cell in cells]

    file_order = {path: i for i, path in enumerate(cfg.inputs)}
    recipe_order = {kind: i for i, kind in enumerate(cfg.recipes)}
    rows.sort(key=lambda r: (file_order[r.file], r.threshold, recipe_order[r.recipe]))

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_results(out / "results.csv", rows)
    _write_summary(out / "summary.csv", rows, cfg)
    _write_timings(out / "timings.csv", rows)
    return rows


def _write_results(path, rows: list[ResultRow]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# declip-results {_SCHEMA}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["file", "threshold", "recipe", "sdr_clipped_db", "sdr_restored_db", "delta_sdr_db", "iterations", "error"]
        )
        for r in rows:
            writer.writerow(
                [
                    r.file,
                    _fmt(r.threshold),
                    r.recipe,
                    _fmt(r.sdr_clipped_db),
                    _fmt(r.sdr_restored_db),
                    _fmt(r.delta_sdr_db),
                    r.iterations,
                    r.error,
                ]
            )


def _write_summary(path, rows: list[ResultRow], cfg: ExperimentConfig) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# declip-summary {_SCHEMA}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["threshold", "recipe", "mean_delta_sdr_db", "files"])
        for threshold in cfg.thresholds:
            for recipe in cfg.recipes:
                deltas = [
                    r.delta_sdr_db
                    for r in rows
                    if r.threshold == threshold and r.recipe == recipe and not r.error
                ]
                mean = sum(deltas) / len(deltas) if deltas else float("nan")
                writer.writerow([_fmt(threshold), recipe, _fmt(mean), len(deltas)])


def _write_timings(path, rows: list[ResultRow]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# declip-timings {_SCHEMA} (not covered by the determinism contract)\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["file", "threshold", "recipe", "wall_time_s"])
        for r in rows:
            writer.writerow([r.file, _fmt(r.threshold), r.recipe, _fmt(round(r.wall_time_s, 3))])


def cmd_experiment(args) -> int:
    cfg = load_experiment_config(args.config)
    env_jobs = os.environ.get("DECLIP_JOBS")
    if env_jobs is not None:
        jobs = int(env_jobs)
    elif args.jobs is not None:
        jobs = args.jobs
    else:
        jobs = cfg.jobs
    rows = run_experiment(cfg, jobs=jobs)
    failures = [r for r in rows if r.error]
    print(f"experiment finished: {len(rows)} cells, {len(failures)} failed")
    for r in failures:
        print(f"  FAILED {r.file} theta={r.threshold:g} {r.recipe}: {r.error}")
    print(f"results in {cfg.output_dir}/results.csv, summary in {cfg.output_dir}/summary.csv")
    return 0


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------

def _write_curve_csv(path, kind: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# declip-curves {_SCHEMA} kind={kind}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def cmd_curves(args) -> int:
    if args.what == "ath":
        curve = ath_curve(args.fft_len, args.sample_rate)
        rows = zip(curve.bin_freqs, curve.values_db)
        _write_curve_csv(args.output, "ath", ["bin_freq_hz", "ath_db"], rows)
    elif args.what == "weights":
        curve = ath_curve(args.fft_len, args.sample_rate)
        half = len(curve)
        columns = [weights_from_curve(curve, v, args.tau)[:half] for v in (1, 2, 3)]
        columns.append(parabola_weights(args.fft_len)[:half])
        rows = zip(curve.bin_freqs, *columns)
        _write_curve_csv(
            args.output,
            "weights",
            ["bin_freq_hz", "ath1", "ath2", "ath3", "parabola"],
            rows,
        )
    else:
        if args.wav is None:
            raise ValueError("gmt curves need --wav")
        signal, _ = load_wav(args.wav, downmix=args.downmix)
        frame = make_frame(args.fft_len, 0.75, args.fft_len, len(signal))
        segments = time_segments(frame, signal.samples)
        if not 0 <= args.frame_index < segments.shape[0]:
            raise ValueError(f"frame index must lie in [0, {segments.shape[0]})")
        psd = psd_estimate(segments[args.frame_index], signal.sample_rate)
        gmt = gmt_from_psd(psd)
        ath = ath_curve(args.fft_len, signal.sample_rate)
        rows = zip(psd.bin_freqs, psd.values_db, gmt.values_db, ath.values_db)
        _write_curve_csv(args.output, "gmt", ["bin_freq_hz", "psd_db", "gmt_db", "ath_db"], rows)
    print(f"wrote {args.output}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="declip",
        description="Restore hard-clipped audio by weighted l1 minimization of time-frequency coefficients.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_clip = sub.add_parser("clip", help="peak-normalize and hard-clip a WAV file")
    p_clip.add_argument("input")
    p_clip.add_argument("output")
    p_clip.add_argument("--threshold", type=float, required=True, help="clipping threshold in (0, 1]")
    p_clip.add_argument("--downmix", action="store_true", help="average channels instead of taking channel 0")
    p_clip.set_defaults(func=cmd_clip)

    p_declip = sub.add_parser("declip", help="restore a clipped WAV file")
    p_declip.add_argument("input")
    p_declip.add_argument("output")
    p_declip.add_argument("--threshold", type=float, required=True)
    p_declip.add_argument("--weights", choices=RECIPE_KINDS, default="none")
    p_declip.add_argument("--iterations", type=int, default=None, help="override the profile's iteration count")
    p_declip.add_argument("--gamma", type=float, default=1.0)
    p_declip.add_argument("--tau", type=float, default=100.0)
    p_declip.add_argument("--reference", default=None, help="clean WAV for an SDR report")
    p_declip.add_argument("--fast", action="store_true", help="small transform profile for quick runs")
    p_declip.add_argument("--tolerance", type=float, default=0.0, help="clip-detection tolerance for inexact plateaus")
    p_declip.add_argument("--downmix", action="store_true")
    p_declip.add_argument("--trace", default=None, help="write the per-iteration objective to this CSV")
    p_declip.set_defaults(func=cmd_declip)

    p_exp = sub.add_parser("experiment", help="run a files x thresholds x recipes grid from a JSON config")
    p_exp.add_argument("config")
    p_exp.add_argument("--jobs", type=int, default=None, help="parallel workers (env DECLIP_JOBS overrides)")
    p_exp.set_defaults(func=cmd_experiment)

    p_curves = sub.add_parser("curves", help="export hearing/masking/weight curves as CSV")
    p_curves.add_argument("--what", choices=("ath", "weights", "gmt"), required=True)
    p_curves.add_argument("--output", "-o", required=True)
    p_curves.add_argument("--sample-rate", type=int, default=44100)
    p_curves.add_argument("--fft-len", type=int, default=8192)
    p_curves.add_argument("--tau", type=float, default=100.0)
    p_curves.add_argument("--wav", default=None, help="input WAV (gmt curves)")
    p_curves.add_argument("--frame-index", type=int, default=0)
    p_curves.add_argument("--downmix", action="store_true")
    p_curves.set_defaults(func=cmd_curves)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stdout, force=True)
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
