"""Sparse audio declipping by weighted l1 minimization.

Hard-clipped audio is restored by finding time-frequency coefficients of
minimal weighted l1 norm whose synthesis agrees with the observation on
unclipped samples and respects the saturation bounds on clipped ones.  The
convex problem is solved with a Douglas-Rachford iteration on a Parseval
tight Gabor frame; the weights come from hearing-threshold or masking
curves, or from a simple parabola that suppresses high frequencies.
"""

from .audio_io import (
    ClipMask,
    ClipResult,
    Signal,
    detect_mask,
    hard_clip,
    load_wav,
    peak_normalize,
    read_wav,
    write_wav,
)
from .gabor import GaborFrame, analyze, make_frame, synthesize, time_segments
from .metrics import SdrReport, delta_sdr, sdr
from .psychoacoustics import (
    Masker,
    ThresholdCurve,
    ath_curve,
    ath_db,
    ath_vector,
    find_tonal_maskers,
    global_masking_threshold,
    gmt_from_psd,
    hz_to_bark,
    psd_estimate,
)
from .solver import (
    DeclipProblem,
    SolveResult,
    SolverConfig,
    SolverDivergedError,
    declip_signal,
    declip_two_pass,
    project_gamma,
    project_time,
    soft_threshold,
    solve,
)
from .weights import (
    RECIPE_KINDS,
    WeightGrid,
    WeightRecipe,
    assemble_weight_grid,
    parabola_weights,
    weights_from_curve,
)

__version__ = "0.1.0"
