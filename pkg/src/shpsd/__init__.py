"""Per-source power spectral density estimation and source separation for
spherical microphone array recordings.

The package models the sound field in the spherical harmonic domain, tracks
the cross-correlations of the expansion coefficients over short-time frames,
and inverts a linear coupling model to recover the power spectral density of
each known-direction source plus a diffuse reverberant term.  Separation
combines a maximum-directivity beamformer with a Wiener post-filter built
from the estimated PSDs.
"""

__version__ = "1.0.0"

from .analysis import CoefficientSet, analyze_recording, extract_coefficients
from .estimator import (
    CorrelationState,
    PsdEstimate,
    PsdTrack,
    TranslationMatrix,
    build_translation_matrix,
    estimate_psd_track,
    estimate_psds,
    estimate_psds_anechoic,
    update_correlation,
)
from .geometry import ArrayGeometry, default_geometry, default_mic_directions
from .metrics import EvalReport, psd_log_error, sir, smoothed_periodogram
from .pipeline import (
    BenchCell,
    EstimatorParams,
    PipelineResult,
    evaluate_result,
    process_recording,
    run_bench_cell,
    run_benchmark,
)
from .scene import (
    RoomSpec,
    SceneRecording,
    SourceSpec,
    image_sources,
    render_scene,
)
from .separator import SeparationOutput, beamform, wiener_separate
from .sphmath import (
    ModeIndex,
    SphericalDirection,
    mode_indices,
    mode_strength,
    num_modes,
    sph_harmonic,
    triple_harmonic_integral,
    wigner3j,
)
from .stft import Spectrogram, StftConfig, analyze, synthesize

__all__ = [
    "ArrayGeometry",
    "BenchCell",
    "CoefficientSet",
    "CorrelationState",
    "EstimatorParams",
    "EvalReport",
    "ModeIndex",
    "PipelineResult",
    "PsdEstimate",
    "PsdTrack",
    "RoomSpec",
    "SceneRecording",
    "SeparationOutput",
    "SourceSpec",
    "Spectrogram",
    "SphericalDirection",
    "StftConfig",
    "TranslationMatrix",
    "analyze",
    "analyze_recording",
    "beamform",
    "build_translation_matrix",
    "default_geometry",
    "default_mic_directions",
    "estimate_psd_track",
    "estimate_psds",
    "estimate_psds_anechoic",
    "evaluate_result",
    "extract_coefficients",
    "image_sources",
    "mode_indices",
    "mode_strength",
    "num_modes",
    "process_recording",
    "psd_log_error",
    "render_scene",
    "run_bench_cell",
    "run_benchmark",
    "sir",
    "smoothed_periodogram",
    "sph_harmonic",
    "synthesize",
    "triple_harmonic_integral",
    "update_correlation",
    "wiener_separate",
    "wigner3j",
]
