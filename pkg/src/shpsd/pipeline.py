"""End-to-end processing: coefficients -> PSD track -> separation -> metrics."""

from dataclasses import dataclass, field

import numpy as np

from .analysis import analyze_recording
from .estimator import (
    DEFAULT_SMOOTHING,
    DEFAULT_V_ORDER,
    build_translation_matrix,
    estimate_psd_track,
)
from .geometry import default_geometry
from .metrics import EvalReport, psd_log_error, sir, smoothed_periodogram
from .scene import RoomSpec, SourceSpec, render_scene
from .separator import wiener_separate
from .sphmath import SphericalDirection
from .stft import Spectrogram, StftConfig, analyze, synthesize


@dataclass
class EstimatorParams:
    beta: float = DEFAULT_SMOOTHING
    v_order: int = DEFAULT_V_ORDER
    include_reverb: bool = True


@dataclass
class PipelineResult:
    coeffs: object
    psd_track: object
    separation: object
    directions: list
    config: StftConfig


def process_recording(recording, directions, geom, cfg, params=None):
    """Run extraction, PSD estimation and separation on a recording."""
    params = params or EstimatorParams()
    coeffs = analyze_recording(recording, geom, cfg)
    tmat = build_translation_matrix(directions, geom.order, params.v_order)
    track = estimate_psd_track(
        coeffs, tmat, beta=params.beta, include_reverb=params.include_reverb
    )
    separation = wiener_separate(
        coeffs,
        directions,
        track,
        cfg,
        signal_length=recording.mic_signals.shape[1],
    )
    return PipelineResult(
        coeffs=coeffs,
        psd_track=track,
        separation=separation,
        directions=directions,
        config=cfg,
    )


def reference_psd_tracks(recording, cfg, beta=DEFAULT_SMOOTHING):
    """EWMA periodograms of the clean stems: shape (frames, bins, L)."""
    tracks = [
        smoothed_periodogram(analyze(stem, cfg).frames, beta)
        for stem in recording.ground_truth
    ]
    return np.stack(tracks, axis=-1)


def evaluate_result(result, recording, skip_frames=0):
    """SIR of the separated waveforms and of the raw beamformer outputs."""
    refs = recording.ground_truth
    sir_final = sir(result.separation.waveforms, refs)
    bf_wavs = np.stack(
        [
            synthesize(Spectrogram(z, result.config, signal_length=refs.shape[1]))
            for z in result.separation.beamformer_outputs
        ]
    )
    sir_bf = sir(bf_wavs, refs)
    ref_psd = reference_psd_tracks(recording, result.config, beta=result.psd_track.beta)
    errs = [
        psd_log_error(
            result.psd_track.phi[skip_frames:, :, idx],
            ref_psd[skip_frames:, :, idx],
        )
        for idx in range(refs.shape[0])
    ]
    return EvalReport(
        sir_db=sir_final,
        mean_sir_db=float(np.mean(sir_final)),
        psd_log_error_db=np.array(errs),
        extra={
            "beamformer_sir_db": [float(x) for x in sir_bf],
            "beamformer_mean_sir_db": float(np.mean(sir_bf)),
        },
    )


def random_planar_directions(n, rng, theta_deg=76.0, theta_jitter_deg=3.0,
                             min_separation_deg=12.0, max_tries=200):
    """Random azimuths on (nearly) the same plane, with a minimum angular
    separation so the translation matrix stays well-conditioned."""
    for _ in range(max_tries):
        azimuths = np.sort(rng.uniform(0.0, 360.0, size=n))
        gaps = np.diff(np.concatenate([azimuths, [azimuths[0] + 360.0]]))
        if gaps.min() >= min_separation_deg:
            thetas = theta_deg + rng.uniform(
                -theta_jitter_deg, theta_jitter_deg, size=n
            )
            return [
                SphericalDirection.from_degrees(t, p)
                for t, p in zip(thetas, azimuths)
            ]
    raise RuntimeError("could not place sources with the requested separation")


@dataclass
class BenchCell:
    num_sources: int
    t60: float = 0.0
    label: str = ""

    def __post_init__(self):
        if not self.label:
            self.label = (
                f"L={self.num_sources}, anechoic"
                if self.t60 == 0
                else f"L={self.num_sources}, T60={self.t60:g}s"
            )


DEFAULT_BENCH_CELLS = [
    BenchCell(4),
    BenchCell(6),
    BenchCell(8),
    BenchCell(4, 0.2),
    BenchCell(4, 0.3),
    BenchCell(4, 0.5),
]


def run_bench_cell(cell, runs=20, seed=0, duration=2.0, geom=None, cfg=None,
                   params=None, skip_frames=20):
    """Average separation SIR over seeded runs for one benchmark cell.

    Each run draws fresh source signals and azimuths.  Returns a dict with
    the mean final SIR, the mean beamformer-only SIR, and per-run values.
    """
    geom = geom or default_geometry()
    cfg = cfg or StftConfig()
    params = params or EstimatorParams()
    rng = np.random.default_rng(seed)
    room = (
        None
        if cell.t60 == 0
        else RoomSpec(dimensions=(6.0, 7.0, 6.0), t60=cell.t60)
    )
    final, bf = [], []
    for run in range(runs):
        dirs = random_planar_directions(cell.num_sources, rng)
        sources = [
            SourceSpec(direction=d, kind="modulated", duration=duration)
            for d in dirs
        ]
        scene_seed = int(rng.integers(0, 2**31))
        rec = render_scene(sources, geom, cfg, room=room, seed=scene_seed)
        result = process_recording(rec, dirs, geom, cfg, params)
        report = evaluate_result(result, rec)
        final.append(report.mean_sir_db)
        bf.append(report.extra["beamformer_mean_sir_db"])
    return {
        "label": cell.label,
        "num_sources": cell.num_sources,
        "t60": cell.t60,
        "runs": runs,
        "mean_sir_db": float(np.mean(final)),
        "mean_beamformer_sir_db": float(np.mean(bf)),
        "per_run_sir_db": [float(x) for x in final],
    }


def run_benchmark(cells=None, runs=20, seed=0, duration=2.0, **kwargs):
    cells = cells or DEFAULT_BENCH_CELLS
    return [
        run_bench_cell(cell, runs=runs, seed=seed + 1000 * idx, duration=duration,
                       **kwargs)
        for idx, cell in enumerate(cells)
    ]
