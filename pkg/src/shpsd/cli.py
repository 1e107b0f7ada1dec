"""Command-line interface.

Subcommands cover the full workflow: `simulate` renders a synthetic scene to
a run directory, `estimate` produces per-source PSD tracks (CSV + figures),
`separate` writes the extracted source waveforms, `evaluate` scores a run
against its ground-truth stems, and `bench` runs the multi-cell benchmark.

Exit codes: 0 on success, 1 on configuration errors, 2 on numerical failure.
"""

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .config import ConfigError, load_config, read_wav, write_wav
from .pipeline import evaluate_result, process_recording, run_benchmark
from .report import (
    ensure_outdir,
    save_bench_csv,
    save_bench_figure,
    save_eval_figure,
    save_psd_csv,
    save_psd_figure,
    save_waveform_figure,
)
from .scene import SceneRecording, render_scene

EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

NUMERICAL_ERRORS = (np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError)


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load(config_path):
    try:
        return load_config(config_path)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))


def _check_finite(name, *arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            _fail(EXIT_NUMERICAL, f"{name} produced non-finite values")


def _simulate(cfg, seed=None):
    if not cfg.sources:
        _fail(EXIT_CONFIG, "config defines no sources")
    try:
        return render_scene(
            cfg.sources,
            cfg.geometry,
            cfg.stft,
            room=cfg.room,
            seed=cfg.seed if seed is None else seed,
        )
    except ValueError as exc:
        _fail(EXIT_CONFIG, str(exc))
    except NUMERICAL_ERRORS as exc:
        _fail(EXIT_NUMERICAL, str(exc))


def _write_recording(outdir, cfg, rec):
    write_wav(outdir / "mixture.wav", cfg.stft.sample_rate, rec.mic_signals.T)
    stems = ensure_outdir(outdir / "stems")
    for idx, stem in enumerate(rec.ground_truth):
        write_wav(stems / f"source_{idx + 1:02d}.wav", cfg.stft.sample_rate, stem)
    meta = dict(rec.metadata)
    meta["num_mics"] = rec.mic_signals.shape[0]
    meta["sample_rate"] = rec.sample_rate
    (outdir / "metadata.json").write_text(json.dumps(meta, indent=2))
    save_waveform_figure(
        outdir / "stems.png", rec.ground_truth, cfg.stft.sample_rate
    )


def _load_recording(cfg, input_dir):
    """Rebuild a SceneRecording from a simulate run directory."""
    input_dir = Path(input_dir)
    mix_path = input_dir / "mixture.wav"
    if not mix_path.exists():
        _fail(EXIT_CONFIG, f"no mixture.wav in {input_dir}")
    rate, mix = read_wav(mix_path)
    if rate != cfg.stft.sample_rate:
        _fail(
            EXIT_CONFIG,
            f"{mix_path}: sample rate {rate} != configured {cfg.stft.sample_rate}",
        )
    mix = mix.T  # (Q, samples)
    if mix.shape[0] != len(cfg.geometry.mic_dirs):
        _fail(
            EXIT_CONFIG,
            f"{mix_path}: {mix.shape[0]} channels but the array has "
            f"{len(cfg.geometry.mic_dirs)} microphones",
        )
    stem_paths = sorted((input_dir / "stems").glob("source_*.wav"))
    stems = None
    if stem_paths:
        stems = np.stack([read_wav(p)[1] for p in stem_paths])
    meta = {}
    meta_path = input_dir / "metadata.json"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
    return SceneRecording(
        mic_signals=mix,
        ground_truth=stems,
        sample_rate=rate,
        metadata=meta,
    )


def _directions(cfg):
    if not cfg.sources:
        _fail(EXIT_CONFIG, "config defines no sources (directions are required)")
    return [s.direction for s in cfg.sources]


def _process(cfg, rec):
    try:
        result = process_recording(
            rec, _directions(cfg), cfg.geometry, cfg.stft, cfg.estimator
        )
    except ValueError as exc:
        _fail(EXIT_CONFIG, str(exc))
    except NUMERICAL_ERRORS as exc:
        _fail(EXIT_NUMERICAL, str(exc))
    _check_finite("estimation", result.psd_track.phi, result.separation.waveforms)
    return result


def _frame_times(cfg, n_frames):
    return np.arange(n_frames) * cfg.stft.hop / cfg.stft.sample_rate


@click.group()
@click.version_option(version=__version__)
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose):
    """Per-source PSD estimation and separation for spherical-array audio."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.argument("config_path", type=click.Path(exists=False))
@click.option("-o", "--outdir", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Override the config seed.")
def simulate(config_path, outdir, seed):
    """Render a synthetic scene to OUTDIR (mixture, stems, metadata)."""
    cfg = _load(config_path)
    rec = _simulate(cfg, seed=seed)
    _check_finite("simulation", rec.mic_signals)
    out = ensure_outdir(outdir)
    _write_recording(out, cfg, rec)
    click.echo(
        f"wrote {rec.mic_signals.shape[0]}-channel mixture "
        f"({rec.mic_signals.shape[1]} samples) and "
        f"{rec.ground_truth.shape[0]} stems to {out}"
    )


@main.command()
@click.argument("config_path", type=click.Path(exists=False))
@click.option("-i", "--input-dir", type=click.Path(), default=None,
              help="Run directory from `simulate`; omitted = simulate in memory.")
@click.option("-o", "--outdir", required=True, type=click.Path())
def estimate(config_path, input_dir, outdir):
    """Estimate per-source and reverberant PSD tracks (CSV + figure)."""
    cfg = _load(config_path)
    rec = _load_recording(cfg, input_dir) if input_dir else _simulate(cfg)
    result = _process(cfg, rec)
    out = ensure_outdir(outdir)
    times = _frame_times(cfg, result.psd_track.phi.shape[0])
    save_psd_csv(out / "psd.csv", result.psd_track, times)
    save_psd_figure(out / "psd.png", result.psd_track, times)
    click.echo(f"wrote PSD track ({result.psd_track.phi.shape[0]} frames, "
               f"{result.psd_track.phi.shape[1]} bins, "
               f"{result.psd_track.phi.shape[2]} sources) to {out}")


@main.command()
@click.argument("config_path", type=click.Path(exists=False))
@click.option("-i", "--input-dir", type=click.Path(), default=None,
              help="Run directory from `simulate`; omitted = simulate in memory.")
@click.option("-o", "--outdir", required=True, type=click.Path())
def separate(config_path, input_dir, outdir):
    """Extract per-source waveforms with the beamformer + post-filter."""
    cfg = _load(config_path)
    rec = _load_recording(cfg, input_dir) if input_dir else _simulate(cfg)
    result = _process(cfg, rec)
    out = ensure_outdir(outdir)
    for idx, wav in enumerate(result.separation.waveforms):
        write_wav(out / f"separated_{idx + 1:02d}.wav", cfg.stft.sample_rate, wav)
    save_waveform_figure(
        out / "separated.png", result.separation.waveforms, cfg.stft.sample_rate
    )
    click.echo(
        f"wrote {len(result.separation.waveforms)} separated waveforms to {out}"
    )


@main.command()
@click.argument("config_path", type=click.Path(exists=False))
@click.option("-i", "--input-dir", type=click.Path(), default=None,
              help="Run directory from `simulate`; omitted = simulate in memory.")
@click.option("-o", "--outdir", required=True, type=click.Path())
@click.option("--skip-frames", type=int, default=20, show_default=True,
              help="Frames excluded from PSD error while the tracker converges.")
def evaluate(config_path, input_dir, outdir, skip_frames):
    """Score separation and PSD estimation against the ground-truth stems."""
    cfg = _load(config_path)
    rec = _load_recording(cfg, input_dir) if input_dir else _simulate(cfg)
    if rec.ground_truth is None:
        _fail(EXIT_CONFIG, "evaluation needs ground-truth stems (stems/ directory)")
    result = _process(cfg, rec)
    try:
        report = evaluate_result(result, rec, skip_frames=skip_frames)
    except ValueError as exc:
        _fail(EXIT_CONFIG, str(exc))
    out = ensure_outdir(outdir)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2))
    save_eval_figure(out / "evaluation.png", report)
    click.echo(f"{'source':>8} {'SIR [dB]':>10} {'beamformer [dB]':>16} "
               f"{'PSD err [dB]':>13}")
    bf = report.extra["beamformer_sir_db"]
    for idx in range(len(report.sir_db)):
        click.echo(f"{idx + 1:>8} {report.sir_db[idx]:>10.2f} {bf[idx]:>16.2f} "
                   f"{report.psd_log_error_db[idx]:>13.2f}")
    click.echo(f"mean SIR {report.mean_sir_db:.2f} dB; report in {out}")


@main.command()
@click.option("-o", "--outdir", required=True, type=click.Path())
@click.option("--runs", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--duration", type=float, default=2.0, show_default=True,
              help="Per-run scene duration in seconds.")
def bench(outdir, runs, seed, duration):
    """Run the benchmark grid (source counts and reverberation times)."""
    try:
        rows = run_benchmark(runs=runs, seed=seed, duration=duration)
    except NUMERICAL_ERRORS as exc:
        _fail(EXIT_NUMERICAL, str(exc))
    out = ensure_outdir(outdir)
    save_bench_csv(out / "bench.csv", rows)
    (out / "bench.json").write_text(json.dumps(rows, indent=2))
    save_bench_figure(out / "bench.png", rows)
    click.echo(f"{'cell':<20} {'SIR [dB]':>10} {'beamformer [dB]':>16}")
    for row in rows:
        click.echo(f"{row['label']:<20} {row['mean_sir_db']:>10.2f} "
                   f"{row['mean_beamformer_sir_db']:>16.2f}")
    click.echo(f"benchmark report in {out}")


if __name__ == "__main__":
    main()
