"""Figure rendering and delimited output for the command-line tools.

Every report path writes matplotlib figures next to the CSV files so a run
directory is self-describing: PSD tracks as time-frequency images, benchmark
results as bar charts, separated waveforms as overview plots.
"""

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DB_FLOOR = 1e-12


def _db(x):
    return 10.0 * np.log10(np.maximum(x, DB_FLOOR))


def save_psd_csv(path, track, frame_times):
    """Write the PSD track as rows of (frame, time_s, bin_hz, phi_1..L, gamma00)."""
    n_frames, n_bins, n_src = track.phi.shape
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["frame", "time_s", "bin_hz"]
            + [f"phi_{idx + 1}" for idx in range(n_src)]
            + ["gamma00"]
        )
        for t in range(n_frames):
            for k in range(n_bins):
                writer.writerow(
                    [t, f"{frame_times[t]:.6f}", f"{track.bin_freqs[k]:.2f}"]
                    + [f"{track.phi[t, k, s]:.6e}" for s in range(n_src)]
                    + [f"{track.gamma00[t, k]:.6e}"]
                )


def save_psd_figure(path, track, frame_times, labels=None):
    """One time-frequency panel per source PSD plus one for the reverberant
    level, all on a shared dB color scale."""
    n_src = track.phi.shape[2]
    labels = labels or [f"source {idx + 1}" for idx in range(n_src)]
    panels = [(_db(track.phi[:, :, s]).T, labels[s]) for s in range(n_src)]
    panels.append((_db(track.gamma00).T, "reverberant (gamma00)"))
    vmax = max(p.max() for p, _ in panels)
    vmin = vmax - 60.0
    fig, axes = plt.subplots(
        len(panels), 1, figsize=(8, 2.2 * len(panels)), sharex=True, squeeze=False
    )
    extent = [frame_times[0], frame_times[-1], track.bin_freqs[0], track.bin_freqs[-1]]
    for ax, (img, title) in zip(axes[:, 0], panels):
        im = ax.imshow(
            img, origin="lower", aspect="auto", extent=extent, vmin=vmin, vmax=vmax,
            cmap="magma",
        )
        ax.set_ylabel("freq [Hz]")
        ax.set_title(title, fontsize=9)
    axes[-1, 0].set_xlabel("time [s]")
    fig.colorbar(im, ax=axes[:, 0], label="PSD [dB]")
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_waveform_figure(path, waveforms, sample_rate, labels=None):
    wavs = np.atleast_2d(np.asarray(waveforms))
    labels = labels or [f"source {idx + 1}" for idx in range(wavs.shape[0])]
    t = np.arange(wavs.shape[1]) / sample_rate
    fig, axes = plt.subplots(
        wavs.shape[0], 1, figsize=(8, 1.6 * wavs.shape[0]), sharex=True,
        squeeze=False,
    )
    for ax, w, lab in zip(axes[:, 0], wavs, labels):
        ax.plot(t, w, linewidth=0.4)
        ax.set_ylabel(lab, fontsize=8)
    axes[-1, 0].set_xlabel("time [s]")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_bench_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["label", "num_sources", "t60", "runs", "mean_sir_db",
             "mean_beamformer_sir_db"]
        )
        for row in rows:
            writer.writerow(
                [row["label"], row["num_sources"], row["t60"], row["runs"],
                 f"{row['mean_sir_db']:.2f}",
                 f"{row['mean_beamformer_sir_db']:.2f}"]
            )


def save_bench_figure(path, rows):
    labels = [row["label"] for row in rows]
    finals = [row["mean_sir_db"] for row in rows]
    bf = [row["mean_beamformer_sir_db"] for row in rows]
    x = np.arange(len(rows))
    fig, ax = plt.subplots(figsize=(1.6 * len(rows) + 2, 4))
    ax.bar(x - 0.2, bf, width=0.4, label="beamformer only")
    ax.bar(x + 0.2, finals, width=0.4, label="with post-filter")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("mean SIR [dB]")
    ax.grid(axis="y", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_eval_figure(path, report):
    labels = [f"source {idx + 1}" for idx in range(len(report.sir_db))]
    x = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(2 + 1.2 * len(labels), 4))
    bf = report.extra.get("beamformer_sir_db")
    if bf is not None:
        ax.bar(x - 0.2, bf, width=0.4, label="beamformer only")
        ax.bar(x + 0.2, report.sir_db, width=0.4, label="with post-filter")
        ax.legend()
    else:
        ax.bar(x, report.sir_db, width=0.5)
    ax.set_xticks(x)
    ax.set_xticklabels(labels)
    ax.set_ylabel("SIR [dB]")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def ensure_outdir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out
