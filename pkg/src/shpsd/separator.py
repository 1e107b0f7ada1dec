"""Maximum-directivity beamforming and Wiener post-filtering.

The beamformer applies uniform modal weighting i^{-n}/(N+1)^2 to the
sound-field coefficients, which gives unit gain toward the steering
direction for a full-order plane wave.  The Wiener post-filter scales each
beamformer output by Phi_l / (sum_l' Phi_l' + Phi_r), with the reverberant
power Phi_r = Gamma_00 / sqrt(4 pi).
"""

from dataclasses import dataclass

import numpy as np

from .sphmath import mode_indices, sh_matrix
from .stft import Spectrogram, synthesize

# silence guard: bins whose PSD denominator falls below this fraction of the
# frame power get zero gain
DENOMINATOR_GUARD = 1e-12


@dataclass
class SeparationOutput:
    spectrograms: np.ndarray  # (L, frames, bins) post-filtered
    waveforms: np.ndarray  # (L, samples)
    beamformer_outputs: np.ndarray  # (L, frames, bins)
    gains: np.ndarray  # (L, frames, bins) real in [0, 1]


def beamform(coeffs, direction):
    """Maximum-directivity beamformer output per frame and bin.

    Uses each bin's effective order N(k): modes above it are already zeroed
    in the coefficient set, and the normalization is 1/(N(k)+1)^2.
    """
    modes = mode_indices(coeffs.order)
    ns = np.array([n for n, _ in modes])
    y = sh_matrix(coeffs.order, [direction])[0]  # (M,)
    weights = (1j ** (-ns)) * y  # per-mode, order-normalized per bin below
    norm = (coeffs.order_per_bin + 1.0) ** 2  # (bins,)
    masked_w = np.where(coeffs.mode_mask, weights[None, :], 0.0)  # (bins, M)
    return np.einsum("tkm,km->tk", coeffs.coeffs, masked_w) / norm[None, :]


def reverberant_power(est):
    """Total reverberant power Phi_r = Gamma_00 / sqrt(4 pi)."""
    gamma00 = est.gamma00 if hasattr(est, "gamma00") else np.asarray(est)
    return np.maximum(gamma00, 0.0) / np.sqrt(4.0 * np.pi)


def wiener_gains(phi, phi_r, frame_power=None):
    """Per-source Wiener gains Phi_l / (sum Phi + Phi_r), guarded in silence.

    phi: (frames, bins, L) rectified source PSDs; phi_r: (frames, bins).
    """
    denom = phi.sum(axis=-1) + phi_r  # (frames, bins)
    if frame_power is None:
        frame_power = denom.mean(axis=-1, keepdims=True)
    guard = DENOMINATOR_GUARD * np.maximum(frame_power, 0.0)
    safe = denom > np.maximum(guard, 0.0)
    gains = np.where(
        safe[..., None], phi / np.maximum(denom[..., None], 1e-300), 0.0
    )
    return np.clip(gains, 0.0, 1.0)


def wiener_separate(coeffs, directions, psd_track, cfg, signal_length=None):
    """Beamform toward each source and apply the Wiener post-filter.

    Gains are computed causally from the same frame's running PSD
    estimates.  Returns per-source spectrograms and waveforms.
    """
    z = np.stack([beamform(coeffs, d) for d in directions])  # (L, T, K)
    phi_r = reverberant_power(psd_track)
    frame_power = np.mean(np.abs(z) ** 2, axis=(0, 2))[:, None]  # (T, 1)
    gains = wiener_gains(psd_track.phi, phi_r, frame_power=frame_power)
    sep = z * np.moveaxis(gains, -1, 0)  # (L, T, K)
    waveforms = np.stack(
        [
            synthesize(Spectrogram(s, cfg, signal_length=signal_length or 0))
            for s in sep
        ]
    )
    return SeparationOutput(
        spectrograms=sep,
        waveforms=waveforms,
        beamformer_outputs=z,
        gains=np.moveaxis(gains, -1, 0),
    )
