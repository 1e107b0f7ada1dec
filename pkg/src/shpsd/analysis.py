"""Extraction of sound-field SH coefficients from multichannel array spectra."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .sphmath import mode_indices, num_modes, sh_matrix
from .scene import mode_strength_profile
from .stft import analyze

# open-array modes with |b_n| below this fraction of the per-bin maximum are
# dropped: 1/b_n would amplify noise unboundedly near Bessel nulls
MODE_RELIABILITY_FRACTION = 1e-2


@dataclass
class CoefficientSet:
    """Sound-field coefficients alpha_nm per frame and bin.

    coeffs has shape (frames, bins, (order+1)^2) in mode-major layout.
    Entries where mode_mask is False (above the bin's effective order, or
    numerically unreliable) are zeroed.
    """

    coeffs: np.ndarray
    order_per_bin: np.ndarray
    mode_mask: np.ndarray
    order: int
    bin_freqs: np.ndarray

    @property
    def num_frames(self):
        return self.coeffs.shape[0]

    @property
    def num_bins(self):
        return self.coeffs.shape[1]


def effective_order(k, geom):
    """Estimation order at wavenumber k: ceil(kr) capped by the array order,
    floored at 1 so low bins still provide cross-correlations."""
    n = int(np.ceil(k * geom.radius))
    return int(np.clip(n, 1, geom.order))


@lru_cache(maxsize=8)
def _sh_pinv_cached(order, dirs_key):
    y = sh_matrix(order, [d for d in dirs_key])
    return np.linalg.pinv(y)


def _sh_pinv(geom):
    return _sh_pinv_cached(geom.order, tuple(geom.mic_dirs))


def extract_coefficients(mic_spectra, geom, cfg):
    """Recover alpha_nm(tau, k) from Q microphone spectrograms.

    The SH synthesis matrix over the microphone grid is inverted by least
    squares (pseudo-inverse), which reduces geometry-dependent aliasing and
    reduces to the plain quadrature sum when the grid admits uniform weights.
    The result is divided by the mode strength b_n(kr).
    """
    if isinstance(mic_spectra, np.ndarray) and mic_spectra.ndim == 2:
        raise ValueError("expected Q spectrograms, got a single 2-D array")
    frames = np.stack(
        [s.frames if hasattr(s, "frames") else s for s in mic_spectra]
    )  # (Q, T, K)
    if frames.shape[0] != geom.num_mics:
        raise ValueError(
            f"channel count {frames.shape[0]} does not match geometry "
            f"({geom.num_mics} microphones)"
        )
    ks = cfg.bin_wavenumbers()
    y_pinv = _sh_pinv(geom)  # (M, Q)
    raw = np.einsum("mq,qtk->tkm", y_pinv, frames, optimize=True)

    b = mode_strength_profile(geom, ks)  # (K, M)
    ns = np.array([n for n, _ in mode_indices(geom.order)])
    order_per_bin = np.array([effective_order(k, geom) for k in ks])
    mask = ns[None, :] <= order_per_bin[:, None]
    if geom.kind == "open":
        per_n = np.abs(b[:, [n * n + n for n in range(geom.order + 1)]])
        thresh = MODE_RELIABILITY_FRACTION * per_n.max(axis=1, keepdims=True)
        mask &= np.abs(b) >= thresh
    safe_b = np.where(np.abs(b) > 1e-300, b, 1.0)
    coeffs = np.where(mask[None, :, :], raw / safe_b[None, :, :], 0.0)
    return CoefficientSet(
        coeffs=coeffs,
        order_per_bin=order_per_bin,
        mode_mask=mask,
        order=geom.order,
        bin_freqs=cfg.bin_freqs,
    )


def analyze_recording(recording, geom, cfg):
    """STFT every channel of a SceneRecording and extract coefficients."""
    specs = [analyze(ch, cfg) for ch in recording.mic_signals]
    return extract_coefficients(specs, geom, cfg)
