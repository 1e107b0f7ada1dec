"""Source and reverberant PSD estimation from SH coefficient correlations.

Per frequency bin, the cross-correlations of the sound-field coefficients
form a vector Lambda of length (N+1)^4 that is linear in the unknown vector
Theta = [source PSDs Phi_1..Phi_L, reverberant SH coefficients Gamma_vu]:
Lambda = T Theta.  T has one column per source direction (entries
C_nn' Y*_nm Y_n'm' with C_nn' = 16 pi^2 i^n (-i)^n') and one column per
reverberant mode (C_nn' times the triple-harmonic integral).  Lambda is
tracked with an exponentially weighted moving average over STFT frames and
Theta is recovered with a truncated-SVD pseudo-inverse followed by
half-wave rectification of the physical entries.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.signal

from .sphmath import mode_indices, num_modes, sh_matrix, triple_harmonic_integral

log = logging.getLogger(__name__)

SVD_RELATIVE_TOLERANCE = 1e-6
DEFAULT_SMOOTHING = 0.4
DEFAULT_V_ORDER = 2


def correlation_length(order):
    return num_modes(order) ** 2


def _coupling_matrix(order):
    """C_nn' = 16 pi^2 i^n (-i)^n' over all mode pairs, shape (M, M)."""
    ns = np.array([n for n, _ in mode_indices(order)])
    return 16.0 * np.pi**2 * np.outer(1j**ns, (-1j) ** ns)


@lru_cache(maxsize=8)
def _psi_block(order, v_order):
    """Reverberant columns of T: shape (M^2, (v_order+1)^2)."""
    modes = mode_indices(order)
    c = _coupling_matrix(order)
    cols = []
    for v, u in mode_indices(v_order):
        w = np.array(
            [
                [
                    triple_harmonic_integral(v, n, n_p, u, m, m_p)
                    for (n_p, m_p) in modes
                ]
                for (n, m) in modes
            ]
        )
        cols.append((c * w).ravel())
    return np.stack(cols, axis=-1)


@dataclass
class TranslationMatrix:
    """Per-bin linear map T from Theta to the correlation vector Lambda."""

    t: np.ndarray  # ((N+1)^4, L + (V+1)^2)
    source_dirs: list
    order: int
    v_order: int
    _pinv_cache: dict = field(default_factory=dict, repr=False)

    @property
    def num_sources(self):
        return len(self.source_dirs)

    def num_columns(self, include_reverb=True):
        return self.t.shape[1] if include_reverb else self.num_sources

    def column_mask(self, include_reverb=True, v_limit=None):
        """Active columns: all L source columns, plus the reverberant columns
        with v <= v_limit when the reverberant model is enabled.

        A point source is indistinguishable from an order-2N angular power
        distribution, so callers cap v_limit at 2N(k)-1 for bins with reduced
        effective order to keep the system identifiable.
        """
        mask = np.zeros(self.t.shape[1], dtype=bool)
        mask[: self.num_sources] = True
        if include_reverb:
            vs = np.array([v for v, _ in mode_indices(self.v_order)])
            limit = self.v_order if v_limit is None else min(v_limit, self.v_order)
            mask[self.num_sources :] = vs <= limit
        return mask

    def pinv(self, row_mask=None, include_reverb=True, v_limit=None):
        """Truncated-SVD pseudo-inverse of T restricted to masked rows (and,
        for the anechoic variant, to the source columns only).  The result
        maps masked-row Lambda to Theta over the active columns; entries for
        inactive columns are zero."""
        key = (
            None if row_mask is None else row_mask.tobytes(),
            include_reverb,
            v_limit,
        )
        if key not in self._pinv_cache:
            col_mask = self.column_mask(include_reverb, v_limit)
            t = self.t[:, col_mask]
            if row_mask is not None:
                t = t[row_mask]
            u, s, vh = np.linalg.svd(t, full_matrices=False)
            keep = s > SVD_RELATIVE_TOLERANCE * s[0]
            if not keep.all():
                # Expected at low-frequency bins where the effective order is
                # reduced; informational only.
                log.debug(
                    "translation matrix rank-deficient: kept %d/%d singular values",
                    keep.sum(),
                    s.size,
                )
            log.debug(
                "translation matrix condition number %.3e", s[0] / s[keep][-1]
            )
            inv = vh[keep].conj().T @ np.diag(1.0 / s[keep]) @ u[:, keep].conj().T
            full = np.zeros(
                (self.num_columns(include_reverb), inv.shape[1]), dtype=complex
            )
            active = col_mask[: full.shape[0]]
            full[active] = inv
            self._pinv_cache[key] = full
        return self._pinv_cache[key]


def build_translation_matrix(dirs, order, v_order, k=None):
    """Assemble T for L source directions, estimation order N, reverberant
    order V.  The entries are frequency-independent, so the same matrix is
    reused across bins (the wavenumber argument is accepted for interface
    symmetry and ignored)."""
    if len(dirs) < 1:
        raise ValueError("need at least one source direction")
    if len({(d.theta, d.phi) for d in dirs}) != len(dirs):
        raise ValueError("source directions must be distinct")
    m2 = correlation_length(order)
    n_cols = len(dirs) + num_modes(v_order)
    if m2 < n_cols:
        raise ValueError(
            f"underdetermined system: {m2} correlation rows < {n_cols} unknowns "
            f"(L={len(dirs)}, N={order}, V={v_order})"
        )
    c = _coupling_matrix(order)
    y_src = sh_matrix(order, dirs)  # (L, M)
    upsilon = np.stack(
        [(c * np.outer(np.conj(y), y)).ravel() for y in y_src], axis=-1
    )
    t = np.concatenate([upsilon, _psi_block(order, v_order)], axis=-1)
    return TranslationMatrix(t=t, source_dirs=list(dirs), order=order, v_order=v_order)


@dataclass
class CorrelationState:
    """EWMA estimate of the correlation vector Lambda for one bin."""

    lam: np.ndarray  # ((N+1)^4,) complex
    beta: float = DEFAULT_SMOOTHING
    frame_count: int = 0

    @classmethod
    def empty(cls, order, beta=DEFAULT_SMOOTHING):
        return cls(lam=np.zeros(correlation_length(order), dtype=complex), beta=beta)


def update_correlation(state, coeffs):
    """One EWMA step: Lambda <- beta Lambda + (1-beta) alpha alpha^H.

    The first frame initializes Lambda to the instantaneous outer product
    instead of smoothing against the all-zero start.
    """
    coeffs = np.asarray(coeffs)
    outer = np.outer(coeffs, np.conj(coeffs)).ravel()
    if outer.shape != state.lam.shape:
        raise ValueError("coefficient frame does not match correlation state size")
    if state.frame_count == 0:
        lam = outer
    else:
        lam = state.beta * state.lam + (1.0 - state.beta) * outer
    return CorrelationState(lam=lam, beta=state.beta, frame_count=state.frame_count + 1)


@dataclass
class PsdEstimate:
    """Recovered PSDs for one bin (or arrays of bins/frames).

    phi holds the L source PSDs after half-wave rectification; gamma holds
    the (V+1)^2 reverberant coefficients with gamma[..., 0] (Gamma_00)
    rectified real, higher modes kept complex for diagnostics.
    imag_residual is the discarded imaginary magnitude of the physical
    entries, a finite-averaging diagnostic.
    """

    phi: np.ndarray
    gamma: np.ndarray
    imag_residual: float = 0.0

    @property
    def gamma00(self):
        return np.real(self.gamma[..., 0])


def _rectify(theta, num_sources):
    phi_raw = theta[..., :num_sources]
    gamma = np.array(theta[..., num_sources:], copy=True)
    residual = 0.0
    if phi_raw.size:
        residual = float(
            np.mean(np.abs(np.imag(phi_raw)))
            + (np.mean(np.abs(np.imag(gamma[..., :1]))) if gamma.size else 0.0)
        )
    phi = np.maximum(np.real(phi_raw), 0.0)
    if gamma.size:
        gamma[..., 0] = np.maximum(np.real(gamma[..., 0]), 0.0)
    return phi, gamma, residual


def estimate_psds(state, tmat, row_mask=None, include_reverb=True):
    """Solve Theta = pinv(T) Lambda for one bin and rectify."""
    lam = state.lam if isinstance(state, CorrelationState) else np.asarray(state)
    pinv = tmat.pinv(row_mask=row_mask, include_reverb=include_reverb)
    if row_mask is not None:
        lam = lam[row_mask]
    if lam.shape[0] != pinv.shape[1]:
        raise ValueError("correlation vector does not match translation matrix rows")
    theta = pinv @ lam
    phi, gamma, residual = _rectify(theta, tmat.num_sources)
    if not include_reverb:
        gamma = np.zeros((0,), dtype=complex)
    return PsdEstimate(phi=phi, gamma=gamma, imag_residual=residual)


def estimate_psds_anechoic(state, tmat, row_mask=None):
    """Anechoic variant: the reverberant columns are discarded from T."""
    return estimate_psds(state, tmat, row_mask=row_mask, include_reverb=False)


@dataclass
class PsdTrack:
    """Per-frame, per-bin PSD estimates for a whole recording."""

    phi: np.ndarray  # (frames, bins, L) rectified
    gamma00: np.ndarray  # (frames, bins) rectified
    gamma: np.ndarray  # (frames, bins, (V+1)^2) complex (empty if anechoic model)
    bin_freqs: np.ndarray
    beta: float


def _ewma_frames(x, beta):
    """EWMA along axis 0 with y[0] = x[0]."""
    b, a = [1.0 - beta], [1.0, -beta]
    zi = beta * x[:1]
    y, _ = scipy.signal.lfilter(b, a, x, axis=0, zi=zi)
    return y


def estimate_psd_track(coeffs, tmat, beta=DEFAULT_SMOOTHING, include_reverb=True):
    """Run the EWMA + pseudo-inverse estimator over all frames and bins.

    Bins sharing the same valid-mode mask are processed together: rows of
    Lambda (and T) involving modes above the bin's effective order are
    dropped for that bin, keeping the per-bin system consistent.
    """
    n_frames, n_bins, m = coeffs.coeffs.shape
    if m != num_modes(tmat.order):
        raise ValueError("coefficient set order does not match translation matrix")
    n_src = tmat.num_sources
    n_cols = tmat.num_columns(include_reverb)
    theta = np.zeros((n_frames, n_bins, n_cols), dtype=complex)

    pair_i, pair_j = np.divmod(np.arange(m * m), m)
    masks = coeffs.mode_mask
    _, group_ids = np.unique(masks, axis=0, return_inverse=True)
    ns = np.array([n for n, _ in mode_indices(tmat.order)])
    for g in np.unique(group_ids):
        bins = np.flatnonzero(group_ids == g)
        mode_ok = masks[bins[0]]
        row_mask = mode_ok[pair_i] & mode_ok[pair_j]
        order_g = int(ns[mode_ok].max()) if mode_ok.any() else 0
        pinv = tmat.pinv(
            row_mask=row_mask,
            include_reverb=include_reverb,
            v_limit=max(2 * order_g - 1, 0),
        )
        a = coeffs.coeffs[:, bins, :]  # (T, nb, M)
        outer = a[..., pair_i[row_mask]] * np.conj(a[..., pair_j[row_mask]])
        lam = _ewma_frames(outer, beta)
        theta[:, bins, :] = lam @ pinv.T

    phi, gamma, _ = _rectify(theta, n_src)
    if include_reverb:
        gamma00 = np.real(gamma[..., 0])
    else:
        gamma = np.zeros(theta.shape[:2] + (0,), dtype=complex)
        gamma00 = np.zeros(theta.shape[:2])
    return PsdTrack(
        phi=phi, gamma00=gamma00, gamma=gamma, bin_freqs=coeffs.bin_freqs, beta=beta
    )
