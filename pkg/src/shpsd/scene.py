"""Synthetic scene rendering for a spherical microphone array.

A scene is a set of far-field sources mixed at the array through per-bin
multiplicative transfer functions: each propagation path (direct, plus
shoebox image sources when a room is given) contributes
gain * exp(-i k d) times the array's plane-wave response from the path
direction.  Ground-truth stems are the direct-path-only renders of each
source, used by the evaluation metrics.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .geometry import ArrayGeometry
from .sphmath import SphericalDirection, mode_indices, mode_strength, sh_matrix
from .stft import SPEED_OF_SOUND, StftConfig, Spectrogram, analyze, synthesize


@dataclass
class SourceSpec:
    direction: SphericalDirection
    distance: float = 2.0
    signal: np.ndarray | None = None
    kind: str = "noise"  # noise | modulated; ignored when signal is given
    duration: float = 2.0

    def __post_init__(self):
        if self.distance <= 0:
            raise ValueError("source distance must be positive")


@dataclass
class RoomSpec:
    """Shoebox room.  With diffuse_reflections (default) every image path
    carries an independent random phase per frame and bin, drawn from the
    scene seed: reflections stay mutually uncorrelated and uncorrelated with
    the direct path, which is the regime the PSD estimator models.  Set it
    False for fully deterministic multiplicative transfer functions."""

    dimensions: tuple
    t60: float = 0.0
    max_image_order: int = 3
    array_position: tuple | None = None
    diffuse_reflections: bool = True

    def __post_init__(self):
        self.dimensions = tuple(float(d) for d in self.dimensions)
        if len(self.dimensions) != 3 or min(self.dimensions) <= 0:
            raise ValueError("room dimensions must be three positive lengths")
        if self.t60 < 0:
            raise ValueError("t60 must be nonnegative")
        if self.array_position is None:
            self.array_position = tuple(d / 2 for d in self.dimensions)
        self._check_inside(self.array_position, "array")

    def _check_inside(self, pos, label):
        for x, d in zip(pos, self.dimensions):
            if not 0 < x < d:
                raise ValueError(f"{label} position {tuple(pos)} is outside the room")

    def reflection_coefficient(self):
        """Uniform wall amplitude reflection coefficient from t60 (Eyring)."""
        if self.t60 == 0:
            return 0.0
        lx, ly, lz = self.dimensions
        volume = lx * ly * lz
        surface = 2 * (lx * ly + ly * lz + lx * lz)
        return float(np.exp(-0.1611 * volume / (2.0 * surface * self.t60)))


@dataclass
class ImagePath:
    direction: SphericalDirection
    gain: float
    delay: float  # seconds


@dataclass
class SceneRecording:
    mic_signals: np.ndarray  # (Q, samples)
    ground_truth: np.ndarray | None  # (L, samples); None for real recordings
    sample_rate: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if (
            self.ground_truth is not None
            and self.mic_signals.shape[1] != self.ground_truth.shape[1]
        ):
            raise ValueError("mic signals and stems must share length")


def white_noise(n_samples, rng):
    return rng.standard_normal(n_samples)


def modulated_noise(n_samples, rng, sample_rate, mod_cutoff_hz=3.0, depth=1.2):
    """White noise with a slow log-normal amplitude envelope (speech-like
    energy fluctuation, so per-frame PSDs differ across sources)."""
    carrier = rng.standard_normal(n_samples)
    sos = scipy.signal.butter(2, mod_cutoff_hz, fs=sample_rate, output="sos")
    env = scipy.signal.sosfilt(sos, rng.standard_normal(n_samples))
    env = env / max(np.std(env), 1e-12)
    return carrier * np.exp(depth * env)


def _materialize_signals(sources, cfg, rng):
    sigs = []
    for src in sources:
        if src.signal is not None:
            sigs.append(np.asarray(src.signal, dtype=float))
        elif src.kind == "noise":
            sigs.append(white_noise(int(src.duration * cfg.sample_rate), rng))
        elif src.kind == "modulated":
            sigs.append(
                modulated_noise(
                    int(src.duration * cfg.sample_rate), rng, cfg.sample_rate
                )
            )
        else:
            raise ValueError(f"unknown signal kind {src.kind!r}")
    n = max(s.size for s in sigs)
    if n < 10 * cfg.hop:
        raise ValueError("source signals too short: need at least 10 STFT frames")
    return np.stack([np.pad(s, (0, n - s.size)) for s in sigs])


def render_order(k, geom, buffer=2):
    """SH truncation order for rendering at wavenumber k: ceil(kr)+buffer,
    capped at the array order."""
    return int(min(np.ceil(k * geom.radius) + buffer, geom.order))


def mode_strength_profile(geom, ks, order=None):
    """b_n(kr) per bin and mode, shape (len(ks), (order+1)^2).

    The zero-frequency bin uses the open-array limit j_n(0) for both array
    kinds (the rigid expression is singular at kr = 0 but shares the limit).
    """
    order = geom.order if order is None else order
    ks = np.asarray(ks, dtype=float)
    kr = ks * geom.radius
    ns = np.array([n for n, _ in mode_indices(order)])
    out = np.empty((ks.size, ns.size), dtype=complex)
    nonzero = kr > 0
    for col, n in enumerate(ns):
        out[nonzero, col] = mode_strength(n, kr[nonzero], geom.kind)
        out[~nonzero, col] = 1.0 if n == 0 else 0.0
    return out


def plane_wave_matrix(directions, geom, ks, order_per_bin=None):
    """Array response to unit plane waves: shape (n_dirs, n_bins, Q).

    Entry [d, k, q] is the pressure at microphone q for a unit-amplitude
    plane wave from directions[d] at wavenumber ks[k], evaluated through the
    truncated SH expansion with mode strength b_n.  order_per_bin may exceed
    the array order (pure pressure synthesis is not limited by it).
    """
    ks = np.asarray(ks, dtype=float)
    if order_per_bin is None:
        order_per_bin = np.array([render_order(k, geom) for k in ks])
    order_per_bin = np.asarray(order_per_bin)
    max_order = int(order_per_bin.max())
    modes = mode_indices(max_order)
    ns = np.array([n for n, _ in modes])
    b = mode_strength_profile(geom, ks, order=max_order)
    b = np.where(ns[None, :] <= order_per_bin[:, None], b, 0.0)
    y_src = sh_matrix(max_order, directions)  # (D, M)
    y_mic = sh_matrix(max_order, geom.mic_dirs)  # (Q, M)
    src_part = 4.0 * np.pi * (1j**ns) * np.conj(y_src)
    return np.einsum("dm,km,qm->dkq", src_part, b, y_mic, optimize=True)


def plane_wave_pressure(direction, geom, k, order=None):
    """Pressure at each microphone for a unit plane wave from `direction`."""
    if k < 0:
        raise ValueError("wavenumber must be nonnegative")
    if order is None:
        order = render_order(k, geom)
    return plane_wave_matrix(
        [direction], geom, np.array([k]), order_per_bin=np.array([order])
    )[0, 0]


def image_sources(room, source_pos, array_pos=None):
    """Shoebox image-source list up to room.max_image_order reflections.

    Returns ImagePath entries (direction seen from the array, amplitude gain
    reflection^count / distance, propagation delay).  The zeroth entry is the
    direct path.  With t60 = 0 only the direct path is returned.
    """
    source_pos = np.asarray(source_pos, dtype=float)
    array_pos = np.asarray(
        room.array_position if array_pos is None else array_pos, dtype=float
    )
    room._check_inside(source_pos, "source")
    room._check_inside(array_pos, "array")

    refl = room.reflection_coefficient()
    max_order = room.max_image_order if room.t60 > 0 else 0

    axis_images = []  # per axis: list of (coordinate, reflection count)
    for ax in range(3):
        length = room.dimensions[ax]
        s = source_pos[ax]
        entries = []
        for n in range(-max_order, max_order + 1):
            for p in (0, 1):
                count = abs(n - p) + abs(n)
                if count > max_order:
                    continue
                entries.append(((1 - 2 * p) * s + 2 * n * length, count))
        axis_images.append(entries)

    paths = []
    for x, cx in axis_images[0]:
        for y, cy in axis_images[1]:
            for z, cz in axis_images[2]:
                count = cx + cy + cz
                if count > max_order:
                    continue
                vec = np.array([x, y, z]) - array_pos
                dist = float(np.linalg.norm(vec))
                theta = float(np.arccos(np.clip(vec[2] / dist, -1, 1)))
                phi = float(np.arctan2(vec[1], vec[0]))
                paths.append(
                    ImagePath(
                        direction=SphericalDirection(theta, phi),
                        gain=(refl**count) / dist,
                        delay=dist / SPEED_OF_SOUND,
                    )
                )
    # direct path first
    paths.sort(key=lambda p: p.delay)
    return paths


def _source_paths(src, room, geom):
    if src.distance < 10 * geom.radius:
        warnings.warn("source closer than 10x array radius; far-field model degrades")
    if room is None:
        return [
            ImagePath(
                direction=src.direction,
                gain=1.0 / src.distance,
                delay=src.distance / SPEED_OF_SOUND,
            )
        ]
    array_pos = np.asarray(room.array_position, dtype=float)
    source_pos = array_pos + src.distance * src.direction.to_cartesian()
    return image_sources(room, source_pos, array_pos)


def render_scene(sources, geom, cfg, room=None, seed=0):
    """Render a multi-source scene; deterministic for a fixed seed."""
    if not sources:
        raise ValueError("need at least one source")
    rng = np.random.default_rng(seed)
    signals = _materialize_signals(sources, cfg, rng)
    ks = cfg.bin_wavenumbers()

    per_source_paths = [_source_paths(src, room, geom) for src in sources]
    all_dirs = [p.direction for paths in per_source_paths for p in paths]
    response = plane_wave_matrix(all_dirs, geom, ks)  # (D, K, Q)

    src_specs = [analyze(sig, cfg) for sig in signals]
    n_frames = src_specs[0].frames.shape[0]
    mix = np.zeros((geom.num_mics, n_frames, cfg.num_bins), dtype=complex)
    stems = []
    offset = 0
    hop_time = cfg.hop / cfg.sample_rate
    for spec, paths in zip(src_specs, per_source_paths):
        n_paths = len(paths)
        gains = np.array([p.gain for p in paths])
        delays = np.array([p.delay for p in paths])
        # split each path delay into an integer frame shift plus a residual
        # phase, so reflections arriving later than one hop land in later
        # frames (and thus decorrelate from the direct path, as in a room)
        frame_shift = np.round(delays / hop_time).astype(int)
        residual = delays - frame_shift * hop_time
        weights = gains[:, None] * np.exp(
            -1j * np.outer(residual * SPEED_OF_SOUND, ks)
        )  # (P, K)
        resp = response[offset : offset + n_paths]  # (P, K, Q)
        diffuse = room is not None and room.diffuse_reflections and n_paths > 1

        def shifted_frames(m):
            out = np.zeros_like(spec.frames)
            if m < n_frames:
                out[m:] = spec.frames[: n_frames - m]
            return out

        # direct path: deterministic transfer
        h_d = weights[0][:, None] * resp[0]  # (K, Q)
        mix += shifted_frames(frame_shift[0])[None, :, :] * h_d.T[:, None, :]

        if diffuse:
            # reflections: independent random phase per path, frame and bin
            for p in range(1, n_paths):
                phase = np.exp(
                    2j * np.pi * rng.random((n_frames, cfg.num_bins))
                )
                excite = shifted_frames(frame_shift[p]) * phase * np.abs(gains[p])
                mix += np.einsum("tk,kq->qtk", excite, resp[p], optimize=True)
        else:
            for m in np.unique(frame_shift[1:]):
                sel = np.flatnonzero(frame_shift == m)
                sel = sel[sel > 0]
                if sel.size == 0:
                    continue
                h = np.einsum(
                    "pk,pkq->kq", weights[sel], resp[sel], optimize=True
                )  # (K, Q)
                mix += shifted_frames(m)[None, :, :] * h.T[:, None, :]
        # direct-path-only stem at the array center
        direct = paths[0]
        h_direct = direct.gain * np.exp(-1j * ks * residual[0] * SPEED_OF_SOUND)
        direct_frames = np.zeros_like(spec.frames)
        m0 = frame_shift[0]
        if m0 < n_frames:
            direct_frames[m0:] = spec.frames[: n_frames - m0]
        stem_spec = Spectrogram(
            frames=direct_frames * h_direct[None, :],
            config=cfg,
            signal_length=spec.signal_length,
        )
        stems.append(synthesize(stem_spec))
        offset += n_paths

    n_samples = signals.shape[1]
    mic_signals = np.stack(
        [
            synthesize(Spectrogram(mix[q], cfg, signal_length=n_samples))
            for q in range(geom.num_mics)
        ]
    )
    metadata = {
        "seed": seed,
        "sample_rate": cfg.sample_rate,
        "num_sources": len(sources),
        "directions_deg": [
            [float(np.rad2deg(s.direction.theta)), float(np.rad2deg(s.direction.phi))]
            for s in sources
        ],
        "distances_m": [s.distance for s in sources],
        "array": {"radius": geom.radius, "kind": geom.kind, "order": geom.order},
        "room": None
        if room is None
        else {
            "dimensions": list(room.dimensions),
            "t60": room.t60,
            "max_image_order": room.max_image_order,
            "array_position": list(room.array_position),
        },
    }
    return SceneRecording(
        mic_signals=mic_signals,
        ground_truth=np.stack(stems),
        sample_rate=cfg.sample_rate,
        metadata=metadata,
    )
