"""Experiment configuration loading (TOML or JSON) and WAV I/O."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.io.wavfile

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .geometry import ArrayGeometry, default_mic_directions, load_mic_directions
from .pipeline import EstimatorParams
from .scene import RoomSpec, SourceSpec
from .sphmath import SphericalDirection
from .stft import StftConfig


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    geometry: ArrayGeometry
    stft: StftConfig
    estimator: EstimatorParams
    sources: list = field(default_factory=list)
    room: RoomSpec | None = None
    seed: int = 0


def _load_raw(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    if path.suffix.lower() == ".json":
        return json.loads(path.read_text())
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def read_wav(path):
    """Read a WAV file as float64 in [-1, 1]; returns (sample_rate, data)."""
    rate, data = scipy.io.wavfile.read(path)
    if data.dtype == np.int16:
        data = data / 32768.0
    elif data.dtype == np.int32:
        data = data / 2147483648.0
    elif data.dtype == np.uint8:
        data = (data.astype(float) - 128.0) / 128.0
    return rate, np.asarray(data, dtype=float)


def write_wav(path, rate, data):
    """Write float32 WAV; channels on the last axis."""
    data = np.asarray(data)
    if data.ndim == 2 and data.shape[0] < data.shape[1]:
        data = data.T  # (samples, channels)
    scipy.io.wavfile.write(path, int(rate), data.astype(np.float32))


def _parse_source(entry, cfg_dir, sample_rate):
    try:
        direction = SphericalDirection.from_degrees(
            entry["theta_deg"], entry["phi_deg"]
        )
    except KeyError as exc:
        raise ConfigError(f"source entry missing {exc}") from exc
    signal = None
    if "wav" in entry:
        wav_path = (cfg_dir / entry["wav"]).resolve()
        if not wav_path.exists():
            raise ConfigError(f"source WAV not found: {wav_path}")
        rate, signal = read_wav(wav_path)
        if rate != sample_rate:
            raise ConfigError(
                f"{wav_path}: sample rate {rate} != configured {sample_rate}"
            )
        if signal.ndim > 1:
            signal = signal[:, 0]
    return SourceSpec(
        direction=direction,
        distance=float(entry.get("distance", 2.0)),
        signal=signal,
        kind=entry.get("kind", "noise"),
        duration=float(entry.get("duration", 2.0)),
    )


def load_config(path):
    raw = _load_raw(path)
    cfg_dir = Path(path).parent
    try:
        arr = raw.get("array", {})
        if "geometry_file" in arr:
            mic_dirs = load_mic_directions((cfg_dir / arr["geometry_file"]).resolve())
        else:
            mic_dirs = default_mic_directions()
        geometry = ArrayGeometry(
            mic_dirs=mic_dirs,
            radius=float(arr.get("radius", 0.042)),
            kind=arr.get("kind", "open"),
            order=int(arr.get("order", 4)),
        )
        st = raw.get("stft", {})
        stft_cfg = StftConfig(
            fft_size=int(st.get("fft_size", 256)),
            hop=int(st.get("hop", 128)),
            sample_rate=float(st.get("sample_rate", 8000.0)),
        )
        est = raw.get("estimator", {})
        estimator = EstimatorParams(
            beta=float(est.get("beta", 0.4)),
            v_order=int(est.get("v_order", 2)),
            include_reverb=bool(est.get("include_reverb", True)),
        )
        room = None
        if "room" in raw:
            rm = raw["room"]
            room = RoomSpec(
                dimensions=tuple(rm["dimensions"]),
                t60=float(rm.get("t60", 0.0)),
                max_image_order=int(rm.get("max_image_order", 3)),
                array_position=tuple(rm["array_position"])
                if "array_position" in rm
                else None,
                diffuse_reflections=bool(rm.get("diffuse_reflections", True)),
            )
        sources = [
            _parse_source(e, cfg_dir, stft_cfg.sample_rate)
            for e in raw.get("sources", [])
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(
        geometry=geometry,
        stft=stft_cfg,
        estimator=estimator,
        sources=sources,
        room=room,
        seed=int(raw.get("seed", 0)),
    )
