import json

import numpy as np
import pytest
from click.testing import CliRunner

from shpsd.cli import main
from shpsd.config import ConfigError, load_config, read_wav, write_wav

CONFIG_TOML = """
seed = 7

[array]
radius = 0.042
kind = "open"
order = 4

[stft]
fft_size = 256
hop = 128
sample_rate = 8000.0

[[sources]]
theta_deg = 78.0
phi_deg = 50.0
kind = "modulated"
duration = 0.6

[[sources]]
theta_deg = 76.0
phi_deg = 200.0
kind = "modulated"
duration = 0.6
"""

REVERB_BLOCK = """
[room]
dimensions = [6.0, 7.0, 6.0]
t60 = 0.3
"""


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "scene.toml"
    path.write_text(CONFIG_TOML)
    return path


class TestConfig:
    def test_load_toml(self, config_path):
        cfg = load_config(config_path)
        assert cfg.seed == 7
        assert len(cfg.sources) == 2
        assert cfg.room is None
        assert cfg.estimator.beta == 0.4
        # degrees in the file, radians internally
        assert cfg.sources[0].direction.theta == pytest.approx(np.deg2rad(78.0))

    def test_load_json(self, tmp_path):
        path = tmp_path / "scene.json"
        path.write_text(json.dumps({
            "seed": 3,
            "room": {"dimensions": [4.0, 5.0, 4.0], "t60": 0.2},
            "sources": [{"theta_deg": 80.0, "phi_deg": 10.0}],
        }))
        cfg = load_config(path)
        assert cfg.seed == 3
        assert cfg.room.t60 == 0.2
        assert cfg.sources[0].kind == "noise"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.toml")

    def test_bad_source_entry(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"sources": [{"phi_deg": 10.0}]}))
        with pytest.raises(ConfigError):
            load_config(path)

    def test_wav_roundtrip(self, tmp_path, rng):
        x = rng.uniform(-0.5, 0.5, size=(1000, 2))
        path = tmp_path / "x.wav"
        write_wav(path, 8000, x)
        rate, y = read_wav(path)
        assert rate == 8000
        assert np.allclose(x, y, atol=1e-6)

    def test_source_wav_input(self, tmp_path, rng):
        wav = tmp_path / "src.wav"
        write_wav(wav, 8000, rng.standard_normal(4000) * 0.1)
        path = tmp_path / "scene.toml"
        path.write_text(
            CONFIG_TOML + '\n[[sources]]\ntheta_deg = 90.0\nphi_deg = 120.0\n'
            'wav = "src.wav"\n'
        )
        cfg = load_config(path)
        assert cfg.sources[2].signal is not None
        assert cfg.sources[2].signal.shape == (4000,)


class TestCliWorkflow:
    def run(self, *args):
        return CliRunner().invoke(main, list(args))

    def test_simulate(self, config_path, tmp_path):
        out = tmp_path / "run"
        res = self.run("simulate", str(config_path), "-o", str(out))
        assert res.exit_code == 0, res.output
        assert (out / "mixture.wav").exists()
        assert (out / "metadata.json").exists()
        assert (out / "stems.png").exists()
        stems = sorted((out / "stems").glob("*.wav"))
        assert len(stems) == 2
        rate, mix = read_wav(out / "mixture.wav")
        assert mix.shape[1] == 32

    def test_simulate_deterministic(self, config_path, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert self.run("simulate", str(config_path), "-o", str(a)).exit_code == 0
        assert self.run("simulate", str(config_path), "-o", str(b)).exit_code == 0
        _, ma = read_wav(a / "mixture.wav")
        _, mb = read_wav(b / "mixture.wav")
        assert np.array_equal(ma, mb)

    def test_estimate_and_separate(self, config_path, tmp_path):
        run_dir = tmp_path / "run"
        assert self.run("simulate", str(config_path), "-o",
                        str(run_dir)).exit_code == 0
        est = tmp_path / "est"
        res = self.run("estimate", str(config_path), "-i", str(run_dir),
                       "-o", str(est))
        assert res.exit_code == 0, res.output
        assert (est / "psd.csv").exists()
        assert (est / "psd.png").exists()
        header = (est / "psd.csv").read_text().splitlines()[0]
        assert header == "frame,time_s,bin_hz,phi_1,phi_2,gamma00"

        sep = tmp_path / "sep"
        res = self.run("separate", str(config_path), "-i", str(run_dir),
                       "-o", str(sep))
        assert res.exit_code == 0, res.output
        assert (sep / "separated_01.wav").exists()
        assert (sep / "separated_02.wav").exists()
        assert (sep / "separated.png").exists()

    def test_evaluate(self, config_path, tmp_path):
        run_dir = tmp_path / "run"
        assert self.run("simulate", str(config_path), "-o",
                        str(run_dir)).exit_code == 0
        ev = tmp_path / "eval"
        res = self.run("evaluate", str(config_path), "-i", str(run_dir),
                       "-o", str(ev))
        assert res.exit_code == 0, res.output
        report = json.loads((ev / "report.json").read_text())
        assert len(report["sir_db"]) == 2
        assert "beamformer_sir_db" in report
        assert (ev / "evaluation.png").exists()

    def test_reverberant_config(self, tmp_path):
        path = tmp_path / "scene.toml"
        path.write_text(CONFIG_TOML + REVERB_BLOCK)
        out = tmp_path / "run"
        res = self.run("simulate", str(path), "-o", str(out))
        assert res.exit_code == 0, res.output

    def test_missing_config_exit_code(self, tmp_path):
        res = self.run("estimate", str(tmp_path / "absent.toml"),
                       "-o", str(tmp_path / "x"))
        assert res.exit_code == 1

    def test_no_sources_exit_code(self, tmp_path):
        path = tmp_path / "empty.toml"
        path.write_text("seed = 1\n")
        res = self.run("simulate", str(path), "-o", str(tmp_path / "x"))
        assert res.exit_code == 1

    def test_channel_mismatch_exit_code(self, config_path, tmp_path, rng):
        run_dir = tmp_path / "run"
        run_dir.mkdir()
        write_wav(run_dir / "mixture.wav", 8000,
                  rng.standard_normal((4000, 8)) * 0.1)
        res = self.run("estimate", str(config_path), "-i", str(run_dir),
                       "-o", str(tmp_path / "x"))
        assert res.exit_code == 1
