import numpy as np
import pytest

from shpsd.analysis import CoefficientSet
from shpsd.separator import (
    beamform,
    reverberant_power,
    wiener_gains,
    wiener_separate,
)
from shpsd.sphmath import SphericalDirection, sh_matrix


def plane_wave_coeff_set(direction, order, n_frames=3, n_bins=4, order_per_bin=None):
    """Coefficient set holding the ideal unit plane wave 4 pi i^n Y*_nm."""
    m = (order + 1) ** 2
    ns = np.array([n for n in range(order + 1) for _ in range(2 * n + 1)])
    y = sh_matrix(order, [direction])[0]
    alpha = 4 * np.pi * (1j**ns) * np.conj(y)
    coeffs = np.broadcast_to(alpha, (n_frames, n_bins, m)).copy()
    opb = np.full(n_bins, order if order_per_bin is None else order_per_bin)
    mask = ns[None, :] <= opb[:, None]
    coeffs = np.where(mask[None], coeffs, 0.0)
    return CoefficientSet(
        coeffs=coeffs,
        order_per_bin=opb,
        mode_mask=mask,
        order=order,
        bin_freqs=np.linspace(100.0, 400.0, n_bins),
    )


class TestBeamform:
    @pytest.mark.parametrize("order", [1, 2, 3, 4])
    def test_distortionless(self, order):
        """Unit plane wave, steered at its own direction: output 1."""
        d = SphericalDirection.from_degrees(63.0, 211.0)
        cs = plane_wave_coeff_set(d, order)
        z = beamform(cs, d)
        assert np.allclose(z, 1.0, atol=1e-10)

    def test_zero_coefficients(self):
        d = SphericalDirection.from_degrees(90.0, 0.0)
        cs = plane_wave_coeff_set(d, 4)
        cs.coeffs[:] = 0.0
        assert np.all(beamform(cs, d) == 0)

    def test_sidelobe_attenuation(self):
        """Steered 90 degrees away in azimuth on the equator, order 4: the
        response falls in the sidelobe region (|Z| < 0.2)."""
        src = SphericalDirection.from_degrees(90.0, 0.0)
        steer = SphericalDirection.from_degrees(90.0, 90.0)
        z = beamform(plane_wave_coeff_set(src, 4), steer)
        assert np.all(np.abs(z) < 0.2)

    def test_reduced_order_normalization(self):
        """With the bin capped at order 2, the (N+1)^2 normalization still
        gives unit gain toward the source."""
        d = SphericalDirection.from_degrees(85.0, 45.0)
        cs = plane_wave_coeff_set(d, 4, order_per_bin=2)
        z = beamform(cs, d)
        assert np.allclose(z, 1.0, atol=1e-10)


class TestReverberantPower:
    def test_direct_values(self):
        assert reverberant_power(np.array(np.sqrt(4 * np.pi))) == pytest.approx(1.0)
        assert reverberant_power(np.array(0.0)) == 0.0
        assert reverberant_power(np.array(-3.0)) == 0.0  # rectified


class TestWienerGains:
    def test_single_active_source(self):
        phi = np.zeros((1, 1, 4))
        phi[0, 0, 0] = 1.0
        g = wiener_gains(phi, np.zeros((1, 1)))
        assert g[0, 0] == pytest.approx([1.0, 0.0, 0.0, 0.0])

    def test_equal_split(self):
        phi = np.ones((2, 3, 4))
        g = wiener_gains(phi, np.zeros((2, 3)))
        assert np.allclose(g, 0.25)

    def test_reverb_shrinks_gain(self):
        phi = np.ones((1, 1, 2))
        g = wiener_gains(phi, np.full((1, 1), 2.0))
        assert np.allclose(g, 0.25)

    def test_silence_guard(self):
        phi = np.zeros((1, 1, 2))
        g = wiener_gains(phi, np.zeros((1, 1)))
        assert np.all(g == 0)

    def test_bounds(self, rng):
        phi = rng.uniform(0, 5, size=(4, 6, 3))
        phi_r = rng.uniform(0, 5, size=(4, 6))
        g = wiener_gains(phi, phi_r)
        assert np.all(g >= 0) and np.all(g <= 1)


class TestWienerSeparate:
    def test_energy_bound(self, geom, stft_cfg):
        """Sum of post-filtered energies never exceeds beamformer energy."""
        from shpsd.estimator import build_translation_matrix, estimate_psd_track
        from shpsd.analysis import analyze_recording
        from shpsd.scene import SourceSpec, render_scene

        dirs = [
            SphericalDirection.from_degrees(80.0, 20.0),
            SphericalDirection.from_degrees(80.0, 200.0),
        ]
        rec = render_scene(
            [SourceSpec(direction=d, duration=0.5) for d in dirs],
            geom, stft_cfg, seed=2,
        )
        coeffs = analyze_recording(rec, geom, stft_cfg)
        t = build_translation_matrix(dirs, 4, 2)
        track = estimate_psd_track(coeffs, t)
        out = wiener_separate(coeffs, dirs, track, stft_cfg,
                              signal_length=rec.mic_signals.shape[1])
        sep_energy = np.sum(np.abs(out.spectrograms) ** 2, axis=0)
        bf_energy = np.sum(np.abs(out.beamformer_outputs) ** 2, axis=0)
        assert np.all(sep_energy <= bf_energy + 1e-12)
        assert out.waveforms.shape == (2, rec.mic_signals.shape[1])
        assert np.all(out.gains >= 0) and np.all(out.gains <= 1)
