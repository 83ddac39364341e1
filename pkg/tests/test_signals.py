import math

import numpy as np
import pytest
from scipy.optimize import brentq

from reporterspin.constants import CONSTANTS
from reporterspin.physics import FieldSetting, HyperfineParams, SpinSystem, larmor_proton
from reporterspin.signals import (
    MODELS,
    NO_DECAY,
    BathParams,
    DecoherenceParams,
    SignalTrace,
    bath_echo,
    deer_signal,
    deer_spectrum,
    eseem_multi,
    eseem_single,
    evaluate_model,
    nv_echo,
    reporter_echo_combined,
    reporter_rabi,
    reporter_t1,
)

Z = np.array([0.0, 0.0, 1.0])


def single_reporter_scene(site=(3.0, 0.0, 0.0), B=383.0, direction=Z):
    site = np.asarray(site, float)
    return SpinSystem(
        nv_position=[0, 0, 0],
        nv_axis=direction,
        reporter_sites=[site],
        proton_sites=np.zeros((0, 3)),
        field=FieldSetting(B, np.asarray(direction, float)),
        surface_z=site[2],
        surface_tolerance=10.0,
    )


NVB_PROTONS = [
    (HyperfineParams(a=-11.17, b=42.29), 17.80),
    (HyperfineParams(a=-25.50, b=14.00), 17.80),
]


class TestSignalTrace:
    def test_validation(self):
        SignalTrace([0, 1, 2], [0.1, -0.5, 1.0], [])
        with pytest.raises(ValueError, match="strictly increasing"):
            SignalTrace([0, 1, 1], [0, 0, 0], [])
        with pytest.raises(ValueError, match="lengths"):
            SignalTrace([0, 1], [0, 0, 0], [])
        with pytest.raises(ValueError, match="5 sigma"):
            SignalTrace([0, 1], [0.0, 1.2], [])
        # noisy points may exceed 1 by up to five sigmas
        SignalTrace([0, 1], [0.0, 1.2], [0.1, 0.1])


class TestNvEcho:
    def test_limits(self):
        dec = DecoherenceParams(t2_nv=5.0, stretch_exponent=1.0)
        assert nv_echo(0.0, dec) == 1.0
        assert nv_echo(5.0, dec) == pytest.approx(math.exp(-1.0))
        assert nv_echo(5.0, dec) == pytest.approx(0.368, abs=5e-4)

    def test_stretch(self):
        dec = DecoherenceParams(t2_nv=5.0, stretch_exponent=2.0)
        assert nv_echo(2.5, dec) == pytest.approx(math.exp(-0.25))


class TestDeer:
    def test_zero_flip_probability_reduces_to_echo(self):
        scene = single_reporter_scene()
        t = np.linspace(0, 4, 101)
        dec = DecoherenceParams(t2_nv=5.0)
        assert np.allclose(deer_signal(t, scene, 0.0, dec), nv_echo(t, dec), atol=1e-15)

    def test_first_zero_of_single_reporter(self):
        scene = single_reporter_scene()  # d = k_ee/27 = 12.11 rad/us
        d = CONSTANTS.k_ee / 27.0
        zero = brentq(lambda t: deer_signal(t, scene, 1.0, NO_DECAY), 0.1, 0.4)
        assert zero == pytest.approx(math.pi / d, rel=1e-9)
        assert zero == pytest.approx(0.259, abs=1e-3)

    def test_product_rule(self):
        s1 = single_reporter_scene((3.0, 0.0, 0.0))
        s2 = single_reporter_scene((0.0, -3.5, 0.0))
        both = SpinSystem(
            nv_position=[0, 0, 0],
            nv_axis=Z,
            reporter_sites=[[3.0, 0, 0], [0, -3.5, 0]],
            proton_sites=np.zeros((0, 3)),
            field=FieldSetting(383.0, Z),
            surface_z=0.0,
            surface_tolerance=10.0,
        )
        t = np.linspace(0, 3, 77)
        product = deer_signal(t, s1, 0.7, NO_DECAY) * deer_signal(t, s2, 0.7, NO_DECAY)
        assert np.allclose(deer_signal(t, both, 0.7, NO_DECAY), product, atol=1e-12)

    def test_periodicity_with_ideal_flip(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            site = rng.normal(size=3)
            site *= (2.0 + 3.0 * rng.random()) / np.linalg.norm(site)
            scene = single_reporter_scene(site)
            d = abs(
                CONSTANTS.k_ee
                * (1 - 3 * (site[2] / np.linalg.norm(site)) ** 2)
                / np.linalg.norm(site) ** 3
            )
            if d < 1e-3:
                continue
            period = 4 * math.pi / d
            t = np.linspace(0, period, 50)
            a = deer_signal(t, scene, 1.0, NO_DECAY)
            b = deer_signal(t + period, scene, 1.0, NO_DECAY)
            assert np.allclose(a, b, atol=1e-9)

    def test_bounded(self):
        rng = np.random.default_rng(8)
        t = np.linspace(0, 10, 301)
        for _ in range(20):
            site = rng.normal(size=3)
            site *= (1.0 + 4 * rng.random()) / np.linalg.norm(site)
            scene = single_reporter_scene(site)
            sig = deer_signal(t, scene, rng.random(), DecoherenceParams())
            assert np.all(sig <= 1.0 + 1e-12) and np.all(sig >= -1.0 - 1e-12)


class TestReporterControl:
    def test_rabi(self):
        dec = DecoherenceParams(rabi_decay=1.0)
        assert reporter_rabi(0.0, 30.0, dec) == 1.0
        t_pi = math.pi / 30.0
        assert reporter_rabi(t_pi, 30.0, dec) == pytest.approx(
            -math.exp(-t_pi / 1.0), rel=1e-12
        )
        assert reporter_rabi(1.0, 30.0, dec) == pytest.approx(
            math.cos(30.0) * math.exp(-1.0), rel=1e-12
        )

    def test_t1(self):
        dec = DecoherenceParams(t1_s=29.4)
        assert reporter_t1(0.0, dec) == 1.0
        assert reporter_t1(29.4, dec) == pytest.approx(math.exp(-1.0))
        assert reporter_t1(2 * 29.4, dec) == pytest.approx(math.exp(-2.0))


class TestEseem:
    def test_no_modulation_without_pseudosecular(self):
        t = np.linspace(0, 3, 200)
        assert np.allclose(eseem_single(t, HyperfineParams(a=40.0, b=0.0), 16.0), 1.0)

    def test_spectral_content(self):
        # FFT oracle in the inter-pulse-delay variable tau = t_s / 2
        wn = larmor_proton(FieldSetting(619.0, Z))
        params = HyperfineParams(a=66.0, b=52.0)
        n = 4096
        ts = np.linspace(0, 2 * 6.0, n, endpoint=False)  # tau spans 6 us
        sig = eseem_single(ts, params, wn)
        tau = 0.5 * ts
        spect = np.abs(np.fft.rfft(sig - sig.mean()))
        freqs = 2 * math.pi * np.fft.rfftfreq(n, d=tau[1] - tau[0])
        # the two largest non-dc peaks sit at omega+- (30.8 and 56.0)
        order = np.argsort(spect)[::-1]
        peak_freqs = sorted(freqs[order[:6]])
        assert any(abs(f - 30.76) < 0.6 for f in peak_freqs)
        assert any(abs(f - 55.97) < 0.6 for f in peak_freqs)

    def test_commensurate_revival(self):
        # build a pair with omega- = 2 omega+ so both phases hit 2 pi at once
        from reporterspin.physics import eseem_frequencies, hyperfine_from_eseem

        wn = 16.57
        params = hyperfine_from_eseem(30.0, 60.0, wn)
        br = eseem_frequencies(params, wn)
        assert br.omega_minus == pytest.approx(2 * br.omega_plus, rel=1e-12)
        tau = 2 * math.pi / br.omega_plus
        assert eseem_single(2 * tau, params, wn) == pytest.approx(1.0, abs=1e-12)

    def test_detuned_depth_vanishes(self):
        from reporterspin.physics import eseem_frequencies

        rng = np.random.default_rng(4)
        for _ in range(300):
            a = rng.uniform(-30, 30)
            b = rng.uniform(0.1, 30)
            wn = rng.uniform(10.0001, 20.0) * max(abs(a), b)
            br = eseem_frequencies(HyperfineParams(a=a, b=b), wn)
            assert br.depth < 0.01

    def test_multi_reduces_to_single(self):
        t = np.linspace(0, 2, 101)
        params = HyperfineParams(a=66.0, b=52.0)
        assert np.allclose(
            eseem_multi(t, [(params, 16.57)]), eseem_single(t, params, 16.57)
        )

    def test_two_proton_scene_crosses_zero(self):
        t = np.linspace(0.0, 1.5, 1501)
        sig = eseem_multi(t, NVB_PROTONS)
        assert sig.min() < 0.0

    def test_all_b_zero_is_flat(self):
        t = np.linspace(0, 2, 101)
        protons = [(HyperfineParams(a=20.0, b=0.0), 16.0), (HyperfineParams(a=-5.0, b=0.0), 16.0)]
        assert np.allclose(eseem_multi(t, protons), 1.0)

    def test_product_rule_log_identity(self):
        t = np.linspace(0.01, 1.2, 400)
        factors = [eseem_single(t, p, wn) for p, wn in NVB_PROTONS]
        total = eseem_multi(t, NVB_PROTONS)
        mask = np.all(np.asarray(factors) > 0, axis=0)
        assert mask.sum() > 50
        log_sum = sum(np.log(f[mask]) for f in factors)
        assert np.allclose(np.log(total[mask]), log_sum, atol=1e-10)

    def test_empty_proton_list_rejected(self):
        with pytest.raises(ValueError):
            eseem_multi([0.1], [])


class TestBathEcho:
    def test_limits_and_first_collapse(self):
        bath = BathParams(b_rms=0.3, omega_n=10.25)
        assert bath_echo(0.0, bath, NO_DECAY) == pytest.approx(1.0)
        t_collapse = 2 * math.pi / 10.25
        assert t_collapse == pytest.approx(0.613, abs=1e-3)
        value = bath_echo(t_collapse, bath, NO_DECAY)
        amp = CONSTANTS.gamma_e * 0.3 / 10.25
        assert value == pytest.approx(math.exp(-2 * amp**2), rel=1e-12)
        assert value == pytest.approx(0.589, abs=2e-3)
        assert 2 * amp**2 == pytest.approx(0.530, abs=2e-3)

    def test_revival(self):
        from reporterspin.signals import bath_attenuation

        bath = BathParams(b_rms=0.3, omega_n=10.25)
        assert bath_attenuation(4 * math.pi / 10.25, bath) == pytest.approx(
            1.0, abs=1e-12
        )
        assert bath_echo(4 * math.pi / 10.25, bath, NO_DECAY) == pytest.approx(
            1.0, abs=1e-9
        )

    def test_collapse_positions_randomized(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            wn = rng.uniform(5.0, 30.0)
            bath = BathParams(b_rms=0.5, omega_n=wn)
            t = np.linspace(1e-4, 1.5 * 2 * math.pi / wn, 4000)
            sig = bath_echo(t, bath, NO_DECAY)
            t_min = t[np.argmin(sig)]
            step = t[1] - t[0]
            assert abs(t_min - 2 * math.pi / wn) <= step + 1e-12

    def test_odd_k_collapses_even_k_revivals(self):
        from reporterspin.signals import bath_attenuation

        bath = BathParams(b_rms=0.4, omega_n=12.0)
        for k in (1, 3, 5):
            t = 2 * math.pi * k / 12.0
            assert bath_attenuation(t, bath) < 1.0 - 1e-3
        for k in (2, 4):
            t = 2 * math.pi * k / 12.0
            assert bath_attenuation(t, bath) == pytest.approx(1.0, abs=1e-12)

    def test_static_field_is_refocused(self):
        bath = BathParams(b_rms=0.7, omega_n=0.0)
        t = np.linspace(0, 5, 50)
        assert np.allclose(bath_echo(t, bath, NO_DECAY), 1.0)


class TestCombined:
    def test_empty_protons_equals_bath(self):
        t = np.linspace(0, 2, 101)
        bath = BathParams(b_rms=0.3, omega_n=10.25)
        dec = DecoherenceParams(t2_s=3.0)
        assert np.allclose(
            reporter_echo_combined(t, [], bath, dec), bath_echo(t, bath, dec)
        )

    def test_no_bath_equals_eseem_times_decay(self):
        t = np.linspace(0, 2, 101)
        params = HyperfineParams(a=66.0, b=52.0)
        dec = DecoherenceParams(t2_s=3.0)
        expected = eseem_single(t, params, 16.57) * np.exp(-t / 3.0)
        combined = reporter_echo_combined(
            t, [(params, 16.57)], BathParams(b_rms=0.0, omega_n=16.57), dec
        )
        assert np.allclose(combined, expected, atol=1e-14)

    def test_bounded_over_random_parameters(self):
        rng = np.random.default_rng(12)
        t = np.linspace(0, 4, 301)
        for _ in range(25):
            protons = [
                (
                    HyperfineParams(a=rng.uniform(-90, 90), b=rng.uniform(0, 90)),
                    rng.uniform(1, 30),
                )
                for _ in range(rng.integers(0, 3))
            ]
            bath = BathParams(b_rms=rng.uniform(0, 1), omega_n=rng.uniform(1, 30))
            dec = DecoherenceParams(
                t2_s=rng.uniform(0.5, 20),
                stretch_exponent=rng.uniform(1, 3),
            )
            sig = reporter_echo_combined(t, protons, bath, dec)
            assert np.all(sig <= 1.0 + 1e-12) and np.all(sig >= -1.0 - 1e-12)


class TestDeerSpectrum:
    def test_resonant_dip_and_wings(self):
        scene = single_reporter_scene()
        center = CONSTANTS.gamma_e * 383.0
        assert center == pytest.approx(6738.1, abs=0.1)
        omega = np.linspace(center - 400, center + 400, 801)
        spec = deer_spectrum(omega, scene, linewidth=30.0, t_nv=0.2, dec=NO_DECAY)
        dip_idx = np.argmin(spec)
        assert omega[dip_idx] == pytest.approx(center, abs=1.0)
        on_res = deer_spectrum(np.array([center]), scene, 30.0, 0.2, dec=NO_DECAY)
        assert on_res[0] == pytest.approx(
            deer_signal(0.2, scene, 1.0, NO_DECAY), rel=1e-9
        )
        far = deer_spectrum(np.array([center + 5000.0]), scene, 30.0, 0.2, dec=NO_DECAY)
        assert far[0] == pytest.approx(nv_echo(0.2, NO_DECAY), abs=1e-4)


class TestModelRegistry:
    def test_all_models_evaluate(self):
        t = np.linspace(0, 2, 41)
        for name, model in MODELS.items():
            sig = evaluate_model(name, t, {})
            assert sig.shape == t.shape
            assert np.all(np.isfinite(sig))

    def test_unknown_parameter_rejected(self):
        with pytest.raises(KeyError):
            evaluate_model("exp_decay", [0, 1], {"bogus": 1.0})
