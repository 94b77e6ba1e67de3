"""Tests for the time-variant fog simulator and the condition checks"""

import math

import numpy as np
import pytest
from scipy.stats import truncnorm

from src.core_types import (
    FogParams,
    Frame,
    FrameSequence,
    NegativeInput,
    ShapeMismatch,
    TooFewFrames,
)
from src.fogsim import (
    ambient_component,
    check_conditions,
    exposure_scaled,
    lag1_autocorrelation,
    pair_correlation_ratio,
    render_frame,
    sample_beta,
    scattering_component,
    simulate_sequence,
    static_frame,
    substream,
    to_photon_counts,
    transmission,
    truncated_normal_mean,
    worker_count,
)


def _beta_distribution(params):
    std = params.beta_sigma * params.beta0
    return (0.0 - params.beta0) / std, np.inf, params.beta0, std


class TestTransmission:
    def test_no_attenuation(self):
        assert transmission(0.0, 5.0) == 1.0
        assert transmission(3.0, 0.0) == 1.0

    def test_values(self):
        assert transmission(1.0, 1.0) == pytest.approx(math.exp(-1.0), abs=1e-15)
        assert transmission(2.5, 0.6) == pytest.approx(0.22313016014842982, abs=1e-15)

    def test_monotone_in_beta_and_distance(self):
        betas = np.linspace(0.0, 5.0, 51)
        values = transmission(betas, 0.6)
        assert np.all(np.diff(values) < 0)
        assert np.all((values > 0) & (values <= 1))
        distances = [transmission(1.0, d) for d in np.linspace(0.0, 3.0, 31)]
        assert all(a > b for a, b in zip(distances, distances[1:]))

    def test_negative_inputs(self):
        with pytest.raises(NegativeInput):
            transmission(-0.1, 1.0)
        with pytest.raises(NegativeInput):
            transmission(1.0, -0.1)


class TestSampleBeta:
    def test_no_fluctuation_returns_beta0(self):
        params = FogParams(beta_sigma=0.0)
        assert all(sample_beta(params, i) == 2.5 for i in range(5))

    def test_deterministic_per_frame_index(self):
        params = FogParams(seed=42)
        assert sample_beta(params, 3) == sample_beta(params, 3)
        assert sample_beta(params, 3) != sample_beta(params, 4)
        assert sample_beta(params, 3) != sample_beta(params.replace(seed=43), 3)

    def test_draws_are_nonnegative(self):
        params = FogParams(beta0=0.5, beta_sigma=2.0)
        assert all(sample_beta(params, i) >= 0 for i in range(200))

    def test_spatial_draws_match_truncated_normal_mean(self):
        params = FogParams(spatial_beta=True)
        field = sample_beta(params, 0, shape=(100, 100))
        assert field.shape == (100, 100, 1)
        a, b, loc, scale = _beta_distribution(params)
        expected = truncnorm.mean(a, b, loc=loc, scale=scale)
        standard_error = truncnorm.std(a, b, loc=loc, scale=scale) / 100.0
        assert abs(field.mean() - expected) < 3 * standard_error

    def test_spatial_draws_need_a_shape(self):
        with pytest.raises(ShapeMismatch):
            sample_beta(FogParams(spatial_beta=True), 0)


class TestComponents:
    def test_scattering_without_attenuation_is_target(self):
        target = Frame(np.array([[10.0, 20.0], [30.0, 40.0]]))
        assert np.array_equal(scattering_component(target, 0.0, 0.6).pixels, target.pixels)

    def test_scattering_value(self):
        target = Frame.full(2, 2, 100.0)
        result = scattering_component(target, 1.0, 1.0)
        np.testing.assert_allclose(result.pixels, 100.0 * math.exp(-1.0), rtol=1e-15)

    def test_scattering_with_beta_field(self):
        target = Frame.full(2, 2, 1.0)
        beta = np.array([[0.0, 1.0], [2.0, 3.0]])
        result = scattering_component(target, beta, 1.0)
        np.testing.assert_allclose(result.pixels[:, :, 0], np.exp(-beta), rtol=1e-15)

    def test_scattering_field_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            scattering_component(Frame.full(2, 2, 1.0), np.ones((3, 3)), 1.0)

    def test_ambient_vanishes_without_attenuation(self):
        params = FogParams(ambient_mean=160.0)
        result = ambient_component(params, 0.0, 0.6, (4, 4, 1))
        assert np.all(result.pixels == 0)

    def test_static_ambient_level(self):
        params = FogParams(ambient_sigma=0.0, k_factor=1.0)
        result = ambient_component(params, 2.5, 0.6, (3, 3, 1))
        expected = 160.0 * (1.0 - math.exp(-1.5))
        np.testing.assert_allclose(result.pixels, expected, rtol=1e-14)

    def test_ambient_scales_with_k_factor(self):
        params = FogParams(ambient_sigma=0.0, k_factor=2.0)
        result = ambient_component(params, 2.5, 0.6, (1, 1, 1))
        assert result.pixels[0, 0, 0] == pytest.approx(2.0 * 160.0 * (1.0 - math.exp(-1.5)))

    def test_ambient_has_no_lag_one_correlation(self):
        params = FogParams(beta_sigma=0.0)
        stack = np.stack([
            ambient_component(params, params.beta0, params.d, (4, 4, 1), frame_index=i).pixels
            for i in range(1000)
        ])
        assert abs(lag1_autocorrelation(stack)) < 0.05

    def test_truncated_normal_mean(self):
        assert truncated_normal_mean(1.0, 0.0) == 1.0
        assert truncated_normal_mean(1.0, 0.3) == pytest.approx(1.0, abs=2e-3)
        assert truncated_normal_mean(1.0, 1.0) > 1.0


class TestRender:
    def test_static_limit(self, static_params):
        target = Frame(np.linspace(0.0, 200.0, 16).reshape(4, 4))
        rendered = render_frame(target, static_params, 0)
        t = math.exp(-static_params.beta0 * static_params.d)
        expected = target.pixels * t + static_params.ambient_mean * (1.0 - t)
        np.testing.assert_allclose(rendered.pixels, expected, rtol=1e-12)
        np.testing.assert_allclose(rendered.pixels, static_frame(target, static_params).pixels,
                                   rtol=1e-12)

    def test_dark_target_without_medium_stays_dark(self):
        params = FogParams(d=0.0)
        rendered = render_frame(Frame.zeros(4, 4), params, 0)
        assert np.all(rendered.pixels == 0)

    def test_shot_noise_mean_converges(self):
        params = FogParams(beta_sigma=0.0, ambient_sigma=0.0, shot_noise=True)
        target = Frame.full(1, 1, 200.0)
        expected = static_frame(target, params).pixels[0, 0, 0]
        n_frames = 10_000
        values = np.array([render_frame(target, params, i).pixels[0, 0, 0] for i in range(n_frames)])
        assert np.all(values == np.round(values))
        assert abs(values.mean() - expected) < 3 * math.sqrt(expected / n_frames)

    def test_mean_converges_to_expected_superposition(self):
        params = FogParams(shot_noise=False)
        target = Frame.full(1, 1, 200.0)
        a, b, loc, scale = _beta_distribution(params)
        mean_t = truncnorm.expect(lambda beta: math.exp(-beta * params.d), (a, b), loc=loc, scale=scale)
        mean_eta = truncated_normal_mean(1.0, params.ambient_sigma)
        expected = 200.0 * mean_t + params.ambient_mean * (1.0 - mean_t) * mean_eta

        values = np.array([render_frame(target, params, i).pixels[0, 0, 0] for i in range(4000)])
        standard_error = values.std() / math.sqrt(len(values))
        assert abs(values.mean() - expected) < 3 * standard_error

    def test_spatial_beta_frames(self):
        params = FogParams(spatial_beta=True, shot_noise=False, ambient_sigma=0.0)
        rendered = render_frame(Frame.full(8, 8, 100.0), params, 0)
        assert rendered.shape == (8, 8, 1)
        assert rendered.pixels.std() > 0


class TestSimulateSequence:
    def test_frame_count_and_timing(self):
        params = FogParams(n_frames=6, interval_s=2.0, integration_time_s=0.02)
        seq = simulate_sequence(Frame.full(4, 4, 100.0), params, n_jobs=1)
        assert len(seq) == 6
        assert seq.interval_s == 2.0
        assert seq.integration_time_s == 0.02
        assert seq.coherence_time_s == 0.0

    def test_all_switches_off_gives_identical_frames(self, static_params):
        seq = simulate_sequence(Frame.full(4, 4, 100.0), static_params.replace(n_frames=5), n_jobs=1)
        first = seq.frames[0].pixels
        assert all(np.array_equal(f.pixels, first) for f in seq.frames)

    def test_worker_count_does_not_change_output(self, letter_g_target):
        params = FogParams(n_frames=8, seed=7)
        single = simulate_sequence(letter_g_target, params, n_jobs=1).stack()
        pooled = simulate_sequence(letter_g_target, params, n_jobs=4).stack()
        assert np.array_equal(single, pooled)

    def test_seed_changes_output(self):
        target = Frame.full(4, 4, 100.0)
        a = simulate_sequence(target, FogParams(n_frames=3, seed=1), n_jobs=1).stack()
        b = simulate_sequence(target, FogParams(n_frames=3, seed=2), n_jobs=1).stack()
        assert not np.array_equal(a, b)

    def test_invalid_frame_count(self):
        with pytest.raises(TooFewFrames):
            simulate_sequence(Frame.full(2, 2, 1.0), FogParams(n_frames=1), n_jobs=1)

    def test_worker_count_from_environment(self, monkeypatch):
        monkeypatch.setenv('DEFOG_THREADS', '3')
        assert worker_count() == 3
        monkeypatch.setenv('DEFOG_THREADS', 'many')
        assert worker_count() >= 1
        monkeypatch.delenv('DEFOG_THREADS')
        assert worker_count() >= 1


class TestHelpers:
    def test_photon_counts(self):
        clean = Frame(np.array([[0.0, 0.5], [0.25, 1.0]]))
        counts = to_photon_counts(clean, 200.0)
        assert counts.pixels.max() == 200.0
        assert counts.pixels[0, 1, 0] == 100.0
        assert np.all(to_photon_counts(Frame.zeros(2, 2), 200.0).pixels == 0)

    def test_exposure_scaling(self):
        params = exposure_scaled(FogParams(), 1.0 / 15.0)
        assert params.photon_scale == pytest.approx(400.0)
        assert params.ambient_mean == pytest.approx(320.0)
        assert params.integration_time_s == pytest.approx(1.0 / 15.0)
        with pytest.raises(NegativeInput):
            exposure_scaled(FogParams(), 0.0)

    def test_substreams_are_independent(self):
        a = substream(1, 0, 0).random(4)
        b = substream(1, 0, 1).random(4)
        c = substream(1, 1, 0).random(4)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)
        assert np.array_equal(a, substream(1, 0, 0).random(4))


class TestConditions:
    def test_identical_frames_fail_condition_i(self):
        seq = FrameSequence.from_array(np.full((4, 3, 3, 1), 5.0))
        report = check_conditions(seq)
        assert report.mean_frame_deviation == 0.0
        assert not report.condition_i_holds
        assert report.condition_ii_holds
        assert not report.all_hold

    def test_simulated_fog_meets_both_conditions(self, letter_g_target):
        seq = simulate_sequence(letter_g_target, FogParams(), n_jobs=1)
        report = check_conditions(seq)
        assert report.condition_i_holds
        assert report.condition_ii_holds
        assert report.all_hold
        assert -1.0 <= report.ambient_autocorr <= 1.0
        assert report.to_dict()['epsilon'] == 1e-3

    def test_long_coherence_fails_condition_ii(self, random_sequence):
        base = random_sequence(n_frames=4)
        seq = FrameSequence(frames=base.frames, interval_s=1.0, coherence_time_s=2.0)
        report = check_conditions(seq)
        assert not report.condition_ii_holds

    def test_single_frame(self):
        with pytest.raises(TooFewFrames):
            check_conditions(FrameSequence(frames=(Frame.zeros(2, 2),)))

    def test_scattering_pair_correlation_stays_near_one(self):
        params = FogParams(beta0=1.0, beta_sigma=0.3, ambient_mean=0.0, shot_noise=False,
                           n_frames=400)
        seq = simulate_sequence(Frame.full(8, 8, 100.0), params, n_jobs=1)
        pairs = [(i, i + 1) for i in range(0, 400, 2)]
        ratio = pair_correlation_ratio(seq, pairs)
        assert ratio > 0
        assert abs(ratio - 1.0) < 0.1

    def test_pair_correlation_mask(self):
        seq = FrameSequence.from_array(np.full((4, 2, 2, 1), 3.0))
        pairs = [(0, 1), (2, 3)]
        assert pair_correlation_ratio(seq, pairs) == pytest.approx(1.0)
        assert pair_correlation_ratio(seq, pairs, mask=np.zeros((2, 2), dtype=bool)) == 0.0
