"""Whole-system checks on the letter G scene under default fog"""

import numpy as np
import pytest

from app.cli import RunConfig, reference_image, run_cell
from app.reports import is_nondecreasing, summarize_sweep
from src.core_types import Algorithm, FogParams, Normalization, ReconConfig
from src.fogsim import simulate_sequence, to_photon_counts
from src.metrics import evaluate
from src.recon import normalize_display, reconstruct
from src.targets import COLOR_TARGETS, letter_g, load_target


@pytest.fixture(scope='module')
def default_scene():
    clean = letter_g()
    params = FogParams()
    seq = simulate_sequence(to_photon_counts(clean, params.photon_scale), params, n_jobs=1)
    return seq, reference_image(clean)


def test_pnfc_beats_a_single_foggy_frame(default_scene):
    seq, reference = default_scene
    single = evaluate(normalize_display(seq.frames[0], Normalization.MINMAX), reference)
    pnfc = evaluate(reconstruct(seq, ReconConfig()).image, reference)
    assert pnfc.ssim - single.ssim >= 0.15
    assert pnfc.psnr_db > single.psnr_db + 1.0


def test_pnfc_beats_the_temporal_mean(default_scene):
    seq, reference = default_scene
    mean = evaluate(reconstruct(seq, ReconConfig(algorithm='mean')).image, reference)
    pnfc = evaluate(reconstruct(seq, ReconConfig()).image, reference)
    assert pnfc.ssim > mean.ssim


@pytest.mark.parametrize('algorithm', [Algorithm.PNC, Algorithm.PNFC])
def test_reconstruction_is_dimmer_than_target(default_scene, algorithm):
    seq, reference = default_scene
    result = reconstruct(seq, ReconConfig(algorithm=algorithm, normalization='peak'))
    report = evaluate(result.image, reference)
    assert report.mean_brightness_candidate < report.mean_brightness_reference


def test_reconstructions_stay_in_unit_range(default_scene):
    seq, _ = default_scene
    for algorithm in Algorithm:
        for normalization in Normalization:
            if normalization is Normalization.NONE:
                continue
            image = reconstruct(seq, ReconConfig(algorithm=algorithm, normalization=normalization)).image
            assert 0.0 <= image.pixels.min() and image.pixels.max() <= 1.0


@pytest.mark.parametrize('name', COLOR_TARGETS)
def test_color_targets_are_reconstructed_per_channel(name):
    clean = load_target(name)
    params = FogParams(n_frames=50)
    seq = simulate_sequence(to_photon_counts(clean, params.photon_scale), params, n_jobs=1)
    reference = reference_image(clean)
    single = evaluate(normalize_display(seq.frames[0], Normalization.MINMAX), reference)
    for algorithm in (Algorithm.PNC, Algorithm.PNFC):
        result = reconstruct(seq, ReconConfig(algorithm=algorithm))
        assert result.image.channels == 3
        assert result.n_pairs == 25
        assert evaluate(result.image, reference).ssim > single.ssim


@pytest.mark.slow
def test_median_ssim_does_not_drop_with_more_measurements(tmp_path):
    config = RunConfig(quiet=True)
    clean = letter_g()
    rows = []
    for n_frames in (10, 100, 200, 300):
        for seed in range(1, 6):
            rows.extend(run_cell(config, clean, n_frames, seed, tmp_path))
    summary = summarize_sweep(rows)
    assert list(summary['seeds']) == [5] * 8
    assert is_nondecreasing(summary, 'pnc')
    assert is_nondecreasing(summary, 'pnfc')
    assert np.all(summary['ssim_median'] > 0)
