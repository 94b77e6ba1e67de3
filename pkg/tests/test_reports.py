"""Tests for sweep summaries and acquisition advice"""

import pandas as pd
import pytest

from app.diagnostics import get_condition_recommendations, get_sweep_recommendations
from app.reports import frame_csv, is_nondecreasing, sort_rows, summarize_fluctuation, summarize_sweep
from src.fogsim import ConditionReport


def _row(algorithm, n_frames, seed, ssim, psnr=10.0):
    return {'label': f'{algorithm}_{n_frames}_{seed}', 'algorithm': algorithm, 'n_frames': n_frames,
            'seed': seed, 'ssim': ssim, 'psnr_db': psnr}


def test_sort_rows_ignores_completion_order():
    rows = [_row('pnfc', 10, 2, 0.1), _row('pnc', 100, 1, 0.2), _row('pnc', 10, 1, 0.3)]
    ordered = sort_rows(rows)
    assert [(r['algorithm'], r['n_frames']) for r in ordered] == [('pnc', 10), ('pnc', 100), ('pnfc', 10)]


def test_summarize_sweep_medians():
    rows = [_row('pnc', 10, s, v) for s, v in enumerate([0.1, 0.3, 0.2])]
    rows += [_row('pnc', 100, s, v) for s, v in enumerate([0.4, 0.5, 0.6])]
    summary = summarize_sweep(rows)
    assert list(summary['n_frames']) == [10, 100]
    assert list(summary['seeds']) == [3, 3]
    assert list(summary['ssim_median']) == [0.2, 0.5]
    assert list(summary['ssim_min']) == [0.1, 0.4]
    assert is_nondecreasing(summary, 'pnc')


def test_trend_detection():
    summary = pd.DataFrame({'algorithm': ['pnfc'] * 3, 'n_frames': [10, 100, 200],
                            'ssim_median': [0.3, 0.5, 0.4]})
    assert not is_nondecreasing(summary, 'pnfc')
    advice = get_sweep_recommendations(summary)
    assert any('drops' in line for line in advice)
    assert any('100 frames' in line for line in advice)


def test_empty_sweep():
    summary = summarize_sweep([])
    assert summary.empty
    assert 'cell failed' in get_sweep_recommendations(summary)[0]


def test_summarize_fluctuation_orders_longest_exposure_first():
    rows = [{'integration_time_s': t, 'ssim': s, 'psnr_db': 5.0}
            for t, s in [(1 / 150, 0.1), (1 / 150, 0.2), (1 / 30, 0.5), (1 / 30, 0.7)]]
    summary = summarize_fluctuation(rows)
    assert list(summary['frames']) == [2, 2]
    assert summary.loc[0, 'integration_time_s'] == 1 / 30
    assert summary.loc[0, 'ssim_mean'] == pytest.approx(0.6)


def test_frame_csv_line_endings():
    data = frame_csv(pd.DataFrame({'a': [1.0 / 3.0]}))
    assert data == b'a\r\n0.333333333\r\n'


def test_condition_advice():
    good = ConditionReport(condition_i_holds=True, condition_ii_holds=True,
                           mean_frame_deviation=0.1, ambient_autocorr=0.0)
    assert all(line.startswith('✅') for line in get_condition_recommendations(good))

    bad = ConditionReport(condition_i_holds=False, condition_ii_holds=False,
                          mean_frame_deviation=0.0, ambient_autocorr=0.8,
                          interval_s=0.5, coherence_time_s=2.0)
    advice = get_condition_recommendations(bad)
    assert any('No fluctuation' in line for line in advice)
    assert any('Interval too short' in line for line in advice)
    assert any('Correlated residuals' in line for line in advice)
