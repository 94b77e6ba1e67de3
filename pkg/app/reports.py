"""Tabular summaries of sweep and integration-time studies"""

from typing import Dict, Iterable, List

import pandas as pd

from src.imgio import REPORT_COLUMNS


def results_table(rows: Iterable[Dict]) -> pd.DataFrame:
    """Report rows as a DataFrame in REPORT_COLUMNS order"""
    return pd.DataFrame(list(rows), columns=REPORT_COLUMNS)


def sort_rows(rows: List[Dict]) -> List[Dict]:
    """Order rows by (algorithm, n_frames, seed), independent of completion order"""
    return sorted(rows, key=lambda r: (str(r.get('algorithm')), int(r.get('n_frames') or 0),
                                       int(r.get('seed') or 0), str(r.get('label'))))


def summarize_sweep(rows: Iterable[Dict]) -> pd.DataFrame:
    """Median and spread of SSIM/PSNR per (algorithm, n_frames)"""
    table = results_table(rows)
    if table.empty:
        return pd.DataFrame(columns=['algorithm', 'n_frames', 'seeds', 'ssim_median', 'ssim_min',
                                     'ssim_max', 'psnr_median'])
    table['n_frames'] = table['n_frames'].astype(int)
    summary = (
        table.groupby(['algorithm', 'n_frames'])
        .agg(
            seeds=('seed', 'count'),
            ssim_median=('ssim', 'median'),
            ssim_min=('ssim', 'min'),
            ssim_max=('ssim', 'max'),
            psnr_median=('psnr_db', 'median'),
        )
        .reset_index()
        .sort_values(['algorithm', 'n_frames'])
        .reset_index(drop=True)
    )
    return summary


def is_nondecreasing(summary: pd.DataFrame, algorithm: str, column: str = 'ssim_median') -> bool:
    values = summary[summary['algorithm'] == algorithm].sort_values('n_frames')[column].tolist()
    return all(b >= a for a, b in zip(values, values[1:]))


def summarize_fluctuation(rows: Iterable[Dict]) -> pd.DataFrame:
    """Mean and standard deviation of per-frame SSIM/PSNR for each integration time"""
    table = pd.DataFrame(list(rows))
    if table.empty:
        return pd.DataFrame(columns=['integration_time_s', 'frames', 'ssim_mean', 'ssim_std',
                                     'psnr_mean', 'psnr_std'])
    return (
        table.groupby('integration_time_s')
        .agg(
            frames=('ssim', 'count'),
            ssim_mean=('ssim', 'mean'),
            ssim_std=('ssim', 'std'),
            psnr_mean=('psnr_db', 'mean'),
            psnr_std=('psnr_db', 'std'),
        )
        .reset_index()
        .sort_values('integration_time_s', ascending=False)
        .reset_index(drop=True)
    )


def frame_csv(table: pd.DataFrame) -> bytes:
    """Any summary table as CSV bytes with 9 significant digits"""
    return table.to_csv(index=False, float_format='%.9g', lineterminator='\r\n').encode('utf-8')
