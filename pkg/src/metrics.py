"""
Image quality metrics: MSE, PSNR, SSIM, brightness and Michelson contrast.

Inputs are frames normalized to [0, 1].
"""

from dataclasses import dataclass, asdict
from typing import Dict, Tuple

import numpy as np
from scipy.ndimage import gaussian_filter

from .core_types import Frame, RangeError, ShapeMismatch, TooSmall

# Gaussian-window SSIM constants
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_RANGE = 1.0

_RANGE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class MetricsReport:
    """Quality figures for one (candidate, reference) pair"""
    ssim: float
    psnr_db: float
    mse: float
    mean_brightness_candidate: float
    mean_brightness_reference: float
    contrast_candidate: float

    @property
    def psnr_is_infinite(self) -> bool:
        return np.isinf(self.psnr_db)

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def _check_pair(a: Frame, b: Frame):
    if a.shape != b.shape:
        raise ShapeMismatch(f"Image shapes differ: {a.shape} vs {b.shape}")


def _check_unit_range(frame: Frame, name: str):
    if frame.pixels.min() < -_RANGE_TOLERANCE or frame.pixels.max() > 1.0 + _RANGE_TOLERANCE:
        raise RangeError(
            f"{name} pixels must lie in [0, 1] "
            f"(got {frame.pixels.min():.6g}..{frame.pixels.max():.6g})"
        )


def mse(a: Frame, b: Frame) -> float:
    """Mean squared difference over all pixels and channels"""
    _check_pair(a, b)
    _check_unit_range(a, 'candidate')
    _check_unit_range(b, 'reference')
    return float(np.mean((a.pixels - b.pixels) ** 2))


def psnr(a: Frame, b: Frame, peak: float = 1.0) -> float:
    """10 * log10(peak**2 / mse) in dB; +inf for identical images"""
    error = mse(a, b)
    if error == 0:
        return float('inf')
    return float(10.0 * np.log10(peak ** 2 / error))


def _ssim_channel(x: np.ndarray, y: np.ndarray) -> float:
    c1 = (SSIM_K1 * SSIM_RANGE) ** 2
    c2 = (SSIM_K2 * SSIM_RANGE) ** 2
    radius = (SSIM_WINDOW - 1) // 2
    truncate = radius / SSIM_SIGMA

    def blur(image):
        return gaussian_filter(image, sigma=SSIM_SIGMA, truncate=truncate, mode='reflect')

    mu_x = blur(x)
    mu_y = blur(y)
    sigma_xx = blur(x * x) - mu_x * mu_x
    sigma_yy = blur(y * y) - mu_y * mu_y
    sigma_xy = blur(x * y) - mu_x * mu_y

    ssim_map = ((2 * mu_x * mu_y + c1) * (2 * sigma_xy + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (sigma_xx + sigma_yy + c2)
    )
    # only window positions that fit entirely inside the image
    valid = ssim_map[radius:-radius, radius:-radius]
    return float(valid.mean())


def ssim(a: Frame, b: Frame) -> float:
    """
    Structural similarity with an 11x11 Gaussian window (sigma 1.5),
    K1 = 0.01, K2 = 0.03, L = 1, averaged over valid window positions.
    Multi-channel images give the unweighted mean over channels.
    """
    _check_pair(a, b)
    if a.height < SSIM_WINDOW or a.width < SSIM_WINDOW:
        raise TooSmall(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, "
                       f"got {a.width}x{a.height}")
    _check_unit_range(a, 'candidate')
    _check_unit_range(b, 'reference')
    values = [_ssim_channel(a.channel(c), b.channel(c)) for c in range(a.channels)]
    return float(np.mean(values))


def brightness_contrast(a: Frame) -> Tuple[float, float]:
    """(mean pixel value, Michelson contrast (max-min)/(max+min); 0 when all zero)"""
    pixels = a.pixels
    low, high = float(pixels.min()), float(pixels.max())
    contrast = 0.0 if high + low == 0 else (high - low) / (high + low)
    return float(pixels.mean()), contrast


def spatial_cv(a: Frame) -> float:
    """Spatial coefficient of variation std/mean over all pixels (0 for a dark frame)"""
    mean = float(a.pixels.mean())
    if mean == 0:
        return 0.0
    return float(a.pixels.std() / mean)


def evaluate(candidate: Frame, reference: Frame) -> MetricsReport:
    """All metrics for one normalized candidate against a normalized reference"""
    error = mse(candidate, reference)
    candidate_brightness, candidate_contrast = brightness_contrast(candidate)
    reference_brightness, _ = brightness_contrast(reference)
    return MetricsReport(
        ssim=ssim(candidate, reference),
        psnr_db=float('inf') if error == 0 else float(10.0 * np.log10(1.0 / error)),
        mse=error,
        mean_brightness_candidate=candidate_brightness,
        mean_brightness_reference=reference_brightness,
        contrast_candidate=candidate_contrast,
    )
