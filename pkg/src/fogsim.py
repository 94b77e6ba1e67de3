"""
Time-variant fog simulator

Renders foggy frame sequences from a clean target as the superposition of an
attenuated scattering component S and a fluctuating ambient (airlight)
component A, optionally followed by Poisson photon noise. Also checks the two
conditions a sequence must meet before correlation reconstruction works.

Every random draw comes from a numpy substream keyed by
(seed, frame_index, stream), so output bits do not depend on worker count or
evaluation order.
"""

import os
import sys
from dataclasses import dataclass, asdict
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import truncnorm

from .core_types import (
    Frame,
    FrameSequence,
    FogParams,
    NegativeInput,
    ShapeMismatch,
    TooFewFrames,
    validate_sequence,
)

BetaField = Union[float, np.ndarray]

# Substream identifiers
STREAM_BETA = 0
STREAM_AMBIENT = 1
STREAM_SHOT = 2

DEFAULT_EPSILON = 1e-3


def worker_count() -> int:
    """Worker cap from DEFOG_THREADS (0 or unset means one per CPU)"""
    raw = os.environ.get('DEFOG_THREADS', '0').strip() or '0'
    try:
        requested = int(raw)
    except ValueError:
        print(f"⚠️  Invalid DEFOG_THREADS value: {raw}, using auto", file=sys.stderr)
        requested = 0
    if requested <= 0:
        return os.cpu_count() or 1
    return requested


def substream(seed: int, frame_index: int, stream: int) -> np.random.Generator:
    """Independent generator for one (frame, stream) cell of a seeded run"""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(frame_index), int(stream)))
    return np.random.default_rng(sequence)


def _truncated_normal(rng: np.random.Generator, mean: float, std: float, size=None):
    # Normal(mean, std) truncated to [0, inf)
    lower = (0.0 - mean) / std
    return truncnorm.rvs(lower, np.inf, loc=mean, scale=std, size=size, random_state=rng)


def truncated_normal_mean(mean: float, std: float) -> float:
    """Closed-form mean of Normal(mean, std) truncated at zero"""
    if std == 0:
        return float(mean)
    return float(truncnorm.mean((0.0 - mean) / std, np.inf, loc=mean, scale=std))


# ---------------------------------------------------------------------------
# Physical components
# ---------------------------------------------------------------------------

def transmission(beta: BetaField, d: float) -> BetaField:
    """
    Fraction of scattering light surviving the optical path, exp(-beta * d).

    Args:
        beta: scattering coefficient (1/m), scalar or per-pixel array
        d: optical path length (m)

    Returns:
        Value(s) in (0, 1]; exactly 1 where beta * d == 0
    """
    beta_arr = np.asarray(beta, dtype=np.float64)
    if d < 0 or np.any(beta_arr < 0):
        raise NegativeInput(f"transmission needs beta >= 0 and d >= 0 (d={d})")
    result = np.exp(-beta_arr * d)
    if result.ndim == 0:
        return float(result)
    return result


def sample_beta(params: FogParams, frame_index: int,
                shape: Optional[Tuple[int, int]] = None,
                rng: Optional[np.random.Generator] = None) -> BetaField:
    """
    Draw the scattering coefficient for one measurement event.

    A scalar per frame, or a (height, width, 1) grid when params.spatial_beta
    is set (shape must then be given). Draws follow Normal(beta0,
    beta_sigma * beta0) truncated at zero; beta_sigma == 0 returns beta0.
    """
    std = params.beta_sigma * params.beta0
    if std == 0:
        if params.spatial_beta and shape is not None:
            return np.full((shape[0], shape[1], 1), float(params.beta0))
        return float(params.beta0)

    if rng is None:
        rng = substream(params.seed, frame_index, STREAM_BETA)

    if params.spatial_beta:
        if shape is None:
            raise ShapeMismatch("spatial_beta needs the frame shape")
        draws = _truncated_normal(rng, params.beta0, std, size=(shape[0], shape[1]))
        return np.asarray(draws, dtype=np.float64)[:, :, np.newaxis]
    return float(_truncated_normal(rng, params.beta0, std))


def _broadcast_beta(beta_field: BetaField, shape: Tuple[int, int, int]) -> np.ndarray:
    beta = np.asarray(beta_field, dtype=np.float64)
    if beta.ndim == 2:
        beta = beta[:, :, np.newaxis]
    try:
        return np.broadcast_to(beta, shape)
    except ValueError as e:
        raise ShapeMismatch(f"beta field {beta.shape} does not fit frame {shape}") from e


def scattering_component(target: Frame, beta_field: BetaField, d: float) -> Frame:
    """S = target * exp(-beta * d), pixelwise; scalar beta broadcasts"""
    beta = _broadcast_beta(beta_field, target.shape)
    return Frame(target.pixels * transmission(beta, d))


def ambient_component(params: FogParams, beta_field: BetaField, d: float,
                      shape: Tuple[int, int, int], frame_index: int = 0,
                      rng: Optional[np.random.Generator] = None) -> Frame:
    """
    Airlight for one measurement event.

    The base level k * ambient_mean * (1 - exp(-beta * d)) is multiplied by an
    independent per-pixel factor from Normal(1, ambient_sigma) truncated at
    zero. Fresh factors every frame leave no first-order coherence between
    measurement events.
    """
    beta = _broadcast_beta(beta_field, shape)
    base = params.k_factor * params.ambient_mean * (1.0 - transmission(beta, d))
    if params.ambient_sigma == 0:
        return Frame(np.array(base, dtype=np.float64))

    if rng is None:
        rng = substream(params.seed, frame_index, STREAM_AMBIENT)
    factors = _truncated_normal(rng, 1.0, params.ambient_sigma, size=shape)
    return Frame(base * factors)


def static_frame(target: Frame, params: FogParams) -> Frame:
    """Space-time invariant McCartney value target*t + k*I_inf*(1 - t)"""
    t = transmission(params.beta0, params.d)
    return Frame(target.pixels * t + params.k_factor * params.ambient_mean * (1.0 - t))


def render_frame(target: Frame, params: FogParams, frame_index: int) -> Frame:
    """
    One foggy measurement event: S + A, then Poisson photon noise if enabled.

    Args:
        target: clean scene in photon-count units
        params: fog parameters
        frame_index: event index, selects the RNG substreams
    """
    beta = sample_beta(params, frame_index, shape=target.shape[:2])
    scattering = scattering_component(target, beta, params.d)
    ambient = ambient_component(params, beta, params.d, target.shape, frame_index)
    mean = scattering.pixels + ambient.pixels

    if params.shot_noise:
        rng = substream(params.seed, frame_index, STREAM_SHOT)
        return Frame(rng.poisson(mean).astype(np.float64))
    return Frame(mean)


def simulate_sequence(target: Frame, params: FogParams,
                      n_jobs: Optional[int] = None) -> FrameSequence:
    """
    Render params.n_frames foggy frames of a photon-count target.

    Frames render in a thread pool; the result is identical for any n_jobs.
    The ambient decorrelates between any two frames, so coherence_time_s is 0.
    """
    params.validate()
    if n_jobs is None:
        n_jobs = worker_count()

    frames = Parallel(n_jobs=n_jobs, prefer='threads')(
        delayed(render_frame)(target, params, index) for index in range(params.n_frames)
    )
    return FrameSequence(
        frames=tuple(frames),
        integration_time_s=params.integration_time_s,
        interval_s=params.interval_s,
        coherence_time_s=0.0,
    )


def to_photon_counts(clean: Frame, photon_scale: float) -> Frame:
    """Scale a clean image so its peak pixel holds photon_scale counts"""
    peak = float(clean.pixels.max())
    if peak == 0:
        return Frame(np.zeros(clean.shape))
    return Frame(clean.pixels * (photon_scale / peak))


def exposure_scaled(params: FogParams, integration_time_s: float,
                    reference_s: float = 1.0 / 30.0) -> FogParams:
    """
    Parameters for a different integration time.

    Photon counts grow linearly with the exposure, so photon_scale and
    ambient_mean scale by integration_time_s / reference_s.
    """
    if integration_time_s <= 0 or reference_s <= 0:
        raise NegativeInput("integration times must be > 0")
    ratio = integration_time_s / reference_s
    return params.replace(
        photon_scale=params.photon_scale * ratio,
        ambient_mean=params.ambient_mean * ratio,
        integration_time_s=integration_time_s,
    )


# ---------------------------------------------------------------------------
# Condition checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionReport:
    """Outcome of the two validity conditions for correlation reconstruction"""
    condition_i_holds: bool
    condition_ii_holds: bool
    mean_frame_deviation: float
    ambient_autocorr: float
    epsilon: float = DEFAULT_EPSILON
    interval_s: float = 1.0
    coherence_time_s: float = 0.0

    @property
    def all_hold(self) -> bool:
        return self.condition_i_holds and self.condition_ii_holds

    def to_dict(self) -> Dict:
        return asdict(self)


def lag1_autocorrelation(stack: np.ndarray) -> float:
    """
    Spatially averaged lag-1 temporal autocorrelation of per-pixel residuals.

    Residuals are frames minus the per-pixel temporal mean; pixels without any
    temporal variance are left out.
    """
    residual = stack - stack.mean(axis=0, keepdims=True)
    energy = np.sum(residual ** 2, axis=0)
    lagged = np.sum(residual[1:] * residual[:-1], axis=0)
    varying = energy > 0
    if not np.any(varying):
        return 0.0
    rho = lagged[varying] / energy[varying]
    return float(np.clip(np.mean(rho), -1.0, 1.0))


def check_conditions(seq: FrameSequence, epsilon: float = DEFAULT_EPSILON) -> ConditionReport:
    """
    Test conditions (i) and (ii) on a sequence.

    (i) holds when the relative standard deviation of per-frame mean
    intensities exceeds epsilon; (ii) holds when interval_s > coherence_time_s.
    """
    if len(seq.frames) < 2:
        raise TooFewFrames(f"check_conditions needs at least 2 frames, got {len(seq.frames)}")
    validate_sequence(seq)

    stack = seq.stack()
    frame_means = stack.reshape(stack.shape[0], -1).mean(axis=1)
    grand_mean = float(frame_means.mean())
    if grand_mean > 0:
        deviation = float(frame_means.std() / grand_mean)
    else:
        deviation = 0.0

    return ConditionReport(
        condition_i_holds=deviation > epsilon,
        condition_ii_holds=seq.interval_s > seq.coherence_time_s,
        mean_frame_deviation=deviation,
        ambient_autocorr=lag1_autocorrelation(stack),
        epsilon=epsilon,
        interval_s=seq.interval_s,
        coherence_time_s=seq.coherence_time_s,
    )


def pair_correlation_ratio(seq: FrameSequence, pairs: Sequence[Tuple[int, int]],
                           mask: Optional[np.ndarray] = None) -> float:
    """
    Normalized pair correlation <I_a I_b> / (<I_a> <I_b>) averaged over pixels.

    Averages run over the pairs at every pixel (per-set temporal means in the
    denominator); mask selects the pixels that enter the spatial average.
    """
    stack = seq.stack()
    index = np.asarray(pairs, dtype=np.intp)
    first, second = stack[index[:, 0]], stack[index[:, 1]]
    numerator = np.mean(first * second, axis=0)
    denominator = np.mean(first, axis=0) * np.mean(second, axis=0)

    valid = denominator > 0
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim == 2:
            mask = mask[:, :, np.newaxis]
        valid = valid & np.broadcast_to(mask, denominator.shape)
    if not np.any(valid):
        return 0.0
    return float(np.mean(numerator[valid] / denominator[valid]))
