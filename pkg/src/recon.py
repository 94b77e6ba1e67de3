"""
Defogged image reconstruction from temporal frame sequences

Three estimators share one pairing and normalization path:
  - mean: temporal average, the conventional long-exposure image
  - pnc:  photon-number correlation, the pair-product average <I_a I_b>
  - pnfc: photon-number fluctuation correlation built from positive and
          negative fluctuations around the per-set means

Every estimator works per pixel and per channel along the time axis only.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .core_types import (
    Algorithm,
    ConfigError,
    Frame,
    FrameSequence,
    Normalization,
    Pairing,
    ReconConfig,
    ShapeMismatch,
    TooFewFrames,
    mean_frame,
    validate_sequence,
)

# Estimator value of a constant sequence at level c is SCALE * c ** POWER
_REFERENCE_SCALE = {Algorithm.MEAN: (1.0, 1), Algorithm.PNC: (1.0, 2), Algorithm.PNFC: (4.0, 2)}


@dataclass(frozen=True)
class PairSet:
    """Ordered (index_a, index_b) event pairs into a sequence"""
    pairs: Tuple[Tuple[int, int], ...]
    strategy: Pairing

    def __len__(self) -> int:
        return len(self.pairs)

    def first(self) -> np.ndarray:
        return np.array([a for a, _ in self.pairs], dtype=np.intp)

    def second(self) -> np.ndarray:
        return np.array([b for _, b in self.pairs], dtype=np.intp)

    def permuted(self, order: List[int]) -> 'PairSet':
        return PairSet(pairs=tuple(self.pairs[i] for i in order), strategy=self.strategy)


@dataclass(frozen=True)
class ReconResult:
    """Normalized reconstruction plus the raw estimator output"""
    image: Frame
    raw: Frame
    n_pairs: int
    algorithm: Algorithm
    normalization: Normalization = Normalization.SQRT_MINMAX


def make_pairs(n_frames: int, strategy=Pairing.DISJOINT_ADJACENT) -> PairSet:
    """
    Pair adjacent measurement events.

    disjoint-adjacent gives (0,1), (2,3), ... with no index reused (floor(n/2)
    pairs); sliding gives (0,1), (1,2), ... (n - 1 pairs).
    """
    if n_frames < 2:
        raise TooFewFrames(f"Pairing needs at least 2 frames, got {n_frames}")
    strategy = Pairing.parse(strategy)
    if strategy is Pairing.DISJOINT_ADJACENT:
        pairs = tuple((i, i + 1) for i in range(0, n_frames - 1, 2))
    else:
        pairs = tuple((i, i + 1) for i in range(n_frames - 1))
    return PairSet(pairs=pairs, strategy=strategy)


def _check_pairs(seq: FrameSequence, pairs: PairSet):
    validate_sequence(seq)
    if len(pairs) < 1:
        raise TooFewFrames("At least one pair is required")
    n = len(seq.frames)
    for a, b in pairs.pairs:
        if not (0 <= a < b < n):
            raise ShapeMismatch(f"Pair ({a}, {b}) is not valid for {n} frames")


def _pair_stacks(seq: FrameSequence, pairs: PairSet) -> Tuple[np.ndarray, np.ndarray]:
    stack = seq.stack()
    return stack[pairs.first()], stack[pairs.second()]


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def _minmax(pixels: np.ndarray) -> np.ndarray:
    # Per-channel affine map to [0, 1]; a constant channel maps to 0
    out = np.zeros_like(pixels)
    for c in range(pixels.shape[2]):
        channel = pixels[:, :, c]
        low, high = channel.min(), channel.max()
        if high > low:
            out[:, :, c] = (channel - low) / (high - low)
    return out


def normalize_display(raw: Frame, mode=Normalization.SQRT_MINMAX,
                      reference: Optional[float] = None) -> Frame:
    """
    Map raw estimator output for display and metrics.

    Args:
        raw: estimator output
        mode: none (identity), minmax (per-channel to [0,1]), sqrt-minmax
            (square root, then minmax) or peak (divide by reference, clip)
        reference: value mapped to 1 in peak mode

    Returns:
        Normalized frame
    """
    mode = Normalization(mode)
    if mode is Normalization.NONE:
        return raw
    if mode is Normalization.MINMAX:
        return Frame(_minmax(raw.pixels))
    if mode is Normalization.SQRT_MINMAX:
        return Frame(_minmax(np.sqrt(raw.pixels)))

    if reference is None:
        raise ConfigError("peak normalization needs a reference value")
    if reference <= 0:
        return Frame(np.zeros(raw.shape))
    return Frame(np.clip(raw.pixels / reference, 0.0, 1.0))


def peak_reference(seq: FrameSequence, algorithm) -> float:
    """Estimator output for a constant sequence at the sequence's peak pixel"""
    scale, power = _REFERENCE_SCALE[Algorithm(algorithm)]
    peak = max(float(f.pixels.max()) for f in seq.frames)
    return scale * peak ** power


def _finish(seq: FrameSequence, raw: np.ndarray, n_pairs: int, algorithm: Algorithm,
            normalization) -> ReconResult:
    normalization = Normalization(normalization)
    raw_frame = Frame(raw)
    reference = None
    if normalization is Normalization.PEAK:
        reference = peak_reference(seq, algorithm)
    return ReconResult(
        image=normalize_display(raw_frame, normalization, reference),
        raw=raw_frame,
        n_pairs=n_pairs,
        algorithm=algorithm,
        normalization=normalization,
    )


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

def baseline_mean(seq: FrameSequence, normalization=Normalization.SQRT_MINMAX) -> ReconResult:
    """Temporal pixelwise mean, the conventional camera image"""
    validate_sequence(seq)
    raw = mean_frame(seq.frames).pixels
    return _finish(seq, raw, 0, Algorithm.MEAN, normalization)


def pnc_reconstruct(seq: FrameSequence, pairs: PairSet,
                    normalization=Normalization.SQRT_MINMAX) -> ReconResult:
    """raw = (1/N) * sum over pairs of I_a * I_b, per pixel and channel"""
    _check_pairs(seq, pairs)
    first, second = _pair_stacks(seq, pairs)
    raw = np.mean(first * second, axis=0)
    return _finish(seq, raw, len(pairs), Algorithm.PNC, normalization)


def partition_means(seq: FrameSequence, pairs: PairSet) -> Tuple[Frame, Frame]:
    """Per-set means: p1 over first elements of the pairs, p2 over second"""
    _check_pairs(seq, pairs)
    first, second = _pair_stacks(seq, pairs)
    return Frame(first.mean(axis=0)), Frame(second.mean(axis=0))


def classify_fluctuation(p, p_bar):
    """
    Split a value into positive and negative fluctuation around its set mean.

    Returns:
        (dp_plus, dp_minus): dp_plus = p - p_bar when p > p_bar else 0,
        dp_minus = p - p_bar when p < p_bar else 0. Works elementwise on arrays.
    """
    delta = np.subtract(p, p_bar)
    plus = np.where(delta > 0, delta, 0.0)
    minus = np.where(delta < 0, delta, 0.0)
    if plus.ndim == 0:
        return float(plus), float(minus)
    return plus, minus


def pnfc_reconstruct(seq: FrameSequence, pairs: PairSet,
                     normalization=Normalization.SQRT_MINMAX) -> ReconResult:
    """
    Photon-number fluctuation correlation.

    For every pair alpha the four branch terms
    |(p1 - dp1[s]) * (p2 - dp2[t])| for s, t in {+, -} are summed, then averaged
    over the pairs. p1, p2 are the per-set means; a sequence with no
    fluctuation at level c gives 4 * c**2.
    """
    _check_pairs(seq, pairs)
    first, second = _pair_stacks(seq, pairs)
    p1 = first.mean(axis=0)
    p2 = second.mean(axis=0)
    plus1, minus1 = classify_fluctuation(first, p1)
    plus2, minus2 = classify_fluctuation(second, p2)

    terms = (
        np.abs((p1 - plus1) * (p2 - plus2))
        + np.abs((p1 - minus1) * (p2 - minus2))
        + np.abs((p1 - plus1) * (p2 - minus2))
        + np.abs((p1 - minus1) * (p2 - plus2))
    )
    raw = np.mean(terms, axis=0)
    return _finish(seq, raw, len(pairs), Algorithm.PNFC, normalization)


def reconstruct(seq: FrameSequence, config: Optional[ReconConfig] = None) -> ReconResult:
    """Run the estimator, pairing and normalization named by config"""
    config = config or ReconConfig()
    if config.algorithm is Algorithm.MEAN:
        return baseline_mean(seq, config.normalization)
    pairs = make_pairs(len(seq.frames), config.pairing)
    if config.algorithm is Algorithm.PNC:
        return pnc_reconstruct(seq, pairs, config.normalization)
    return pnfc_reconstruct(seq, pairs, config.normalization)
