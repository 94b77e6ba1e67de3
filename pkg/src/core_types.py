"""
Shared domain types for the time-variant fog toolkit

Frames, frame sequences, fog parameters and reconstruction settings, plus the
error hierarchy every other module raises. All types are immutable once built.
"""

from dataclasses import dataclass, asdict, fields
from enum import Enum
from typing import Dict, Sequence, Tuple

import numpy as np


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class DefogError(Exception):
    """Base class for every error raised by the toolkit"""
    exit_code = 1


class ShapeMismatch(DefogError):
    pass


class TooFewFrames(DefogError):
    pass


class NegativePixel(DefogError):
    pass


class EmptyInput(DefogError):
    pass


class NegativeInput(DefogError):
    pass


class RangeError(DefogError):
    pass


class TooSmall(DefogError):
    pass


class ChannelMismatch(DefogError):
    pass


class ConfigError(DefogError):
    pass


class ConditionsNotMet(DefogError):
    """Raised when condition enforcement is on and (i) or (ii) fails"""
    exit_code = 2


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Frame:
    """
    One measurement event: a height x width x channels grid of photon counts.

    Pixels are float64, row-major (C order), shape (height, width, channels).
    The array is made read-only on construction.
    """
    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise ShapeMismatch(f"Frame needs a 2-D or 3-D array, got {arr.ndim}-D")
        height, width, channels = arr.shape
        if height < 1 or width < 1:
            raise ShapeMismatch(f"Frame dimensions must be >= 1, got {width}x{height}")
        if channels not in (1, 3):
            raise ChannelMismatch(f"Frame must have 1 or 3 channels, got {channels}")
        if not np.all(np.isfinite(arr)):
            raise RangeError("Frame pixels must be finite")
        if np.any(arr < 0):
            raise NegativePixel(f"Frame pixels must be >= 0 (min {arr.min():.6g})")
        arr = np.ascontiguousarray(arr).copy()
        arr.setflags(write=False)
        object.__setattr__(self, 'pixels', arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.pixels.shape

    def scaled(self, factor: float) -> 'Frame':
        """Return a copy with every pixel multiplied by a nonnegative factor"""
        if factor < 0:
            raise NegativeInput(f"Scale factor must be >= 0, got {factor}")
        return Frame(self.pixels * factor)

    def channel(self, index: int) -> np.ndarray:
        return self.pixels[:, :, index]

    @classmethod
    def zeros(cls, height: int, width: int, channels: int = 1) -> 'Frame':
        return cls(np.zeros((height, width, channels)))

    @classmethod
    def full(cls, height: int, width: int, value: float, channels: int = 1) -> 'Frame':
        return cls(np.full((height, width, channels), float(value)))


@dataclass(frozen=True)
class FrameSequence:
    """Ordered frames of uniform shape plus timing metadata (seconds)"""
    frames: Tuple[Frame, ...]
    integration_time_s: float = 1.0 / 30.0
    interval_s: float = 1.0
    coherence_time_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'frames', tuple(self.frames))

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.frames[0].shape

    def stack(self) -> np.ndarray:
        """All frames as one (n_frames, height, width, channels) array"""
        return np.stack([f.pixels for f in self.frames], axis=0)

    def scaled(self, factor: float) -> 'FrameSequence':
        return FrameSequence(
            frames=tuple(f.scaled(factor) for f in self.frames),
            integration_time_s=self.integration_time_s,
            interval_s=self.interval_s,
            coherence_time_s=self.coherence_time_s,
        )

    def head(self, n_frames: int) -> 'FrameSequence':
        """First n_frames frames with the same timing metadata"""
        return FrameSequence(
            frames=self.frames[:n_frames],
            integration_time_s=self.integration_time_s,
            interval_s=self.interval_s,
            coherence_time_s=self.coherence_time_s,
        )

    @classmethod
    def from_array(cls, stack: np.ndarray, **timing) -> 'FrameSequence':
        return cls(frames=tuple(Frame(f) for f in np.asarray(stack)), **timing)


def validate_sequence(seq: FrameSequence) -> bool:
    """
    Check every FrameSequence invariant.

    Returns:
        True when the sequence is valid

    Raises:
        TooFewFrames, ShapeMismatch, NegativePixel, RangeError
    """
    if len(seq.frames) < 2:
        raise TooFewFrames(f"A sequence needs at least 2 frames, got {len(seq.frames)}")

    reference = seq.frames[0].shape
    for index, frame in enumerate(seq.frames):
        if frame.shape != reference:
            raise ShapeMismatch(
                f"Frame {index} has shape {frame.shape}, expected {reference}"
            )
        if np.any(frame.pixels < 0):
            raise NegativePixel(f"Frame {index} has negative pixels")

    if not seq.integration_time_s > 0:
        raise RangeError(f"integration_time_s must be > 0, got {seq.integration_time_s}")
    if not seq.interval_s > 0:
        raise RangeError(f"interval_s must be > 0, got {seq.interval_s}")
    if not seq.coherence_time_s >= 0:
        raise RangeError(f"coherence_time_s must be >= 0, got {seq.coherence_time_s}")
    return True


def mean_frame(frames: Sequence[Frame]) -> Frame:
    """Pixelwise arithmetic mean of a nonempty list of same-shaped frames"""
    if len(frames) == 0:
        raise EmptyInput("mean_frame needs at least one frame")
    reference = frames[0].shape
    for index, frame in enumerate(frames):
        if frame.shape != reference:
            raise ShapeMismatch(
                f"Frame {index} has shape {frame.shape}, expected {reference}"
            )
    return Frame(np.mean(np.stack([f.pixels for f in frames], axis=0), axis=0))


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FogParams:
    """
    Physical and stochastic parameters of the time-variant medium.

    Attributes:
        beta0: mean scattering coefficient (1/m)
        beta_sigma: relative fluctuation of beta (fraction of beta0)
        d: optical path length (m)
        ambient_mean: ambient source intensity (photon counts)
        ambient_sigma: relative per-pixel, per-frame ambient fluctuation
        k_factor: scattering-type constant of the airlight term
        shot_noise: replace every pixel by a Poisson draw
        seed: RNG seed (64-bit)
        n_frames: frames to render
        spatial_beta: draw beta per pixel instead of per frame
        integration_time_s: exposure per measurement event
        interval_s: time between adjacent measurement events
        photon_scale: photon counts at the target's peak pixel
    """
    beta0: float = 2.5
    beta_sigma: float = 0.3
    d: float = 0.6
    ambient_mean: float = 160.0
    ambient_sigma: float = 0.3
    k_factor: float = 1.0
    shot_noise: bool = True
    seed: int = 1
    n_frames: int = 20
    spatial_beta: bool = False
    integration_time_s: float = 1.0 / 30.0
    interval_s: float = 1.0
    photon_scale: float = 200.0

    def validate(self) -> 'FogParams':
        checks = [
            ('beta0', self.beta0 >= 0),
            ('d', self.d >= 0),
            ('ambient_mean', self.ambient_mean >= 0),
            ('beta_sigma', self.beta_sigma >= 0),
            ('ambient_sigma', self.ambient_sigma >= 0),
            ('k_factor', self.k_factor > 0),
            ('integration_time_s', self.integration_time_s > 0),
            ('interval_s', self.interval_s > 0),
            ('photon_scale', self.photon_scale >= 0),
        ]
        for name, ok in checks:
            if not ok:
                raise ConfigError(f"Invalid FogParams.{name}: {getattr(self, name)}")
        if self.n_frames < 2:
            raise TooFewFrames(f"n_frames must be >= 2, got {self.n_frames}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        return self

    def replace(self, **changes) -> 'FogParams':
        data = asdict(self)
        data.update(changes)
        return FogParams(**data)

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> 'FogParams':
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


class Algorithm(str, Enum):
    MEAN = 'mean'
    PNC = 'pnc'
    PNFC = 'pnfc'


class Pairing(str, Enum):
    DISJOINT_ADJACENT = 'disjoint-adjacent'
    SLIDING = 'sliding'

    @classmethod
    def parse(cls, value) -> 'Pairing':
        if isinstance(value, Pairing):
            return value
        if value == 'disjoint':
            return cls.DISJOINT_ADJACENT
        return cls(value)


class Normalization(str, Enum):
    NONE = 'none'
    SQRT_MINMAX = 'sqrt-minmax'
    MINMAX = 'minmax'
    PEAK = 'peak'


@dataclass(frozen=True)
class ReconConfig:
    """Algorithm selection, pairing strategy and output normalization"""
    algorithm: Algorithm = Algorithm.PNFC
    pairing: Pairing = Pairing.DISJOINT_ADJACENT
    normalization: Normalization = Normalization.SQRT_MINMAX

    def __post_init__(self):
        try:
            object.__setattr__(self, 'algorithm', Algorithm(self.algorithm))
            object.__setattr__(self, 'pairing', Pairing.parse(self.pairing))
            object.__setattr__(self, 'normalization', Normalization(self.normalization))
        except ValueError as e:
            raise ConfigError(f"Invalid ReconConfig: {e}") from e

    def to_dict(self) -> Dict[str, str]:
        return {
            'algorithm': self.algorithm.value,
            'pairing': self.pairing.value,
            'normalization': self.normalization.value,
        }
