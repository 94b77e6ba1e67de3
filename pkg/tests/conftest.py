"""Shared fixtures for the test suite"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root and the test directory to path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
sys.path.insert(0, str(Path(__file__).resolve().parent))

from src.core_types import FogParams, Frame, FrameSequence  # noqa: E402
from src.fogsim import to_photon_counts  # noqa: E402
from src.targets import letter_g  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def random_sequence(rng):
    """Factory for random sequences with values in [0, high)"""
    def build(n_frames=8, height=4, width=4, channels=1, high=100.0):
        stack = rng.uniform(0.0, high, size=(n_frames, height, width, channels))
        return FrameSequence.from_array(stack)
    return build


@pytest.fixture
def constant_sequence():
    def build(value=3.0, n_frames=8, height=4, width=4, channels=1):
        return FrameSequence.from_array(np.full((n_frames, height, width, channels), value))
    return build


@pytest.fixture
def default_params():
    return FogParams()


@pytest.fixture
def letter_g_target(default_params):
    """Letter G in photon counts at the default peak"""
    return to_photon_counts(letter_g(), default_params.photon_scale)


@pytest.fixture
def static_params():
    """All stochastic switches off"""
    return FogParams(beta_sigma=0.0, ambient_sigma=0.0, shot_noise=False)


def unit_frame(rng, height=32, width=32, channels=1) -> Frame:
    return Frame(rng.uniform(0.0, 1.0, size=(height, width, channels)))
