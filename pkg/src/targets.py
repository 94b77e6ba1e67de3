"""
Procedurally generated test targets

A 64x64 binary letter G and three 3-channel color targets. Generated on
demand so no image files ship with the project.
"""

from typing import Callable, Dict

import numpy as np

from .core_types import ConfigError, Frame

TARGET_SIZE = 64


def _grid(size: int):
    coords = np.arange(size) + 0.5
    return np.meshgrid(coords, coords, indexing='xy')


def letter_g(size: int = TARGET_SIZE) -> Frame:
    """Binary letter G: an open ring with an inward bar, 1 on the glyph, 0 elsewhere"""
    x, y = _grid(size)
    cx = cy = size / 2.0
    outer, inner = 0.40 * size, 0.25 * size
    radius = np.hypot(x - cx, y - cy)
    # angle measured counter-clockwise from the +x axis with y pointing up
    angle = np.degrees(np.arctan2(-(y - cy), x - cx))

    ring = (radius >= inner) & (radius <= outer)
    opening = (angle > 0) & (angle < 50)
    bar = (y >= cy) & (y <= cy + 0.09 * size) & (x >= cx + 0.03 * size) & (x <= cx + outer)
    glyph = (ring & ~opening) | (bar & (radius <= outer))
    return Frame(glyph.astype(np.float64))


def color_bars(size: int = TARGET_SIZE) -> Frame:
    """Eight vertical bars: red, green, blue, yellow, cyan, magenta, white, black"""
    palette = np.array([
        [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0],
        [0, 1, 1], [1, 0, 1], [1, 1, 1], [0, 0, 0],
    ], dtype=np.float64)
    columns = (np.arange(size) * len(palette)) // size
    row = palette[columns]
    return Frame(np.broadcast_to(row, (size, size, 3)).copy())


def color_disks(size: int = TARGET_SIZE) -> Frame:
    """Three overlapping additive disks (red, green, blue) on black"""
    x, y = _grid(size)
    radius = 0.25 * size
    centers = [(0.38, 0.38), (0.62, 0.38), (0.50, 0.62)]
    image = np.zeros((size, size, 3))
    for channel, (fx, fy) in enumerate(centers):
        inside = np.hypot(x - fx * size, y - fy * size) <= radius
        image[:, :, channel] = inside.astype(np.float64)
    return Frame(image)


def color_checker(size: int = TARGET_SIZE, cells: int = 8) -> Frame:
    """Checkerboard alternating orange and teal cells"""
    x, y = _grid(size)
    parity = ((x // (size / cells)).astype(int) + (y // (size / cells)).astype(int)) % 2
    orange = np.array([1.0, 0.55, 0.1])
    teal = np.array([0.1, 0.6, 0.6])
    image = np.where(parity[:, :, np.newaxis] == 0, orange, teal)
    return Frame(image)


TARGETS: Dict[str, Callable[[], Frame]] = {
    'letter-g': letter_g,
    'color-bars': color_bars,
    'color-disks': color_disks,
    'color-checker': color_checker,
}

COLOR_TARGETS = ('color-bars', 'color-disks', 'color-checker')


def load_target(name: str) -> Frame:
    """Build a bundled target by name"""
    try:
        return TARGETS[name]()
    except KeyError:
        raise ConfigError(f"Unknown target '{name}'. Available: {', '.join(TARGETS)}") from None
