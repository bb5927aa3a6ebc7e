"""Synthetic benchmark scenes."""

from __future__ import annotations

import numpy as np


def box_on_plane(size: int = 256, box_fraction: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Centered square of height 1 on a zero plane; the mask is the square."""
    side = int(round(size * box_fraction))
    lo = (size - side) // 2
    h = np.zeros((size, size))
    h[lo:lo + side, lo:lo + side] = 1.0
    return h, h > 0.5


def wrinkles(width: int, height: int, amplitude: float = 0.01, period: float = 3.0,
             axis: str = "u") -> np.ndarray:
    """``amplitude * sin(2 pi x / period)`` along one axis."""
    x = np.arange(width if axis == "u" else height, dtype=np.float64)
    wave = amplitude * np.sin(2.0 * np.pi * x / period)
    if axis == "u":
        return np.broadcast_to(wave[None, :], (height, width)).copy()
    return np.broadcast_to(wave[:, None], (height, width)).copy()


def wrinkled_figure(size: int = 2048, amplitude: float = 0.01,
                    period: float = 3.0) -> tuple[np.ndarray, np.ndarray]:
    """Smooth dome on a zero plane with fine wrinkles on the dome only."""
    c = (size - 1) / 2.0
    v, u = np.mgrid[0:size, 0:size]
    r = np.hypot(u - c, v - c) / (0.35 * size)
    mask = r < 1.0
    dome = np.where(mask, np.sqrt(np.clip(1.0 - r * r, 0.0, None)), 0.0)
    h = dome + np.where(mask, wrinkles(size, size, amplitude, period), 0.0)
    return h, mask
