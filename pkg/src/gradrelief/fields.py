"""Grid primitives and discrete differential operators.

Scalar fields and masks are plain 2-D numpy arrays indexed ``[v, u]``
(row, column); ``u`` runs along the width.  Gradients and normals are small
frozen containers of per-pixel component arrays.

The gradient is a forward difference whose last column (``du``) or last row
(``dv``) is zero.  ``divergence`` is its exact negative adjoint, so that
``<gradient(h), g> == -<h, divergence(g)>`` up to rounding.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np


class FieldError(ValueError):
    """Raised for malformed fields or mismatched grids."""


def as_scalar_field(data, name: str = "field") -> np.ndarray:
    """Return ``data`` as a validated float64 (H, W) array."""
    a = np.asarray(data, dtype=np.float64)
    if a.ndim != 2:
        raise FieldError(f"{name} must be 2-D, got shape {a.shape}")
    if a.shape[0] < 2 or a.shape[1] < 2:
        raise FieldError(f"{name} must be at least 2x2, got {a.shape[1]}x{a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise FieldError(f"{name} contains non-finite values")
    return a


def as_mask(data, shape: tuple[int, int] | None = None, name: str = "mask") -> np.ndarray:
    m = np.asarray(data, dtype=bool)
    if m.ndim != 2:
        raise FieldError(f"{name} must be 2-D, got shape {m.shape}")
    if shape is not None and m.shape != tuple(shape):
        raise FieldError(f"{name} shape {m.shape} does not match field shape {tuple(shape)}")
    return m


def full_mask(shape: tuple[int, int]) -> np.ndarray:
    return np.ones(shape, dtype=bool)


@dataclass(frozen=True)
class GradientField:
    """Per-pixel 2-vectors ``(du, dv)`` in height units per pixel."""

    du: np.ndarray
    dv: np.ndarray

    def __post_init__(self):
        du = np.asarray(self.du, dtype=np.float64)
        dv = np.asarray(self.dv, dtype=np.float64)
        if du.shape != dv.shape or du.ndim != 2:
            raise FieldError(f"gradient components disagree: {du.shape} vs {dv.shape}")
        if not (np.all(np.isfinite(du)) and np.all(np.isfinite(dv))):
            raise FieldError("gradient field contains non-finite values")
        object.__setattr__(self, "du", du)
        object.__setattr__(self, "dv", dv)

    @property
    def shape(self) -> tuple[int, int]:
        return self.du.shape

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.du, self.dv)

    def scaled(self, factor: np.ndarray) -> "GradientField":
        return GradientField(self.du * factor, self.dv * factor)

    def __add__(self, other: "GradientField") -> "GradientField":
        return GradientField(self.du + other.du, self.dv + other.dv)

    def __sub__(self, other: "GradientField") -> "GradientField":
        return GradientField(self.du - other.du, self.dv - other.dv)

    @classmethod
    def zeros(cls, shape: tuple[int, int]) -> "GradientField":
        return cls(np.zeros(shape), np.zeros(shape))


@dataclass(frozen=True)
class NormalField:
    nx: np.ndarray
    ny: np.ndarray
    nz: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.nx.shape

    def dot(self, other: "NormalField") -> np.ndarray:
        return self.nx * other.nx + self.ny * other.ny + self.nz * other.nz


def forward_diff(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unchecked array form of :func:`gradient`, for inner loops."""
    du = np.zeros_like(h)
    dv = np.zeros_like(h)
    np.subtract(h[:, 1:], h[:, :-1], out=du[:, :-1])
    np.subtract(h[1:, :], h[:-1, :], out=dv[:-1, :])
    return du, dv


def backward_div(du: np.ndarray, dv: np.ndarray) -> np.ndarray:
    """Unchecked array form of :func:`divergence`."""
    out = np.zeros_like(du)
    out[:, :-1] += du[:, :-1]
    out[:, 1:] -= du[:, :-1]
    out[:-1, :] += dv[:-1, :]
    out[1:, :] -= dv[:-1, :]
    return out


def gradient(h) -> GradientField:
    """Forward differences, zero in the last column/row of each component."""
    return GradientField(*forward_diff(as_scalar_field(h, "h")))


def divergence(g: GradientField) -> np.ndarray:
    """Backward-difference divergence, the negative adjoint of :func:`gradient`.

    Entries of ``du`` in the last column and of ``dv`` in the last row are
    ignored, matching the zero rows of the gradient operator.
    """
    return backward_div(g.du, g.dv)


def laplacian(h) -> np.ndarray:
    """Five-point Neumann Laplacian, ``divergence(gradient(h))``."""
    return divergence(gradient(h))


def normals_from_gradient(g: GradientField, eta: float) -> NormalField:
    """Unit normals ``(-du, -dv, eta) / |(-du, -dv, eta)|``."""
    if not eta > 0:
        raise FieldError(f"eta must be positive, got {eta}")
    norm = np.sqrt(g.du**2 + g.dv**2 + eta * eta)
    return NormalField(-g.du / norm, -g.dv / norm, eta / norm)


def _bilinear_axis(n_old: int, n_new: int):
    # align-corners mapping: endpoints land on endpoints, so a ramp stays a ramp
    pos = np.linspace(0.0, n_old - 1, n_new)
    i0 = np.clip(np.floor(pos).astype(np.intp), 0, n_old - 1)
    i1 = np.clip(i0 + 1, 0, n_old - 1)
    w = pos - i0
    return i0, i1, w


def resample(h, new_width: int, new_height: int) -> np.ndarray:
    """Bilinear resampling to ``new_width x new_height``; identity if unchanged."""
    h = as_scalar_field(h, "h")
    if new_width < 2 or new_height < 2:
        raise FieldError(f"target size must be at least 2x2, got {new_width}x{new_height}")
    H, W = h.shape
    if (W, H) == (new_width, new_height):
        return h.copy()
    r0, r1, wr = _bilinear_axis(H, new_height)
    c0, c1, wc = _bilinear_axis(W, new_width)
    rows = h[r0, :] * (1.0 - wr)[:, None] + h[r1, :] * wr[:, None]
    return rows[:, c0] * (1.0 - wc)[None, :] + rows[:, c1] * wc[None, :]


def resample_mask(mask, new_width: int, new_height: int) -> np.ndarray:
    m = np.asarray(mask, dtype=bool)
    if m.shape == (new_height, new_width):
        return m.copy()
    return resample(m.astype(np.float64), new_width, new_height) >= 0.5


def thread_count() -> int | None:
    """Worker count from ``RELIEF_THREADS``; ``None`` means library default."""
    raw = os.environ.get("RELIEF_THREADS")
    if raw is None or raw.strip() == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise FieldError(f"RELIEF_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise FieldError(f"RELIEF_THREADS must be a positive integer, got {raw!r}")
    return n
