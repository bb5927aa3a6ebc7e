"""Structure/detail relief generation and two-scale fusion.

The structure layer is the Poisson integral of the structure-remapped
source gradients, gauge-fixed so the background median is 0 and the
foreground maximum is 1.  The detail layer is the Poisson integral of the
band-passed gradients; its Laplacian is exactly the detail divergence
target.  Layers are fused additively in height space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from .fields import FieldError, as_mask, as_scalar_field, full_mask, gradient, resample, resample_mask
from .gradmap import ReliefParams, phi1, phi2
from .poisson import SolveReport, reconstruct_from_gradients

STRUCTURE_MAX_SIDE = 1024


def depth_to_height(depth, mask, z_near: float, z_far: float) -> np.ndarray:
    """Map depth to height: near plane -> 1, far plane -> 0, background 0."""
    if not z_near < z_far:
        raise ValueError(f"z_near < z_far required, got z_near={z_near}, z_far={z_far}")
    d = as_scalar_field(depth, "depth")
    m = as_mask(mask, d.shape)
    h = np.clip((z_far - d) / (z_far - z_near), 0.0, 1.0)
    return np.where(m, h, 0.0)


def normalize_structure(h, omega) -> np.ndarray:
    """Shift to zero background median, then scale the foreground max to 1.

    Grids without background skip the shift; a non-positive foreground max
    skips the scale.  The map is idempotent.
    """
    h = np.array(h, dtype=np.float64)
    m = as_mask(omega, h.shape, "omega")
    bg = ~m
    if np.any(bg):
        h -= np.median(h[bg])
    top = h[m].max() if np.any(m) else h.max()
    if top > 1e-12:
        h /= top
    return h


def structure_solve(h_source, omega, params: ReliefParams) -> tuple[np.ndarray, SolveReport]:
    """:func:`structure_layer` plus the Poisson solve report."""
    src = as_scalar_field(h_source, "h_source")
    m = full_mask(src.shape) if omega is None else as_mask(omega, src.shape, "omega")
    g = phi1(gradient(src), params.alpha, params.phi_mode)
    h, report = reconstruct_from_gradients(g)
    return normalize_structure(h, m), report


def detail_solve(h_source, params: ReliefParams) -> tuple[np.ndarray, SolveReport]:
    src = as_scalar_field(h_source, "h_source")
    g = phi2(gradient(src), params.alpha1, params.alpha2, params.phi_mode)
    return reconstruct_from_gradients(g)


def structure_layer(h_source, omega=None, params: ReliefParams = ReliefParams()) -> np.ndarray:
    return structure_solve(h_source, omega, params)[0]


def detail_layer(h_source, params: ReliefParams = ReliefParams()) -> np.ndarray:
    """Zero-mean heights whose Laplacian is ``div(phi2(gradient(h_source)))``."""
    return detail_solve(h_source, params)[0]


def fuse(structure, detail, weight: float = 1.0) -> np.ndarray:
    """Upsample ``structure`` to the detail grid and add ``weight * detail``."""
    s = as_scalar_field(structure, "structure")
    d = as_scalar_field(detail, "detail")
    if d.shape[0] < s.shape[0] or d.shape[1] < s.shape[1]:
        raise FieldError(f"detail grid {d.shape} is smaller than structure grid {s.shape}")
    return resample(s, d.shape[1], d.shape[0]) + weight * d


def structure_size(width: int, height: int, max_side: int = STRUCTURE_MAX_SIDE) -> tuple[int, int]:
    """Grid for the structure pass: longest side ``max_side``, aspect kept."""
    longest = max(width, height)
    if longest <= max_side:
        return width, height
    s = max_side / longest
    return max(2, int(round(width * s))), max(2, int(round(height * s)))


@dataclass
class ReliefLayers:
    relief: np.ndarray
    structure: np.ndarray
    detail: np.ndarray | None
    reports: list[SolveReport] = field(default_factory=list)


def two_scale_layers(h_source, omega=None, params: ReliefParams = ReliefParams(),
                     max_side: int = STRUCTURE_MAX_SIDE, detail_weight: float = 1.0) -> ReliefLayers:
    """Structure on a <= ``max_side`` copy, detail at native size, fused at native size.

    Sources that already fit within ``max_side`` get the structure layer only.
    """
    src = as_scalar_field(h_source, "h_source")
    H, W = src.shape
    m = full_mask(src.shape) if omega is None else as_mask(omega, src.shape, "omega")
    w_s, h_s = structure_size(W, H, max_side)
    if (w_s, h_s) == (W, H):
        s, rep = structure_solve(src, m, params)
        return ReliefLayers(s, s, None, [rep])
    s, rep_s = structure_solve(resample(src, w_s, h_s), resample_mask(m, w_s, h_s), params)
    d, rep_d = detail_solve(src, params)
    return ReliefLayers(fuse(s, d, detail_weight), s, d, [rep_s, rep_d])


def two_scale(h_source_hires, omega=None, params: ReliefParams = ReliefParams()) -> np.ndarray:
    return two_scale_layers(h_source_hires, omega, params).relief


def high_band_energy(h, max_wavelength: float = 4.0) -> float:
    """Energy of the cosine-spectrum components with wavelength below ``max_wavelength`` px.

    Index ``k`` of an ``n``-point type-II DCT has wavelength ``2 n / k``; a
    coefficient counts when either axis is in the band.
    """
    a = as_scalar_field(h, "h")
    c = fft.dctn(a, type=2, norm="ortho")
    H, W = a.shape
    kv = np.arange(H)[:, None]
    ku = np.arange(W)[None, :]
    band = (kv * max_wavelength > 2 * H) | (ku * max_wavelength > 2 * W)
    return float(np.sum(c[band] ** 2))
