"""Gradient- and normal-domain losses with exact height derivatives.

All losses average over the foreground pixels of ``omega`` (``N`` of them);
pixels outside ``omega`` contribute nothing.  Each depends on ``h_pred`` only
through ``gradient(h_pred)`` (the detail loss excepted), so adding a
constant to the prediction leaves it unchanged.

Derivatives use ``gradient^T = -divergence``: for a loss ``L(gradient(h))``
with per-pixel sensitivity ``G = dL/d(gradient h)``, ``dL/dh = -divergence(G)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import (
    FieldError,
    GradientField,
    as_mask,
    as_scalar_field,
    backward_div,
    divergence,
    forward_diff,
    full_mask,
    gradient,
)
from .gradmap import DEFAULT_ETA, phi2

LOSS_KINDS = ("l2s", "l1s", "cosine", "detail")


@dataclass(frozen=True)
class LossReport:
    value: float
    per_pixel: np.ndarray
    n_pixels: int


def value_and_grad(kind: str, h: np.ndarray, g_target: GradientField, m: np.ndarray,
                   n: int, eta: float = DEFAULT_ETA) -> tuple[float, np.ndarray]:
    """Unchecked ``(loss, N * dloss/dh)`` for l2s/cosine; shares one residual pass."""
    if kind == "l2s":
        ru, rv = _residual(h, g_target)
        ru[~m] = 0.0
        rv[~m] = 0.0
        value = float(np.sum(ru * ru) + np.sum(rv * rv)) / n
        return value, -2.0 * backward_div(ru, rv)
    if kind == "cosine":
        sx, sy, sz, inv = _unit(*forward_diff(h), eta)
        tx, ty, tz, _ = _unit(g_target.du, g_target.dv, eta)
        c = np.where(m, sx * tx + sy * ty + sz * tz, 0.0)
        su = np.where(m, (tx - c * sx) * inv, 0.0)
        sv = np.where(m, (ty - c * sy) * inv, 0.0)
        return 1.0 - float(np.sum(c)) / n, -backward_div(su, sv)
    raise ValueError(f"value_and_grad supports l2s and cosine, got {kind!r}")


def _prepare(h, g_target: GradientField | None, omega):
    h = as_scalar_field(h, "h_pred")
    if g_target is not None and g_target.shape != h.shape:
        raise FieldError(f"target gradient shape {g_target.shape} does not match {h.shape}")
    m = full_mask(h.shape) if omega is None else as_mask(omega, h.shape, "omega")
    n = int(np.count_nonzero(m))
    if n == 0:
        raise FieldError("omega has no foreground pixels")
    return h, m, n


def _residual(h: np.ndarray, g: GradientField) -> tuple[np.ndarray, np.ndarray]:
    du, dv = forward_diff(h)
    du -= g.du
    dv -= g.dv
    return du, dv


def _unit(du: np.ndarray, dv: np.ndarray, eta: float):
    """Components of ``(-du, -dv, eta) / |.|`` plus ``1 / |.|``."""
    inv = 1.0 / np.sqrt(du * du + dv * dv + eta * eta)
    return -du * inv, -dv * inv, eta * inv, inv


def _check_eta(eta: float) -> None:
    if not eta > 0:
        raise FieldError(f"eta must be positive, got {eta}")


def loss_l2s(h_pred, g_target: GradientField, omega=None) -> LossReport:
    """Mean squared gradient mismatch ``|grad h - g|_2^2`` over omega."""
    h, m, n = _prepare(h_pred, g_target, omega)
    ru, rv = _residual(h, g_target)
    per = np.where(m, ru * ru + rv * rv, 0.0)
    return LossReport(float(np.sum(per)) / n, per, n)


def loss_l1s(h_pred, g_target: GradientField, omega=None) -> LossReport:
    """Mean componentwise-L1 gradient mismatch ``|d du| + |d dv|`` over omega."""
    h, m, n = _prepare(h_pred, g_target, omega)
    ru, rv = _residual(h, g_target)
    per = np.where(m, np.abs(ru) + np.abs(rv), 0.0)
    return LossReport(float(np.sum(per)) / n, per, n)


def loss_cosine(h_pred, g_target: GradientField, eta: float, omega=None) -> LossReport:
    """``1 - mean <n_pred, n_target>``; ``per_pixel`` holds the cosines."""
    _check_eta(eta)
    h, m, n = _prepare(h_pred, g_target, omega)
    sx, sy, sz, _ = _unit(*forward_diff(h), eta)
    tx, ty, tz, _ = _unit(g_target.du, g_target.dv, eta)
    per = np.where(m, sx * tx + sy * ty + sz * tz, 0.0)
    return LossReport(1.0 - float(np.sum(per)) / n, per, n)


def detail_target(h_source, alpha1: float, alpha2: float, mode: str = "normalized") -> np.ndarray:
    """Divergence of the band-passed source gradients."""
    return divergence(phi2(gradient(h_source), alpha1, alpha2, mode))


def loss_detail(h_d, h_source, alpha1: float, alpha2: float, omega=None,
                mode: str = "normalized") -> LossReport:
    h, m, n = _prepare(h_d, None, omega)
    src = as_scalar_field(h_source, "h_source")
    if src.shape != h.shape:
        raise FieldError(f"source shape {src.shape} does not match {h.shape}")
    r = h - detail_target(src, alpha1, alpha2, mode)
    per = np.where(m, r * r, 0.0)
    return LossReport(float(np.sum(per)) / n, per, n)


def evaluate(kind: str, h_pred, g_target: GradientField | None = None, omega=None,
             eta: float = DEFAULT_ETA, **detail) -> LossReport:
    if kind == "l2s":
        return loss_l2s(h_pred, g_target, omega)
    if kind == "l1s":
        return loss_l1s(h_pred, g_target, omega)
    if kind == "cosine":
        return loss_cosine(h_pred, g_target, eta, omega)
    if kind == "detail":
        return loss_detail(h_pred, omega=omega, **detail)
    raise ValueError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")


def loss_grad(h_pred, kind: str, g_target: GradientField | None = None, omega=None,
              eta: float = DEFAULT_ETA, h_source=None, alpha1: float | None = None,
              alpha2: float | None = None, mode: str = "normalized") -> np.ndarray:
    """Exact derivative of the chosen loss with respect to every height value.

    For ``l1s`` the subgradient of ``|0|`` is taken as 0.  For ``detail`` the
    derivative is with respect to ``h_d`` (passed as ``h_pred``).
    """
    if kind == "detail":
        h, m, n = _prepare(h_pred, None, omega)
        r = h - detail_target(h_source, alpha1, alpha2, mode)
        return np.where(m, 2.0 * r, 0.0) / n

    h, m, n = _prepare(h_pred, g_target, omega)
    if kind == "l2s":
        ru, rv = _residual(h, g_target)
        su, sv = 2.0 * ru, 2.0 * rv
    elif kind == "l1s":
        ru, rv = _residual(h, g_target)
        su, sv = np.sign(ru), np.sign(rv)
    elif kind == "cosine":
        _check_eta(eta)
        sx, sy, sz, inv = _unit(*forward_diff(h), eta)
        tx, ty, tz, _ = _unit(g_target.du, g_target.dv, eta)
        c = sx * tx + sy * ty + sz * tz
        # d<n_s, n_t>/d(du) = -(t_x - c s_x) / |q| with q = (-du, -dv, eta); loss = 1 - mean(c)
        su = (tx - c * sx) * inv
        sv = (ty - c * sy) * inv
    else:
        raise ValueError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")
    return -backward_div(np.where(m, su, 0.0), np.where(m, sv, 0.0)) / n
