"""Direct minimization of the gradient/normal losses over the height field.

Instead of training a network, the height field itself is the free
variable.  The optimizer is momentum descent with a fixed
backtracking rule:

1. try the heavy-ball step ``v <- momentum * v - step * grad``; if the
   objective does not decrease,
2. drop the momentum and retry the plain gradient step; if that fails,
3. halve the step and retry.

Steps are taken on ``N * dL/dh`` so that ``step`` is a per-pixel quantity
independent of resolution.  Ten consecutive failed trials end the run: as
convergence when the failures are within rounding of the current value,
otherwise with :class:`OptimizerDivergence`.

``l1s`` is not differentiable at zero residual, and a plain subgradient
step from a flat start is not a descent direction.  It is therefore
descended through the pseudo-Huber surrogate ``sqrt(r^2 + d^2) - d`` with a
small width ``d`` (``OptimizeConfig.l1_smoothing``).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .fields import FieldError, GradientField, as_mask, as_scalar_field, backward_div, forward_diff, full_mask, gradient
from .gradmap import DEFAULT_ETA, ReliefParams, phi1
from .losses import evaluate, value_and_grad

OPT_KINDS = ("l1s", "l2s", "cosine")
INIT_KINDS = ("zeros", "source")


class OptimizerDivergence(RuntimeError):
    """The objective kept increasing: the step is too large for this loss."""


@dataclass(frozen=True)
class OptimizeConfig:
    loss_kind: str = "l2s"
    step: float = 0.05
    momentum: float = 0.9
    max_iter: int = 5000
    rel_tol: float = 1e-10
    init: str = "zeros"
    l1_smoothing: float = 1e-3

    def __post_init__(self):
        if self.loss_kind not in OPT_KINDS:
            raise ValueError(f"loss_kind must be one of {OPT_KINDS}, got {self.loss_kind!r}")
        if self.init not in INIT_KINDS:
            raise ValueError(f"init must be one of {INIT_KINDS}, got {self.init!r}")
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.max_iter < 0:
            raise ValueError(f"max_iter must be >= 0, got {self.max_iter}")
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if not self.l1_smoothing > 0:
            raise ValueError(f"l1_smoothing must be positive, got {self.l1_smoothing}")


# every loss warm-started from the source, so the comparison isolates what each loss changes
STYLE_CONFIG = OptimizeConfig(init="source", max_iter=2000)


@dataclass
class OptimizeTrace:
    """Objective value after every accepted step (index 0 is the start)."""

    objective: list[float] = field(default_factory=list)
    rejected: int = 0


def _smooth_l1(h, g_target: GradientField, m: np.ndarray, n: int, width: float):
    du, dv = forward_diff(h)
    du -= g_target.du
    dv -= g_target.dv
    su = np.sqrt(du * du + width * width)
    sv = np.sqrt(dv * dv + width * width)
    value = float(np.sum(np.where(m, su + sv - 2.0 * width, 0.0))) / n
    return value, -backward_div(np.where(m, du / su, 0.0), np.where(m, dv / sv, 0.0))


def _objective(kind: str, g_target: GradientField, m: np.ndarray, n: int, eta: float, width: float):
    """Return ``f(h) -> (value, N * gradient)`` for the descended objective."""
    if kind == "l1s":
        return lambda h: _smooth_l1(h, g_target, m, n, width)
    return lambda h: value_and_grad(kind, h, g_target, m, n, eta)


def optimize_height(g_target: GradientField, omega=None, cfg: OptimizeConfig = OptimizeConfig(),
                    eta: float = DEFAULT_ETA, source=None,
                    trace: OptimizeTrace | None = None) -> tuple[np.ndarray, int]:
    """Minimize ``cfg.loss_kind`` over the height field; returns ``(h, iterations)``."""
    shape = g_target.shape
    m = full_mask(shape) if omega is None else as_mask(omega, shape, "omega")
    n = int(np.count_nonzero(m))
    if n == 0:
        raise FieldError("omega has no foreground pixels")
    if not eta > 0:
        raise FieldError(f"eta must be positive, got {eta}")
    if cfg.init == "source":
        if source is None:
            raise ValueError("init='source' needs a source field")
        h = as_scalar_field(source, "source").copy()
        if h.shape != shape:
            raise FieldError(f"source shape {h.shape} does not match target {shape}")
    else:
        h = np.zeros(shape)

    f = _objective(cfg.loss_kind, g_target, m, n, eta, cfg.l1_smoothing)
    value, grad = f(h)
    if trace is not None:
        trace.objective.append(value)
    velocity = np.zeros(shape)
    step = cfg.step
    failures = 0
    iterations = 0
    while iterations < cfg.max_iter:
        iterations += 1
        use_momentum = failures == 0 and cfg.momentum > 0
        if use_momentum:
            trial_velocity = cfg.momentum * velocity - step * grad
        else:
            trial_velocity = -step * grad
        trial = h + trial_velocity
        trial_value, trial_grad = f(trial)
        if not np.isfinite(trial_value):
            raise OptimizerDivergence(f"objective became non-finite at iteration {iterations}")

        if trial_value <= value:
            decrease = value - trial_value
            h, velocity, grad, failures = trial, trial_velocity, trial_grad, 0
            previous, value = value, trial_value
            if trace is not None:
                trace.objective.append(value)
            if value == 0.0 or decrease <= cfg.rel_tol * previous:
                break
            continue

        velocity[...] = 0.0
        failures += 1
        if trace is not None:
            trace.rejected += 1
        if not use_momentum:
            step *= 0.5
        if failures >= 10:
            if trial_value - value <= 1e-9 * abs(value):
                break
            raise OptimizerDivergence(
                f"objective increased on 10 consecutive trials (step now {step:.3g}); "
                "reduce the step size"
            )
    return h, iterations


def gauge_background(h: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Shift ``h`` so the median over the background (``~mask``) is zero."""
    bg = ~mask
    if not np.any(bg):
        return h.copy()
    return h - np.median(h[bg])


def silhouette_band(mask: np.ndarray) -> np.ndarray:
    """Two-pixel band straddling the mask boundary (one pixel on each side)."""
    if not np.any(mask) or np.all(mask):
        return np.zeros_like(mask)
    grown = ndimage.binary_dilation(mask)
    shrunk = ndimage.binary_erosion(mask, border_value=1)
    return grown & ~shrunk


@dataclass(frozen=True)
class StyleReport:
    background_mean_abs: dict[str, float]
    silhouette_sharpness: dict[str, float]
    iterations: dict[str, int] = field(default_factory=dict)
    final_loss: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "background_mean_abs": dict(self.background_mean_abs),
            "silhouette_sharpness": dict(self.silhouette_sharpness),
            "iterations": dict(self.iterations),
            "final_loss": dict(self.final_loss),
        }


def style_metrics(h: np.ndarray, mask: np.ndarray) -> tuple[float, float]:
    """``(background_mean_abs, silhouette_sharpness)`` after background gauge fixing."""
    mask = np.asarray(mask, dtype=bool)
    if not np.any(mask):
        return 0.0, 0.0
    hg = gauge_background(h, mask)
    bg = ~mask
    flat = float(np.mean(np.abs(hg[bg]))) if np.any(bg) else 0.0
    band = silhouette_band(mask)
    sharp = float(np.mean(gradient(hg).magnitude()[band])) if np.any(band) else 0.0
    return flat, sharp


def style_compare(h_source, omega, params: ReliefParams = ReliefParams(),
                  cfg_base: OptimizeConfig = STYLE_CONFIG,
                  kinds: tuple[str, ...] = OPT_KINDS,
                  results: dict | None = None) -> StyleReport:
    """Optimize each loss against ``phi1(gradient(h_source))`` and compare the reliefs.

    ``omega`` marks the foreground figure; it drives the metrics only, the
    losses are taken over the whole grid.  An empty foreground gives an
    all-zero report.  Pass a dict as ``results`` to receive the heights.
    """
    src = as_scalar_field(h_source, "h_source")
    mask = as_mask(omega, src.shape, "omega")
    flat, sharp, iters, final = {}, {}, {}, {}
    if not np.any(mask):
        zero = {k: 0.0 for k in kinds}
        return StyleReport(zero, dict(zero), {k: 0 for k in kinds}, dict(zero))
    g_target = phi1(gradient(src), params.alpha, params.phi_mode)
    for kind in kinds:
        cfg = replace(cfg_base, loss_kind=kind)
        h, it = optimize_height(g_target, None, cfg, params.eta, source=src)
        flat[kind], sharp[kind] = style_metrics(h, mask)
        iters[kind] = it
        final[kind] = evaluate(kind, h, g_target, None, params.eta).value
        if results is not None:
            results[kind] = gauge_background(h, mask)
    return StyleReport(flat, sharp, iters, final)
