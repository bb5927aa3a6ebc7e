"""Gradient-magnitude remapping.

``sigmoid_variant(x, a) = (1 - exp(-a x)) / (1 + exp(-a x))``, which is
``tanh(a x / 2)``; the tanh form is used because it cannot overflow.

Two readings of the remap are supported:

* ``normalized`` (default): the magnitude ``m`` of each gradient is replaced by
  ``S(m, a)``, direction kept.  Small slopes are boosted, large ones capped
  below 1.
* ``literal``: the vector is multiplied by ``S(m, a)``, i.e. ``S(m, a) * x``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import GradientField

PHI_MODES = ("normalized", "literal")

DEFAULT_ALPHA = 8.0
DEFAULT_ALPHA1 = 4.0
DEFAULT_ALPHA2 = 16.0
DEFAULT_ETA = 0.1


class ParameterError(ValueError):
    pass


def _check_mode(mode: str) -> None:
    if mode not in PHI_MODES:
        raise ParameterError(f"mode must be one of {PHI_MODES}, got {mode!r}")


def _check_positive(**kw) -> None:
    for k, v in kw.items():
        if not v > 0:
            raise ParameterError(f"{k} must be positive, got {v}")


def _check_band(alpha1: float, alpha2: float) -> None:
    _check_positive(alpha1=alpha1, alpha2=alpha2)
    if not alpha1 < alpha2:
        raise ParameterError(f"alpha1 < alpha2 required, got alpha1={alpha1}, alpha2={alpha2}")


@dataclass(frozen=True)
class ReliefParams:
    alpha: float = DEFAULT_ALPHA
    alpha1: float = DEFAULT_ALPHA1
    alpha2: float = DEFAULT_ALPHA2
    eta: float = DEFAULT_ETA
    phi_mode: str = "normalized"

    def __post_init__(self):
        _check_positive(alpha=self.alpha, eta=self.eta)
        _check_band(self.alpha1, self.alpha2)
        _check_mode(self.phi_mode)


def sigmoid_variant(x, alpha: float):
    """Odd, increasing squashing function with range (-1, 1)."""
    _check_positive(alpha=alpha)
    return np.tanh(0.5 * alpha * np.asarray(x, dtype=np.float64))


def _scale_for(m: np.ndarray, response: np.ndarray, mode: str) -> np.ndarray:
    if mode == "literal":
        return response
    out = np.zeros_like(m)
    nz = m > 0
    out[nz] = response[nz] / m[nz]
    return out


def phi1_scale(m, alpha: float, mode: str = "normalized") -> np.ndarray:
    """Per-pixel multiplier applied to a gradient of magnitude ``m``."""
    _check_mode(mode)
    m = np.asarray(m, dtype=np.float64)
    return _scale_for(m, sigmoid_variant(m, alpha), mode)


def phi2_scale(m, alpha1: float, alpha2: float, mode: str = "normalized") -> np.ndarray:
    _check_mode(mode)
    _check_band(alpha1, alpha2)
    m = np.asarray(m, dtype=np.float64)
    response = sigmoid_variant(m, alpha2) - sigmoid_variant(m, alpha1)
    return _scale_for(m, response, mode)


def phi1(g: GradientField, alpha: float, mode: str = "normalized") -> GradientField:
    """Structure remap: compress every gradient through ``S(., alpha)``."""
    return g.scaled(phi1_scale(g.magnitude(), alpha, mode))


def phi2(g: GradientField, alpha1: float, alpha2: float, mode: str = "normalized") -> GradientField:
    """Band-pass remap: keep gradients whose magnitude sits between the two knees."""
    return g.scaled(phi2_scale(g.magnitude(), alpha1, alpha2, mode))
