"""Gradient-domain bas-relief synthesis from height and depth fields."""

from .fields import (
    FieldError,
    GradientField,
    NormalField,
    divergence,
    gradient,
    laplacian,
    normals_from_gradient,
    resample,
)
from .gradmap import ReliefParams, phi1, phi2, sigmoid_variant
from .losses import LossReport, loss_cosine, loss_detail, loss_grad, loss_l1s, loss_l2s
from .optimize import OptimizeConfig, OptimizerDivergence, StyleReport, optimize_height, style_compare
from .pipeline import depth_to_height, detail_layer, fuse, structure_layer, two_scale
from .poisson import SolveReport, SolverError, reconstruct_from_gradients, solve_iterative, solve_spectral

__version__ = "0.1.0"
