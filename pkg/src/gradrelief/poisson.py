"""Neumann Poisson reconstruction of height fields from gradient fields.

The operator solved is ``laplacian = divergence o gradient`` from
:mod:`gradrelief.fields`.  With the forward-difference/zero-edge gradient
this is the five-point Laplacian with homogeneous Neumann boundaries, which
the type-II DCT diagonalizes exactly.  Solutions are gauge-fixed to zero
mean.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy import fft

from .fields import GradientField, as_scalar_field, divergence, laplacian, thread_count


class SolverError(RuntimeError):
    """Raised when an iterative solve fails to reach its tolerance."""


@dataclass(frozen=True)
class SolveReport:
    method: str
    iterations: int
    residual: float
    wall_time: float


def _laplacian_eigenvalues(shape: tuple[int, int]) -> np.ndarray:
    H, W = shape
    lam_v = 2.0 - 2.0 * np.cos(np.pi * np.arange(H) / H)
    lam_u = 2.0 - 2.0 * np.cos(np.pi * np.arange(W) / W)
    return -(lam_v[:, None] + lam_u[None, :])


def relative_residual(h: np.ndarray, rhs: np.ndarray) -> float:
    """``|lap(h) - rhs| / |rhs|`` with ``rhs`` mean-projected; 0 if rhs vanishes."""
    rhs = rhs - rhs.mean()
    denom = np.sqrt(np.sum(rhs * rhs))
    r = laplacian(h) - rhs
    num = np.sqrt(np.sum(r * r))
    if denom == 0.0:
        return float(num)
    return float(num / denom)


def solve_spectral(div) -> tuple[np.ndarray, SolveReport]:
    """Zero-mean solution of ``laplacian(h) = div`` via the cosine transform.

    The mean of ``div`` is removed first, which makes any right-hand side
    compatible with the Neumann boundary.
    """
    t0 = time.perf_counter()
    rhs = as_scalar_field(div, "div")
    workers = thread_count()
    coeffs = fft.dctn(rhs, type=2, norm="ortho", workers=workers)
    lam = _laplacian_eigenvalues(rhs.shape)
    lam[0, 0] = 1.0
    coeffs /= lam
    coeffs[0, 0] = 0.0
    h = fft.idctn(coeffs, type=2, norm="ortho", workers=workers)
    h -= h.mean()
    report = SolveReport("spectral", 0, relative_residual(h, rhs), time.perf_counter() - t0)
    return h, report


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    # np.sum uses numpy's pairwise summation in a fixed order, independent of BLAS threading
    return float(np.sum(a * b))


def solve_iterative(div, tol: float = 1e-10, max_iter: int = 20000) -> tuple[np.ndarray, SolveReport]:
    """Jacobi-preconditioned conjugate gradients on ``-laplacian(h) = -div``.

    Iterates are kept in the zero-mean subspace.  Raises :class:`SolverError`
    if the relative residual is still above ``tol`` after ``max_iter`` steps.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    t0 = time.perf_counter()
    rhs = as_scalar_field(div, "div")
    b = -(rhs - rhs.mean())
    bnorm = np.sqrt(_dot(b, b))
    x = np.zeros_like(b)
    if bnorm == 0.0:
        return x, SolveReport("iterative", 0, 0.0, time.perf_counter() - t0)

    # diagonal of -laplacian: count of in-grid neighbours
    diag = np.full(b.shape, 4.0)
    diag[0, :] -= 1.0
    diag[-1, :] -= 1.0
    diag[:, 0] -= 1.0
    diag[:, -1] -= 1.0
    inv_diag = 1.0 / diag

    r = b.copy()
    z = inv_diag * r
    z -= z.mean()
    p = z.copy()
    rz = _dot(r, z)
    for it in range(1, max_iter + 1):
        Ap = -laplacian(p)
        alpha = rz / _dot(p, Ap)
        x += alpha * p
        r -= alpha * Ap
        res = np.sqrt(_dot(r, r)) / bnorm
        if res <= tol:
            x -= x.mean()
            return x, SolveReport("iterative", it, relative_residual(x, rhs), time.perf_counter() - t0)
        z = inv_diag * r
        z -= z.mean()
        rz_new = _dot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(
        f"conjugate gradients did not reach tol={tol:g} in {max_iter} iterations (residual {res:.3e})"
    )


def reconstruct_from_gradients(g: GradientField) -> tuple[np.ndarray, SolveReport]:
    """Least-squares height field for ``g``: ``argmin |gradient(h) - g|^2``, zero mean."""
    return solve_spectral(divergence(g))
