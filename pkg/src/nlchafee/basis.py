"""Orthonormal sine basis helpers on (0, 1).

Basis functions w_j(x) = sqrt(2) sin(j pi x) are orthonormal in L^2(0,1)
with -w_j'' = (j pi)^2 w_j.  Inner products against sampled functions use
the trapezoid rule on uniform grids (endpoint values vanish), which is
exact for sine polynomials of bandwidth below twice the grid count.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = [
    "eigenvalues",
    "interior_grid",
    "basis_matrix",
    "coeffs_to_values",
    "project_values",
    "project_closed_samples",
    "l2_norm_sq",
    "h1_norm_sq",
]


def eigenvalues(N: int) -> np.ndarray:
    """(j pi)^2 for j = 1..N."""
    j = np.arange(1, N + 1, dtype=float)
    return (j * np.pi) ** 2


@lru_cache(maxsize=32)
def interior_grid(M: int) -> np.ndarray:
    """Interior collocation points m/M, m = 1..M-1."""
    return np.arange(1, M, dtype=float) / M


@lru_cache(maxsize=32)
def basis_matrix(M: int, N: int) -> np.ndarray:
    """(M-1, N) matrix of w_j at the interior points of the M-grid."""
    x = interior_grid(M)
    j = np.arange(1, N + 1, dtype=float)
    return np.sqrt(2.0) * np.sin(np.pi * x[:, None] * j[None, :])


def coeffs_to_values(coeffs: np.ndarray, M: int) -> np.ndarray:
    """Values of sum c_j w_j at the interior points of the M-grid."""
    coeffs = np.asarray(coeffs, dtype=float)
    return basis_matrix(M, coeffs.shape[-1]) @ coeffs


def project_values(values: np.ndarray, M: int, N: int) -> np.ndarray:
    """<v, w_j> for v sampled at the interior points of the M-grid."""
    return (basis_matrix(M, N).T @ np.asarray(values, dtype=float)) / M


def project_closed_samples(samples: np.ndarray, N: int) -> np.ndarray:
    """Coefficients of a function given as (x, u) rows on a closed uniform grid."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    x, u = samples[:, 0], samples[:, 1]
    if not (abs(x[0]) < 1e-12 and abs(x[-1] - 1.0) < 1e-12):
        raise ValueError("samples must cover [0, 1]")
    M = n - 1
    return project_values(u[1:-1], M, N)


def l2_norm_sq(coeffs: np.ndarray) -> float:
    coeffs = np.asarray(coeffs, dtype=float)
    return float(coeffs @ coeffs)


def h1_norm_sq(coeffs: np.ndarray) -> float:
    coeffs = np.asarray(coeffs, dtype=float)
    return float(eigenvalues(coeffs.shape[-1]) @ (coeffs * coeffs))
