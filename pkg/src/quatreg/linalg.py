"""Real spectral and proximal operators plus the cached ridge solver.

Everything here works on plain real ``ndarray`` objects; the quaternion
solvers reach these through the real embeddings in :mod:`quatreg.quat_core`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import FactorizationFailure, ShapeMismatch


def svt(m: np.ndarray, gamma: float) -> np.ndarray:
    """Singular value thresholding ``U diag(max(s - gamma, 0)) V^T``.

    This is the proximal operator of ``gamma * ||.||_*``.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    s = np.maximum(s - gamma, 0.0)
    return (u * s) @ vt


def pad_weights(weights, n: int) -> np.ndarray:
    """Truncate ``weights`` to length ``n`` or pad by repeating the last value."""
    w = np.asarray(weights, dtype=float).ravel()
    if w.size == 0:
        raise ValueError("weight vector is empty")
    if w.size >= n:
        return w[:n]
    return np.concatenate([w, np.full(n - w.size, w[-1])])


def weighted_svt(m: np.ndarray, weights) -> np.ndarray:
    """Per-singular-value soft thresholding, ``sigma_i -> max(sigma_i - s_i, 0)``.

    ``weights[i]`` applies to the i-th largest singular value. Short weight
    vectors are padded with their last entry.
    """
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    w = pad_weights(weights, s.size)
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    s = np.maximum(s - w, 0.0)
    return (u * s) @ vt


def l21_shrink(z: np.ndarray, threshold: float) -> np.ndarray:
    """Column-wise shrinkage, the proximal operator of ``threshold * ||.||_{2,1}``.

    Each column with norm above ``threshold`` is scaled by
    ``(norm - threshold) / norm``; every other column is zeroed.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    z = np.asarray(z, dtype=float)
    norms = np.linalg.norm(z, axis=0)
    keep = norms > threshold
    scale = np.zeros_like(norms)
    scale[keep] = (norms[keep] - threshold) / norms[keep]
    return z * scale


def l21_norm(z: np.ndarray) -> float:
    return float(np.sum(np.linalg.norm(z, axis=0)))


@dataclass(frozen=True)
class RidgeSystem:
    """Cholesky-factorized ``D^T D + reg I`` for a fixed design matrix ``D``.

    Built once per dictionary and regularizer, then shared read-only.
    """

    design: np.ndarray
    reg: float
    _factor: tuple = field(repr=False, compare=False)

    @property
    def n_coeffs(self) -> int:
        return self.design.shape[1]

    def gram(self) -> np.ndarray:
        return self.design.T @ self.design + self.reg * np.eye(self.n_coeffs)


def build_ridge(design: np.ndarray, reg: float) -> RidgeSystem:
    design = np.asarray(design, dtype=float)
    if design.ndim != 2:
        raise ShapeMismatch(f"design matrix must be 2-D, got {design.shape}")
    if reg < 0:
        raise ValueError("regularizer must be nonnegative")
    gram = design.T @ design + reg * np.eye(design.shape[1])
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise FactorizationFailure(f"ridge system is not positive definite (reg={reg})") from exc
    # cho_factor does not detect near-singular systems at reg=0
    diag = np.abs(np.diag(factor[0]))
    if diag.min() <= np.finfo(float).eps * max(diag.max(), 1.0) * gram.shape[0]:
        raise FactorizationFailure(f"ridge system is numerically singular (reg={reg})")
    return RidgeSystem(design, float(reg), factor)


def ridge_solve(system: RidgeSystem, g: np.ndarray) -> np.ndarray:
    """Minimizer of ``||D x - g||^2 + reg ||x||^2``."""
    g = np.asarray(g, dtype=float)
    if g.shape != (system.design.shape[0],):
        raise ShapeMismatch(f"right-hand side has shape {g.shape}, expected ({system.design.shape[0]},)")
    return scipy.linalg.cho_solve(system._factor, system.design.T @ g, check_finite=False)
