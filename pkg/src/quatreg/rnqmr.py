"""Robust NQMR: log-nuclear low-rank error, sparse outliers and Gaussian noise.

Model::

    min  omega * sum_i log(sigma_i(E0) + eps) + alpha * ||E1||_L1
         + beta * ||E2||_F^2 + eta * ||x||_2^2
    s.t. A(x) + E0 + E1 + E2 - B = 0

The log term is linearized around the previous iterate, which turns the E0
step into a weighted singular value thresholding with weights
``(omega / mu) / (sigma_i(E0_prev) + eps)``. The quaternion L1 norm equals the
L2,1 norm of the pixel-column matrix, so the E1 step is per-pixel modulus
shrinkage. The E2 step is a plain rescaling.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ShapeMismatch
from .linalg import RidgeSystem, l21_shrink, ridge_solve, weighted_svt
from .nqmr import Dictionary, as_dictionary, check_finite, stopped_by_rule
from .quat_core import (
    QuaternionMatrix,
    QuaternionVector,
    channel_stack,
    channel_unstack,
    embed_matrix,
    embed_vector,
    frobenius_norm,
    quaternion_singular_values,
    unembed_matrix,
    unembed_vector,
)

# relative spread allowed inside one quadruple of embedded singular values
QUADRUPLE_RTOL = 1e-6


@dataclass(frozen=True)
class RnqmrConfig:
    omega: float = 0.1
    alpha: float = 0.1
    beta: float = 1.0
    eta: float = 1.0
    mu: float = 1.0
    epsilon_log: float = 1e-2
    eps_rel: float = 1e-4
    max_iter: int = 100

    def __post_init__(self):
        for name in ("omega", "alpha", "beta", "eta", "mu", "epsilon_log", "eps_rel"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")


@dataclass
class RnqmrState:
    x: QuaternionVector
    E0: QuaternionMatrix
    E1: QuaternionMatrix
    E2: QuaternionMatrix
    Lambda: QuaternionMatrix
    weights: np.ndarray
    Ax: Optional[QuaternionMatrix] = None
    dual: float = 0.0
    iteration: int = 0

    @classmethod
    def initial(cls, shape: tuple[int, int], n_coeffs: int, cfg: RnqmrConfig) -> RnqmrState:
        m, n = shape
        z = QuaternionMatrix.zeros(m, n)
        return cls(
            x=QuaternionVector.zeros(n_coeffs), E0=z, E1=z, E2=z, Lambda=z,
            weights=log_weights(np.zeros(min(m, n)), cfg),
        )


@dataclass
class RnqmrResult:
    x: QuaternionVector
    weights: np.ndarray
    trace: list[float]
    state: RnqmrState = field(repr=False)
    eps_rel: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def converged(self) -> bool:
        return stopped_by_rule(self.trace, self.eps_rel)


def log_weights(singular_values, cfg: RnqmrConfig) -> np.ndarray:
    """Adaptive weights ``(omega/mu) / (sigma_i + eps)`` of the linearized log term."""
    s = np.asarray(singular_values, dtype=float)
    return (cfg.omega / cfg.mu) / (s + cfg.epsilon_log)


def quadruple_spectrum(q: QuaternionMatrix, rtol: float = QUADRUPLE_RTOL) -> np.ndarray:
    """Quaternion singular values, checking the embedded spectrum's quadruple structure."""
    s = np.linalg.svd(embed_matrix(q), compute_uv=False).reshape(-1, 4)
    scale = max(float(s[0, 0]), 1.0) if s.size else 1.0
    spread = s.max(axis=1) - s.min(axis=1)
    if np.any(spread > rtol * scale):
        raise ArithmeticError(f"embedded spectrum lost its quadruple structure (spread {spread.max():.3g})")
    return s[:, 0]


def update_x(state: RnqmrState, b: QuaternionMatrix, d: Dictionary, cfg: RnqmrConfig,
             sys: Optional[RidgeSystem] = None) -> QuaternionVector:
    """Ridge step against ``y = vec(B - E0 - E1 - E2 - Lambda/mu)``."""
    y = b - state.E0 - state.E1 - state.E2 - state.Lambda / cfg.mu
    if sys is None:
        return d.fit(y, cfg.eta / cfg.mu)
    return unembed_vector(ridge_solve(sys, embed_vector(y.vec())))


def update_E0(state: RnqmrState, b: QuaternionMatrix, Ax: QuaternionMatrix,
              cfg: RnqmrConfig) -> tuple[QuaternionMatrix, np.ndarray]:
    """Weighted SVT step; weights come from the spectrum of the current ``E0``.

    Returns the new ``E0`` and the weight vector that produced it.
    """
    weights = log_weights(quadruple_spectrum(state.E0), cfg)
    target = b - Ax - state.E1 - state.E2 - state.Lambda / cfg.mu
    e0 = unembed_matrix(weighted_svt(embed_matrix(target), np.repeat(weights, 4)))
    return e0, weights


def update_E1(state: RnqmrState, b: QuaternionMatrix, Ax: QuaternionMatrix,
              cfg: RnqmrConfig) -> QuaternionMatrix:
    """Per-pixel modulus shrinkage by ``alpha/mu`` (uses the already-updated ``E0``)."""
    target = b - Ax - state.E0 - state.E2 - state.Lambda / cfg.mu
    m, n = target.shape
    return channel_unstack(l21_shrink(channel_stack(target), cfg.alpha / cfg.mu), m, n)


def update_E2(state: RnqmrState, b: QuaternionMatrix, Ax: QuaternionMatrix,
              cfg: RnqmrConfig) -> QuaternionMatrix:
    target = b - Ax - state.E0 - state.E1 - state.Lambda / cfg.mu
    return target * (cfg.mu / (cfg.beta + cfg.mu))


def constraint_residual(state: RnqmrState, b: QuaternionMatrix, Ax: QuaternionMatrix) -> QuaternionMatrix:
    return Ax + state.E0 + state.E1 + state.E2 - b


def solve_rnqmr(
    dictionary,
    b: QuaternionMatrix,
    cfg: RnqmrConfig = RnqmrConfig(),
    callback: Optional[Callable[[RnqmrState, RnqmrState], None]] = None,
) -> RnqmrResult:
    """Run the R-NQMR ADMM iteration for query ``b``.

    Updates are applied in the order x, E0, E1, E2, Lambda. The stopping rule
    compares consecutive values of ``||A(x) + E0 + E1 + E2 - B||_F``.
    ``callback(previous, current)`` sees both states of every iteration.

    The returned ``weights`` are the ones used in the final E0 step.
    """
    d = as_dictionary(dictionary)
    if b.shape != d.image_shape:
        raise ShapeMismatch(f"query of shape {b.shape}, expected {d.image_shape}")
    sys = d.ridge(cfg.eta / cfg.mu)
    state = RnqmrState.initial(b.shape, len(d), cfg)
    trace: list[float] = []
    for it in range(1, cfg.max_iter + 1):
        prev = state
        x = update_x(prev, b, d, cfg, sys)
        Ax = d.combine(x)
        cur = RnqmrState(x=x, E0=prev.E0, E1=prev.E1, E2=prev.E2, Lambda=prev.Lambda,
                         weights=prev.weights, Ax=Ax, iteration=it)
        cur.E0, cur.weights = update_E0(cur, b, Ax, cfg)
        cur.E1 = update_E1(cur, b, Ax, cfg)
        cur.E2 = update_E2(cur, b, Ax, cfg)
        resid = constraint_residual(cur, b, Ax)
        cur.Lambda = prev.Lambda + resid * cfg.mu
        check_finite(x, cur.E0, cur.E1, cur.E2, cur.Lambda)
        cur.dual = frobenius_norm(resid)
        trace.append(cur.dual)
        state = cur
        if callback is not None:
            callback(prev, cur)
        if stopped_by_rule(trace, cfg.eps_rel):
            break
    return RnqmrResult(x=state.x, weights=state.weights, trace=trace, state=state, eps_rel=cfg.eps_rel)


def final_spectrum_weights(result: RnqmrResult, cfg: RnqmrConfig) -> np.ndarray:
    """Weights recomputed from the spectrum of the final ``E0`` (alternative to ``result.weights``)."""
    return log_weights(quaternion_singular_values(result.state.E0), cfg)
