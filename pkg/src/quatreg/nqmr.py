"""Nuclear-norm quaternion matrix regression solved by ADMM.

Solves ``min_x ||A(x) - B||_* + (lam/2) ||x||_2^2`` with the splitting
``A(x) - B = E``. Each iteration performs a ridge step for the coefficients,
a singular value thresholding step for the error image ``E`` (through the
real embedding), and a multiplier update. The loop stops when two
consecutive constraint residuals differ by less than ``eps_rel``.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NonFinite, ShapeMismatch
from .linalg import RidgeSystem, build_ridge, ridge_solve, svt
from .quat_core import (
    QuaternionMatrix,
    QuaternionVector,
    embed_columns,
    embed_matrix,
    embed_vector,
    frobenius_norm,
    unembed_matrix,
    unembed_vector,
)


def combine(dictionary: Sequence[QuaternionMatrix], x: QuaternionVector) -> QuaternionMatrix:
    """Linear combination ``A(x) = sum_l A_l x_l`` computed term by term.

    Coefficients multiply from the right so that ``vec(A(x)) = H x`` with
    ``H = (vec(A_1), ..., vec(A_L))``; this is what the embedded form
    ``P(H) Q(x)`` computes and what both solvers use.
    """
    if len(dictionary) != len(x):
        raise ShapeMismatch(f"{len(dictionary)} dictionary atoms but {len(x)} coefficients")
    if not dictionary:
        raise ShapeMismatch("empty dictionary")
    shape = dictionary[0].shape
    out = QuaternionMatrix.zeros(*shape)
    for a, xl in zip(dictionary, (x[i] for i in range(len(x)))):
        if a.shape != shape:
            raise ShapeMismatch(f"dictionary atom of shape {a.shape}, expected {shape}")
        out = out + a.right_scale(xl)
    return out


class Dictionary:
    """Training images with their embedded design matrix ``P(H)``.

    Ridge factorizations are cached per regularizer value, so one instance can
    serve many queries (and many threads) with a single factorization.
    """

    def __init__(self, images: Sequence[QuaternionMatrix]):
        images = list(images)
        if not images:
            raise ShapeMismatch("dictionary needs at least one image")
        shape = images[0].shape
        for a in images:
            if a.shape != shape:
                raise ShapeMismatch(f"image of shape {a.shape}, expected {shape}")
        self.images = images
        self.image_shape = shape
        self.design = embed_columns(images)
        self._ridge: dict[float, RidgeSystem] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.images)

    def ridge(self, reg: float) -> RidgeSystem:
        with self._lock:
            sys = self._ridge.get(reg)
            if sys is None:
                sys = self._ridge[reg] = build_ridge(self.design, reg)
            return sys

    def combine(self, x: QuaternionVector) -> QuaternionMatrix:
        if len(x) != len(self):
            raise ShapeMismatch(f"{len(self)} atoms but {len(x)} coefficients")
        v = unembed_vector(self.design @ embed_vector(x))
        return QuaternionMatrix.unvec(v, *self.image_shape)

    def fit(self, target: QuaternionMatrix, reg: float) -> QuaternionVector:
        """Ridge fit ``argmin ||H x - vec(target)||^2 + reg ||x||^2``."""
        if target.shape != self.image_shape:
            raise ShapeMismatch(f"target of shape {target.shape}, expected {self.image_shape}")
        sol = ridge_solve(self.ridge(reg), embed_vector(target.vec()))
        return unembed_vector(sol)


def as_dictionary(dictionary) -> Dictionary:
    return dictionary if isinstance(dictionary, Dictionary) else Dictionary(dictionary)


@dataclass(frozen=True)
class NqmrConfig:
    lam: float = 1.0
    mu: float = 1.0
    eps_rel: float = 1e-4
    max_iter: int = 100

    def __post_init__(self):
        if not (self.lam > 0 and self.mu > 0 and self.eps_rel > 0):
            raise ValueError(f"lam, mu and eps_rel must be positive: {self}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")


@dataclass
class NqmrState:
    x: QuaternionVector
    E: QuaternionMatrix
    Lambda: QuaternionMatrix
    Ax: QuaternionMatrix
    dual: float = 0.0
    iteration: int = 0


@dataclass
class NqmrResult:
    x: QuaternionVector
    trace: list[float]
    state: NqmrState = field(repr=False)
    eps_rel: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def converged(self) -> bool:
        return stopped_by_rule(self.trace, self.eps_rel)


def stopped_by_rule(trace: Sequence[float], eps_rel: float) -> bool:
    """True if the last two residuals in ``trace`` differ by less than ``eps_rel``."""
    return len(trace) >= 2 and abs(trace[-2] - trace[-1]) < eps_rel


def check_finite(*mats) -> None:
    for m in mats:
        data = m.data if hasattr(m, "data") else m
        if not np.all(np.isfinite(data)):
            raise NonFinite("solver iterate contains NaN or Inf")


def solve_nqmr(
    dictionary,
    b: QuaternionMatrix,
    cfg: NqmrConfig = NqmrConfig(),
    callback: Optional[Callable[[NqmrState, QuaternionMatrix], None]] = None,
) -> NqmrResult:
    """Run the NQMR ADMM iteration for query ``b``.

    ``callback(state, svt_target)`` is invoked after every iteration with the
    new state and the quaternion matrix that was thresholded to produce
    ``state.E``.
    """
    d = as_dictionary(dictionary)
    if b.shape != d.image_shape:
        raise ShapeMismatch(f"query of shape {b.shape}, expected {d.image_shape}")
    mu = cfg.mu
    reg = cfg.lam / mu
    d.ridge(reg)

    m, n = b.shape
    E = QuaternionMatrix.zeros(m, n)
    Lam = QuaternionMatrix.zeros(m, n)
    trace: list[float] = []
    state = None
    for it in range(1, cfg.max_iter + 1):
        x = d.fit(b + E - Lam / mu, reg)
        Ax = d.combine(x)
        target = Ax - b + Lam / mu
        E = unembed_matrix(svt(embed_matrix(target), 1.0 / mu))
        resid = Ax - b - E
        Lam = Lam + resid * mu
        check_finite(x, E, Lam)
        dual = frobenius_norm(resid)
        trace.append(dual)
        state = NqmrState(x=x, E=E, Lambda=Lam, Ax=Ax, dual=dual, iteration=it)
        if callback is not None:
            callback(state, target)
        if stopped_by_rule(trace, cfg.eps_rel):
            break
    return NqmrResult(x=state.x, trace=trace, state=state, eps_rel=cfg.eps_rel)
