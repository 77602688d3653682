"""Class-dependent reconstruction-error classification for NQMR and R-NQMR."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import ShapeMismatch
from .linalg import pad_weights
from .nqmr import Dictionary, NqmrConfig, solve_nqmr
from .quat_core import QuaternionMatrix, QuaternionVector, nuclear_norm, quaternion_singular_values
from .rnqmr import RnqmrConfig, final_spectrum_weights, solve_rnqmr


class LabeledDictionary(Dictionary):
    """Training images with class ids in ``1..n_classes``."""

    def __init__(self, images: Sequence[QuaternionMatrix], labels: Sequence[int],
                 n_classes: int | None = None):
        super().__init__(images)
        labels = np.asarray(labels, dtype=int)
        if labels.shape != (len(self.images),):
            raise ShapeMismatch(f"{len(self.images)} images but {labels.size} labels")
        k = int(labels.max()) if n_classes is None else int(n_classes)
        if k < 1 or labels.min() < 1 or labels.max() > k:
            raise ValueError(f"class ids must lie in 1..{k}")
        if len(self.images) < k:
            raise ValueError("need at least one training image per class slot (L >= K)")
        self.labels = labels
        self.n_classes = k


@dataclass
class ClassificationResult:
    predicted: int
    per_class_error: np.ndarray
    coefficients: QuaternionVector
    iterations: int = 0
    trace: list | None = None


def restrict_coeffs(x: QuaternionVector, k: int, labels) -> QuaternionVector:
    """Copy of ``x`` keeping only the entries whose label is ``k``."""
    labels = np.asarray(labels)
    if labels.shape != (len(x),):
        raise ShapeMismatch(f"{len(x)} coefficients but {labels.size} labels")
    return QuaternionVector(x.data * (labels == k))


def argmin_class(errors) -> int:
    """1-based index of the smallest error; ties go to the lowest class id."""
    return int(np.argmin(np.asarray(errors))) + 1


def residual_images(d: LabeledDictionary, x: QuaternionVector):
    """Yield ``A(x) - A(delta_k(x))`` for k = 1..K."""
    full = d.combine(x)
    for k in range(1, d.n_classes + 1):
        yield full - d.combine(restrict_coeffs(x, k, d.labels))


def weighted_nuclear_norm(q: QuaternionMatrix, weights) -> float:
    s = quaternion_singular_values(q)
    return float(np.dot(pad_weights(weights, s.size), s))


def classify_nqmr(d: LabeledDictionary, b: QuaternionMatrix, cfg: NqmrConfig = NqmrConfig()) -> ClassificationResult:
    res = solve_nqmr(d, b, cfg)
    errors = np.array([nuclear_norm(r) for r in residual_images(d, res.x)])
    return ClassificationResult(argmin_class(errors), errors, res.x, res.iterations, res.trace)


def classify_rnqmr(
    d: LabeledDictionary,
    b: QuaternionMatrix,
    cfg: RnqmrConfig = RnqmrConfig(),
    final_weights: Literal["last", "recompute"] = "last",
) -> ClassificationResult:
    """Weighted-nuclear-norm reconstruction errors with the solver's final weights.

    ``final_weights="last"`` uses the weights of the last E0 step;
    ``"recompute"`` derives them from the final E0 spectrum instead.
    """
    res = solve_rnqmr(d, b, cfg)
    if final_weights == "last":
        w = res.weights
    elif final_weights == "recompute":
        w = final_spectrum_weights(res, cfg)
    else:
        raise ValueError(f"unknown final_weights mode {final_weights!r}")
    errors = np.array([weighted_nuclear_norm(r, w) for r in residual_images(d, res.x)])
    return ClassificationResult(argmin_class(errors), errors, res.x, res.iterations, res.trace)
