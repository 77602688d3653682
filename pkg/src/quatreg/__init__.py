"""Nuclear-norm quaternion matrix regression for color image classification."""
from .classify import ClassificationResult, LabeledDictionary, classify_nqmr, classify_rnqmr, restrict_coeffs
from .nqmr import Dictionary, NqmrConfig, combine, solve_nqmr
from .quat_core import Quaternion, QuaternionMatrix, QuaternionVector
from .rnqmr import RnqmrConfig, solve_rnqmr

__all__ = [
    "ClassificationResult", "Dictionary", "LabeledDictionary", "NqmrConfig", "Quaternion",
    "QuaternionMatrix", "QuaternionVector", "RnqmrConfig", "classify_nqmr", "classify_rnqmr",
    "combine", "restrict_coeffs", "solve_nqmr", "solve_rnqmr",
]
