"""Quaternion scalars, vectors and matrices, and their real embeddings.

A quaternion matrix is stored as a real array of shape ``(4, M, N)`` holding
the components ``Q0, Q1, Q2, Q3`` of ``Q0 + Q1 i + Q2 j + Q3 k``. A quaternion
vector is a ``(4, N)`` array. Three real embeddings are provided:

* ``embed_matrix`` (P): ``(4, M, N)`` -> ``4M x 4N`` left-multiplication form
* ``embed_vector`` (Q): ``(4, N)`` -> stacked ``4N`` vector
* ``channel_stack`` (R): ``(4, M, N)`` -> ``4 x MN``, one column per pixel

``vec`` is column-major throughout, so pixel ``(m, n)`` of an ``M x N`` image
sits at flat index ``n * M + m``.

Spectral quantities of quaternion matrices are never computed directly. The
singular values of ``embed_matrix(Q)`` are those of ``Q``, each repeated four
times, so everything goes through the real embedding.

Note on the Frobenius constant: every component appears in four blocks of the
embedding, so ``||P(Q)||_F == 2 ||Q||_F``. A factor of 4 is sometimes quoted
for this identity; it is wrong, but harmless for any minimizer since it is a
positive constant.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch

# Sign/component layout of the 4x4 block pattern of P(Q): entry (r, c) is
# (sign, component index) for block row r, block column c.
_P_BLOCKS = (
    ((1, 0), (-1, 1), (-1, 2), (-1, 3)),
    ((1, 1), (1, 0), (-1, 3), (1, 2)),
    ((1, 2), (1, 3), (1, 0), (-1, 1)),
    ((1, 3), (-1, 2), (1, 1), (1, 0)),
)


@dataclass(frozen=True)
class Quaternion:
    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return quat_mul(self, other)
        return Quaternion(self.w * other, self.x * other, self.y * other, self.z * other)

    def __rmul__(self, other):
        return Quaternion(self.w * other, self.x * other, self.y * other, self.z * other)

    def __add__(self, other: Quaternion) -> Quaternion:
        return Quaternion(self.w + other.w, self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: Quaternion) -> Quaternion:
        return Quaternion(self.w - other.w, self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> Quaternion:
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def conj(self) -> Quaternion:
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def modulus(self) -> float:
        return float(np.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2))

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, a) -> Quaternion:
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


def quat_mul(p: Quaternion, q: Quaternion) -> Quaternion:
    """Hamilton product ``p q``."""
    return Quaternion(
        p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
        p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
        p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
        p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w,
    )


def _hamilton(p: np.ndarray, q: np.ndarray, contract) -> np.ndarray:
    # p, q: component-first arrays; `contract(a, b)` is the real product used
    # between components (elementwise or matmul).
    p0, p1, p2, p3 = p
    q0, q1, q2, q3 = q
    c = contract
    return np.stack([
        c(p0, q0) - c(p1, q1) - c(p2, q2) - c(p3, q3),
        c(p0, q1) + c(p1, q0) + c(p2, q3) - c(p3, q2),
        c(p0, q2) - c(p1, q3) + c(p2, q0) + c(p3, q1),
        c(p0, q3) + c(p1, q2) - c(p2, q1) + c(p3, q0),
    ])


class QuaternionVector:
    """Length-N quaternion vector backed by a ``(4, N)`` real array."""

    __slots__ = ("data",)

    def __init__(self, data):
        data = np.array(data, dtype=float)
        if data.ndim != 2 or data.shape[0] != 4:
            raise ShapeMismatch(f"expected (4, N) component array, got {data.shape}")
        data.flags.writeable = False
        self.data = data

    @classmethod
    def zeros(cls, n: int) -> QuaternionVector:
        return cls(np.zeros((4, n)))

    @classmethod
    def from_real(cls, v) -> QuaternionVector:
        v = np.asarray(v, dtype=float)
        data = np.zeros((4, v.size))
        data[0] = v
        return cls(data)

    @classmethod
    def from_quaternions(cls, qs) -> QuaternionVector:
        return cls(np.array([q.as_array() for q in qs]).T.reshape(4, -1))

    def __len__(self) -> int:
        return self.data.shape[1]

    def __getitem__(self, i: int) -> Quaternion:
        return Quaternion.from_array(self.data[:, i])

    def __add__(self, other: QuaternionVector) -> QuaternionVector:
        return QuaternionVector(self.data + other.data)

    def __sub__(self, other: QuaternionVector) -> QuaternionVector:
        return QuaternionVector(self.data - other.data)

    def __mul__(self, c: float) -> QuaternionVector:
        return QuaternionVector(self.data * c)

    __rmul__ = __mul__

    def moduli(self) -> np.ndarray:
        return np.sqrt(np.sum(self.data**2, axis=0))

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.data**2)))

    def allclose(self, other: QuaternionVector, atol: float = 1e-8) -> bool:
        return self.data.shape == other.data.shape and np.allclose(self.data, other.data, rtol=0, atol=atol)

    def __repr__(self) -> str:
        return f"QuaternionVector(n={len(self)})"


class QuaternionMatrix:
    """Dense ``M x N`` quaternion matrix backed by a ``(4, M, N)`` real array."""

    __slots__ = ("data",)

    def __init__(self, data):
        data = np.array(data, dtype=float)
        if data.ndim != 3 or data.shape[0] != 4:
            raise ShapeMismatch(f"expected (4, M, N) component array, got {data.shape}")
        data.flags.writeable = False
        self.data = data

    @classmethod
    def zeros(cls, m: int, n: int) -> QuaternionMatrix:
        return cls(np.zeros((4, m, n)))

    @classmethod
    def from_real(cls, a) -> QuaternionMatrix:
        a = np.atleast_2d(np.asarray(a, dtype=float))
        data = np.zeros((4,) + a.shape)
        data[0] = a
        return cls(data)

    @classmethod
    def from_components(cls, q0, q1, q2, q3) -> QuaternionMatrix:
        return cls(np.stack([q0, q1, q2, q3]).astype(float))

    @classmethod
    def from_rgb(cls, rgb) -> QuaternionMatrix:
        """Pure quaternion matrix ``R i + G j + B k`` from an ``(M, N, 3)`` array."""
        rgb = np.asarray(rgb, dtype=float)
        m, n, _ = rgb.shape
        data = np.zeros((4, m, n))
        data[1:] = np.moveaxis(rgb, -1, 0)
        return cls(data)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[1], self.data.shape[2]

    @property
    def rows(self) -> int:
        return self.data.shape[1]

    @property
    def cols(self) -> int:
        return self.data.shape[2]

    def __getitem__(self, idx) -> Quaternion:
        m, n = idx
        return Quaternion.from_array(self.data[:, m, n])

    def __add__(self, other: QuaternionMatrix) -> QuaternionMatrix:
        return QuaternionMatrix(self.data + other.data)

    def __sub__(self, other: QuaternionMatrix) -> QuaternionMatrix:
        return QuaternionMatrix(self.data - other.data)

    def __neg__(self) -> QuaternionMatrix:
        return QuaternionMatrix(-self.data)

    def __mul__(self, c: float) -> QuaternionMatrix:
        return QuaternionMatrix(self.data * c)

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> QuaternionMatrix:
        return QuaternionMatrix(self.data / c)

    def __matmul__(self, other):
        """Quaternion matrix product (matrix @ matrix or matrix @ vector)."""
        if isinstance(other, QuaternionVector):
            if self.cols != len(other):
                raise ShapeMismatch(f"{self.shape} @ vector of length {len(other)}")
            return QuaternionVector(_hamilton(self.data, other.data, np.matmul))
        if self.cols != other.rows:
            raise ShapeMismatch(f"{self.shape} @ {other.shape}")
        return QuaternionMatrix(_hamilton(self.data, other.data, np.matmul))

    def left_scale(self, q: Quaternion) -> QuaternionMatrix:
        """``q * Q`` with the quaternion scalar on the left."""
        qa = q.as_array()[:, None, None] * np.ones((1,) + self.shape)
        return QuaternionMatrix(_hamilton(qa, self.data, np.multiply))

    def right_scale(self, q: Quaternion) -> QuaternionMatrix:
        """``Q * q`` with the quaternion scalar on the right."""
        qa = q.as_array()[:, None, None] * np.ones((1,) + self.shape)
        return QuaternionMatrix(_hamilton(self.data, qa, np.multiply))

    def conj(self) -> QuaternionMatrix:
        d = self.data.copy()
        d[1:] *= -1
        return QuaternionMatrix(d)

    @property
    def H(self) -> QuaternionMatrix:
        """Conjugate transpose."""
        return QuaternionMatrix(np.transpose(self.conj().data, (0, 2, 1)))

    def is_pure(self, atol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.data[0]) <= atol))

    def moduli(self) -> np.ndarray:
        return np.sqrt(np.sum(self.data**2, axis=0))

    def vec(self) -> QuaternionVector:
        return QuaternionVector(self.data.transpose(0, 2, 1).reshape(4, -1))

    @classmethod
    def unvec(cls, v: QuaternionVector, m: int, n: int) -> QuaternionMatrix:
        if len(v) != m * n:
            raise ShapeMismatch(f"vector of length {len(v)} cannot be reshaped to {m}x{n}")
        return cls(v.data.reshape(4, n, m).transpose(0, 2, 1))

    def to_rgb(self) -> np.ndarray:
        return np.moveaxis(self.data[1:], 0, -1).copy()

    def allclose(self, other: QuaternionMatrix, atol: float = 1e-8) -> bool:
        return self.data.shape == other.data.shape and np.allclose(self.data, other.data, rtol=0, atol=atol)

    def __repr__(self) -> str:
        return f"QuaternionMatrix({self.rows}x{self.cols})"


def embed_matrix(q: QuaternionMatrix) -> np.ndarray:
    """Real ``4M x 4N`` embedding ``P(Q)``.

    >>> embed_matrix(QuaternionMatrix([[[1]], [[2]], [[3]], [[4]]])).astype(int).tolist()
    [[1, -2, -3, -4], [2, 1, -4, 3], [3, 4, 1, -2], [4, -3, 2, 1]]
    """
    comps = q.data
    return np.block([[sign * comps[c] for sign, c in row] for row in _P_BLOCKS])


def unembed_matrix(r: np.ndarray) -> QuaternionMatrix:
    """Inverse of ``embed_matrix`` as a structure-preserving projection.

    Each component is the signed average of its four occurrences in ``r``,
    i.e. the orthogonal projection onto the range of P. Exact on that range.
    """
    r = np.asarray(r, dtype=float)
    if r.ndim != 2 or r.shape[0] % 4 or r.shape[1] % 4:
        raise ShapeMismatch(f"embedded matrix must be 4M x 4N, got {r.shape}")
    m, n = r.shape[0] // 4, r.shape[1] // 4
    out = np.zeros((4, m, n))
    for br, row in enumerate(_P_BLOCKS):
        for bc, (sign, c) in enumerate(row):
            out[c] += sign * r[br * m:(br + 1) * m, bc * n:(bc + 1) * n]
    return QuaternionMatrix(out / 4.0)


def embed_vector(q: QuaternionVector) -> np.ndarray:
    """Stack ``(q0, q1, q2, q3)`` into a real vector of length ``4N``."""
    return q.data.reshape(-1).copy()


def unembed_vector(v) -> QuaternionVector:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size % 4:
        raise ShapeMismatch(f"embedded vector length must be a multiple of 4, got {v.shape}")
    return QuaternionVector(v.reshape(4, -1))


def channel_stack(q: QuaternionMatrix) -> np.ndarray:
    """``4 x MN`` matrix whose row t is ``vec(Q_t)`` (R operator)."""
    return q.vec().data.copy()


def channel_unstack(r, m: int, n: int) -> QuaternionMatrix:
    r = np.asarray(r, dtype=float)
    if r.shape != (4, m * n):
        raise ShapeMismatch(f"expected (4, {m * n}), got {r.shape}")
    return QuaternionMatrix.unvec(QuaternionVector(r), m, n)


def embed_columns(columns: list[QuaternionMatrix]) -> np.ndarray:
    """``P(H)`` for ``H = (vec(A_1), ..., vec(A_L))``, shape ``4MN x 4L``."""
    h = np.stack([a.vec().data for a in columns], axis=-1)  # (4, MN, L)
    return embed_matrix(QuaternionMatrix(h))


def l1_norm(q: QuaternionMatrix) -> float:
    return float(np.sum(q.moduli()))


def frobenius_norm(q: QuaternionMatrix) -> float:
    return float(np.sqrt(np.sum(q.data**2)))


def quaternion_singular_values(q: QuaternionMatrix) -> np.ndarray:
    """Singular values of ``Q``: one representative per quadruple of ``P(Q)``'s spectrum."""
    s = np.linalg.svd(embed_matrix(q), compute_uv=False)
    return s[::4]


def nuclear_norm(q: QuaternionMatrix) -> float:
    s = np.linalg.svd(embed_matrix(q), compute_uv=False)
    return float(np.sum(s) / 4.0)
