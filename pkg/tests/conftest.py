import numpy as np
import pytest

from quatreg.quat_core import QuaternionMatrix, QuaternionVector

# criterion id -> (passed, detail), filled by test_acceptance
ACCEPTANCE_LINES: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_qmatrix(rng, m, n, pure=False):
    data = rng.standard_normal((4, m, n))
    if pure:
        data[0] = 0
    return QuaternionMatrix(data)


def random_qvector(rng, n):
    return QuaternionVector(rng.standard_normal((4, n)))


def complex_adjoint(q: QuaternionMatrix) -> np.ndarray:
    """2M x 2N complex representation; independent route to quaternion singular values."""
    a = q.data[0] + 1j * q.data[1]
    b = q.data[2] + 1j * q.data[3]
    return np.block([[a, b], [-b.conj(), a.conj()]])


def quaternion_svals_oracle(q: QuaternionMatrix) -> np.ndarray:
    # each quaternion singular value appears twice in the complex adjoint
    return np.linalg.svd(complex_adjoint(q), compute_uv=False)[::2]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE_LINES, key=lambda c: int(c.split()[0])):
        ok, detail = ACCEPTANCE_LINES[cid]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {detail}")
