import numpy as np
import pytest

from stdstate.gates import Cnot, SingleQubit, TwoLevel


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def bits_of(index, n):
    """(x1, ..., xn) for a basis index, q1 = least significant bit."""
    return tuple((index >> j) & 1 for j in range(n))


def index_of(bits):
    return sum(b << j for j, b in enumerate(bits))


def dense_matrix(gate, n):
    """Brute-force 2^n x 2^n matrix of a gate, built entry by entry."""
    dim = 1 << n
    m = np.zeros((dim, dim), dtype=complex)
    if isinstance(gate, TwoLevel):
        m[:, :] = np.eye(dim)
        i, j = gate.index_i, gate.index_j
        m[i, i], m[i, j] = gate.matrix[0, 0], gate.matrix[0, 1]
        m[j, i], m[j, j] = gate.matrix[1, 0], gate.matrix[1, 1]
        return m
    if isinstance(gate, SingleQubit):
        controls, target, u = (), gate.target, gate.matrix
    elif isinstance(gate, Cnot):
        controls, target, u = ((gate.control, 1),), gate.target, np.array([[0, 1], [1, 0]])
    else:
        controls, target, u = gate.controls, gate.target, gate.matrix
    for col in range(dim):
        xs = list(bits_of(col, n))
        if any(xs[q - 1] != b for q, b in controls):
            m[col, col] = 1.0
            continue
        for out_bit in (0, 1):
            ys = list(xs)
            ys[target - 1] = out_bit
            m[index_of(ys), col] += u[out_bit, xs[target - 1]]
    return m


def recursive_minimal_amplitude(pairs, bits):
    """Amplitude of the minimal state by unrolling 'U_k on q_k, then CNOT k -> k-1'.

    ``pairs[k-2]`` is the (alpha, beta) introduced on q_k. After step k the
    amplitude of (x1..xk) equals the step-(k-1) amplitude at
    (x1, .., x_{k-1} ^ x_k) times the x_k component of the pair.
    """
    k = len(bits)
    if k == 1:
        return 1.0 + 0j if bits[0] == 0 else 0j
    prev = list(bits[:-1])
    prev[-1] ^= bits[-1]
    return recursive_minimal_amplitude(pairs, prev) * pairs[k - 2][bits[-1]]


_ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance():
    """``acceptance(num, ok, detail)`` records one criterion's outcome."""
    def record(num, ok, detail=""):
        _ACCEPTANCE[num] = (bool(ok), detail)
        print(f"criterion {num}: {'PASS' if ok else 'FAIL'} {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE, key=lambda k: (str(k).isdigit() is False, str(k).zfill(3))):
        ok, detail = _ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
