"""Exact linear algebra for one- and two-qubit Hilbert spaces.

Vectors and operators are plain complex ``numpy`` arrays. Two-qubit objects
use the ancilla as the left (slow) tensor factor, so the basis order is::

    |0>_a|0>_s, |0>_a|1>_s, |1>_a|0>_s, |1>_a|1>_s

Everything here is pure; nothing mutates its inputs.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgument

HERMITIAN_ATOL = 1e-12

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

for _m in (I2, SIGMA_X, SIGMA_Y, SIGMA_Z):
    _m.setflags(write=False)


def ket(*amplitudes) -> np.ndarray:
    """Column-free complex vector from amplitudes (dimension 2 or 4)."""
    v = np.asarray(amplitudes, dtype=complex).ravel()
    if v.size not in (2, 4):
        raise InvalidArgument(f"vector dimension must be 2 or 4, got {v.size}")
    return v


def basis(index: int, dim: int = 2) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def as_vector(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex)
    if v.ndim != 1 or v.size not in (2, 4):
        raise InvalidArgument(f"expected a vector of dimension 2 or 4, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidArgument("vector has non-finite entries")
    return v


def as_operator(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 4):
        raise InvalidArgument(f"expected a 2x2 or 4x4 operator, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidArgument("operator has non-finite entries")
    return m


def hermiticity_defect(a) -> float:
    """Largest entrywise |A - A^dagger|."""
    m = as_operator(a)
    return float(np.max(np.abs(m - m.conj().T)))


def as_hermitian(a, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Validate ``a`` as Hermitian and return it as a complex array."""
    m = as_operator(a)
    defect = hermiticity_defect(m)
    if defect > atol:
        raise InvalidArgument(f"operator is not Hermitian (max |A - A^dag| = {defect:.3e})")
    return m


def is_normalized(psi, atol: float = 1e-12) -> bool:
    v = as_vector(psi)
    return abs(np.vdot(v, v).real - 1.0) <= atol


def normalize(psi) -> np.ndarray:
    v = as_vector(psi)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise InvalidArgument("cannot normalize the zero vector")
    return v / n


def tensor(a, b) -> np.ndarray:
    """Kronecker product ``a (x) b`` of two 2x2 operators (or two 2-vectors).

    The left factor is the ancilla and carries the slow index.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.shape not in ((2, 2), (2,)):
        raise InvalidArgument(f"tensor expects two 2x2 operators or two 2-vectors, got {a.shape} and {b.shape}")
    return np.kron(a, b)


def ry(theta: float) -> np.ndarray:
    """Rotation about the y axis, exp(-i theta sigma_y / 2)."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def eig_hermitian(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ascending real eigenvalues and a unitary matrix whose columns are
    the matching eigenvectors. The phase of each eigenvector is arbitrary and
    degenerate eigenvalues carry no ordering guarantee between their vectors.
    """
    m = as_hermitian(h)
    # Symmetrize so round-off below the tolerance cannot leak into the spectrum.
    m = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(m)
    return w, v


def propagator(h, t: float) -> np.ndarray:
    """exp(-i h t) built from the spectral decomposition."""
    if not np.isfinite(t):
        raise InvalidArgument(f"time must be finite, got {t}")
    w, v = eig_hermitian(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def propagate(h, psi0, t: float) -> np.ndarray:
    """Evolve ``psi0`` for time ``t`` under the time-independent Hamiltonian ``h``."""
    m = as_hermitian(h)
    v0 = as_vector(psi0)
    if v0.size != m.shape[0]:
        raise InvalidArgument(f"state dimension {v0.size} does not match operator dimension {m.shape[0]}")
    if not np.isfinite(t):
        raise InvalidArgument(f"time must be finite, got {t}")
    if t == 0.0:
        return v0.copy()
    w, v = eig_hermitian(m)
    return v @ (np.exp(-1j * w * t) * (v.conj().T @ v0))


def propagate_many(h, psi0, times) -> np.ndarray:
    """Evolve ``psi0`` to each time in ``times``; rows of the result follow ``times``.

    One eigendecomposition is shared across all times.
    """
    m = as_hermitian(h)
    v0 = as_vector(psi0)
    if v0.size != m.shape[0]:
        raise InvalidArgument(f"state dimension {v0.size} does not match operator dimension {m.shape[0]}")
    ts = np.atleast_1d(np.asarray(times, dtype=float))
    if not np.all(np.isfinite(ts)):
        raise InvalidArgument("times must be finite")
    w, v = eig_hermitian(m)
    coeffs = v.conj().T @ v0
    phases = np.exp(-1j * np.outer(ts, w))
    out = (phases * coeffs) @ v.T
    out[ts == 0.0] = v0
    return out


def postselect_ancilla0(big_psi) -> tuple[np.ndarray, float]:
    """Project a two-qubit state onto ancilla |0>.

    Returns the unnormalized sensor amplitudes and the probability of the
    ancilla outcome. A zero probability is a legal result.
    """
    v = as_vector(big_psi)
    if v.size != 4:
        raise InvalidArgument("postselection needs a two-qubit (4-dimensional) state")
    sensor = v[:2].copy()
    return sensor, float(np.vdot(sensor, sensor).real)


def ancilla1_component(big_psi) -> np.ndarray:
    v = as_vector(big_psi)
    if v.size != 4:
        raise InvalidArgument("expected a two-qubit (4-dimensional) state")
    return v[2:].copy()
