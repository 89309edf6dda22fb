"""Dense complex linear algebra used by the simulator.

Matrices are plain ``numpy`` arrays. Hermitian checks use the max-entry norm;
:func:`op_distance` is the only place a spectral norm is used.
"""
from __future__ import annotations

from functools import reduce

import numpy as np

from .errors import DimMismatch, NotHermitian

HERMITIAN_TOL = 1e-12


def kron(*mats: np.ndarray) -> np.ndarray:
    """Kronecker product of two or more matrices, left to right."""
    if not mats:
        raise ValueError("kron needs at least one operand")
    return reduce(np.kron, (np.asarray(m) for m in mats))


def hermitian_defect(h: np.ndarray) -> float:
    h = np.asarray(h)
    return float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0


def check_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``h`` as a complex array or raise :class:`NotHermitian`.

    The tolerance is applied relative to ``max(1, max|h_ij|)`` so that
    Hamiltonians with entries of order 10^2 s^-1 are not rejected for
    rounding noise.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise NotHermitian(f"expected a square matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise NotHermitian("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    if hermitian_defect(h) > tol * scale:
        raise NotHermitian(f"max |h - h^dagger| = {hermitian_defect(h):.3e}")
    return h


def eig_hermitian(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending, real) and orthonormal eigenvector columns."""
    h = check_hermitian(h)
    # symmetrize so LAPACK sees an exactly Hermitian input
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    return w, v


def expm_ih_t(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i h t)`` via the Hermitian eigendecomposition of ``h``."""
    w, v = eig_hermitian(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def op_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Spectral-norm distance ``||a - b||_2``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimMismatch(f"{a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a - b, 2))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def max_entry(a: np.ndarray) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def cluster_eigenvalues(w: np.ndarray, tol: float) -> list[np.ndarray]:
    """Group indices of sorted eigenvalues whose neighbour gaps are below ``tol``."""
    if len(w) == 0:
        return []
    breaks = np.flatnonzero(np.diff(w) > tol) + 1
    return np.split(np.arange(len(w)), breaks)


def batched_eigh(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a stack of Hermitian matrices, shape ``(..., d, d)``."""
    return np.linalg.eigh(h)


def apply_eig_propagator(w: np.ndarray, v: np.ndarray, psi: np.ndarray,
                         t: float) -> np.ndarray:
    """Apply ``V exp(-i w t) V^dagger`` to a batch of state vectors ``psi``.

    ``w`` has shape ``(B, d)`` or ``(d,)``, ``v`` ``(B, d, d)`` or ``(d, d)``
    and ``psi`` ``(B, d)``.
    """
    coeff = np.einsum("...ji,...j->...i", v.conj(), psi)
    coeff = coeff * np.exp(-1j * w * t)
    return np.einsum("...ij,...j->...i", v, coeff)
