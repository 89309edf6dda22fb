"""Zeno-subspace analysis for coupling Hamiltonians.

A coupling ``h_c = sum_n eta_n P_n`` splits the Hilbert space into its
eigenspaces. Under strong coupling (or frequent projective measurement)
dynamics generated by another Hamiltonian ``h`` is confined to these blocks
and reduces to ``sum_n P_n h P_n``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, NotProjector, SystemTooSmall
from .numerics import check_hermitian, cluster_eigenvalues, eig_hermitian, expm_ih_t, op_distance
from .operators import CouplingKind, basis_state, h_coupling

PROJECTOR_TOL = 1e-9


@dataclass
class ProjectorDecomposition:
    """Eigenvalues ``eta_n`` (strictly increasing) with their eigenprojectors."""

    projectors: list[tuple[float, np.ndarray]]
    source_dim: int

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([eta for eta, _ in self.projectors])

    def ranks(self) -> list[int]:
        return [int(round(np.trace(p).real)) for _, p in self.projectors]

    def block_of(self, vec: np.ndarray) -> int:
        """Index of the eigenspace carrying most of the weight of ``vec``."""
        weights = [float(np.real(vec.conj() @ p @ vec)) for _, p in self.projectors]
        return int(np.argmax(weights))


@dataclass
class CompatibilityReport:
    is_compatible: bool
    ghz_eigenvalue: float
    spectral_gap: float
    leaked_dimension: int

    def to_dict(self) -> dict:
        return {"is_compatible": bool(self.is_compatible),
                "ghz_eigenvalue": float(self.ghz_eigenvalue),
                "spectral_gap": float(self.spectral_gap),
                "leaked_dimension": int(self.leaked_dimension)}


def eigenprojectors(h_c: np.ndarray, degeneracy_tol: float | None = None) -> ProjectorDecomposition:
    """Cluster the spectrum of ``h_c`` and build one projector per cluster.

    The default tolerance is ``1e-8 * ||h_c||`` (at least 1e-12 absolute).
    """
    h_c = check_hermitian(h_c)
    w, v = eig_hermitian(h_c)
    if degeneracy_tol is None:
        scale = float(np.max(np.abs(w))) if w.size else 0.0
        degeneracy_tol = max(1e-8 * scale, 1e-12)
    projectors = []
    for idx in cluster_eigenvalues(w, degeneracy_tol):
        vs = v[:, idx]
        projectors.append((float(np.mean(w[idx])), vs @ vs.conj().T))
    return ProjectorDecomposition(projectors=projectors, source_dim=h_c.shape[0])


def zeno_hamiltonian(h: np.ndarray, decomp: ProjectorDecomposition) -> np.ndarray:
    """Block-diagonal part ``sum_n P_n h P_n``."""
    h = check_hermitian(h)
    if h.shape[0] != decomp.source_dim:
        raise DimMismatch(f"h has dim {h.shape[0]}, decomposition has {decomp.source_dim}")
    out = np.zeros_like(h)
    for _, p in decomp.projectors:
        out += p @ h @ p
    return out


def ghz_projector(n: int) -> np.ndarray:
    """``|0...0><0...0| + |1...1><1...1|``."""
    dim = 2 ** n
    p = np.zeros((dim, dim), dtype=complex)
    p[0, 0] = p[-1, -1] = 1.0
    return p


def ghz_compatibility(kind: CouplingKind | str, n_qubits: int) -> CompatibilityReport:
    """Does the coupling hold ``|0...0>`` and ``|1...1>`` in a private 2-d eigenspace?"""
    if n_qubits < 2:
        raise SystemTooSmall("GHZ compatibility needs at least 2 qubits")
    decomp = eigenprojectors(h_coupling(n_qubits, kind))
    zeros = basis_state(n_qubits, "0" * n_qubits)
    ones = basis_state(n_qubits, "1" * n_qubits)
    a, b = decomp.block_of(zeros), decomp.block_of(ones)
    eta, p = decomp.projectors[a]
    # both basis states must be eigenvectors, not just mostly inside a block
    exact = all(abs(np.real(s.conj() @ decomp.projectors[k][1] @ s) - 1.0) < PROJECTOR_TOL
                for s, k in ((zeros, a), (ones, b)))
    rank = decomp.ranks()[a]
    leaked = max(rank - 2, 0) if a == b else rank - 1
    others = np.delete(decomp.eigenvalues, a)
    gap = float(np.min(np.abs(others - eta))) if others.size else float("inf")
    return CompatibilityReport(is_compatible=bool(exact and a == b and rank == 2),
                               ghz_eigenvalue=eta, spectral_gap=gap,
                               leaked_dimension=leaked)


def _opt_projector(h_c: np.ndarray) -> tuple[np.ndarray, ProjectorDecomposition]:
    decomp = eigenprojectors(h_c)
    n = int(round(np.log2(decomp.source_dim)))
    return decomp.projectors[decomp.block_of(basis_state(n, "0" * n))][1], decomp


def strong_coupling_error(h: np.ndarray, h_c: np.ndarray, k: float, t: float) -> float:
    """Within-subspace distance between true and Zeno-limit evolution.

    ``P_opt`` is the eigenprojector of ``h_c`` that contains ``|0...0>``.
    Both sides carry the same ``k * h_c`` so the fast phases cancel.
    """
    h = check_hermitian(h)
    h_c = check_hermitian(h_c)
    if h.shape != h_c.shape:
        raise DimMismatch(f"{h.shape} vs {h_c.shape}")
    if k <= 0:
        raise ValueError("k must be > 0")
    p, decomp = _opt_projector(h_c)
    hz = zeno_hamiltonian(h, decomp)
    u_true = expm_ih_t(h + k * h_c, t)
    u_zeno = expm_ih_t(hz + k * h_c, t)
    return op_distance(p @ u_true @ p, p @ u_zeno @ p)


def _range_basis(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=complex)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise NotProjector(f"expected a square matrix, got shape {p.shape}")
    if np.max(np.abs(p - p.conj().T)) > PROJECTOR_TOL or np.max(np.abs(p @ p - p)) > PROJECTOR_TOL:
        raise NotProjector("p is not a Hermitian idempotent")
    w, v = np.linalg.eigh(p)
    return v[:, w > 0.5]


def projective_zeno_error(h: np.ndarray, p: np.ndarray, t: float, n_meas: int) -> float:
    """Distance between ``[P U(t/n) P]^n`` and ``exp(-i PHP t)`` on the range of ``p``."""
    if n_meas < 1:
        raise ValueError("n_meas must be >= 1")
    q = _range_basis(p)
    h = check_hermitian(h)
    if h.shape != p.shape:
        raise DimMismatch(f"{h.shape} vs {np.shape(p)}")
    # on the range of p, P U P is just the compressed block q^dag U q
    step = q.conj().T @ expm_ih_t(h, t / n_meas) @ q
    v_n = np.linalg.matrix_power(step, n_meas)
    target = expm_ih_t(q.conj().T @ h @ q, t)
    return op_distance(v_n, target)
