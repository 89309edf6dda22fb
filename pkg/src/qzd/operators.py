"""Builders for the qubit Hamiltonians, the GHZ circuit and observables.

Qubits are indexed from 1 (qubit 1 is the most significant tensor factor), so
the computational basis state ``|b_1 b_2 ... b_N>`` sits at the integer index
whose binary expansion is ``b_1 b_2 ... b_N``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange, ShapeMismatch, SystemTooSmall
from .numerics import kron

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI = {"x": SX, "y": SY, "z": SZ}

MAX_QUBITS = 10


@dataclass(frozen=True)
class SystemSpec:
    n_qubits: int
    max_qubits: int = MAX_QUBITS

    def __post_init__(self):
        if not 1 <= self.n_qubits <= self.max_qubits:
            raise ValueError(
                f"n_qubits must lie in [1, {self.max_qubits}], got {self.n_qubits}")

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits


class CouplingKind(str, enum.Enum):
    DIPOLAR = "dipolar"
    SCALAR = "scalar"
    ISING = "ising"
    QUADRATIC_ZEEMAN = "quadratic_zeeman"
    NONE = "none"


@dataclass(frozen=True)
class EncodingSpec:
    """Field to be estimated.

    ``omega`` is in s^-1 and enters the fringe as ``cos(N omega t)`` with no
    factor of 2 pi. In ``"ac"`` mode the field is ``A sin(omega t)``.
    """
    omega: float
    mode: str = "static"
    ac_amplitude: float = 0.0

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError("omega must be >= 0")
        if self.mode not in ("static", "ac"):
            raise ValueError(f"unknown encoding mode {self.mode!r}")


def _n(spec: SystemSpec | int) -> int:
    if isinstance(spec, SystemSpec):
        return spec.n_qubits
    return SystemSpec(int(spec)).n_qubits


def pauli_on(spec: SystemSpec | int, qubit_index: int, axis: str) -> np.ndarray:
    """``I x ... x sigma_axis x ... x I`` with the Pauli at ``qubit_index`` (1-based)."""
    n = _n(spec)
    if not 1 <= qubit_index <= n:
        raise IndexOutOfRange(f"qubit index {qubit_index} outside 1..{n}")
    factors = [I2] * n
    factors[qubit_index - 1] = PAULI[axis]
    return kron(*factors)


def collective(spec: SystemSpec | int, axis: str) -> np.ndarray:
    """Sum of single-qubit Paulis along ``axis``."""
    n = _n(spec)
    return sum(pauli_on(n, i, axis) for i in range(1, n + 1))


def z_spins(n: int) -> np.ndarray:
    """Diagonal of each ``sigma_z^i`` as rows of a ``(n, 2^n)`` array of +-1."""
    idx = np.arange(2 ** n)
    bits = (idx[None, :] >> (n - 1 - np.arange(n))[:, None]) & 1
    return 1.0 - 2.0 * bits


def h_encoding(spec: SystemSpec | int, enc: EncodingSpec) -> np.ndarray:
    """Static mode: ``(omega/2) sum_i sigma_z^i``. Ac mode: ``(1/2) sum_i sigma_z^i``.

    In ac mode the time-dependent prefactor comes from :func:`h_encoding_ac_coeff`.
    """
    sz = collective(spec, "z")
    if enc.mode == "ac":
        return 0.5 * sz
    return 0.5 * enc.omega * sz


def h_encoding_ac_coeff(enc: EncodingSpec, t, omega: float | None = None):
    """Scalar prefactor ``A sin(omega t)`` of the ac encoding operator."""
    w = enc.omega if omega is None else omega
    return enc.ac_amplitude * np.sin(w * np.asarray(t, dtype=float))


def _bond(n: int, a: int, axis: str) -> np.ndarray:
    return pauli_on(n, a, axis) @ pauli_on(n, a + 1, axis)


def h_coupling(spec: SystemSpec | int, kind: CouplingKind | str) -> np.ndarray:
    """Dimensionless coupling operator on an open chain; the caller applies K."""
    n = _n(spec)
    kind = CouplingKind(kind)
    dim = 2 ** n
    if kind is CouplingKind.NONE:
        return np.zeros((dim, dim), dtype=complex)
    if kind is CouplingKind.QUADRATIC_ZEEMAN:
        sz = collective(n, "z")
        return sz @ sz
    if n < 2:
        raise SystemTooSmall(f"{kind.value} coupling needs at least 2 qubits")
    h = np.zeros((dim, dim), dtype=complex)
    for a in range(1, n):
        zz = _bond(n, a, "z")
        if kind is CouplingKind.ISING:
            h += zz
            continue
        heis = _bond(n, a, "x") + _bond(n, a, "y") + zz
        h += heis if kind is CouplingKind.SCALAR else 3 * zz - heis
    return h


def h_nmr(mu, j) -> np.ndarray:
    """Liquid-state NMR Hamiltonian with chemical shifts ``mu`` and J-couplings ``j`` (Hz).

    ``sum_i pi mu_i Z_i + sum_{i<j} (pi/2) J_ij Z_i Z_j``.
    """
    mu = np.asarray(mu, dtype=float).ravel()
    j = np.asarray(j, dtype=float)
    n = len(mu)
    if n == 0 or j.shape != (n, n):
        raise ShapeMismatch(f"mu has {n} entries but J has shape {j.shape}")
    if not np.allclose(j, j.T):
        raise ShapeMismatch("J-coupling table must be symmetric")
    if np.any(np.diag(j) != 0):
        raise ShapeMismatch("J-coupling table must have a zero diagonal")
    zs = z_spins(n)
    diag = np.pi * mu @ zs
    for a in range(n):
        for b in range(a + 1, n):
            diag = diag + 0.5 * np.pi * j[a, b] * zs[a] * zs[b]
    return np.diag(diag).astype(complex)


def cnot(spec: SystemSpec | int, control: int, target: int) -> np.ndarray:
    n = _n(spec)
    zs = z_spins(n)
    dim = 2 ** n
    flip = 1 << (n - target)
    perm = np.arange(dim)
    ctrl_set = zs[control - 1] < 0
    perm[ctrl_set] ^= flip
    u = np.zeros((dim, dim), dtype=complex)
    u[perm, np.arange(dim)] = 1.0
    return u


def ghz_circuit(spec: SystemSpec | int) -> tuple[np.ndarray, np.ndarray]:
    """GHZ preparation unitary and the disentangling readout unitary.

    ``prep`` is a Hadamard on qubit 1 followed by the CNOT chain 1->2, 2->3, ...
    ``readout`` undoes the CNOT chain only, leaving the GHZ relative phase on
    qubit 1 where it is read as ``<sigma_x^1>``; equivalently
    ``readout^dagger sigma_x^1 readout`` is the parity ``sigma_x^{(x)N}``.
    """
    n = _n(spec)
    chain = np.eye(2 ** n, dtype=complex)
    for a in range(1, n):
        chain = cnot(n, a, a + 1) @ chain
    h1 = kron(HADAMARD, np.eye(2 ** (n - 1)))
    prep = chain @ h1
    readout = chain.conj().T
    return prep, readout


def ghz_state(n: int) -> np.ndarray:
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    return psi


def encoded_ghz(n: int, phase: float) -> np.ndarray:
    """``(|0..0> + e^{i phase} |1..1>)/sqrt(2)``."""
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = 1 / np.sqrt(2)
    psi[-1] = np.exp(1j * phase) / np.sqrt(2)
    return psi


def basis_state(n: int, bits: str) -> np.ndarray:
    psi = np.zeros(2 ** n, dtype=complex)
    psi[int(bits, 2)] = 1.0
    return psi
