import numpy as np
import pytest

from qzd.errors import IndexOutOfRange, ShapeMismatch, SystemTooSmall
from qzd.numerics import commutator, expm_ih_t, kron, max_entry
from qzd.operators import (
    HADAMARD,
    I2,
    SX,
    SZ,
    CouplingKind,
    EncodingSpec,
    SystemSpec,
    basis_state,
    cnot,
    collective,
    ghz_circuit,
    ghz_state,
    h_coupling,
    h_encoding,
    h_encoding_ac_coeff,
    h_nmr,
    pauli_on,
)

COMPATIBLE = (CouplingKind.ISING, CouplingKind.DIPOLAR, CouplingKind.QUADRATIC_ZEEMAN)


def test_system_spec_bounds():
    assert SystemSpec(3).dim == 8
    with pytest.raises(ValueError):
        SystemSpec(0)
    with pytest.raises(ValueError):
        SystemSpec(11)
    assert SystemSpec(12, max_qubits=12).dim == 4096


def test_pauli_on_examples():
    assert np.array_equal(pauli_on(1, 1, "z"), SZ)
    assert np.array_equal(pauli_on(2, 2, "x"), kron(I2, SX))
    psi = basis_state(3, "010")
    assert np.allclose(pauli_on(3, 2, "z") @ psi, -psi)


def test_pauli_on_index_checked():
    with pytest.raises(IndexOutOfRange):
        pauli_on(2, 3, "x")
    with pytest.raises(IndexOutOfRange):
        pauli_on(2, 0, "x")


def test_h_encoding_single_qubit():
    assert np.allclose(h_encoding(1, EncodingSpec(20.0)), 10 * SZ)


def test_h_encoding_spectrum_binomial():
    w = 3.0
    ev = np.round(np.linalg.eigvalsh(h_encoding(4, EncodingSpec(w))), 9)
    values, counts = np.unique(ev, return_counts=True)
    assert np.allclose(values, [-2 * w, -w, 0, w, 2 * w])
    assert list(counts) == [1, 4, 6, 4, 1]


def test_h_encoding_ac():
    enc = EncodingSpec(5.0, mode="ac", ac_amplitude=2.0)
    assert np.allclose(h_encoding(2, enc), 0.5 * collective(2, "z"))
    assert h_encoding_ac_coeff(enc, 0.0) == 0.0
    assert h_encoding_ac_coeff(enc, np.pi / 10) == pytest.approx(2.0)


def test_encoding_spec_validation():
    with pytest.raises(ValueError):
        EncodingSpec(-1.0)
    with pytest.raises(ValueError):
        EncodingSpec(1.0, mode="pulsed")


def test_ising_two_qubits():
    h = h_coupling(2, "ising")
    assert np.array_equal(h, kron(SZ, SZ))
    assert np.allclose(np.diag(h), [1, -1, -1, 1])


def test_dipolar_two_qubits():
    ev = np.sort(np.linalg.eigvalsh(h_coupling(2, CouplingKind.DIPOLAR)))
    assert np.allclose(ev, [-4, 0, 2, 2])
    for bits in ("00", "11"):
        psi = basis_state(2, bits)
        assert np.allclose(h_coupling(2, "dipolar") @ psi, 2 * psi)


def test_quadratic_zeeman_three_qubits():
    ev = np.sort(np.linalg.eigvalsh(h_coupling(3, "quadratic_zeeman")))
    assert np.allclose(ev, [1] * 6 + [9, 9])


def test_scalar_is_heisenberg():
    h = h_coupling(2, "scalar")
    ev = np.sort(np.linalg.eigvalsh(h))
    assert np.allclose(ev, [-3, 1, 1, 1])


def test_open_chain_bond_count():
    # an open chain of N qubits has N-1 bonds, so |0..0> sits at N-1
    for n in range(2, 6):
        assert h_coupling(n, "ising")[0, 0] == n - 1


def test_coupling_needs_two_qubits():
    for kind in ("ising", "dipolar", "scalar"):
        with pytest.raises(SystemTooSmall):
            h_coupling(1, kind)
    assert np.allclose(h_coupling(1, "quadratic_zeeman"), np.eye(2))
    assert not np.any(h_coupling(3, "none"))


@pytest.mark.parametrize("kind", list(CouplingKind))
def test_couplings_commute_with_encoding(kind):
    for n in range(2, 7):
        hc = h_coupling(n, kind)
        assert max_entry(commutator(hc, h_encoding(n, EncodingSpec(20.0)))) <= 1e-12


@pytest.mark.parametrize("kind", COMPATIBLE)
def test_ghz_basis_states_degenerate(kind):
    for n in range(2, 7):
        hc = h_coupling(n, kind)
        zeros, ones = basis_state(n, "0" * n), basis_state(n, "1" * n)
        e0 = np.vdot(zeros, hc @ zeros).real
        assert np.allclose(hc @ zeros, e0 * zeros, atol=1e-10)
        assert np.allclose(hc @ ones, e0 * ones, atol=1e-10)


def test_h_nmr_examples():
    assert not np.any(h_nmr([0.0], [[0.0]]))
    assert np.allclose(h_nmr([1.0, 0.0], np.zeros((2, 2))), np.pi * kron(SZ, I2))
    assert np.allclose(h_nmr([0.0, 0.0], [[0, 2.0], [2.0, 0]]), np.pi * kron(SZ, SZ))


def test_h_nmr_shape_errors():
    with pytest.raises(ShapeMismatch):
        h_nmr([1.0, 2.0], np.zeros((3, 3)))
    with pytest.raises(ShapeMismatch):
        h_nmr([1.0, 2.0], [[0, 1], [2, 0]])
    with pytest.raises(ShapeMismatch):
        h_nmr([1.0, 2.0], [[1, 0], [0, 0]])


def test_cnot_truth_table():
    u = cnot(2, 1, 2)
    for inp, out in (("00", "00"), ("01", "01"), ("10", "11"), ("11", "10")):
        assert np.allclose(u @ basis_state(2, inp), basis_state(2, out))


def test_ghz_prep_single_qubit_is_hadamard():
    prep, _ = ghz_circuit(1)
    assert np.allclose(prep, HADAMARD)
    assert np.allclose(prep @ [1, 0], np.array([1, 1]) / np.sqrt(2))


@pytest.mark.parametrize("n", range(1, 7))
def test_ghz_prep(n):
    prep, readout = ghz_circuit(n)
    assert max_entry(prep.conj().T @ prep - np.eye(2 ** n)) <= 1e-10
    assert max_entry(prep[:, 0] - ghz_state(n)) <= 1e-12
    # readout^dagger sigma_x^1 readout is the parity X^{(x)N}
    parity = kron(*([SX] * n))
    assert np.allclose(readout.conj().T @ pauli_on(n, 1, "x") @ readout, parity)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_noise_free_round_trip(n):
    omega = 20.0
    prep, readout = ghz_circuit(n)
    for t in (0.0, 0.011, 0.05, 0.2):
        psi = readout @ expm_ih_t(h_encoding(n, EncodingSpec(omega)), t) @ prep[:, 0]
        sx = np.vdot(psi, pauli_on(n, 1, "x") @ psi).real
        assert sx == pytest.approx(np.cos(n * omega * t), abs=1e-12)
