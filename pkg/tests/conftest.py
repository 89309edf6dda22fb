import numpy as np
import pytest


def random_hermitian(rng, dim, scale=1.0):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * (a + a.conj().T) / 2


def random_density(rng, dim, rank=None):
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def sld_qfi(rho, drho):
    """Brute-force QFI: solve 2 drho = L rho + rho L as a dense linear system.

    Works in the vectorized picture (I x rho + rho^T x I) vec(L) = 2 vec(drho)
    and uses a least-squares solve so rank-deficient states are handled by
    the minimum-norm SLD. Deliberately independent of the eigenbasis formula.
    """
    d = rho.shape[0]
    eye = np.eye(d)
    a = np.kron(eye, rho) + np.kron(rho.T, eye)
    vec_l = np.linalg.lstsq(a, 2 * drho.reshape(-1, order="F"), rcond=1e-13)[0]
    sld = vec_l.reshape(d, d, order="F")
    return float(np.real(np.trace(rho @ sld @ sld)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title}; {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
