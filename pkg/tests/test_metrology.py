import math

import numpy as np
import pytest

from conftest import random_density, random_hermitian, sld_qfi
from qzd.config import FROZEN_SIGMA
from qzd.errors import DegenerateProbability, FitDiverged, ThresholdNotBracketed
from qzd.evolve import ProtocolConfig, RamseyTrace, ensemble_states
from qzd.metrology import (
    PrecisionPoint,
    acdd_qfi_scan,
    best_quadrature,
    cfi_binary,
    ensemble_qfi,
    estimate_delta_omega_from_simulation,
    fit_inverse_n,
    fit_ramsey,
    fringe_contrast,
    initial_guess,
    kth_scan,
    loglog_slope,
    optimal_sequential,
    p0_model,
    precision_parallel,
    precision_sequential,
    precision_trace,
    qfi_mixed,
    qfi_pure,
    repetitions,
    threshold_crossing,
)
from qzd.noise import NoiseSpec
from qzd.numerics import expm_ih_t
from qzd.operators import CouplingKind, EncodingSpec, ghz_state, h_encoding
from qzd.zeno import ghz_compatibility

BAND_SIGMA = FROZEN_SIGMA[("bandlimited", 80.0)]


def config(n, *, sigma=0.0, k=0.0, coupling="none", l=1, m=250, total_time=0.25, times=None,
           seed=1, spectrum="bandlimited"):
    cutoff = 80.0 if spectrum == "bandlimited" else None
    spec = NoiseSpec(spectrum, sigma, "x", l, m, seed, cutoff=cutoff)
    if times is None:
        times = (total_time,)
    return ProtocolConfig(n, EncodingSpec(20.0), spec, CouplingKind(coupling), k, total_time,
                          tuple(times))


def synthetic_trace(n, omega, gamma, times, noise=0.0, rng=None):
    p = p0_model(n, omega, gamma, times)
    if noise:
        p = p + noise * rng.standard_normal(len(times))
    err = np.full(len(times), noise)
    return RamseyTrace(times=np.asarray(times), p_mean=p, p_stderr=err, l_used=1)


# ---------------------------------------------------------------------------
# fringe model

def test_p0_model_examples():
    assert p0_model(4, 20.0, 1.0, 0.0) == pytest.approx(1.0)
    expected = 0.5 * (1 + math.cos(20.0) * math.exp(-1.0))
    assert p0_model(4, 20.0, 1.0, 0.25) == pytest.approx(expected, abs=1e-15)
    assert p0_model(4, 20.0, 1.0, 0.25) == pytest.approx(0.5751, abs=5e-5)
    assert p0_model(4, 20.0, 1e6, 0.25) == pytest.approx(0.5)


def test_p0_model_range_and_vectorized():
    t = np.linspace(0, 2, 301)
    p = p0_model(3, 17.0, 0.4, t)
    assert p.shape == t.shape
    assert np.all((p >= 0) & (p <= 1))


# ---------------------------------------------------------------------------
# fitting

def test_fit_recovers_noiseless_trace():
    times = np.arange(0, 251) * 1e-3
    fit = fit_ramsey(4, synthetic_trace(4, 20.0, 1.0, times))
    assert fit.converged
    assert fit.omega_hat == pytest.approx(20.0, abs=1e-6)
    assert fit.gamma_hat == pytest.approx(1.0, abs=1e-6)
    assert fit.residual_rms < 1e-9


@pytest.mark.parametrize("init", [(14.0, 0.6), (27.0, 1.8), (20.0, 0.0)])
def test_fit_converges_from_factor_two_bracket(init):
    times = np.arange(0, 251, 5) * 1e-3
    fit = fit_ramsey(4, synthetic_trace(4, 20.0, 1.0, times), init=init)
    # a bad start may lock onto a neighbouring fringe; the model value must still be reproduced
    if abs(fit.omega_hat - 20.0) < 1.0:
        assert fit.gamma_hat == pytest.approx(1.0, abs=1e-6)
    assert fit.gamma_hat >= 0


def test_initial_guess_locates_fringe():
    times = np.arange(0, 501, 5) * 1e-3
    omega0, gamma0 = initial_guess(3, times, p0_model(3, 25.0, 0.5, times))
    assert omega0 == pytest.approx(25.0, rel=0.05)
    assert 0 <= gamma0 < 1.5


def test_fit_gamma_bounded_and_covariance_psd(rng):
    times = np.arange(0, 251, 5) * 1e-3
    # a growing envelope would need gamma < 0; the bound must hold
    p = 0.5 * (1 + np.cos(80 * times) * np.exp(0.5 * times))
    p = np.clip(p, 0, 1)
    fit = fit_ramsey(4, RamseyTrace(times, p, np.full(len(times), 0.01), 1))
    assert fit.gamma_hat >= 0
    fit = fit_ramsey(4, synthetic_trace(4, 20.0, 1.0, times, 0.01, rng))
    cov = fit.covariance
    assert np.allclose(cov, cov.T)
    assert np.all(np.linalg.eigvalsh(cov) >= -1e-15)
    assert fit.omega_err > 0 and fit.gamma_err > 0


def test_fit_requires_four_points():
    times = np.array([0.0, 0.1, 0.2])
    with pytest.raises(ValueError):
        fit_ramsey(4, synthetic_trace(4, 20.0, 1.0, times))


def test_fit_strict_raises_on_divergence(monkeypatch):
    from scipy import optimize

    real = optimize.least_squares

    def failing(*args, **kw):
        sol = real(*args, **kw)
        sol.success = False
        return sol

    monkeypatch.setattr(optimize, "least_squares", failing)
    times = np.arange(0, 251, 5) * 1e-3
    trace = synthetic_trace(4, 20.0, 1.0, times)
    assert fit_ramsey(4, trace).converged is False
    with pytest.raises(FitDiverged):
        fit_ramsey(4, trace, strict=True)


def test_fit_unbiased_over_seeds():
    times = np.arange(0, 251, 5) * 1e-3
    estimates = []
    for seed in range(50):
        rng = np.random.default_rng(seed)
        estimates.append(fit_ramsey(4, synthetic_trace(4, 20.0, 1.0, times, 0.03, rng)).omega_hat)
    estimates = np.array(estimates)
    stderr = estimates.std(ddof=1) / math.sqrt(len(estimates))
    assert abs(estimates.mean() - 20.0) < 2 * stderr + 1e-12


# ---------------------------------------------------------------------------
# Fisher information

def test_cfi_binary_examples():
    assert cfi_binary(0.3, 0.0) == 0.0
    assert cfi_binary(0.5, 1.0) == pytest.approx(4.0)
    for p in (0.0, 1.0):
        with pytest.raises(DegenerateProbability):
            cfi_binary(p, 1.0)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_cfi_at_optimal_quadrature_is_heisenberg(n):
    omega = 20.0
    # choose t with cos(N omega t) = 0
    t = (math.pi / 2 + 2 * math.pi) / (n * omega)
    p = float(p0_model(n, omega, 0.0, t))
    dp = -0.5 * n * t * math.sin(n * omega * t)
    assert cfi_binary(p, dp) == pytest.approx(n * n * t * t, rel=1e-12)


def test_qfi_pure_global_phase_is_zero(rng):
    psi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    psi /= np.linalg.norm(psi)
    assert abs(qfi_pure(psi, 0.7j * psi)) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_qfi_pure_ghz_heisenberg(n):
    t = 0.3
    h = h_encoding(n, EncodingSpec(1.0))  # d/d omega of the encoding Hamiltonian
    psi = expm_ih_t(h * 20.0, t) @ ghz_state(n)
    dpsi = -1j * t * h @ psi
    assert qfi_pure(psi, dpsi) == pytest.approx(n * n * t * t, rel=1e-12)


def test_qfi_pure_single_qubit_plus_state():
    t = 0.7
    plus = np.array([1, 1]) / math.sqrt(2)
    hz = 0.5 * np.diag([1.0, -1.0])
    psi = expm_ih_t(3.0 * hz, t) @ plus
    assert qfi_pure(psi, -1j * t * hz @ psi) == pytest.approx(t * t, rel=1e-12)


def test_qfi_mixed_matches_pure(rng):
    psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    psi /= np.linalg.norm(psi)
    h = random_hermitian(rng, 4)
    dpsi = -1j * h @ psi
    rho = np.outer(psi, psi.conj())
    drho = np.outer(dpsi, psi.conj()) + np.outer(psi, dpsi.conj())
    assert qfi_mixed(rho, drho) == pytest.approx(qfi_pure(psi, dpsi), abs=1e-8)


def test_qfi_mixed_zero_derivative(rng):
    rho = random_density(rng, 4)
    assert qfi_mixed(rho, np.zeros((4, 4))) == 0.0


def test_qfi_mixed_maximally_mixed(rng):
    dim = 4
    rho = np.eye(dim) / dim
    d = random_hermitian(rng, dim)
    d -= np.trace(d) / dim * np.eye(dim)
    expected = np.sum(2 * np.abs(d) ** 2) * dim / 2
    assert qfi_mixed(rho, d) == pytest.approx(expected, rel=1e-10)
    assert qfi_mixed(rho, d) == pytest.approx(sld_qfi(rho, d), rel=1e-8)


@pytest.mark.parametrize("dim", [2, 3, 4, 8])
def test_qfi_mixed_vs_sld_oracle(rng, dim):
    for rank in (dim, max(1, dim // 2)):
        for _ in range(5):
            rho = random_density(rng, dim, rank)
            # physical derivative: unitary generator keeps support consistent
            h = random_hermitian(rng, dim)
            drho = -1j * (h @ rho - rho @ h)
            assert qfi_mixed(rho, drho) == pytest.approx(sld_qfi(rho, drho), abs=1e-8, rel=1e-8)


# ---------------------------------------------------------------------------
# precision formulas

def test_precision_parallel_examples():
    t_opt, d = precision_parallel(4, 1.0, 0.25)
    assert t_opt == pytest.approx(0.125)
    assert d == pytest.approx(math.sqrt(2 * math.e / (4 * 0.25)), rel=1e-12)
    assert d == pytest.approx(2.332, abs=1e-3)
    t_opt, d = precision_parallel(4, 0.0, 0.25)
    assert t_opt == 0.25 and d == pytest.approx(1.0)
    # clamped regime
    t_opt, d = precision_parallel(2, 0.5, 0.25)
    assert t_opt == 0.25
    assert d == pytest.approx(math.exp(2 * 0.5 * 0.25) / (2 * 0.25))
    with pytest.raises(ValueError):
        precision_parallel(4, -1.0, 0.25)


def test_precision_sequential_examples():
    t_star, d = optimal_sequential(4, 1.0, 0.25)
    assert t_star == pytest.approx(0.125)
    assert d == pytest.approx(math.exp(0.5) / (4 * 0.25), rel=1e-12)
    assert d == pytest.approx(1.649, abs=1e-3)
    assert precision_sequential(4, 0.0, 0.5, 0.25) == pytest.approx(0.5)
    t = np.linspace(0.01, 0.5, 50)
    assert np.all(np.diff(precision_sequential(4, 0.0, t, 0.25)) < 0)
    # brute-force minimum agrees with the closed form
    fine = np.linspace(1e-3, 0.5, 50001)
    assert fine[np.argmin(precision_sequential(4, 1.0, fine, 0.25))] == pytest.approx(0.125, abs=1e-4)
    with pytest.raises(ValueError):
        precision_sequential(4, 1.0, 0.0, 0.25)


def test_repetitions():
    assert repetitions("parallel", 0.125, 0.25) == 2
    assert repetitions("sequential", 0.125, 0.25) == 4
    with pytest.raises(ValueError):
        repetitions("serial", 0.1, 0.2)


def test_best_quadrature_matches_closed_form():
    # p = (1 + cos(phi))/2 readout of a pure fringe: best CFI = (d phi)^2 whatever phi
    for phi in (0.1, 1.0, 2.5):
        x, y = math.cos(phi), math.sin(phi)
        dx, dy = -3.0 * math.sin(phi), 3.0 * math.cos(phi)
        _, f = best_quadrature(x, y, dx, dy)
        assert f == pytest.approx(9.0, rel=1e-6)


def test_estimate_noise_free_heisenberg():
    cfg = config(4)
    pt = estimate_delta_omega_from_simulation(cfg, 0.25)
    assert isinstance(pt, PrecisionPoint)
    assert pt.delta_omega == pytest.approx(1.0, rel=1e-6)
    assert pt.nu == 1.0 and pt.with_qzd is False
    with pytest.raises(ValueError):
        estimate_delta_omega_from_simulation(cfg, 0.0)


def test_precision_trace_noise_free_sequential():
    times = tuple(np.arange(1, 11) * 0.05)
    cfg = config(4, total_time=0.5, m=500, times=times)
    pts = precision_trace(cfg, "sequential", t_ref=0.25)
    got = np.array([p.delta_omega for p in pts])
    expected = precision_sequential(4, 0.0, np.array(times), 0.25)
    np.testing.assert_allclose(got, expected, rtol=1e-5)


def test_fixed_quadrature_never_beats_optimal():
    times = tuple(np.arange(1, 6) * 0.05)
    cfg = config(3, total_time=0.25, times=times)
    opt = precision_trace(cfg, quadrature="optimal")
    fix = precision_trace(cfg, quadrature="fixed")
    for a, b in zip(opt, fix):
        assert a.delta_omega <= b.delta_omega * (1 + 1e-9)


def test_qcrb_chain_and_saturation():
    # noisy: measurement cannot beat the quantum bound
    cfg = config(3, sigma=BAND_SIGMA, l=60, times=(0.1,), seed=5)
    pt = estimate_delta_omega_from_simulation(cfg, 0.1)
    qfi = ensemble_qfi(cfg, 0.1)
    bound = 1 / math.sqrt(pt.nu * qfi)
    assert pt.delta_omega >= bound * 0.95
    # noise-free: the optimal quadrature saturates it
    cfg = config(3, times=(0.1,))
    pt = estimate_delta_omega_from_simulation(cfg, 0.1)
    qfi = ensemble_qfi(cfg, 0.1)
    assert pt.delta_omega == pytest.approx(1 / math.sqrt(pt.nu * qfi), rel=0.01)


@pytest.mark.parametrize("n,t", [(2, 0.05), (3, 0.1), (3, 0.25), (5, 0.17)])
def test_noise_free_cfi_equals_qfi(n, t):
    cfg = config(n, times=(t,))
    pt = estimate_delta_omega_from_simulation(cfg, t)
    assert pt.cfi == pytest.approx(n * n * t * t, rel=1e-3)


def test_ensemble_qfi_noise_free_is_heisenberg():
    for n in (1, 2, 4):
        cfg = config(n, times=(0.2,))
        assert ensemble_qfi(cfg, 0.2) == pytest.approx(n * n * 0.04, rel=1e-6)


# ---------------------------------------------------------------------------
# contrast and K_th

def test_fringe_contrast_noise_free():
    assert fringe_contrast(config(4, times=(0.25,)), 0.25) == pytest.approx(1.0, abs=1e-12)


def test_fringe_contrast_calibrated_decay():
    l = 200
    cfg = config(4, sigma=BAND_SIGMA, l=l, m=500, total_time=0.5, times=(0.5,), seed=3)
    value = fringe_contrast(cfg, 0.5)
    # per-realization coherences give the Monte-Carlo standard error
    psi = ensemble_states(cfg)[:, 0]
    coh = 2 * psi[:, -1] * psi[:, 0].conj()
    stderr = np.std(coh) / math.sqrt(l)
    assert abs(value - math.exp(-2)) < 3 * stderr
    assert value < 0.3


def test_contrast_protected_by_coupling():
    cfg = config(4, sigma=BAND_SIGMA, k=65.0, coupling="ising", l=20, times=(0.25,))
    assert fringe_contrast(cfg, 0.25) >= 0.9


def test_contrast_ordered_by_spectral_gap():
    # at equal K, a larger gap around the GHZ block gives better protection
    kinds = ["ising", "dipolar", "quadratic_zeeman"]
    gaps = [ghz_compatibility(k, 4).spectral_gap for k in kinds]
    contrast = [fringe_contrast(config(4, sigma=BAND_SIGMA, k=6.0, coupling=k, l=30,
                                       total_time=0.5, m=500, times=(0.5,)), 0.5)
                for k in kinds]
    order_gap = np.argsort(gaps)
    assert np.all(np.diff(np.array(contrast)[order_gap]) >= -0.02)


def test_threshold_crossing_interpolates():
    k = [0, 10, 20, 30]
    assert threshold_crossing(k, [0.2, 0.5, 0.95, 0.99]) == pytest.approx(10 + 10 * 0.4 / 0.45)
    assert threshold_crossing(k, [0.95, 0.97, 0.99, 1.0]) == 0
    with pytest.raises(ThresholdNotBracketed):
        threshold_crossing(k, [0.1, 0.2, 0.3, 0.4])


def test_fit_inverse_n_exact():
    n = np.array([2, 3, 4, 5, 6])
    c1, c2, r2 = fit_inverse_n(n, 66.4 / n - 4.4)
    assert c1 == pytest.approx(66.4) and c2 == pytest.approx(-4.4)
    assert r2 == pytest.approx(1.0)


def test_kth_scan_zero_noise():
    noise = NoiseSpec("white", 0.0, "x", 1, 50, 1)
    res = kth_scan([2, 3], [1.0, 5.0, 9.0], noise, t_total=0.05)
    np.testing.assert_allclose(res.contrast, 1.0, atol=1e-12)
    np.testing.assert_allclose(res.k_th, 1.0)
    with pytest.raises(ValueError):
        kth_scan([2], [5.0, 5.0], noise, t_total=0.05)


def test_kth_scan_noisy_monotone_in_k():
    noise = NoiseSpec("bandlimited", BAND_SIGMA, "x", 20, 500, 1, cutoff=80.0)
    res = kth_scan([3], [0, 10, 20, 40], noise, t_total=0.5)
    assert np.all(np.diff(res.contrast[0]) > -0.03)
    assert res.contrast[0, -1] >= 0.9
    assert res.contrast[0, 0] < 0.5


# ---------------------------------------------------------------------------
# ac field with decoupling

def test_acdd_noise_free_single_qubit_t4():
    noise = [NoiseSpec("white", 0.0, "x", 1, 1, 1)]
    t_list = [0.04, 0.08, 0.16, 0.4]
    table = acdd_qfi_scan([1], t_list, noise, 0.0, omega=50 * math.pi, amplitude=20.0)
    assert loglog_slope(t_list, table[0]) == pytest.approx(4.0, abs=0.2)


def test_acdd_noise_free_n_squared():
    noise = [NoiseSpec("white", 0.0, "x", 1, 1, 1)]
    table = acdd_qfi_scan([1, 2, 3], [0.1], noise, 0.0, omega=50 * math.pi, amplitude=20.0)
    np.testing.assert_allclose(table[:, 0] / table[0, 0], [1, 4, 9], rtol=1e-4)


def test_acdd_off_loses_signal_without_noise():
    # without pulses the phase oscillates and averages out
    noise = [NoiseSpec("white", 0.0, "x", 1, 1, 1)]
    on = acdd_qfi_scan([1], [0.4], noise, 0.0, omega=50 * math.pi, amplitude=20.0)
    off = acdd_qfi_scan([1], [0.4], noise, 0.0, omega=50 * math.pi, amplitude=20.0, dd=False)
    assert on[0, 0] > 5 * off[0, 0]


def test_loglog_slope():
    x = np.array([1, 2, 4, 8.0])
    assert loglog_slope(x, 3 * x ** 4) == pytest.approx(4.0)
