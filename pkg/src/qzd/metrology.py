"""Fringe model, fitting, Fisher information and precision analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from .errors import DegenerateProbability, FitDiverged, ThresholdNotBracketed
from .evolve import (
    ProtocolConfig,
    RamseyTrace,
    dd_schedule,
    density_from_states,
    ensemble_states_multi,
    final_density_matrix,
    readout_moments_multi,
)
from .noise import NoiseSpec
from .operators import CouplingKind, EncodingSpec

FD_REL_STEP = 1e-4
# readout phases with p closer than this to 0 or 1 are skipped: there the
# O(h^2) finite-difference error in dp/domega is divided by a vanishing p(1-p)
PROB_FLOOR = 1e-6


# ---------------------------------------------------------------------------
# fringe model and fitting

def p0_model(n, omega, gamma, t):
    """Decaying GHZ Ramsey fringe ``(1 + cos(N omega t) exp(-N gamma t))/2``."""
    t = np.asarray(t, dtype=float)
    return 0.5 * (1.0 + np.cos(n * omega * t) * np.exp(-n * gamma * t))


def _p0_jacobian(n, omega, gamma, t):
    env = np.exp(-n * gamma * t)
    d_omega = -0.5 * n * t * np.sin(n * omega * t) * env
    d_gamma = -0.5 * n * t * np.cos(n * omega * t) * env
    return np.column_stack([d_omega, d_gamma])


@dataclass
class FitResult:
    omega_hat: float
    gamma_hat: float
    covariance: np.ndarray
    residual_rms: float
    converged: bool

    @property
    def omega_err(self) -> float:
        return float(np.sqrt(max(self.covariance[0, 0], 0.0)))

    @property
    def gamma_err(self) -> float:
        return float(np.sqrt(max(self.covariance[1, 1], 0.0)))


def initial_guess(n: int, times, p) -> tuple[float, float]:
    """Frequency from the dominant Fourier component, decay from log-contrast.

    Assumes a uniform time grid.
    """
    times = np.asarray(times, dtype=float)
    p = np.asarray(p, dtype=float)
    dt = times[1] - times[0]
    signal = 2 * p - 1
    signal = signal - signal.mean()
    pad = max(4096, 16 * len(signal))
    spec = np.abs(np.fft.rfft(signal, pad))
    freqs = 2 * np.pi * np.fft.rfftfreq(pad, dt)
    spec[0] = 0.0
    omega0 = freqs[int(np.argmax(spec))] / n
    phase = np.cos(n * omega0 * times)
    amp = np.abs(2 * p - 1)
    sel = (np.abs(phase) > 0.5) & (amp > 1e-3)
    gamma0 = 0.0
    if sel.sum() >= 2 and np.ptp(times[sel]) > 0:
        y = np.log(np.clip(amp[sel] / np.abs(phase[sel]), 1e-6, 1.0))
        slope = np.polyfit(times[sel], y, 1)[0]
        gamma0 = max(0.0, -slope / n)
    return float(omega0), float(gamma0)


def fit_ramsey(n: int, trace: RamseyTrace, init: tuple | None = None,
               strict: bool = False) -> FitResult:
    """Weighted least-squares fit of the decaying-fringe model to a Ramsey trace.

    Uses a bounded trust-region Gauss-Newton solver with the analytic
    Jacobian, ``gamma >= 0``. Weights are ``1/stderr^2`` with the standard errors
    floored at their median. Without
    ``init`` the start point comes from :func:`initial_guess` polished by a
    short scan in ``omega``, which guards against locking onto a neighbouring
    fringe. Non-convergence is reported through ``converged``; with
    ``strict=True`` it raises :class:`FitDiverged` instead.
    """
    t = np.asarray(trace.times, dtype=float)
    p = np.asarray(trace.p_mean, dtype=float)
    if len(t) < 4:
        raise ValueError("need at least 4 points to fit")
    err = np.asarray(trace.p_stderr, dtype=float)
    if np.any(err > 0):
        # ensemble spread vanishes near t=0, where the noisy fringe departs most
        # from the model; unfloored weights let those few points dominate
        err = np.maximum(err, np.median(err[err > 0]))
    else:
        err = np.ones_like(p)
    w = 1.0 / err

    def resid(x):
        return (p0_model(n, x[0], x[1], t) - p) * w

    def jac(x):
        return _p0_jacobian(n, x[0], x[1], t) * w[:, None]

    if init is None:
        omega0, gamma0 = initial_guess(n, t, p)
        grid = omega0 * np.linspace(0.8, 1.2, 81)
        cost = [np.sum(resid((om, gamma0)) ** 2) for om in grid]
        init = (grid[int(np.argmin(cost))], gamma0)
    x0 = np.array([float(init[0]), max(float(init[1]), 0.0)])
    sol = optimize.least_squares(resid, x0, jac=jac, bounds=([-np.inf, 0.0], [np.inf, np.inf]),
                                 method="trf", x_scale="jac", xtol=1e-12, ftol=1e-12,
                                 gtol=1e-12, max_nfev=2000)
    j = sol.jac
    try:
        cov = np.linalg.inv(j.T @ j)
    except np.linalg.LinAlgError:
        cov = np.full((2, 2), np.nan)
    raw = p0_model(n, sol.x[0], sol.x[1], t) - p
    converged = bool(sol.success and np.all(np.isfinite(sol.x)))
    if strict and not converged:
        raise FitDiverged(f"fit did not converge: {sol.message}")
    return FitResult(omega_hat=float(sol.x[0]), gamma_hat=float(sol.x[1]),
                     covariance=0.5 * (cov + cov.T), residual_rms=float(np.sqrt(np.mean(raw ** 2))),
                     converged=converged)


# ---------------------------------------------------------------------------
# Fisher information

def cfi_binary(p: float, dp_domega: float) -> float:
    """Classical Fisher information of a two-outcome measurement."""
    if not 0.0 < p < 1.0:
        raise DegenerateProbability(f"p = {p} has no Fisher information defined")
    return dp_domega ** 2 / (p * (1.0 - p))


def qfi_pure(state, dstate) -> float:
    """``4 (<dpsi|dpsi> - |<psi|dpsi>|^2)`` for a normalized pure state."""
    state = np.asarray(state, dtype=complex)
    dstate = np.asarray(dstate, dtype=complex)
    overlap = np.vdot(state, dstate)
    return float(4.0 * (np.vdot(dstate, dstate).real - abs(overlap) ** 2))


def qfi_mixed(rho, drho, eps: float = 1e-12) -> float:
    """SLD quantum Fisher information from the spectral decomposition of ``rho``.

    ``sum_{ij, p_i + p_j > eps} 2 |<i|drho|j>|^2 / (p_i + p_j)``.
    """
    rho = np.asarray(rho, dtype=complex)
    drho = np.asarray(drho, dtype=complex)
    p, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    p = np.clip(p, 0.0, None)
    d = v.conj().T @ drho @ v
    den = p[:, None] + p[None, :]
    keep = den > eps
    return float(np.sum(2.0 * np.abs(d[keep]) ** 2 / den[keep]))


# ---------------------------------------------------------------------------
# precision formulas

def precision_parallel(n: int, gamma: float, t_total: float) -> tuple[float, float]:
    """Optimal interrogation time and precision with a total time budget ``t_total``.

    ``delta_omega^2 = exp(2 N gamma t) / (N^2 t T)`` is minimized at
    ``t = 1/(2 N gamma)``, clamped to ``T``.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    t_opt = t_total if gamma == 0 else min(1.0 / (2 * n * gamma), t_total)
    var = math.exp(2 * n * gamma * t_opt) / (n * n * t_opt * t_total)
    return t_opt, math.sqrt(var)


def precision_sequential(n: int, gamma: float, t, t_ref: float):
    """``exp(N gamma t) / (N sqrt(2 t T))`` for a sequential run of length up to ``2T``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be > 0")
    out = np.exp(n * gamma * t) / (n * np.sqrt(2 * t * t_ref))
    return float(out) if out.ndim == 0 else out


def optimal_sequential(n: int, gamma: float, t_ref: float, t_max: float | None = None):
    """``(t*, delta_omega(t*))`` minimizing :func:`precision_sequential` on ``(0, t_max]``."""
    t_max = 2 * t_ref if t_max is None else t_max
    t_star = t_max if gamma == 0 else min(1.0 / (2 * n * gamma), t_max)
    return t_star, precision_sequential(n, gamma, t_star, t_ref)


@dataclass
class PrecisionPoint:
    n_qubits: int
    t: float
    delta_omega: float
    setting: str
    with_qzd: bool
    cfi: float = float("nan")
    nu: float = float("nan")
    quadrature: float = 0.0


def repetitions(setting: str, t: float, t_ref: float) -> float:
    """Number of repetitions: ``T/t`` (parallel) or ``2T/t`` (sequential)."""
    if setting == "parallel":
        return t_ref / t
    if setting == "sequential":
        return 2 * t_ref / t
    raise ValueError(f"unknown setting {setting!r}")


def best_quadrature(x, y, dx, dy, n_grid: int = 7200) -> tuple[float, float]:
    """Readout phase maximizing the binary CFI and that CFI.

    The readout measures ``cos(theta) sigma_x + sin(theta) sigma_y`` on qubit 1,
    so ``p = (1 + x cos theta + y sin theta)/2``. Phases with ``p`` within
    ``PROB_FLOOR`` of 0 or 1 are excluded.
    """
    theta = np.linspace(0, 2 * np.pi, n_grid, endpoint=False)
    p = 0.5 * (1 + x * np.cos(theta) + y * np.sin(theta))
    dp = 0.5 * (dx * np.cos(theta) + dy * np.sin(theta))
    ok = (p > PROB_FLOOR) & (p < 1 - PROB_FLOOR)
    f = np.zeros_like(theta)
    f[ok] = dp[ok] ** 2 / (p[ok] * (1 - p[ok]))
    k = int(np.argmax(f))

    def neg(th):
        pp = 0.5 * (1 + x * math.cos(th) + y * math.sin(th))
        if not PROB_FLOOR < pp < 1 - PROB_FLOOR:
            return 0.0
        return -(0.5 * (dx * math.cos(th) + dy * math.sin(th))) ** 2 / (pp * (1 - pp))

    step = 2 * np.pi / n_grid
    res = optimize.minimize_scalar(neg, bounds=(theta[k] - step, theta[k] + step),
                                   method="bounded", options={"xatol": 1e-12})
    if -res.fun > f[k]:
        return float(res.x % (2 * np.pi)), float(-res.fun)
    return float(theta[k]), float(f[k])


def precision_trace(config: ProtocolConfig, setting: str = "parallel",
                    t_ref: float | None = None, quadrature: str = "optimal",
                    workers: int = 1) -> list[PrecisionPoint]:
    """Precision ``1/sqrt(nu * CFI)`` of the simulated readout at every sample time.

    The slope ``dp/domega`` is a central difference with step
    ``1e-4 omega`` using identical noise streams on both sides. With
    ``quadrature="optimal"`` the readout phase is chosen to maximize the CFI;
    ``"fixed"`` uses the plain ``sigma_x`` readout.
    """
    if quadrature not in ("optimal", "fixed"):
        raise ValueError(f"unknown quadrature {quadrature!r}")
    if t_ref is None:
        t_ref = config.total_time if setting == "parallel" else config.total_time / 2
    omega = config.encoding.omega
    h = FD_REL_STEP * omega
    moments = readout_moments_multi(config, [omega, omega + h, omega - h], workers)
    (x0, y0), (xp, yp), (xm, ym) = ((x.mean(axis=0), y.mean(axis=0)) for x, y in moments)
    dx, dy = (xp - xm) / (2 * h), (yp - ym) / (2 * h)
    qzd = config.coupling is not CouplingKind.NONE and config.k > 0
    points = []
    for s, t in enumerate(config.sample_times):
        if t <= 0:
            continue
        if quadrature == "optimal":
            theta, cfi = best_quadrature(x0[s], y0[s], dx[s], dy[s])
        else:
            theta, cfi = 0.0, cfi_binary(0.5 * (1 + x0[s]), 0.5 * dx[s])
        nu = repetitions(setting, t, t_ref)
        delta = 1.0 / math.sqrt(nu * cfi) if cfi > 0 else float("inf")
        points.append(PrecisionPoint(n_qubits=config.n_qubits, t=float(t), delta_omega=delta,
                                     setting=setting, with_qzd=qzd, cfi=float(cfi), nu=nu,
                                     quadrature=theta))
    return points


def estimate_delta_omega_from_simulation(config: ProtocolConfig, t: float,
                                         setting: str = "parallel",
                                         t_ref: float | None = None,
                                         quadrature: str = "optimal",
                                         workers: int = 1) -> PrecisionPoint:
    """Single-time version of :func:`precision_trace`; ``t`` must be a slice boundary."""
    if t <= 0:
        raise ValueError("t must be > 0")
    if t_ref is None:
        t_ref = config.total_time if setting == "parallel" else config.total_time / 2
    cfg = replace(config, sample_times=(float(t),))
    return precision_trace(cfg, setting, t_ref, quadrature, workers)[0]


def ensemble_qfi(config: ProtocolConfig, t: float | None = None, workers: int = 1) -> float:
    """QFI of the ensemble-averaged state w.r.t. the encoded frequency.

    Central finite differences of ``rho`` with common random numbers.
    """
    t = config.sample_times[-1] if t is None else t
    cfg = replace(config, sample_times=(float(t),))
    omega = config.encoding.omega
    h = FD_REL_STEP * omega
    rho, rp, rm = (density_from_states(st[:, 0])
                   for st in ensemble_states_multi(cfg, [omega, omega + h, omega - h], workers))
    return qfi_mixed(rho, (rp - rm) / (2 * h))


def fringe_contrast(config: ProtocolConfig, t: float, workers: int = 1) -> float:
    """``2 |<1..1| rho(t) |0..0>|`` of the ensemble state."""
    rho = final_density_matrix(config, t, workers=workers)
    return float(min(1.0, 2 * abs(rho[-1, 0])))


# ---------------------------------------------------------------------------
# scans

@dataclass
class KthResult:
    n_list: list
    k_grid: np.ndarray
    contrast: np.ndarray  # [n, k]
    k_th: np.ndarray
    c1: float
    c2: float
    r2: float


def threshold_crossing(k_grid, values, level: float = 0.9) -> float:
    """Smallest ``K`` at which ``values`` reaches ``level``, linearly interpolated."""
    k_grid = np.asarray(k_grid, dtype=float)
    values = np.asarray(values, dtype=float)
    above = np.flatnonzero(values >= level)
    if len(above) == 0:
        raise ThresholdNotBracketed(f"contrast never reaches {level} on the grid")
    j = above[0]
    if j == 0:
        return float(k_grid[0])
    k0, k1 = k_grid[j - 1], k_grid[j]
    v0, v1 = values[j - 1], values[j]
    return float(k0 + (level - v0) * (k1 - k0) / (v1 - v0))


def fit_inverse_n(n_list, k_th) -> tuple[float, float, float]:
    """Least-squares ``K_th = c1/N + c2``; returns ``(c1, c2, R^2)``."""
    x = 1.0 / np.asarray(n_list, dtype=float)
    y = np.asarray(k_th, dtype=float)
    c1, c2 = np.polyfit(x, y, 1)
    ss_res = np.sum((y - (c1 * x + c2)) ** 2)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(c1), float(c2), float(r2)


def kth_scan(n_list, k_grid, noise: NoiseSpec, *, omega: float = 20.0, t_total: float = 0.5,
             coupling: CouplingKind = CouplingKind.QUADRATIC_ZEEMAN, level: float = 0.9,
             workers: int = 1, progress=None) -> KthResult:
    """Minimum coupling for fringe contrast ``level`` at ``t_total``, per qubit number."""
    k_grid = np.asarray(k_grid, dtype=float)
    if np.any(np.diff(k_grid) <= 0):
        raise ValueError("k_grid must be strictly ascending")
    n_list = list(n_list)
    contrast = np.zeros((len(n_list), len(k_grid)))
    k_th = np.zeros(len(n_list))
    for a, n in enumerate(n_list):
        for b, k in enumerate(k_grid):
            cfg = ProtocolConfig(n_qubits=n, encoding=EncodingSpec(omega), noise=noise,
                                 coupling=coupling, k=float(k), total_time=t_total,
                                 sample_times=(t_total,))
            contrast[a, b] = fringe_contrast(cfg, t_total, workers)
            if progress:
                progress(n, k, contrast[a, b])
        k_th[a] = threshold_crossing(k_grid, contrast[a], level)
    if len(n_list) >= 2:
        c1, c2, r2 = fit_inverse_n(n_list, k_th)
    else:
        c1 = c2 = r2 = float("nan")
    return KthResult(n_list=n_list, k_grid=k_grid, contrast=contrast, k_th=k_th,
                     c1=c1, c2=c2, r2=r2)


def acdd_qfi_scan(n_list, t_list, noise_both_axes, k: float, *, omega: float,
                  amplitude: float, dt: float = 1e-3, dd: bool = True,
                  coupling: CouplingKind = CouplingKind.ISING,
                  workers: int = 1) -> np.ndarray:
    """QFI w.r.t. an ac-field frequency for each ``(N, T)``; returns ``F[n, t]``.

    ``noise_both_axes`` is a sequence of :class:`NoiseSpec` templates (x and/or
    z); their ``m_slices`` is replaced to match each ``T`` at step ``dt``.
    With ``dd`` the pulses sit at the extrema of ``sin(omega t)``.
    """
    table = np.zeros((len(n_list), len(t_list)))
    for a, n in enumerate(n_list):
        for b, t_total in enumerate(t_list):
            m = int(round(t_total / dt))
            specs = tuple(replace(s, m_slices=m) for s in noise_both_axes)
            cfg = ProtocolConfig(
                n_qubits=n, encoding=EncodingSpec(omega, mode="ac", ac_amplitude=amplitude),
                noise=specs, coupling=coupling if n > 1 else CouplingKind.NONE,
                k=float(k) if n > 1 else 0.0, total_time=m * dt, sample_times=(m * dt,),
                dd=dd_schedule(omega, m * dt) if dd else None)
            table[a, b] = ensemble_qfi(cfg, workers=workers)
    return table


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])
