"""Stochastic control fields that emulate amplitude and phase damping.

Each realization ``l`` and qubit ``i`` draws from its own random stream keyed
by ``(seed, axis, l, i)``, so ensembles are reproducible regardless of the
order or grouping in which realizations are generated. The field is held
constant across each of the ``M`` slices.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import optimize

from .errors import CalibrationFailed

SPECTRA = ("white", "ou", "bandlimited")
AXES = ("x", "z")
# frequency resolution of band-limited synthesis is 2 pi / (BANDLIMITED_RECORD * dt)
BANDLIMITED_RECORD = 1 << 16


@dataclass(frozen=True)
class NoiseSpec:
    """Parameters of one stochastic field ensemble.

    spectrum
        ``"white"``: i.i.d. Gaussian per slice. ``"ou"``: Ornstein-Uhlenbeck
        with ``correlation_time``. ``"bandlimited"``: Gaussian noise with a
        flat spectrum up to ``cutoff`` (s^-1) and nothing above it.
    sigma
        Stationary standard deviation of the field, s^-1.
    """
    spectrum: str = "white"
    sigma: float = 0.0
    axis: str = "x"
    l_realizations: int = 1
    m_slices: int = 1
    seed: int = 0
    correlation_time: float | None = None
    cutoff: float | None = None

    def __post_init__(self):
        if self.spectrum not in SPECTRA:
            raise ValueError(f"spectrum must be one of {SPECTRA}, got {self.spectrum!r}")
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.l_realizations < 1 or self.m_slices < 1:
            raise ValueError("l_realizations and m_slices must be >= 1")
        if self.spectrum == "ou" and not (self.correlation_time and self.correlation_time > 0):
            raise ValueError("ou spectrum needs a positive correlation_time")
        if self.spectrum == "bandlimited" and not (self.cutoff and self.cutoff > 0):
            raise ValueError("bandlimited spectrum needs a positive cutoff")

    def psd_per_variance(self, omega: float, dt: float) -> float:
        """Two-sided PSD at ``omega`` divided by ``sigma**2``.

        Only used to seed calibration; the simulated response is authoritative.
        """
        if self.spectrum == "white":
            return dt
        if self.spectrum == "ou":
            tau = self.correlation_time
            return 2 * tau / (1 + (omega * tau) ** 2)
        return np.pi / self.cutoff if abs(omega) <= self.cutoff else 0.0


@dataclass(frozen=True)
class NoiseEnsemble:
    values: np.ndarray  # [l, m, i], s^-1
    spec: NoiseSpec
    duration: float
    realizations: tuple = field(default=None)

    @property
    def dt(self) -> float:
        return self.duration / self.spec.m_slices

    def to_csv(self, path) -> None:
        path = Path(path)
        ls = self.realizations or range(self.values.shape[0])
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["l", "m", "i", "xi"])
            for a, l in enumerate(ls):
                for m in range(self.values.shape[1]):
                    for i in range(self.values.shape[2]):
                        w.writerow([l, m, i + 1, repr(float(self.values[a, m, i]))])


def _stream(seed: int, axis: str, l: int, i: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1),
                                spawn_key=(AXES.index(axis), int(l), int(i)))
    return np.random.Generator(np.random.PCG64(ss))


def _bandlimited_path(rng, m: int, dt: float, cutoff: float) -> np.ndarray:
    p = max(BANDLIMITED_RECORD, 1 << int(np.ceil(np.log2(4 * m))))
    spectrum = np.fft.rfft(rng.standard_normal(p))
    freqs = 2 * np.pi * np.fft.rfftfreq(p, dt)
    keep = freqs <= cutoff
    spectrum[~keep] = 0.0
    # expected variance of the filtered record (Parseval over retained bins)
    weights = np.full(len(freqs), 2.0)
    weights[0] = 1.0
    if p % 2 == 0:
        weights[-1] = 1.0
    var = weights[keep].sum() / p
    return np.fft.irfft(spectrum, p)[:m] / np.sqrt(var)


def _unit_path(spec: NoiseSpec, rng, dt: float) -> np.ndarray:
    m = spec.m_slices
    if spec.spectrum == "white":
        return rng.standard_normal(m)
    if spec.spectrum == "ou":
        a = np.exp(-dt / spec.correlation_time)
        kicks = rng.standard_normal(m)
        x = np.empty(m)
        x[0] = kicks[0]
        b = np.sqrt(1 - a * a)
        for k in range(1, m):
            x[k] = a * x[k - 1] + b * kicks[k]
        return x
    return _bandlimited_path(rng, m, dt, spec.cutoff)


def generate(spec: NoiseSpec, n_qubits: int, duration: float,
             realizations=None) -> NoiseEnsemble:
    """Draw the ensemble ``xi[l, m, i]`` for ``duration`` seconds.

    ``realizations`` selects a subset of realization indices; values for a
    given ``(l, i)`` do not depend on which others are requested.
    """
    if duration <= 0:
        raise ValueError("duration must be > 0")
    ls = range(spec.l_realizations) if realizations is None else list(realizations)
    dt = duration / spec.m_slices
    values = np.zeros((len(ls), spec.m_slices, n_qubits))
    if spec.sigma > 0:
        for a, l in enumerate(ls):
            for i in range(n_qubits):
                rng = _stream(spec.seed, spec.axis, l, i)
                values[a, :, i] = spec.sigma * _unit_path(spec, rng, dt)
    return NoiseEnsemble(values=values, spec=spec, duration=duration,
                         realizations=tuple(ls))


def fitted_gamma(sigma: float, template: NoiseSpec, *, omega: float, duration: float,
                 n_samples: int = 100) -> float:
    """Decay rate fitted from a single-qubit Ramsey ensemble driven by ``template`` at ``sigma``."""
    from .evolve import ProtocolConfig, ramsey_ensemble
    from .metrology import fit_ramsey
    from .operators import CouplingKind, EncodingSpec

    spec = replace(template, sigma=float(sigma), axis="x")
    m = template.m_slices
    idx = np.unique(np.round(np.linspace(0, m, min(n_samples, m) + 1)).astype(int))
    times = idx * (duration / m)
    cfg = ProtocolConfig(
        n_qubits=1, encoding=EncodingSpec(omega), noise=spec,
        coupling=CouplingKind.NONE, k=0.0, total_time=duration,
        sample_times=tuple(times))
    trace = ramsey_ensemble(cfg)
    return fit_ramsey(1, trace, init=(omega, 1.0)).gamma_hat


def calibrate_sigma(gamma_target: float, delta_t: float, n_cal_realizations: int,
                    *, spectrum: str = "white", cutoff: float | None = None,
                    correlation_time: float | None = None, omega: float = 20.0,
                    duration: float | None = None, seed: int = 1,
                    rtol: float = 2e-3, max_evals: int = 40) -> float:
    """Field strength whose single-qubit Ramsey decay fits to ``gamma_target``.

    The objective is the full simulate-and-fit pipeline with fixed random
    streams, which makes it a smooth, monotone function of ``sigma``. The
    root is found by Brent's method on ``sigma**2`` after bracketing around
    the PSD-based first guess.
    """
    if gamma_target < 0 or delta_t <= 0:
        raise ValueError("gamma_target must be >= 0 and delta_t > 0")
    if gamma_target == 0:
        return 0.0
    duration = 1.0 / gamma_target if duration is None else duration
    m = int(round(duration / delta_t))
    if m < 1 or abs(m * delta_t - duration) > 1e-9 * duration:
        raise ValueError("duration must be a multiple of delta_t")
    template = NoiseSpec(spectrum=spectrum, sigma=0.0, axis="x",
                         l_realizations=n_cal_realizations, m_slices=m, seed=seed,
                         cutoff=cutoff, correlation_time=correlation_time)
    evals = 0

    def f(var):
        nonlocal evals
        evals += 1
        if evals > max_evals:
            raise CalibrationFailed("evaluation budget exhausted")
        return fitted_gamma(np.sqrt(var), template, omega=omega, duration=duration) - gamma_target

    psd = template.psd_per_variance(omega, delta_t)
    if psd <= 0:
        raise CalibrationFailed(f"noise spectrum has no weight at omega={omega}")
    guess = gamma_target / psd
    lo, hi = guess / 1.5, guess * 1.5
    f_lo, f_hi = f(lo), f(hi)
    for _ in range(8):
        if f_lo < 0 < f_hi:
            break
        if f_lo >= 0:
            hi, f_hi = lo, f_lo
            lo /= 2
            f_lo = f(lo)
        else:
            lo, f_lo = hi, f_hi
            hi *= 2
            f_hi = f(hi)
    else:
        raise CalibrationFailed(
            f"could not bracket gamma={gamma_target} (sigma^2 in [{lo:.4g}, {hi:.4g}])")
    try:
        var = optimize.brentq(f, lo, hi, rtol=rtol)
    except CalibrationFailed:
        raise
    except (ValueError, RuntimeError) as exc:
        raise CalibrationFailed(str(exc)) from exc
    return float(np.sqrt(var))
