"""Piecewise-constant propagation of the noisy encoding dynamics.

Within slice ``m`` every realization ``l`` evolves under

    H = H_en(t_m) + K H_c + sum_i xi_i^{l,m} sigma_x^i [+ sum_i zeta_i^{l,m} sigma_z^i]

which is time independent, so the slice propagator is exact up to
eigensolver rounding. Without coupling the slice Hamiltonian is a sum of
single-qubit terms and the exact propagator is applied qubit by qubit. Realizations are processed in fixed-size chunks; the
chunking never depends on the worker count, which keeps results
bit-identical across schedules.
"""
from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigInvalid
from .noise import NoiseSpec, generate
from .numerics import apply_eig_propagator, expm_ih_t
from .operators import (
    CouplingKind,
    EncodingSpec,
    SystemSpec,
    ghz_circuit,
    h_coupling,
    h_encoding,
    pauli_on,
    z_spins,
)

CHUNK_AMPLITUDES = 8192
_ALIGN_TOL = 1e-9


class Trotter(str, enum.Enum):
    EXACT = "exact"
    ORDER1 = "order1"
    ORDER2 = "order2"


@dataclass(frozen=True)
class PulseSchedule:
    """Instantaneous rotations by ``angle`` about ``axis`` on every qubit."""
    pulse_times: tuple = ()
    axis: str = "x"
    angle: float = math.pi

    def __post_init__(self):
        times = tuple(float(t) for t in self.pulse_times)
        object.__setattr__(self, "pulse_times", times)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("pulse times must be strictly increasing")
        if self.axis != "x":
            raise ValueError("only x-axis pulses are supported")


@dataclass(frozen=True)
class ProtocolConfig:
    """Everything needed to simulate one Ramsey experiment.

    ``noise`` accepts one :class:`NoiseSpec` or several (for example an x and a
    z field); all of them must share ``l_realizations`` and ``m_slices``.
    """
    n_qubits: int
    encoding: EncodingSpec
    noise: tuple = ()
    coupling: CouplingKind = CouplingKind.NONE
    k: float = 0.0
    total_time: float = 0.25
    sample_times: tuple = ()
    dd: PulseSchedule | None = None
    trotter: Trotter = Trotter.EXACT

    def __post_init__(self):
        noise = self.noise
        if isinstance(noise, NoiseSpec):
            noise = (noise,)
        object.__setattr__(self, "noise", tuple(noise))
        object.__setattr__(self, "coupling", CouplingKind(self.coupling))
        object.__setattr__(self, "trotter", Trotter(self.trotter))
        object.__setattr__(self, "sample_times", tuple(float(t) for t in self.sample_times))
        self.validate()

    def validate(self) -> None:
        try:
            SystemSpec(self.n_qubits)
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from exc
        if self.total_time <= 0:
            raise ConfigInvalid("total_time must be > 0")
        if not self.noise:
            raise ConfigInvalid("at least one NoiseSpec is required (sigma may be 0)")
        if len({(s.l_realizations, s.m_slices) for s in self.noise}) != 1:
            raise ConfigInvalid("noise specs disagree on l_realizations or m_slices")
        if len({s.axis for s in self.noise}) != len(self.noise):
            raise ConfigInvalid("at most one noise spec per axis")
        if self.coupling not in (CouplingKind.NONE, CouplingKind.QUADRATIC_ZEEMAN) \
                and self.n_qubits < 2 and self.k != 0:
            raise ConfigInvalid(f"{self.coupling.value} coupling needs n_qubits >= 2")
        if not self.sample_times:
            raise ConfigInvalid("sample_times is empty")
        for t in self.sample_times:
            if t < -_ALIGN_TOL or t > self.total_time * (1 + _ALIGN_TOL):
                raise ConfigInvalid(f"sample time {t} outside [0, {self.total_time}]")
            k = t / self.dt
            if abs(k - round(k)) > 1e-6:
                raise ConfigInvalid(f"sample time {t} is not a slice boundary (dt={self.dt})")
        if self.dd is not None:
            for t in self.dd.pulse_times:
                if t < 0 or t > self.total_time * (1 + _ALIGN_TOL):
                    raise ConfigInvalid(f"pulse time {t} outside [0, {self.total_time}]")

    @property
    def m_slices(self) -> int:
        return self.noise[0].m_slices

    @property
    def l_realizations(self) -> int:
        return self.noise[0].l_realizations

    @property
    def dt(self) -> float:
        return self.total_time / self.m_slices

    @property
    def sample_indices(self) -> np.ndarray:
        return np.rint(np.asarray(self.sample_times) / self.dt).astype(int)

    @property
    def noiseless(self) -> bool:
        return all(s.sigma == 0 for s in self.noise)

    def with_omega(self, omega: float) -> "ProtocolConfig":
        return replace(self, encoding=replace(self.encoding, omega=float(omega)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["coupling"] = self.coupling.value
        d["trotter"] = self.trotter.value
        d["noise"] = [asdict(s) for s in self.noise]
        return d


@dataclass
class RamseyTrace:
    times: np.ndarray
    p_mean: np.ndarray
    p_stderr: np.ndarray
    l_used: int
    # mean <sigma_y> of qubit 1 after readout; lets callers rotate the readout quadrature
    y_mean: np.ndarray | None = field(default=None, repr=False)

    def to_csv(self, path) -> None:
        lines = ["t_s,p_mean,p_stderr"]
        for t, p, e in zip(self.times, self.p_mean, self.p_stderr):
            lines.append(f"{t:.17g},{p:.17g},{e:.17g}")
        Path(path).write_text("\n".join(lines) + "\n")

    def to_json(self, path, config: ProtocolConfig | None = None) -> None:
        payload = {
            "times": [float(t) for t in self.times],
            "p_mean": [float(p) for p in self.p_mean],
            "p_stderr": [float(e) for e in self.p_stderr],
            "l_used": self.l_used,
            "config": None if config is None else config.to_dict(),
        }
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True))


def fringe_sample_times(n_qubits: int, omega: float, t_total: float, dt: float,
                        per_period: int = 6) -> tuple:
    """Slice-aligned grid with ``per_period`` points per fringe period ``2 pi/(N omega)``."""
    step = 2 * math.pi / (n_qubits * omega) / per_period
    k = max(1, int(round(step / dt)))
    n = int(math.floor(t_total / (k * dt) + 1e-9))
    return tuple(i * k * dt for i in range(n + 1))


def dd_schedule(omega: float, t_total: float) -> PulseSchedule:
    """Pulses at the extrema of ``sin(omega t)``: ``t_k = (pi/2 + k pi)/omega``."""
    if omega <= 0:
        raise ValueError("omega must be > 0")
    times = []
    k = 0
    while True:
        t = (math.pi / 2 + k * math.pi) / omega
        if t > t_total * (1 + 1e-12):
            break
        times.append(t)
        k += 1
    return PulseSchedule(tuple(times))


def trotter_step(parts, dt: float, order: int = 1) -> np.ndarray:
    """Product-formula approximation of ``exp(-i sum(parts) dt)``.

    Order 1 is ``e^{-i H_1 dt} ... e^{-i H_n dt}``; order 2 is the symmetric
    (Strang) splitting with half steps on all but the last part.
    """
    parts = list(parts)
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if not parts:
        raise ValueError("parts is empty")
    if order == 1:
        u = np.eye(parts[0].shape[0], dtype=complex)
        for h in parts:
            u = u @ expm_ih_t(h, dt)
        return u
    if order == 2:
        half = [expm_ih_t(h, dt / 2) for h in parts[:-1]]
        u = expm_ih_t(parts[-1], dt)
        for e in reversed(half):
            u = e @ u @ e
        return u
    raise ValueError("order must be 1 or 2")


def _local_rotation(psi: np.ndarray, n: int, mats: np.ndarray) -> np.ndarray:
    """Apply per-realization single-qubit unitaries ``mats[b, i]`` (2x2) to ``psi[b]``."""
    b = psi.shape[0]
    out = psi.reshape((b,) + (2,) * n)
    for i in range(n):
        out = np.moveaxis(out, i + 1, -1)
        out = np.einsum("b...j,bkj->b...k", out, mats[:, i])
        out = np.moveaxis(out, -1, i + 1)
    return out.reshape(b, -1)


def _field_rotations(xi: np.ndarray, zeta: np.ndarray, dt: float) -> np.ndarray:
    """``exp(-i (xi sigma_x + zeta sigma_z) dt)`` for arrays of fields, shape ``(..., 2, 2)``."""
    r = np.hypot(xi, zeta)
    c = np.cos(r * dt)
    s = np.where(r > 0, np.sin(r * dt) / np.where(r > 0, r, 1.0), dt)
    u = np.empty(xi.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = c - 1j * s * zeta
    u[..., 1, 1] = c + 1j * s * zeta
    u[..., 0, 1] = -1j * s * xi
    u[..., 1, 0] = -1j * s * xi
    return u


class _Engine:
    def __init__(self, config: ProtocolConfig, omega: float | None = None):
        self.cfg = config
        self.n = n = config.n_qubits
        self.d = 2 ** n
        self.omega = config.encoding.omega if omega is None else float(omega)
        enc = replace(config.encoding, omega=self.omega)
        self.enc = enc
        self.h_en = h_encoding(n, enc)
        self.h_c = config.k * h_coupling(n, config.coupling) if config.k else \
            np.zeros((self.d, self.d), dtype=complex)
        self.x_ops = np.array([pauli_on(n, i, "x") for i in range(1, n + 1)])
        self.z_diag = z_spins(n)
        prep, readout = ghz_circuit(n)
        self.psi0 = prep[:, 0].copy()
        # readout is a permutation: (R psi)[i] = psi[cols[i]]
        self.readout_cols = np.argmax(np.abs(readout), axis=1)
        # no coupling: H is a sum of single-qubit terms, propagate qubit by qubit
        self.local = not np.any(self.h_c)
        self._drift_cache: dict = {}
        self.pulses = self._place_pulses()

    def _place_pulses(self) -> dict:
        """Map slice index -> list of in-slice offsets; slice -1 holds pulses at t=0."""
        out: dict = {}
        if self.cfg.dd is None:
            return out
        dt = self.cfg.dt
        for t in self.cfg.dd.pulse_times:
            m = int(math.ceil(t / dt - 1e-9)) - 1
            m = min(m, self.cfg.m_slices - 1)
            out.setdefault(m, []).append(t - m * dt if m >= 0 else 0.0)
        return out

    def drift(self, m: int) -> np.ndarray:
        if self.enc.mode == "ac":
            t_mid = (m + 0.5) * self.cfg.dt
            coeff = self.enc.ac_amplitude * math.sin(self.omega * t_mid)
            return coeff * self.h_en + self.h_c
        return self.h_en + self.h_c

    def drift_z(self, m: int) -> float:
        """Coefficient of each ``sigma_z^i`` in the drift (valid without coupling)."""
        if self.enc.mode == "ac":
            t_mid = (m + 0.5) * self.cfg.dt
            return 0.5 * self.enc.ac_amplitude * math.sin(self.omega * t_mid)
        return 0.5 * self.omega

    def drift_eig(self, m: int):
        key = m if self.enc.mode == "ac" else 0
        if key not in self._drift_cache:
            h = self.drift(m)
            self._drift_cache[key] = np.linalg.eigh(0.5 * (h + h.conj().T))
        return self._drift_cache[key]

    def pulse(self, psi: np.ndarray) -> np.ndarray:
        ang = self.cfg.dd.angle
        rot = np.array([[math.cos(ang / 2), -1j * math.sin(ang / 2)],
                        [-1j * math.sin(ang / 2), math.cos(ang / 2)]])
        if abs(ang - math.pi) < 1e-15:
            # (-i X)^{(x)N} reverses the computational basis
            return ((-1j) ** self.n) * psi[:, ::-1]
        mats = np.broadcast_to(rot, (psi.shape[0], self.n, 2, 2))
        return _local_rotation(psi, self.n, mats)

    def fields(self, ls):
        cfg = self.cfg
        xi = zeta = None
        for spec in cfg.noise:
            vals = generate(spec, self.n, cfg.total_time, realizations=ls).values
            if spec.axis == "x":
                xi = vals
            else:
                zeta = vals
        shape = (len(ls), cfg.m_slices, self.n)
        return (np.zeros(shape) if xi is None else xi,
                np.zeros(shape) if zeta is None else zeta)

    def _segment(self, psi, m, xi_m, zeta_m, durations, noisy):
        """Evolve through slice ``m`` split into ``durations`` with pulses between them."""
        mode = self.cfg.trotter
        if mode is Trotter.EXACT and noisy and self.local:
            z_m = zeta_m + self.drift_z(m)
            for a, tau in enumerate(durations):
                if a:
                    psi = self.pulse(psi)
                if tau > 0:
                    psi = _local_rotation(psi, self.n, _field_rotations(xi_m, z_m, tau))
            return psi
        if mode is Trotter.EXACT:
            if noisy:
                h = self.drift(m)[None] + np.einsum("bi,ijk->bjk", xi_m, self.x_ops)
                idx = np.arange(self.d)
                h[:, idx, idx] += zeta_m @ self.z_diag
                w, v = np.linalg.eigh(h)
            else:
                w, v = self.drift_eig(m)
            for a, tau in enumerate(durations):
                if a:
                    psi = self.pulse(psi)
                if tau > 0:
                    psi = apply_eig_propagator(w, v, psi, tau)
            return psi
        w, v = self.drift_eig(m)
        for a, tau in enumerate(durations):
            if a:
                psi = self.pulse(psi)
            if tau <= 0:
                continue
            if not noisy:
                psi = apply_eig_propagator(w, v, psi, tau)
            elif mode is Trotter.ORDER1:
                psi = _local_rotation(psi, self.n, _field_rotations(xi_m, zeta_m, tau))
                psi = apply_eig_propagator(w, v, psi, tau)
            else:
                psi = apply_eig_propagator(w, v, psi, tau / 2)
                psi = _local_rotation(psi, self.n, _field_rotations(xi_m, zeta_m, tau))
                psi = apply_eig_propagator(w, v, psi, tau / 2)
        return psi

    def run(self, ls, fields=None) -> np.ndarray:
        """States at the sample times, shape ``(len(ls), n_samples, d)``."""
        cfg = self.cfg
        ls = list(ls)
        xi, zeta = self.fields(ls) if fields is None else fields
        noisy = not cfg.noiseless
        dt = cfg.dt
        psi = np.tile(self.psi0, (len(ls), 1))
        if -1 in self.pulses:
            for _ in self.pulses[-1]:
                psi = self.pulse(psi)
        want = cfg.sample_indices
        out = np.empty((len(ls), len(want), self.d), dtype=complex)
        hit = {int(k): [j for j, w in enumerate(want) if w == k] for k in set(want.tolist())}
        for j in hit.get(0, []):
            out[:, j] = psi
        for m in range(cfg.m_slices):
            offsets = self.pulses.get(m, [])
            cuts = [0.0] + offsets + [dt]
            durations = [b - a for a, b in zip(cuts, cuts[1:])]
            psi = self._segment(psi, m, xi[:, m], zeta[:, m], durations, noisy)
            for j in hit.get(m + 1, []):
                out[:, j] = psi
        return out

    def readout(self, states: np.ndarray):
        """``<sigma_x^1>`` and ``<sigma_y^1>`` after the disentangling circuit."""
        phi = states[..., self.readout_cols]
        half = self.d // 2
        overlap = np.sum(phi[..., :half].conj() * phi[..., half:], axis=-1)
        return 2 * overlap.real, 2 * overlap.imag


def _chunks(l_total: int, dim: int):
    # depends on the Hilbert-space size only, never on the worker count
    size = int(np.clip(CHUNK_AMPLITUDES // dim, 8, 512))
    return [range(a, min(a + size, l_total)) for a in range(0, l_total, size)]


def ensemble_states(config: ProtocolConfig, omega: float | None = None,
                    workers: int = 1) -> np.ndarray:
    """Per-realization states at the sample times, shape ``(L, n_samples, 2^N)``.

    ``omega`` overrides the encoded frequency while keeping the noise streams
    and the pulse schedule fixed.
    """
    return ensemble_states_multi(config, [omega], workers)[0]


def ensemble_states_multi(config: ProtocolConfig, omegas, workers: int = 1) -> list:
    """:func:`ensemble_states` for several frequencies sharing one noise draw per chunk."""
    engines = [_Engine(config, w) for w in omegas]
    chunks = _chunks(config.l_realizations, engines[0].d)
    if config.noiseless:
        return [np.repeat(e.run([0]), config.l_realizations, axis=0) for e in engines]

    def work(ls):
        fields = engines[0].fields(list(ls))
        return [e.run(ls, fields) for e in engines]

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    return [np.concatenate([p[k] for p in parts], axis=0) for k in range(len(engines))]


def propagate(config: ProtocolConfig, realization_index: int) -> np.ndarray:
    """Trajectory of realization ``l`` at the sample times, shape ``(n_samples, 2^N)``."""
    if not 0 <= realization_index < config.l_realizations:
        raise ConfigInvalid(f"realization {realization_index} outside 0..{config.l_realizations - 1}")
    return _Engine(config).run([realization_index])[0]


def readout_moments(config: ProtocolConfig, omega: float | None = None,
                    workers: int = 1):
    """Per-realization ``<sigma_x^1>``, ``<sigma_y^1>`` after readout, each ``(L, n_samples)``."""
    return readout_moments_multi(config, [omega], workers)[0]


def readout_moments_multi(config: ProtocolConfig, omegas, workers: int = 1) -> list:
    """:func:`readout_moments` at several frequencies with common noise."""
    states = ensemble_states_multi(config, omegas, workers)
    return [_Engine(config, w).readout(st) for w, st in zip(omegas, states)]


def ramsey_ensemble(config: ProtocolConfig, workers: int = 1,
                    omega: float | None = None) -> RamseyTrace:
    """Ensemble-averaged GHZ Ramsey fringe ``p = (1 + <sigma_x^1>)/2``."""
    x, y = readout_moments(config, omega, workers)
    p = 0.5 * (1 + x)
    L = p.shape[0]
    stderr = p.std(axis=0, ddof=1) / math.sqrt(L) if L > 1 else np.zeros(p.shape[1])
    return RamseyTrace(times=np.asarray(config.sample_times), p_mean=p.mean(axis=0),
                       p_stderr=stderr, l_used=L, y_mean=y.mean(axis=0))


def _aligned(config: ProtocolConfig, t: float) -> float:
    k = t / config.dt
    if t < 0 or t > config.total_time * (1 + _ALIGN_TOL) or abs(k - round(k)) > 1e-6:
        raise ConfigInvalid(f"t={t} is not a slice boundary in [0, {config.total_time}]")
    return round(k) * config.dt


def density_from_states(states: np.ndarray) -> np.ndarray:
    """``(1/L) sum_l |psi_l><psi_l|`` for states of shape ``(L, d)``."""
    return states.T @ states.conj() / states.shape[0]


def final_density_matrix(config: ProtocolConfig, t: float, omega: float | None = None,
                         workers: int = 1) -> np.ndarray:
    """Ensemble density operator before readout at slice boundary ``t``."""
    cfg = replace(config, sample_times=(_aligned(config, t),))
    states = ensemble_states(cfg, omega, workers)[:, 0]
    return density_from_states(states)
