"""Scenario runners behind the command-line front end.

Each runner takes a resolved :class:`~qzd.config.RunConfig` and returns a
``ScenarioResult``: CSV tables (header plus rows) and a JSON-able summary.
Nothing here writes files or depends on wall-clock time, so identical
configurations give identical results.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .config import RunConfig, frozen_sigma
from .evolve import ProtocolConfig, fringe_sample_times, ramsey_ensemble
from .metrology import (
    acdd_qfi_scan,
    fit_ramsey,
    kth_scan,
    loglog_slope,
    precision_parallel,
    precision_sequential,
    precision_trace,
)
from .noise import NoiseSpec, calibrate_sigma, fitted_gamma
from .operators import CouplingKind, EncodingSpec
from .zeno import ghz_compatibility

log = logging.getLogger("qzd")

CONVENTIONS = {
    "units": "omega, gamma, sigma, K and cutoffs are angular rates in s^-1; times in s",
    "fringe": "p0 = [1 + cos(N omega t) exp(-N gamma t)] / 2",
    "nu_parallel": "T/t",
    "nu_sequential": "2T/t",
}


@dataclass
class ScenarioResult:
    tables: dict = field(default_factory=dict)  # file name -> (header, rows)
    summary: dict = field(default_factory=dict)


def _dt(cfg: RunConfig) -> float:
    return cfg["protocol.total_time"] / cfg["protocol.slices"]


def resolve_sigma(cfg: RunConfig) -> tuple[float, str]:
    """Field strength for the x noise and where it came from."""
    if cfg["noise.sigma"] is not None:
        return cfg["noise.sigma"], "config"
    sigma = frozen_sigma(cfg["noise.spectrum"], cfg["noise.cutoff"],
                         cfg["noise.gamma_target"], _dt(cfg))
    if sigma is not None:
        return sigma, "frozen"
    log.info("no frozen sigma for this noise model; calibrating")
    sigma = _calibrate(cfg, cfg["noise.calibration_realizations"])
    return sigma, "calibrated"


def _calibrate(cfg: RunConfig, n_cal: int) -> float:
    return calibrate_sigma(cfg["noise.gamma_target"], _dt(cfg), n_cal,
                           spectrum=cfg["noise.spectrum"], cutoff=cfg["noise.cutoff"],
                           correlation_time=cfg["noise.correlation_time"],
                           omega=cfg["encoding.omega"] or 20.0, seed=cfg["seed"])


def _x_noise(cfg: RunConfig, sigma: float, l: int, m: int) -> NoiseSpec:
    return NoiseSpec(spectrum=cfg["noise.spectrum"], sigma=sigma, axis="x",
                     l_realizations=l, m_slices=m, seed=cfg["seed"],
                     correlation_time=cfg["noise.correlation_time"],
                     cutoff=cfg["noise.cutoff"] if cfg["noise.spectrum"] == "bandlimited" else None)


def _protocol(cfg: RunConfig, sigma: float, n: int, *, total_time: float | None = None,
              coupling: str | None = None, k: float | None = None,
              sample_times=None) -> ProtocolConfig:
    dt = _dt(cfg)
    t_total = cfg["protocol.total_time"] if total_time is None else total_time
    m = int(round(t_total / dt))
    kind = CouplingKind(cfg["coupling.kind"] if coupling is None else coupling)
    k = cfg["coupling.k"] if k is None else k
    if n < 2 and kind is not CouplingKind.QUADRATIC_ZEEMAN:
        kind, k = CouplingKind.NONE, 0.0
    if sample_times is None:
        sample_times = fringe_sample_times(n, cfg["encoding.omega"], m * dt, dt,
                                           cfg["protocol.samples_per_period"])
    return ProtocolConfig(n_qubits=n, encoding=EncodingSpec(cfg["encoding.omega"]),
                          noise=_x_noise(cfg, sigma, cfg["protocol.realizations"], m),
                          coupling=kind, k=k, total_time=m * dt,
                          sample_times=tuple(sample_times), trotter=cfg["protocol.trotter"])


def _align(t: float, dt: float) -> float:
    return max(1, round(t / dt)) * dt


# ---------------------------------------------------------------------------

def run_calibrate(cfg: RunConfig, workers: int = 1) -> ScenarioResult:
    n_cal = cfg["noise.calibration_realizations"]
    sigma = _calibrate(cfg, n_cal)
    dt = _dt(cfg)
    gamma = cfg["noise.gamma_target"]
    duration = 1.0 / gamma if gamma > 0 else cfg["protocol.total_time"]
    m = int(round(duration / dt))
    template = _x_noise(cfg, 0.0, n_cal, m)
    omega = cfg["encoding.omega"] or 20.0
    same = fitted_gamma(sigma, template, omega=omega, duration=m * dt) if gamma > 0 else 0.0
    fresh = fitted_gamma(sigma, replace(template, seed=cfg["seed"] + 1), omega=omega,
                         duration=m * dt) if gamma > 0 else 0.0
    log.info("sigma = %.6g s^-1, re-fit gamma = %.4f (same seed), %.4f (seed+1)",
             sigma, same, fresh)
    rows = [[sigma, gamma, same, fresh]]
    return ScenarioResult(
        tables={"calibration.csv": (["sigma", "gamma_target", "gamma_hat_same_seed",
                                     "gamma_hat_fresh_seed"], rows)},
        summary={"sigma": sigma, "gamma_target": gamma, "gamma_hat_same_seed": same,
                 "gamma_hat_fresh_seed": fresh, "calibration_realizations": n_cal,
                 "calibration_window_s": m * dt})


def run_ramsey(cfg: RunConfig, workers: int = 1) -> ScenarioResult:
    sigma, origin = resolve_sigma(cfg)
    n = cfg["system.n_qubits"]
    pc = _protocol(cfg, sigma, n)
    trace = ramsey_ensemble(pc, workers=workers)
    fit = fit_ramsey(n, trace, init=(cfg["encoding.omega"], max(cfg["noise.gamma_target"], 0.1)))
    precision = {p.t: p.delta_omega for p in precision_trace(pc, "parallel", workers=workers)}
    log.info("N=%d fit: omega=%.4f gamma=%.4f", n, fit.omega_hat, fit.gamma_hat)
    rows = [[n, t, p, e, fit.omega_hat, fit.gamma_hat, precision.get(t, float("inf"))]
            for t, p, e in zip(trace.times, trace.p_mean, trace.p_stderr)]
    header = ["N", "t", "p_mean", "p_stderr", "omega_hat", "gamma_hat", "delta_omega"]
    return ScenarioResult(
        tables={"fig3b.csv": (header, rows)},
        summary={"sigma": sigma, "sigma_origin": origin, "n_qubits": n,
                 "omega_hat": fit.omega_hat, "gamma_hat": fit.gamma_hat,
                 "omega_err": fit.omega_err, "gamma_err": fit.gamma_err,
                 "converged": fit.converged, "coupling": pc.coupling.value, "k": pc.k,
                 "realizations": pc.l_realizations})


def run_parallel_scan(cfg: RunConfig, workers: int = 1) -> ScenarioResult:
    """No-QZD precision at its optimal time versus QZD precision at ``t = T``."""
    sigma, origin = resolve_sigma(cfg)
    gamma = cfg["noise.gamma_target"]
    t_total = cfg["protocol.total_time"]
    dt = _dt(cfg)
    rows, ratio_sq, ratio_sq_theory, ns = [], [], [], []
    for n in (int(x) for x in cfg["scan.n_list"]):
        t_opt, theory_opt = precision_parallel(n, gamma, t_total)
        t_opt = _align(t_opt, dt)
        off = _protocol(cfg, sigma, n, coupling="none", k=0.0, sample_times=(t_opt,))
        p_off = precision_trace(off, "parallel", t_total, workers=workers)[0]
        on = _protocol(cfg, sigma, n, sample_times=(t_total,))
        p_on = precision_trace(on, "parallel", t_total, workers=workers)[0]
        theory_on = 1.0 / (n * t_total)
        rows.append([n, 0, t_opt, p_off.delta_omega, theory_opt])
        rows.append([n, 1, t_total, p_on.delta_omega, theory_on])
        ns.append(n)
        ratio_sq.append((p_off.delta_omega / p_on.delta_omega) ** 2)
        ratio_sq_theory.append((theory_opt / p_on.delta_omega) ** 2)
        log.info("N=%d: no-QZD %.4f at t=%.4f, QZD %.4f at t=T", n, p_off.delta_omega,
                 t_opt, p_on.delta_omega)
    summary = {"sigma": sigma, "sigma_origin": origin, "n_list": ns,
               "ratio_sq": ratio_sq, "ratio_sq_theory_numerator": ratio_sq_theory}
    if len(ns) >= 2:
        summary["ratio_sq_linear_fit"] = _linear_fit(ns, ratio_sq)
    return ScenarioResult(
        tables={"parallel.csv": (["N", "with_qzd", "t", "delta_omega", "delta_omega_theory"],
                                 rows)},
        summary=summary)


def run_sequential_scan(cfg: RunConfig, workers: int = 1) -> ScenarioResult:
    """Sequential precision over ``(0, 2T]`` with and without QZD."""
    sigma, origin = resolve_sigma(cfg)
    n = cfg["system.n_qubits"]
    gamma = cfg["noise.gamma_target"]
    t_ref = cfg["protocol.total_time"]
    dt = _dt(cfg)
    m_total = int(round(2 * t_ref / dt))
    idx = np.unique(np.round(np.linspace(0, m_total, cfg["scan.t_points"] + 1)[1:]).astype(int))
    times = tuple(i * dt for i in idx)
    rows, summary = [], {"sigma": sigma, "sigma_origin": origin, "n_qubits": n}
    for qzd in (False, True):
        pc = _protocol(cfg, sigma, n, total_time=m_total * dt, sample_times=times,
                       **({} if qzd else {"coupling": "none", "k": 0.0}))
        points = precision_trace(pc, "sequential", t_ref, workers=workers)
        theory = precision_sequential(n, 0.0 if qzd else gamma, [p.t for p in points], t_ref)
        for p, th in zip(points, theory):
            rows.append([n, int(qzd), p.t, p.delta_omega, float(th)])
        best = min(points, key=lambda p: p.delta_omega)
        tag = "qzd" if qzd else "no_qzd"
        summary[f"{tag}_optimum"] = {"t": best.t, "delta_omega": best.delta_omega}
        summary[f"{tag}_at_2T"] = points[-1].delta_omega
        summary[f"{tag}_max_rel_dev"] = float(np.max(np.abs(
            np.array([p.delta_omega for p in points]) / theory - 1)))
    return ScenarioResult(
        tables={"fig3c.csv": (["N", "with_qzd", "t", "delta_omega", "delta_omega_theory"],
                              rows)},
        summary=summary)


def run_kth_scan(cfg: RunConfig, workers: int = 1) -> ScenarioResult:
    sigma, origin = resolve_sigma(cfg)
    dt = _dt(cfg)
    t = _align(cfg["kth.time"], dt)
    noise = _x_noise(cfg, sigma, cfg["kth.realizations"], int(round(t / dt)))
    res = kth_scan([int(x) for x in cfg["scan.n_list"]], cfg["kth.k_grid"], noise,
                   omega=cfg["encoding.omega"], t_total=t,
                   coupling=CouplingKind(cfg["kth.coupling"]), level=cfg["kth.level"],
                   workers=workers,
                   progress=lambda n, k, c: log.info("N=%d K=%g contrast=%.4f", n, k, c))
    rows = [[n, float(k), float(res.contrast[a, b]), float(res.k_th[a])]
            for a, n in enumerate(res.n_list) for b, k in enumerate(res.k_grid)]
    return ScenarioResult(
        tables={"fig4a.csv": (["N", "K", "contrast", "K_th"], rows)},
        summary={"sigma": sigma, "sigma_origin": origin, "time": t,
                 "k_th": dict(zip(map(str, res.n_list), map(float, res.k_th))),
                 "c1": res.c1, "c2": res.c2, "r2": res.r2})


def run_acdd(cfg: RunConfig, workers: int = 1) -> ScenarioResult:
    sigma, origin = resolve_sigma(cfg)
    dt = _dt(cfg)
    l = cfg["acdd.realizations"]
    specs = (_x_noise(cfg, sigma, l, 1),
             NoiseSpec("bandlimited", cfg["acdd.dephasing_sigma"], "z", l, 1, cfg["seed"],
                       cutoff=cfg["acdd.dephasing_cutoff"]))
    n_list = [int(x) for x in cfg["acdd.n_list"]]
    t_list = [_align(t, dt) for t in cfg["acdd.t_list"]]
    kw = dict(omega=cfg["acdd.omega"], amplitude=cfg["acdd.amplitude"], dt=dt,
              coupling=CouplingKind(cfg["coupling.kind"]), workers=workers)
    table = acdd_qfi_scan(n_list, t_list, specs, cfg["coupling.k"], dd=cfg["acdd.dd"], **kw)
    rows = [[n, t, float(table[a, b]), int(cfg["acdd.dd"])]
            for a, n in enumerate(n_list) for b, t in enumerate(t_list)]
    summary = {"sigma": sigma, "sigma_origin": origin, "dd": cfg["acdd.dd"]}
    if len(t_list) >= 2:
        summary["slope_vs_T"] = {str(n): loglog_slope(t_list, table[a])
                                 for a, n in enumerate(n_list)}
    if len(n_list) >= 2:
        summary["slope_vs_N"] = {repr(t): loglog_slope(n_list, table[:, b])
                                 for b, t in enumerate(t_list)}
    if cfg["acdd.dd"]:
        # comparison run without pulses at the longest time
        off = acdd_qfi_scan(n_list, t_list[-1:], specs, cfg["coupling.k"], dd=False, **kw)
        rows += [[n, t_list[-1], float(off[a, 0]), 0] for a, n in enumerate(n_list)]
        summary["dd_gain_at_max_T"] = {str(n): float(table[a, -1] / off[a, 0])
                                       for a, n in enumerate(n_list)}
    return ScenarioResult(tables={"fig4b.csv": (["N", "T", "qfi", "dd"], rows)},
                          summary=summary)


def run_zeno_check(cfg: RunConfig, workers: int = 1) -> ScenarioResult:
    n = cfg["system.n_qubits"]
    report = ghz_compatibility(cfg["coupling.kind"], n)
    return ScenarioResult(summary={"coupling": cfg["coupling.kind"], "n_qubits": n,
                                   **report.to_dict()})


RUNNERS = {
    "calibrate": run_calibrate,
    "ramsey": run_ramsey,
    "parallel-scan": run_parallel_scan,
    "sequential-scan": run_sequential_scan,
    "kth-scan": run_kth_scan,
    "ac-dd": run_acdd,
    "zeno-check": run_zeno_check,
}


def _linear_fit(x, y) -> dict:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else float("nan")
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2}

