"""GHZ Ramsey fringes with and without Zeno protection (4 qubits, Ising K=65).

Run: python demos/03_ramsey_fringes.py
"""
import numpy as np

from qzd import CouplingKind, EncodingSpec, NoiseSpec, ProtocolConfig, fit_ramsey, ramsey_ensemble
from qzd import fringe_sample_times
from qzd.config import FROZEN_SIGMA

sigma = FROZEN_SIGMA[("bandlimited", 80.0)]
noise = NoiseSpec("bandlimited", sigma, "x", l_realizations=50, m_slices=250, seed=1,
                  cutoff=80.0)
times = fringe_sample_times(4, 20.0, 0.25, 1e-3)

# %% Simulate both settings and fit p0 = [1 + cos(N w t) exp(-N g t)]/2
for label, kind, k in (("no QZD", CouplingKind.NONE, 0.0), ("QZD", CouplingKind.ISING, 65.0)):
    cfg = ProtocolConfig(4, EncodingSpec(20.0), noise, kind, k, 0.25, times)
    trace = ramsey_ensemble(cfg)
    fit = fit_ramsey(4, trace)
    print(f"{label:>6}: omega = {fit.omega_hat:.3f} +- {fit.omega_err:.3f}, "
          f"gamma = {fit.gamma_hat:.3f} +- {fit.gamma_err:.3f} s^-1")
    print("        p(t):", np.round(trace.p_mean[::3], 3))
