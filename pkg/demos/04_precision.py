"""Frequency precision from the simulated readout versus the closed forms.

Parallel setting: nu = T/t repetitions. Sequential: nu = 2T/t.

Run: python demos/04_precision.py   (about 15 s)
"""
import numpy as np

from qzd import (
    CouplingKind,
    EncodingSpec,
    NoiseSpec,
    ProtocolConfig,
    precision_parallel,
    precision_sequential,
    precision_trace,
)
from qzd.config import FROZEN_SIGMA

sigma = FROZEN_SIGMA[("bandlimited", 80.0)]

# %% Closed forms for N=4, gamma=1, T=0.25 s
t_opt, d_opt = precision_parallel(4, 1.0, 0.25)
print(f"parallel optimum: t = {t_opt:.3f} s, delta_omega = {d_opt:.3f} s^-1")
print(f"sequential, gamma=0, t=2T: {precision_sequential(4, 0.0, 0.5, 0.25):.3f} s^-1")

# %% Sequential scan over (0, 2T] from simulation
# eight points on (0, 2T], rounded to the 1 ms slice grid
times = tuple(np.round(np.arange(1, 9) * 0.0625, 3))
print("\n t      no QZD  theory  |  QZD    theory")
rows = {}
for qzd, l in ((False, 400), (True, 50)):
    noise = NoiseSpec("bandlimited", sigma, "x", l, 500, 1, cutoff=80.0)
    cfg = ProtocolConfig(4, EncodingSpec(20.0), noise,
                         CouplingKind.ISING if qzd else CouplingKind.NONE,
                         65.0 if qzd else 0.0, 0.5, times)
    rows[qzd] = [p.delta_omega for p in precision_trace(cfg, "sequential", 0.25)]
for i, t in enumerate(times):
    print(f"{t:.3f}  {rows[False][i]:6.3f}  {precision_sequential(4, 1.0, t, 0.25):6.3f}  |  "
          f"{rows[True][i]:5.3f}  {precision_sequential(4, 0.0, t, 0.25):6.3f}")
