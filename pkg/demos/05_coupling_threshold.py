"""Minimum quadratic-Zeeman coupling that keeps the fringe amplitude above 0.9.

Run: python demos/05_coupling_threshold.py   (a few minutes)
"""
import numpy as np

from qzd import NoiseSpec, kth_scan
from qzd.config import FROZEN_SIGMA

noise = NoiseSpec("bandlimited", FROZEN_SIGMA[("bandlimited", 80.0)], "x", 20, 500, 1,
                  cutoff=80.0)
res = kth_scan([2, 3, 4], [0, 4, 8, 12, 16, 24, 32, 40], noise, t_total=0.5,
               progress=lambda n, k, c: print(f"  N={n} K={k:>4g} contrast={c:.3f}"))

# %% Threshold per N and the K_th = c1/N + c2 fit
for n, k in zip(res.n_list, res.k_th):
    print(f"N={n}: K_th = {k:.2f} s^-1")
print(f"fit: c1 = {res.c1:.1f}, c2 = {res.c2:.2f}, R^2 = {res.r2:.3f}")
