"""Sensing an ac field with pi pulses at its extrema under x and z noise.

The QFI with respect to the ac frequency grows as N^2 T^4 once the pulses
rectify the signal; without them it stays small.

Run: python demos/06_ac_field_decoupling.py   (about 10 s)
"""
import math

import numpy as np

from qzd import NoiseSpec, acdd_qfi_scan
from qzd.config import FROZEN_SIGMA
from qzd.metrology import loglog_slope

l = 10
noise = (NoiseSpec("bandlimited", FROZEN_SIGMA[("bandlimited", 80.0)], "x", l, 1, 1, cutoff=80.0),
         NoiseSpec("bandlimited", 5.0, "z", l, 1, 1, cutoff=10.0))
n_list, t_list = [2, 3, 4], [0.05, 0.1, 0.2]
kw = dict(omega=50 * math.pi, amplitude=20.0)

# %% With decoupling
table = acdd_qfi_scan(n_list, t_list, noise, 65.0, **kw)
for n, row in zip(n_list, table):
    print(f"N={n}: QFI {np.array2string(row, precision=3)}  slope vs T "
          f"{loglog_slope(t_list, row):.2f}")
print("slope vs N at T=0.2:", round(loglog_slope(n_list, table[:, -1]), 2))

# %% Without pulses at the longest time
off = acdd_qfi_scan(n_list, t_list[-1:], noise, 65.0, dd=False, **kw)
print("DD gain at T=0.2:", np.round(table[:, -1] / off[:, 0], 1))
