"""Which couplings protect a GHZ probe, and how fast does protection set in?

Run: python demos/01_zeno_subspaces.py
"""
import numpy as np

from qzd import (
    eigenprojectors,
    ghz_compatibility,
    h_coupling,
    pauli_on,
    projective_zeno_error,
    strong_coupling_error,
)
from qzd.zeno import ghz_projector

# %% Compatibility: |0...0> and |1...1> must share a private 2-d eigenspace.
print("kind               N  compatible  gap    leaked")
for kind in ("ising", "dipolar", "quadratic_zeeman", "scalar"):
    for n in (2, 4):
        r = ghz_compatibility(kind, n)
        print(f"{kind:<18} {n}  {str(r.is_compatible):<10}  {r.spectral_gap:5.2f}  "
              f"{r.leaked_dimension}")

# %% Eigenspaces of the 3-qubit Ising chain
decomp = eigenprojectors(h_coupling(3, "ising"))
print("\nIsing N=3 eigenvalues:", decomp.eigenvalues, "ranks:", decomp.ranks())

# %% Strong coupling: the error against the Zeno limit falls as 1/K.
n = 4
h = sum(x * pauli_on(n, i + 1, "x") for i, x in enumerate((0.7, 1.3, -0.4, 0.9)))
hc = h_coupling(n, "ising")
print("\nK      strong-coupling error")
for k in (20, 40, 80, 160):
    print(f"{k:<6} {strong_coupling_error(h, hc, k, 1.0):.3e}")

# %% Frequent projective measurement onto the GHZ block: error ~ 1/n.
print("\nn_meas  projective error")
for m in (8, 32, 128, 512):
    print(f"{m:<7} {projective_zeno_error(h, ghz_projector(n), 1.0, m):.3e}")
