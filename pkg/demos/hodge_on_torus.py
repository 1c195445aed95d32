"""Split a random 1-form on the 2-torus into harmonic, exact, and
co-exact pieces, and read off the Betti numbers.

Run: python3 demos/hodge_on_torus.py
"""

import numpy as np

from psido.hodge import (FormField, betti, codifferential, ext_d,
                         hodge_decompose, inner)


def norm(w):
    return float(np.sqrt(abs(inner(w, w))))


w = FormField.random_band_limited(2, 1, 32, band=4,
                                  rng=np.random.default_rng(7))
h, e, c = hodge_decompose(w)

print(f"|w|        = {norm(w):.6f}")
print(f"|harmonic| = {norm(h):.6f}")
print(f"|exact|    = {norm(e):.6f}   |d(exact)|    = {norm(ext_d(e)):.2e}")
print(f"|coexact|  = {norm(c):.6f}   |delta(coex)| = "
      f"{norm(codifferential(c)):.2e}")
pyth = np.sqrt(norm(h) ** 2 + norm(e) ** 2 + norm(c) ** 2)
print(f"pythagoras: {pyth:.6f} vs {norm(w):.6f}")

print()
for n in (1, 2, 3):
    print(f"T^{n} betti numbers:",
          [betti(n, j) for j in range(n + 1)])
