"""Trace bicharacteristic rays of a wave-speed symbol and check that the
symbol is conserved along the flow.

Run: python3 demos/bicharacteristic_rays.py
"""

import numpy as np

from psido import expr as ex
from psido.hamilton import flow
from psido.symbols import HomogeneousTerm

# c(x) |xi| with a gently varying speed c(x) = 1 + 0.3 sin x1
p = HomogeneousTerm(
    ex.mul(ex.ONE + ex.mul(ex.Const(0.3), ex.sin(ex.x(1))),
           ex.xi_norm(2)),
    1.0, 2)

rng = np.random.default_rng(0)
print(f"{'theta':>8} {'endpoint x':>24} {'drift':>10} {'steps':>6}")
for _ in range(5):
    th = rng.uniform(0, 2 * np.pi)
    start = [rng.uniform(0, 2 * np.pi), rng.uniform(0, 2 * np.pi),
             np.cos(th), np.sin(th)]
    b = flow(p, start, 3.0, tol=1e-10)
    e = b.endpoint()
    print(f"{th:8.3f} ({e.x[0]:10.4f},{e.x[1]:10.4f}) "
          f"{b.conservation_drift():10.2e} {len(b.times) - 1:6d}")
print("rays bend toward slow regions; p stays constant along each ray")
