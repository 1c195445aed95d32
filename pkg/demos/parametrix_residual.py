"""Build a parametrix for a variable-coefficient Laplacian and watch the
residual shrink on high-frequency waves.

Run: python3 demos/parametrix_residual.py
"""

import numpy as np

from psido import expr as ex
from psido.calculus import compose, parametrix
from psido.quantize import GridFunction, op_apply, sobolev_norm
from psido.symbols import ClassicalSymbol

# P = (1 + 0.5 sin x1) |xi|^2 on the 2-torus
P = ClassicalSymbol.single(
    ex.mul(ex.ONE + ex.mul(ex.Const(0.5), ex.sin(ex.x(1))),
           ex.xi_norm_sq(2)),
    2.0, 2, truncation_order=6)

M = 128
print("residual norm of (Q_N P - I) e^{i k x1}")
print(f"{'N':>3} " + " ".join(f"{f'k={k}':>12}" for k in (4, 8, 16, 32)))
for N in (1, 2, 3, 4):
    Q = parametrix(P, N)
    R = compose(Q, P, truncation=N + 1)
    row = []
    for k in (4, 8, 16, 32):
        u = GridFunction.single_mode(2, M, [k, 0])
        res = op_apply(R, u).values - u.values
        row.append(sobolev_norm(GridFunction(2, M, res), 0.0))
    print(f"{N:>3} " + " ".join(f"{v:12.3e}" for v in row))
print("each extra order buys one extra power of 1/k")
