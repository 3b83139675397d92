"""
Kinetic moments under a frozen extensional flow
===============================================

For a spatially uniform velocity gradient G = diag(kappa, -kappa) the
second moments of the kinetic solution obey a closed linear matrix ODE,

    dC/dt = G C + C G^T + (gamma_2/lambda) I - (gamma_1/(lambda gamma_M)) C.

With unit constants its solution is known in closed form; the kinetic
solver reproduces it up to the first-order time error.
"""

import numpy as np

from peterlin.config import parse_config
from peterlin.driver import run_kp


def closed_form(kappa, t):
    def comp(rate):
        fix = -1.0 / rate
        return fix + (1.0 - fix) * np.exp(rate * t)
    return np.array([comp(2 * kappa - 1), 0.0, comp(-2 * kappa - 1)])


kappa = 0.1
for dt in (4e-3, 2e-3, 1e-3):
    cfg = parse_config(f"""
        mode = kp
        dt = {dt}
        t_end = 1
        nx = 8
        N_H = 8
        frozen_grad_u = {kappa} 0 0 {-kappa}
        output_every = 1000000
    """)
    result = run_kp(cfg, write=False)
    C = result.C[:, 0, 0]
    err = np.max(np.abs(C - closed_form(kappa, 1.0)))
    print(f"dt = {dt:.0e}:  C11 = {C[0]:.6f}  C22 = {C[2]:.6f}  error {err:.2e}")

print("closed form at t = 1:", closed_form(kappa, 1.0))
