"""
Relaxation of a Gaussian configuration density
==============================================

With the flow at rest the kinetic equation reduces to the
Ornstein-Uhlenbeck operator, which is diagonal in the Maxwellian-weighted
Hermite basis. A Gaussian initial density relaxes to the Maxwellian: every
mode of degree k shrinks by 1/(1 + dt Gamma k / a) per step, the
conformation tensor returns to a*I and the relative entropy decreases to 0.
"""

import numpy as np

from peterlin.diagnostics import fisher_information, radial_moment, relative_entropy
from peterlin.fokker_planck import (HermiteBasis, conformation_from_coeffs, gaussian_psi_hat,
                                    ou_implicit_solve)

basis = HermiteBasis(N_H=8)
print(basis, "with", basis.n_modes, "modes and", basis.n_quad, "nodes per axis")

# Gram matrix under the stored quadrature
print("Gram matrix error:", np.max(np.abs(basis.gram() - np.eye(basis.n_modes))))

C0 = np.array([[1.3, 0.0], [0.0, 0.9]])
c = gaussian_psi_hat(C0, basis)
print("mass coefficient:", c[basis.i00])
print("C from coefficients:", conformation_from_coeffs(c, basis))
print("smallest nodal value of psi_hat:", basis.evaluate(c).min())

Gamma, dt = 0.5, 0.05
print("\n time   entropy      fisher       C11      C22      <|R|^4>")
for n in range(201):
    if n % 40 == 0:
        C = conformation_from_coeffs(c, basis)
        print(f"{n * dt:5.1f}  {relative_entropy(c, basis):.4e}  "
              f"{fisher_information(c, basis):.4e}  {C[0]:.5f}  {C[2]:.5f}  "
              f"{radial_moment(c, 4, basis):.5f}")
    c = ou_implicit_solve(c, Gamma, dt, basis)

# a density too wide for the Maxwellian weight cannot be represented
try:
    gaussian_psi_hat(np.diag([2.5, 1.0]), basis)
except ValueError as exc:
    print("\nrejected:", exc)
