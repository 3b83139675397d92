"""Macroscopic Peterlin conformation-tensor equation.

Advection, upper-convected stretching and the relaxation/reaction terms are
explicit; centre-of-mass diffusion ``eps * Laplacian C`` is implicit in
Fourier space.

The weak form of this equation is often written with a ``-2 (grad u) C : D``
term; for symmetric C and symmetric test tensors that equals the strong-form
``(grad u) C + C (grad u)^T`` used here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constitutive import GammaSpec, NondimParams, gamma_eval
from .errors import BlowupError
from .grid import TorusGrid2D


@dataclass
class MPState:
    C: np.ndarray
    time: float = 0.0

    @property
    def trace(self):
        return self.C[0] + self.C[2]

    @property
    def nonpositive_trace(self):
        return bool(np.any(self.trace <= 0))


def stretching(G, C):
    """Symmetric assembly of ``G C + C G^T`` with C as (C11, C12, C22)."""
    c11, c12, c22 = C[0], C[1], C[2]
    s11 = 2.0 * (G[0, 0] * c11 + G[0, 1] * c12)
    s12 = G[0, 0] * c12 + G[0, 1] * c22 + G[1, 0] * c11 + G[1, 1] * c12
    s22 = 2.0 * (G[1, 0] * c12 + G[1, 1] * c22)
    return np.stack(np.broadcast_arrays(s11, s12, s22))


def reaction(C, gamma1: GammaSpec, gamma2: GammaSpec, params: NondimParams):
    """``gamma_2(tr C)/lambda I - gamma_1(tr C)/(lambda gamma_M) C``."""
    trC = np.maximum(C[0] + C[2], 0.0)
    source = gamma_eval(gamma2, trC) / params.lam
    sink = gamma_eval(gamma1, trC) / (params.lam * params.gamma_M)
    R = -sink * C
    R[0] += source
    R[2] += source
    return R


def min_eigenvalue(C):
    """Smallest eigenvalue per cell of the symmetric 2x2 tensor."""
    half_tr = 0.5 * (C[0] + C[2])
    disc = np.sqrt(0.25 * (C[0] - C[2]) ** 2 + C[1] ** 2)
    return half_tr - disc


def mp_step(grid: TorusGrid2D, state: MPState, u, gamma1: GammaSpec, gamma2: GammaSpec,
            params: NondimParams, dt, grad_u=None) -> MPState:
    """Advance the conformation tensor by one IMEX Euler step.

    ``grad_u`` overrides the velocity gradient used for stretching (e.g. a
    spatially uniform, frozen ``G`` in homogeneous tests where no periodic
    velocity field realises it).
    """
    C = state.C
    G = grid.velocity_gradient(u) if grad_u is None else np.asarray(grad_u, dtype=float)
    if grad_u is None:
        C_f = grid.filter(C)
        explicit = -grid.advect(u, C) + grid.filter(stretching(G, C_f))
    else:
        G = G.reshape((2, 2) + (1,) * (C.ndim - 1)) if G.ndim == 2 else G
        explicit = -grid.advect(u, C) + stretching(G, C)
    explicit = explicit + reaction(C, gamma1, gamma2, params)
    C_new = grid.implicit_diffusion(C + dt * explicit, params.eps, dt)
    if not np.all(np.isfinite(C_new)):
        bad = np.argwhere(~np.isfinite(C_new))[0]
        raise BlowupError("conformation tensor", cell=tuple(int(i) for i in bad[1:]))
    return MPState(C=C_new, time=state.time + dt)
