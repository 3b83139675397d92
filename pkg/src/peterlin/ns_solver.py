"""Incompressible Navier-Stokes stepper forced by the Kramers polymer stress."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constitutive import GammaSpec, gamma_eval
from .errors import BlowupError, InvalidParameterError, PositivityError, StepRejectedError
from .grid import TorusGrid2D

CFL_LIMIT = 0.5


@dataclass
class NSState:
    u: np.ndarray
    p: np.ndarray
    time: float = 0.0


@dataclass(frozen=True)
class NSConfig:
    nu: float
    dt: float

    def __post_init__(self):
        if not self.nu > 0:
            raise InvalidParameterError(f"viscosity must be positive, got {self.nu}")
        if not self.dt > 0:
            raise InvalidParameterError(f"time step must be positive, got {self.dt}")


def kramers_stress(C, gamma3: GammaSpec, n_density):
    """Elastic stress ``n gamma_3(tr C) C - I`` for a (C11, C12, C22) field."""
    C = np.asarray(C, dtype=float)
    trC = C[0] + C[2]
    if np.any(trC < 0):
        idx = np.unravel_index(int(np.argmin(trC)), trC.shape)
        raise PositivityError(f"tr C = {trC[idx]:.3e} < 0 at cell {idx}")
    factor = n_density * gamma_eval(gamma3, trC)
    T = factor * C
    T[0] -= 1.0
    T[2] -= 1.0
    return T


def cfl_number(grid: TorusGrid2D, u, dt):
    speed = np.sqrt(u[0] ** 2 + u[1] ** 2)
    return float(np.max(speed)) * dt / min(grid.hx, grid.hy)


def ns_step(grid: TorusGrid2D, state: NSState, T, cfg: NSConfig) -> NSState:
    """One IMEX Euler step.

    Advection and ``div T`` are explicit (dealiased), viscosity implicit in
    Fourier space, followed by the Leray projection. The pressure is the
    potential removed by the projection.
    """
    u = state.u
    cfl = cfl_number(grid, u, cfg.dt)
    if cfl > CFL_LIMIT:
        raise StepRejectedError(cfl, CFL_LIMIT)
    forcing = -grid.advect(u, u)
    if T is not None:
        forcing = forcing + grid.filter(grid.tensor_divergence(T))
    u_star_hat = grid.forward(u + cfg.dt * forcing)
    proj_hat = grid.leray_project_hat(u_star_hat)
    grad_part = u_star_hat - proj_hat
    # grad_part = dt * i k p_hat
    p_hat = -1j * (grid.kx_p * grad_part[0] + grid.ky_p * grad_part[1]) * grid.inv_k2 / cfg.dt
    u_new = grid.backward(proj_hat / (1.0 + cfg.dt * cfg.nu * grid.k2))
    if not np.all(np.isfinite(u_new)):
        bad = np.argwhere(~np.isfinite(u_new))[0]
        raise BlowupError("velocity", cell=tuple(int(i) for i in bad[1:]))
    return NSState(u=u_new, p=grid.backward(p_hat), time=state.time + cfg.dt)


def taylor_green(grid: TorusGrid2D, amplitude=1.0):
    return amplitude * np.stack([np.sin(grid.x) * np.cos(grid.y),
                                 -np.cos(grid.x) * np.sin(grid.y)])
