"""Observables of the kinetic and macroscopic states.

Second moments come straight from the coefficients (exact); radial moments,
relative entropy and Fisher information use the tensor Gauss-Hermite nodes of
the basis. Nodes where the reconstructed psi_hat is not positive are masked
out of entropy/Fisher and accounted for by ``negativity_mass``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .conformation import reaction, stretching
from .constitutive import GammaSpec, NondimParams
from .errors import DomainError, ShapeError
from .fokker_planck import HermiteBasis, conformation_from_coeffs
from .grid import TorusGrid2D, kinetic_energy

CSV_HEADER = ("step,time,kinetic_energy,trC_mean,mass_min,mass_max,entropy,fisher,"
              "moment4_max,min_psi_node,negativity_mass,closure_err")


def conformation_from_psi(coeffs, basis: HermiteBasis):
    return conformation_from_coeffs(coeffs, basis)


def radial_moment(coeffs, r, basis: HermiteBasis):
    """Per-cell ``int M |R|^r psi_hat dR`` by quadrature."""
    if int(r) != r or r % 2 or r < 0:
        raise DomainError(f"radial moment order must be an even integer >= 0, got {r}")
    if r > 2 * basis.n_quad - 2:
        raise DomainError(f"order {r} exceeds quadrature exactness 2*N_q-2 = {2 * basis.n_quad - 2}")
    rad = np.sum(basis.nodes ** 2, axis=1) ** (r // 2)
    psi = basis.evaluate(coeffs)
    return np.tensordot(basis.weights * rad, psi, axes=(0, 0))


def entropy_density(s):
    """``s (log s - 1) + 1`` for s > 0."""
    s = np.asarray(s, dtype=float)
    return s * (np.log(s) - 1.0) + 1.0


def _positive_nodes(coeffs, basis):
    psi = basis.evaluate(coeffs)
    pos = psi > 0
    return psi, pos, np.where(pos, psi, 1.0)


def relative_entropy(coeffs, basis: HermiteBasis):
    """Per-cell ``int M F(psi_hat) dR`` over nodes with positive psi_hat."""
    psi, pos, safe = _positive_nodes(coeffs, basis)
    integrand = np.where(pos, entropy_density(safe), 0.0)
    return np.tensordot(basis.weights, integrand, axes=(0, 0))


def fisher_information(coeffs, basis: HermiteBasis):
    """Per-cell ``4 int M |grad_R sqrt(psi_hat)|^2 = int M |grad psi_hat|^2 / psi_hat``."""
    psi, pos, safe = _positive_nodes(coeffs, basis)
    grad = basis.evaluate_gradient(coeffs)
    integrand = np.where(pos, (grad[0] ** 2 + grad[1] ** 2) / safe, 0.0)
    return np.tensordot(basis.weights, integrand, axes=(0, 0))


def negativity_mass(coeffs, basis: HermiteBasis):
    """Per-cell ``int M max(-psi_hat, 0) dR``."""
    psi = basis.evaluate(coeffs)
    return np.tensordot(basis.weights, np.maximum(-psi, 0.0), axes=(0, 0))


def min_node_value(coeffs, basis: HermiteBasis):
    return float(np.min(basis.evaluate(coeffs)))


def relative_tensor_error(grid: TorusGrid2D, C, C_ref):
    return grid.tensor_l2_norm(np.asarray(C) - np.asarray(C_ref)) / grid.tensor_l2_norm(C_ref)


@dataclass
class DiagnosticsRow:
    step: int
    time: float
    kinetic_energy: float
    trC_mean: float
    mass_min: float = math.nan
    mass_max: float = math.nan
    entropy: float = math.nan
    fisher: float = math.nan
    moment4_max: float = math.nan
    min_psi_node: float = math.nan
    negativity_mass: float = math.nan
    closure_err: float = math.nan

    def to_csv(self):
        parts = []
        for f in fields(self):
            value = getattr(self, f.name)
            parts.append(str(value) if f.name == "step" else repr(float(value)))
        return ",".join(parts)

    @classmethod
    def from_csv(cls, line):
        parts = line.strip().split(",")
        names = [f.name for f in fields(cls)]
        if len(parts) != len(names):
            raise ShapeError(f"expected {len(names)} columns, got {len(parts)}")
        values = [int(parts[0])] + [float(p) for p in parts[1:]]
        return cls(**dict(zip(names, values)))

    def values(self):
        return np.array([float(getattr(self, f.name)) for f in fields(self)])


def kinetic_row(step, time, grid, u, coeffs, basis, closure_err=math.nan):
    mass = coeffs[basis.i00]
    C = conformation_from_coeffs(coeffs, basis)
    # entropy and Fisher are reported as domain averages
    return DiagnosticsRow(
        step=step, time=time,
        kinetic_energy=kinetic_energy(grid, u),
        trC_mean=float(np.mean(C[0] + C[2])),
        mass_min=float(np.min(mass)), mass_max=float(np.max(mass)),
        entropy=float(np.mean(relative_entropy(coeffs, basis))),
        fisher=float(np.mean(fisher_information(coeffs, basis))),
        moment4_max=float(np.max(radial_moment(coeffs, 4, basis))),
        min_psi_node=min_node_value(coeffs, basis),
        negativity_mass=float(np.mean(negativity_mass(coeffs, basis))),
        closure_err=closure_err,
    )


def macro_row(step, time, grid, u, C, closure_err=math.nan):
    return DiagnosticsRow(step=step, time=time, kinetic_energy=kinetic_energy(grid, u),
                          trC_mean=float(np.mean(C[0] + C[2])), closure_err=closure_err)


class ClosureResidual:
    """Accumulates the discrete strong-form residual of the conformation equation.

    For each interval ``[t_n, t_n + dt]`` the residual is

        (C^{n+1} - C^n)/dt + (u . grad) C^n - (G C^n + C^n G^T)
            - reaction(C^n) - eps Laplacian C^n,

    where ``u``/``G`` is the velocity that drove the interval (the solvers
    advance u before C). The result is the space-time L2 norm of the
    residual divided by that of C.
    """

    def __init__(self, grid: TorusGrid2D, gamma1: GammaSpec, gamma2: GammaSpec,
                 params: NondimParams, dt):
        self.grid = grid
        self.gamma1, self.gamma2, self.params = gamma1, gamma2, params
        self.dt = dt
        self.res_sq = 0.0
        self.ref_sq = 0.0
        self.intervals = 0

    def add(self, C_old, C_new, u, grad_u=None):
        g = self.grid
        if grad_u is None:
            stretch = g.filter(stretching(g.velocity_gradient(u), g.filter(C_old)))
        else:
            G = np.asarray(grad_u, dtype=float)
            if G.shape == (2, 2):
                G = G.reshape(2, 2, 1, 1)
            stretch = stretching(G, C_old)
        r = ((C_new - C_old) / self.dt + g.advect(u, C_old) - stretch
             - reaction(C_old, self.gamma1, self.gamma2, self.params)
             - self.params.eps * g.laplacian(C_old))
        self.res_sq += g.tensor_l2_norm(r) ** 2 * self.dt
        self.ref_sq += g.tensor_l2_norm(C_old) ** 2 * self.dt
        self.intervals += 1

    @property
    def value(self):
        if self.intervals == 0:
            return 0.0
        return math.sqrt(self.res_sq / self.ref_sq)


def closure_residual(grid: TorusGrid2D, C_series, u_series, gamma1: GammaSpec,
                     gamma2: GammaSpec, params: NondimParams, dt, grad_u_series=None):
    """Normalised residual of the conformation equation along a time series.

    ``C_series[n]`` and ``u_series[n]`` are the states at ``t_n``; interval
    ``n`` is driven by ``u_series[n + 1]``.
    """
    C_series = list(C_series)
    u_series = list(u_series)
    if len(C_series) != len(u_series):
        raise ShapeError(f"series lengths differ: {len(C_series)} C vs {len(u_series)} u")
    if grad_u_series is not None and len(grad_u_series) != len(C_series):
        raise ShapeError("velocity-gradient series misaligned with C series")
    acc = ClosureResidual(grid, gamma1, gamma2, params, dt)
    for n in range(len(C_series) - 1):
        G = None if grad_u_series is None else grad_u_series[n + 1]
        acc.add(np.asarray(C_series[n]), np.asarray(C_series[n + 1]),
                np.asarray(u_series[n + 1]), G)
    return acc.value
