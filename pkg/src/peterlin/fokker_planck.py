"""Kinetic solver for psi_hat = psi / M in configuration space.

psi_hat is expanded per grid cell in the orthonormal Maxwellian-weighted
Hermite basis

    h_k(R) = He_k1(R1/sqrt(a)) He_k2(R2/sqrt(a)) / sqrt(k1! k2!),

with total degree ``k1 + k2 <= N_H``. In that basis

* the Ornstein-Uhlenbeck operator ``(1/M) div_R(M grad_R .)`` is diagonal
  with eigenvalue ``-(k1 + k2)/a``;
* the drift ``-(1/M) div_R[(G R) M psi_hat]`` equals
  ``sum_ij G_ij (xi_j A_i^+ - delta_ij)`` with ``xi = R/sqrt(a)`` and
  ``A_i^+`` the creation operator, so it couples degree n to degrees n and
  n+2 only (the delta term is the ``-tr(G) psi_hat`` part, zero for
  divergence-free flow);
* second moments are exact linear functionals of the degree <= 2 modes.

Time stepping is first-order IMEX: x-advection and drift explicit, OU and
centre-of-mass diffusion implicit (both diagonal).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .constitutive import GammaSpec, NondimParams, big_gamma
from .errors import (BlowupError, ConfigError, InvalidParameterError, PeterlinError,
                     RepresentabilityError, ShapeError)
from .grid import TorusGrid2D

GIVEN_FIELD = "given_field"
SELF_CONSISTENT = "self_consistent"


def mode_list(N_H):
    """Modes ``(k1, k2)`` with ``k1 + k2 <= N_H`` in lexicographic order."""
    return [(k1, k2) for k1 in range(N_H + 1) for k2 in range(N_H + 1 - k1)]


def _normalized_hermite(n_max, x):
    """Values of He_n(x)/sqrt(n!) for n = 0..n_max, stacked on axis 0."""
    out = np.empty((n_max + 1,) + np.shape(x))
    out[0] = 1.0
    if n_max >= 1:
        out[1] = x
    for n in range(1, n_max):
        out[n + 1] = (x * out[n] - math.sqrt(n) * out[n - 1]) / math.sqrt(n + 1)
    return out


class HermiteBasis:
    """Mode set, tensor Gauss-Hermite quadrature and operator tables for one (N_H, a)."""

    def __init__(self, N_H=8, a=1.0, n_quad=None):
        if int(N_H) != N_H or N_H < 2:
            raise InvalidParameterError(f"N_H must be an integer >= 2, got {N_H}")
        if not a > 0:
            raise InvalidParameterError(f"Maxwellian scale must be positive, got {a}")
        self.N_H = int(N_H)
        self.a = float(a)
        self.modes = mode_list(self.N_H)
        self.n_modes = len(self.modes)
        self.index = {k: i for i, k in enumerate(self.modes)}
        self.k1 = np.array([k[0] for k in self.modes])
        self.k2 = np.array([k[1] for k in self.modes])
        self.degree = self.k1 + self.k2
        self.i00 = self.index[(0, 0)]
        self.i20 = self.index[(2, 0)]
        self.i11 = self.index[(1, 1)]
        self.i02 = self.index[(0, 2)]

        self.n_quad = self.N_H + 3 if n_quad is None else int(n_quad)
        xi, w = np.polynomial.hermite_e.hermegauss(self.n_quad)
        w = w / math.sqrt(2.0 * math.pi)
        X1, X2 = np.meshgrid(xi, xi, indexing="ij")
        self.xi = np.stack([X1.ravel(), X2.ravel()], axis=1)
        self.nodes = math.sqrt(self.a) * self.xi
        self.weights = np.outer(w, w).ravel()

        H1 = _normalized_hermite(self.N_H, self.xi[:, 0])
        H2 = _normalized_hermite(self.N_H, self.xi[:, 1])
        self.vandermonde = np.stack([H1[k1] * H2[k2] for k1, k2 in self.modes], axis=1)
        # d/dR_1 h_k = sqrt(k1/a) h_{k1-1,k2}
        zero = np.zeros(self.xi.shape[0])
        d1 = [math.sqrt(k1 / self.a) * H1[k1 - 1] * H2[k2] if k1 else zero
              for k1, k2 in self.modes]
        d2 = [math.sqrt(k2 / self.a) * H1[k1] * H2[k2 - 1] if k2 else zero
              for k1, k2 in self.modes]
        self.deriv_vandermonde = np.stack([np.stack(d1, axis=1), np.stack(d2, axis=1)])

        self.drift_matrices = self._assemble_drift()
        # quadrature test functions for the collocated drift:
        # P[i, j][q, k] = w_q R_j(q) d_i h_k(q)
        self._drift_test = np.einsum("q,qj,iqk->ijqk", self.weights, self.nodes,
                                     self.deriv_vandermonde)
        for arr in (self.vandermonde, self.deriv_vandermonde, self.weights, self.nodes,
                    self.drift_matrices, self._drift_test):
            arr.setflags(write=False)

    def __repr__(self):
        return f"HermiteBasis(N_H={self.N_H}, a={self.a})"

    # operator tables ------------------------------------------------------
    def _assemble_drift(self):
        """Galerkin matrices ``D[i, j]`` of ``xi_j A_i^+ - delta_ij`` on the truncated mode set.

        ``D[i, j][k, l] = <h_k, (xi_j A_i^+ - delta_ij) h_l>_M``; applied to coefficients
        ``c`` the drift image is ``sum_ij G_ij D[i, j] @ c``.
        """
        m = self.n_modes
        D = np.zeros((2, 2, m, m))
        for l, kl in enumerate(self.modes):
            for i in range(2):
                # A_i^+ raises k_i: coefficient sqrt(k_i + 1)
                raised = list(kl)
                c_raise = math.sqrt(raised[i] + 1)
                raised[i] += 1
                for j in range(2):
                    # xi_j = A_j^+ + A_j
                    up = list(raised)
                    c_up = math.sqrt(up[j] + 1)
                    up[j] += 1
                    target = tuple(up)
                    if target in self.index:
                        D[i, j, self.index[target], l] += c_raise * c_up
                    if raised[j] > 0:
                        down = list(raised)
                        c_down = math.sqrt(down[j])
                        down[j] -= 1
                        target = tuple(down)
                        if target in self.index:
                            D[i, j, self.index[target], l] += c_raise * c_down
            for i in range(2):
                D[i, i, l, l] -= 1.0
        return D

    def drift_matrices_by_quadrature(self):
        """Independent evaluation of ``int M h_l R_j d_i h_k dR`` by quadrature."""
        return np.einsum("ijqk,ql->ijkl", self._drift_test, self.vandermonde)

    def ou_eigenvalues(self):
        return -self.degree / self.a

    def ou_matrix_by_quadrature(self):
        """Galerkin matrix ``-int M grad h_k . grad h_l dR`` of the OU operator."""
        dV = self.deriv_vandermonde
        return -np.einsum("q,iqk,iql->kl", self.weights, dV, dV)

    def gram(self):
        V = self.vandermonde
        return (V * self.weights[:, None]).T @ V

    # reconstruction -----------------------------------------------------
    def evaluate(self, coeffs):
        """Nodal values of psi_hat; coefficients on axis 0, nodes on axis 0 of the result."""
        c = np.asarray(coeffs, dtype=float)
        flat = c.reshape(self.n_modes, -1)
        return (self.vandermonde @ flat).reshape((self.xi.shape[0],) + c.shape[1:])

    def evaluate_gradient(self, coeffs):
        c = np.asarray(coeffs, dtype=float)
        flat = c.reshape(self.n_modes, -1)
        out = np.stack([self.deriv_vandermonde[i] @ flat for i in range(2)])
        return out.reshape((2, self.xi.shape[0]) + c.shape[1:])

    def project(self, nodal):
        """L2_M projection of nodal values onto the mode set."""
        v = np.asarray(nodal, dtype=float)
        flat = v.reshape(self.xi.shape[0], -1)
        out = self.vandermonde.T @ (self.weights[:, None] * flat)
        return out.reshape((self.n_modes,) + v.shape[1:])


def coefficient_shape(basis: HermiteBasis, grid: TorusGrid2D):
    return (basis.n_modes,) + grid.shape


def equilibrium_field(basis: HermiteBasis, grid: TorusGrid2D):
    """psi_hat == 1 in every cell."""
    c = np.zeros(coefficient_shape(basis, grid))
    c[basis.i00] = 1.0
    return c


def cutoff_beta(s, L):
    """Cut-off ``min(s, L)``."""
    if not L > 1:
        raise InvalidParameterError(f"cut-off level must exceed 1, got {L}")
    out = np.minimum(s, L)
    return float(out) if np.ndim(out) == 0 else out


def gaussian_psi_hat(C0, basis: HermiteBasis):
    """Hermite coefficients of ``N(0, C0) / M``.

    With ``S = C0/a`` the coefficient of h_k is ``E[h_k(R)]`` under
    ``N(0, C0)``, which follows from the generating function
    ``E[exp(t.xi - |t|^2/2)] = exp(t^T (S - I) t / 2)``.
    """
    C0 = np.asarray(C0, dtype=float)
    if C0.shape == (3,):
        C0 = np.array([[C0[0], C0[1]], [C0[1], C0[2]]])
    if C0.shape != (2, 2) or not np.allclose(C0, C0.T, rtol=0, atol=0):
        raise InvalidParameterError("C0 must be a symmetric 2x2 matrix")
    eig = np.linalg.eigvalsh(C0)
    if eig[0] <= 0:
        raise InvalidParameterError(f"C0 must be positive definite, eigenvalues {eig}")
    if eig[1] >= 2.0 * basis.a:
        raise RepresentabilityError(
            f"largest eigenvalue {eig[1]:.4g} of C0 must be below 2a = {2 * basis.a:.4g}")
    B = C0 / basis.a - np.eye(2)
    b11, b12, b22 = 0.5 * B[0, 0], B[0, 1], 0.5 * B[1, 1]
    coeffs = np.zeros(basis.n_modes)
    for idx, (k1, k2) in enumerate(basis.modes):
        total = 0.0
        for q in range(min(k1, k2) + 1):
            if (k1 - q) % 2 or (k2 - q) % 2:
                continue
            p, r = (k1 - q) // 2, (k2 - q) // 2
            total += (b11 ** p / math.factorial(p) * b12 ** q / math.factorial(q)
                      * b22 ** r / math.factorial(r))
        coeffs[idx] = total * math.sqrt(math.factorial(k1) * math.factorial(k2))
    return coeffs


def conformation_from_coeffs(coeffs, basis: HermiteBasis):
    """Second moments ``int R (x) R M psi_hat dR`` as (C11, C12, C22)."""
    if basis.N_H < 2:
        raise InvalidParameterError("second moments need N_H >= 2")
    c = np.asarray(coeffs, dtype=float)
    a, s2 = basis.a, math.sqrt(2.0)
    return np.stack([a * (c[basis.i00] + s2 * c[basis.i20]),
                     a * c[basis.i11],
                     a * (c[basis.i00] + s2 * c[basis.i02])])


def trace_from_coeffs(coeffs, basis: HermiteBasis):
    c = np.asarray(coeffs, dtype=float)
    return basis.a * (2.0 * c[basis.i00] + math.sqrt(2.0) * (c[basis.i20] + c[basis.i02]))


def ou_implicit_solve(coeffs, Gamma, dt, basis: HermiteBasis):
    """Backward-Euler OU step: ``c_k / (1 + dt Gamma (k1 + k2)/a)`` per cell and mode."""
    c = np.asarray(coeffs, dtype=float)
    Gamma = np.asarray(Gamma, dtype=float)
    rate = basis.degree.reshape((-1,) + (1,) * (c.ndim - 1)) / basis.a
    return c / (1.0 + dt * Gamma * rate)


def _as_cell_tensor(G, ndim_cells):
    G = np.asarray(G, dtype=float)
    if G.shape == (2, 2):
        G = G.reshape((2, 2) + (1,) * ndim_cells)
    return G


def drift_apply(coeffs, grad_u, basis: HermiteBasis, cutoff: Optional[float] = None):
    """Galerkin image of ``-(1/M) div_R[(G R) M psi_hat]``.

    Without cut-off this is ``sum_ij G_ij D_ij c`` using the recurrence
    matrices. With a cut-off level ``L`` the bilinear form
    ``int M beta^L(psi_hat) (G R) . grad_R h_k dR`` is evaluated by
    collocation at the quadrature nodes.
    """
    c = np.asarray(coeffs, dtype=float)
    cells = c.shape[1:]
    G = _as_cell_tensor(grad_u, len(cells))
    flat = c.reshape(basis.n_modes, -1)
    Gf = np.broadcast_to(G, (2, 2) + cells).reshape(2, 2, -1)
    out = np.zeros_like(flat)
    if cutoff is None:
        for i in range(2):
            for j in range(2):
                out += Gf[i, j] * (basis.drift_matrices[i, j] @ flat)
    else:
        psi_nodes = cutoff_beta(basis.vandermonde @ flat, cutoff)
        for i in range(2):
            for j in range(2):
                out += Gf[i, j] * (basis._drift_test[i, j].T @ psi_nodes)
    return out.reshape(c.shape)


@dataclass(frozen=True)
class FPConfig:
    dt: float
    params: NondimParams
    gamma2: GammaSpec
    cutoff: Optional[float] = None
    gamma_source: str = SELF_CONSISTENT

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidParameterError(f"time step must be positive, got {self.dt}")
        if self.gamma_source not in (GIVEN_FIELD, SELF_CONSISTENT):
            raise InvalidParameterError(f"unknown gamma source {self.gamma_source!r}")
        if self.cutoff is not None:
            check_step_constraint(self.dt, self.cutoff)


def step_bound(L):
    return 1.0 / (4.0 * L * L)


def check_step_constraint(dt, L):
    if not L > 1:
        raise ConfigError(f"cut-off level L must exceed 1, got {L}")
    bound = step_bound(L)
    if dt > bound * (1.0 + 1e-12):
        raise ConfigError(
            f"time step violates Δt ≤ (4L²)⁻¹: dt = {dt:g} > 1/(4L²) = {bound:g} for L = {L:g}")


def fp_step(grid: TorusGrid2D, coeffs, u, trC_source, cfg: FPConfig, basis: HermiteBasis,
            grad_u=None):
    """One IMEX Euler step of the Fokker-Planck equation for psi_hat.

    ``trC_source`` is a field of tr C* values, or the string ``"self"`` to use
    the trace of the current kinetic second moments (lagged by one step).
    ``grad_u`` overrides the velocity gradient seen by the drift.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.shape != coefficient_shape(basis, grid):
        raise ShapeError(f"coefficients have shape {c.shape}, "
                         f"expected {coefficient_shape(basis, grid)}")
    if cfg.cutoff is not None:
        check_step_constraint(cfg.dt, cfg.cutoff)
    if isinstance(trC_source, str):
        if trC_source != "self":
            raise InvalidParameterError(f"unknown trC source {trC_source!r}")
        trC = trace_from_coeffs(c, basis)
    else:
        trC = np.asarray(trC_source, dtype=float)
    Gamma = big_gamma(cfg.gamma2, cfg.params.lam, np.maximum(trC, 0.0))

    if grad_u is None:
        G = grid.velocity_gradient(u)
        drift = grid.filter(drift_apply(grid.filter(c), G, basis, cfg.cutoff))
    else:
        drift = drift_apply(c, grad_u, basis, cfg.cutoff)
    explicit = drift - grid.advect(u, c)
    c_new = ou_implicit_solve(c + cfg.dt * explicit, Gamma, cfg.dt, basis)
    c_new = grid.implicit_diffusion(c_new, cfg.params.eps, cfg.dt)
    if not np.all(np.isfinite(c_new)):
        bad = np.argwhere(~np.isfinite(c_new))[0]
        raise BlowupError("Hermite coefficients", cell=tuple(int(i) for i in bad[1:]))
    return c_new


# kinetic snapshots ------------------------------------------------------
KINETIC_MAGIC = b"PKH1"


def write_kinetic(path_or_file, coeffs, basis: HermiteBasis):
    """PKH1 layout: header, then per cell (row-major, y outer) its coefficient vector."""
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 3 or c.shape[0] != basis.n_modes:
        raise ShapeError(f"expected (n_modes, ny, nx) coefficients, got {c.shape}")
    _, ny, nx = c.shape
    payload = np.ascontiguousarray(np.moveaxis(c, 0, -1), dtype="<f8").tobytes()
    data = KINETIC_MAGIC + struct.pack("<IIId", nx, ny, basis.N_H, basis.a) + payload
    if hasattr(path_or_file, "write"):
        path_or_file.write(data)
    else:
        with open(path_or_file, "wb") as fh:
            fh.write(data)


def read_kinetic(path):
    """Return ``(coeffs, N_H, a)`` with coeffs shaped ``(n_modes, ny, nx)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != KINETIC_MAGIC:
        raise PeterlinError(f"bad magic {raw[:4]!r}, expected {KINETIC_MAGIC!r}")
    nx, ny, N_H, a = struct.unpack("<IIId", raw[4:24])
    m = len(mode_list(N_H))
    body = raw[24:]
    if len(body) != 8 * m * nx * ny:
        raise PeterlinError("PKH1 payload size does not match header")
    c = np.frombuffer(body, dtype="<f8").reshape(ny, nx, m)
    return np.moveaxis(c, -1, 0).copy(), N_H, a
