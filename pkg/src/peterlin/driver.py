"""Time loops for the macroscopic, kinetic and coupled runs and the closure study.

Within one step of a coupled run the order is fixed: polymer stress from the
current conformation, Navier-Stokes step, then the conformation (MP) or
Fokker-Planck (FP) step driven by the new velocity.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .config import RunConfig
from .conformation import MPState, mp_step
from .constitutive import big_gamma
from .diagnostics import (CSV_HEADER, ClosureResidual, DiagnosticsRow, kinetic_row, macro_row,
                          relative_tensor_error)
from .errors import BlowupError, ConfigError, PeterlinError, StepRejectedError
from .fokker_planck import (SELF_CONSISTENT, FPConfig, HermiteBasis, conformation_from_coeffs,
                            fp_step, gaussian_psi_hat, write_kinetic)
from .grid import TorusGrid2D, read_field_series, write_fields
from .ns_solver import NSConfig, NSState, kramers_stress, ns_step, taylor_green

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    rows: List[DiagnosticsRow]
    u: np.ndarray
    C: np.ndarray
    coeffs: Optional[np.ndarray] = None
    output_dir: Optional[str] = None


@dataclass
class ClosureReport:
    max_rel_C_error: float
    final_rel_C_error: float
    residual_kinetic: float
    residual_macro: float
    error_series_path: Optional[str] = None
    times: list = field(default_factory=list, repr=False)
    errors: list = field(default_factory=list, repr=False)
    rows: list = field(default_factory=list, repr=False)

    def to_text(self):
        lines = [f"max_rel_C_error = {self.max_rel_C_error!r}",
                 f"final_rel_C_error = {self.final_rel_C_error!r}",
                 f"residual_kinetic = {self.residual_kinetic!r}",
                 f"residual_macro = {self.residual_macro!r}",
                 f"error_series = {self.error_series_path or ''}"]
        return "\n".join(lines) + "\n"


class _Output:
    """Append-only writer for one run directory; inactive when ``directory`` is None."""

    def __init__(self, directory):
        self.directory = directory
        self._csv = None
        if directory is not None:
            os.makedirs(directory, exist_ok=True)
            self._csv = open(os.path.join(directory, "diagnostics.csv"), "w", encoding="utf-8")
            self._csv.write(CSV_HEADER + "\n")

    def row(self, row: DiagnosticsRow):
        if self._csv is not None:
            self._csv.write(row.to_csv() + "\n")

    def snapshot(self, step, grid, u, p, C, coeffs=None, basis=None):
        if self.directory is None:
            return
        fields = {"u1": u[0], "u2": u[1], "p": p, "C11": C[0], "C12": C[1], "C22": C[2]}
        write_fields(os.path.join(self.directory, f"fields_{step:06d}.pkf"), fields)
        if coeffs is not None:
            write_kinetic(os.path.join(self.directory, f"kinetic_{step:06d}.pkh"), coeffs, basis)

    def path(self, name):
        return None if self.directory is None else os.path.join(self.directory, name)

    def close(self):
        if self._csv is not None:
            self._csv.close()
            self._csv = None


def _output_dir(cfg, write, suffix=""):
    if not write:
        return None
    return os.path.join(cfg.output_dir, suffix) if suffix else cfg.output_dir


def _initial_velocity(cfg: RunConfig, grid):
    if cfg.initial_u == "taylor_green":
        return taylor_green(grid, cfg.u_amplitude)
    return np.zeros((2,) + grid.shape)


def _initial_conformation(cfg: RunConfig, grid):
    C = np.empty((3,) + grid.shape)
    for i, v in enumerate(cfg.initial_C):
        C[i] = v
    return C


def _initial_coeffs(cfg: RunConfig, grid, basis):
    c0 = gaussian_psi_hat(cfg.C0, basis)
    return np.broadcast_to(c0[:, None, None], (basis.n_modes,) + grid.shape).copy()


def _tag_step(exc, step):
    if isinstance(exc, (StepRejectedError, BlowupError)) and exc.step is None:
        exc.step = step
        exc.args = (f"{exc.args[0]} (step {step})",)
    return exc


def _want(step, every, n_steps):
    return step % every == 0 or step == n_steps


def run_mp(cfg: RunConfig, write=True) -> RunResult:
    """Navier-Stokes coupled to the macroscopic conformation equation."""
    grid = TorusGrid2D(cfg.nx, cfg.ny)
    ns_cfg = NSConfig(cfg.params.nu, cfg.dt)
    G = cfg.grad_u
    state = NSState(_initial_velocity(cfg, grid), np.zeros(grid.shape))
    C = _initial_conformation(cfg, grid)
    out = _Output(_output_dir(cfg, write))
    rows = [macro_row(0, 0.0, grid, state.u, C)]
    out.row(rows[-1])
    try:
        for step in range(1, cfg.n_steps + 1):
            try:
                if G is None:
                    T = kramers_stress(C, cfg.gamma3, cfg.params.n_density)
                    state = ns_step(grid, state, T, ns_cfg)
                C = mp_step(grid, MPState(C), state.u, cfg.gamma1, cfg.gamma2, cfg.params,
                            cfg.dt, grad_u=G).C
            except PeterlinError as exc:
                raise _tag_step(exc, step)
            t = step * cfg.dt
            if _want(step, cfg.output_every, cfg.n_steps):
                rows.append(macro_row(step, t, grid, state.u, C))
                out.row(rows[-1])
            if cfg.snapshot_every and step % cfg.snapshot_every == 0 and step != cfg.n_steps:
                out.snapshot(step, grid, state.u, state.p, C)
        out.snapshot(cfg.n_steps, grid, state.u, state.p, C)
    finally:
        out.close()
    return RunResult(rows=rows, u=state.u, C=C, output_dir=out.directory)


def _load_series(path, names, grid, default):
    if path is None:
        return [default]
    records = read_field_series(path)
    series = []
    for rec in records:
        missing = [n for n in names if n not in rec]
        if missing:
            raise ConfigError(f"{path}: record lacks fields {missing}")
        arr = np.stack([rec[n] for n in names])
        if arr.shape[1:] != grid.shape:
            raise ConfigError(f"{path}: field shape {arr.shape[1:]} does not match grid {grid.shape}")
        series.append(arr)
    return series


def run_fp_given(cfg: RunConfig, u_series=None, C_series=None, write=True) -> RunResult:
    """Fokker-Planck equation driven by prescribed velocity and conformation fields.

    ``u_series``/``C_series`` are lists of fields (one per time level, or a
    single frozen field); when omitted they are read from the configured
    PKF1 files, falling back to ``u = 0`` and ``C = I``. Step ``n`` uses
    ``C[n]`` for the diffusion coefficient and ``u[n + 1]`` as driving
    velocity.
    """
    grid = TorusGrid2D(cfg.nx, cfg.ny)
    basis = HermiteBasis(cfg.N_H, cfg.a)
    if u_series is None:
        u_series = _load_series(cfg.u_series, ("u1", "u2"), grid, np.zeros((2,) + grid.shape))
    if C_series is None:
        eye = np.zeros((3,) + grid.shape)
        eye[0] = eye[2] = 1.0
        C_series = _load_series(cfg.C_series, ("C11", "C12", "C22"), grid, eye)
    for name, series in (("u", u_series), ("C", C_series)):
        if len(series) != 1 and len(series) < cfg.n_steps + 1:
            raise ConfigError(f"{name} series has {len(series)} records; need 1 or "
                              f"{cfg.n_steps + 1}")

    def at(series, n):
        return series[0] if len(series) == 1 else series[n]

    fp_cfg = FPConfig(cfg.dt, cfg.params, cfg.gamma2, cfg.cutoff_L, cfg.gamma_source)
    G = cfg.grad_u
    coeffs = _initial_coeffs(cfg, grid, basis)
    out = _Output(_output_dir(cfg, write))
    u = at(u_series, 0)
    rows = [kinetic_row(0, 0.0, grid, u, coeffs, basis)]
    out.row(rows[-1])
    try:
        for step in range(1, cfg.n_steps + 1):
            u = at(u_series, step)
            C_star = at(C_series, step - 1)
            source = "self" if cfg.gamma_source == SELF_CONSISTENT else C_star[0] + C_star[2]
            try:
                coeffs = fp_step(grid, coeffs, u, source, fp_cfg, basis, grad_u=G)
            except PeterlinError as exc:
                raise _tag_step(exc, step)
            if _want(step, cfg.output_every, cfg.n_steps):
                rows.append(kinetic_row(step, step * cfg.dt, grid, u, coeffs, basis))
                out.row(rows[-1])
            if cfg.snapshot_every and step % cfg.snapshot_every == 0 and step != cfg.n_steps:
                out.snapshot(step, grid, u, np.zeros(grid.shape),
                             conformation_from_coeffs(coeffs, basis), coeffs, basis)
        C = conformation_from_coeffs(coeffs, basis)
        out.snapshot(cfg.n_steps, grid, u, np.zeros(grid.shape), C, coeffs, basis)
    finally:
        out.close()
    return RunResult(rows=rows, u=u, C=C, coeffs=coeffs, output_dir=out.directory)


def run_kp(cfg: RunConfig, write=True) -> RunResult:
    """Navier-Stokes coupled to the Fokker-Planck equation (self-consistent Gamma)."""
    grid = TorusGrid2D(cfg.nx, cfg.ny)
    basis = HermiteBasis(cfg.N_H, cfg.a)
    ns_cfg = NSConfig(cfg.params.nu, cfg.dt)
    fp_cfg = FPConfig(cfg.dt, cfg.params, cfg.gamma2, cfg.cutoff_L, SELF_CONSISTENT)
    G = cfg.grad_u
    state = NSState(_initial_velocity(cfg, grid), np.zeros(grid.shape))
    coeffs = _initial_coeffs(cfg, grid, basis)
    out = _Output(_output_dir(cfg, write))
    rows = [kinetic_row(0, 0.0, grid, state.u, coeffs, basis)]
    out.row(rows[-1])
    try:
        for step in range(1, cfg.n_steps + 1):
            try:
                if G is None:
                    C = conformation_from_coeffs(coeffs, basis)
                    T = kramers_stress(C, cfg.gamma3, cfg.params.n_density)
                    state = ns_step(grid, state, T, ns_cfg)
                coeffs = fp_step(grid, coeffs, state.u, "self", fp_cfg, basis, grad_u=G)
            except PeterlinError as exc:
                raise _tag_step(exc, step)
            if _want(step, cfg.output_every, cfg.n_steps):
                rows.append(kinetic_row(step, step * cfg.dt, grid, state.u, coeffs, basis))
                out.row(rows[-1])
            if cfg.snapshot_every and step % cfg.snapshot_every == 0 and step != cfg.n_steps:
                out.snapshot(step, grid, state.u, state.p,
                             conformation_from_coeffs(coeffs, basis), coeffs, basis)
        C = conformation_from_coeffs(coeffs, basis)
        out.snapshot(cfg.n_steps, grid, state.u, state.p, C, coeffs, basis)
    finally:
        out.close()
    return RunResult(rows=rows, u=state.u, C=C, coeffs=coeffs, output_dir=out.directory)


def compare_closure(cfg: RunConfig, write=True, gamma_source=None) -> ClosureReport:
    """Run the macroscopic and kinetic models side by side from identical data.

    The kinetic leg takes its diffusion coefficient from the macroscopic
    trace (``given_field``) or from its own moments (``self_consistent``).
    Errors are ``||C_kin - C_mp||_L2 / ||C_mp||_L2`` at every output step.
    """
    source = gamma_source or cfg.gamma_source
    grid = TorusGrid2D(cfg.nx, cfg.ny)
    basis = HermiteBasis(cfg.N_H, cfg.a)
    ns_cfg = NSConfig(cfg.params.nu, cfg.dt)
    fp_cfg = FPConfig(cfg.dt, cfg.params, cfg.gamma2, cfg.cutoff_L, source)
    G = cfg.grad_u

    u0 = _initial_velocity(cfg, grid)
    mp_state = NSState(u0.copy(), np.zeros(grid.shape))
    kp_state = NSState(u0.copy(), np.zeros(grid.shape))
    coeffs = _initial_coeffs(cfg, grid, basis)
    C_mp = conformation_from_coeffs(coeffs, basis)

    res_kin = ClosureResidual(grid, cfg.gamma1, cfg.gamma2, cfg.params, cfg.dt)
    res_mp = ClosureResidual(grid, cfg.gamma1, cfg.gamma2, cfg.params, cfg.dt)
    out = _Output(_output_dir(cfg, write))
    series_path = out.path("closure_errors.csv")
    series_fh = open(series_path, "w", encoding="utf-8") if series_path else None
    if series_fh:
        series_fh.write("step,time,rel_C_error\n")
    times, errors = [0.0], [relative_tensor_error(grid, C_mp, C_mp)]
    rows = [kinetic_row(0, 0.0, grid, kp_state.u, coeffs, basis, errors[0])]
    out.row(rows[-1])
    if series_fh:
        series_fh.write(f"0,0.0,{errors[0]!r}\n")
    try:
        for step in range(1, cfg.n_steps + 1):
            C_kin = conformation_from_coeffs(coeffs, basis)
            try:
                if G is None:
                    mp_state = ns_step(grid, mp_state,
                                       kramers_stress(C_mp, cfg.gamma3, cfg.params.n_density),
                                       ns_cfg)
                    kp_state = ns_step(grid, kp_state,
                                       kramers_stress(C_kin, cfg.gamma3, cfg.params.n_density),
                                       ns_cfg)
                trC_src = "self" if source == SELF_CONSISTENT else C_mp[0] + C_mp[2]
                C_mp_new = mp_step(grid, MPState(C_mp), mp_state.u, cfg.gamma1, cfg.gamma2,
                                   cfg.params, cfg.dt, grad_u=G).C
                coeffs = fp_step(grid, coeffs, kp_state.u, trC_src, fp_cfg, basis, grad_u=G)
            except PeterlinError as exc:
                raise _tag_step(exc, step)
            C_kin_new = conformation_from_coeffs(coeffs, basis)
            res_kin.add(C_kin, C_kin_new, kp_state.u, G)
            res_mp.add(C_mp, C_mp_new, mp_state.u, G)
            C_mp = C_mp_new
            if _want(step, cfg.output_every, cfg.n_steps):
                err = relative_tensor_error(grid, C_kin_new, C_mp)
                t = step * cfg.dt
                times.append(t)
                errors.append(err)
                rows.append(kinetic_row(step, t, grid, kp_state.u, coeffs, basis, err))
                out.row(rows[-1])
                if series_fh:
                    series_fh.write(f"{step},{t!r},{err!r}\n")
        out.snapshot(cfg.n_steps, grid, kp_state.u, kp_state.p,
                     conformation_from_coeffs(coeffs, basis), coeffs, basis)
    finally:
        out.close()
        if series_fh:
            series_fh.close()
    report = ClosureReport(max_rel_C_error=float(max(errors)),
                           final_rel_C_error=float(errors[-1]),
                           residual_kinetic=res_kin.value, residual_macro=res_mp.value,
                           error_series_path=series_path, times=times, errors=errors,
                           rows=rows)
    if out.directory is not None:
        with open(os.path.join(out.directory, "closure_report.txt"), "w", encoding="utf-8") as fh:
            fh.write(report.to_text())
    return report


def run(cfg: RunConfig, write=True):
    """Dispatch on ``cfg.mode``."""
    if cfg.mode == "mp":
        return run_mp(cfg, write)
    if cfg.mode == "fp_given":
        return run_fp_given(cfg, write=write)
    if cfg.mode == "kp":
        return run_kp(cfg, write)
    if cfg.mode == "closure_compare":
        return compare_closure(cfg, write)
    raise ConfigError(f"unknown mode {cfg.mode!r}")


def gamma_field(cfg: RunConfig, C):
    """Diffusion coefficient ``Gamma(tr C)`` for a conformation field."""
    return big_gamma(cfg.gamma2, cfg.params.lam, np.maximum(C[0] + C[2], 0.0))


def isclose_rows(rows, atol):
    """True when every finite diagnostic stays within ``atol`` of its first value."""
    ref = rows[0].values()[2:]
    for row in rows[1:]:
        vals = row.values()[2:]
        both_nan = np.isnan(ref) & np.isnan(vals)
        if np.any(~both_nan & ~(np.abs(vals - ref) <= atol)):
            return False
    return True
