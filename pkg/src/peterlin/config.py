"""Flat ``key = value`` run configuration.

One assignment per line; ``#`` starts a comment; blank lines are ignored.
Every malformed line is reported with its 1-based line number.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .constitutive import (CLASSICAL_THM31, CONSTANT, REGULAR_THM32_COR33, GammaSpec,
                           NondimParams, admissibility_for, check_ratio_condition,
                           derive_nondim, gamma_eval, make_maxwellian)
from .errors import ConfigError, InvalidParameterError
from .fokker_planck import GIVEN_FIELD, SELF_CONSISTENT, step_bound

log = logging.getLogger(__name__)

MODES = ("mp", "fp_given", "kp", "closure_compare")
INITIAL_U = ("taylor_green", "rest")


def _parse_int(text):
    value = int(text)
    return value


def _parse_float(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite number {text!r}")
    return value


def _parse_positive(text):
    value = _parse_float(text)
    if not value > 0:
        raise ValueError(f"must be positive, got {text!r}")
    return value


def _parse_floats(n):
    def parse(text):
        parts = text.split()
        if len(parts) != n:
            raise ValueError(f"expected {n} numbers, got {len(parts)}")
        return tuple(_parse_float(p) for p in parts)
    return parse


def _parse_choice(choices):
    def parse(text):
        if text not in choices:
            raise ValueError(f"expected one of {', '.join(choices)}, got {text!r}")
        return text
    return parse


def parse_gamma(text) -> GammaSpec:
    """``constant c [lo hi]``, ``affine c [lo hi]`` or ``power_law c exponent [lo hi]``."""
    parts = text.split()
    if not parts:
        raise ValueError("empty constitutive function")
    kind, nums = parts[0], [_parse_float(p) for p in parts[1:]]
    try:
        if kind in ("constant", "affine"):
            if len(nums) not in (1, 3):
                raise ValueError(f"{kind} takes 'coeff [lower upper]'")
            bounds = nums[1:] if len(nums) == 3 else [None, None]
            make = GammaSpec.constant if kind == "constant" else GammaSpec.affine
            return make(nums[0], *bounds)
        if kind == "power_law":
            if len(nums) not in (2, 4):
                raise ValueError("power_law takes 'coeff exponent [lower upper]'")
            bounds = nums[2:] if len(nums) == 4 else [None, None]
            return GammaSpec.power_law(nums[0], nums[1], *bounds)
    except InvalidParameterError as exc:
        raise ValueError(str(exc)) from exc
    raise ValueError(f"unknown constitutive kind {kind!r}")


def _parse_initial_C(text):
    parts = text.split()
    if parts == ["identity"]:
        return (1.0, 0.0, 1.0)
    if parts and parts[0] == "gaussian_C0":
        return _parse_floats(3)(" ".join(parts[1:]))
    raise ValueError("expected 'identity' or 'gaussian_C0 c11 c12 c22'")


# key -> (parser, default); a default of REQUIRED marks a mandatory key
REQUIRED = object()
_SCHEMA = {
    "mode": (_parse_choice(MODES), REQUIRED),
    "dt": (_parse_positive, REQUIRED),
    "t_end": (_parse_positive, REQUIRED),
    "nx": (_parse_int, 32),
    "ny": (_parse_int, None),
    "N_H": (_parse_int, 8),
    "output_every": (_parse_int, 10),
    "snapshot_every": (_parse_int, 0),
    "k_tau": (_parse_positive, 1.0),
    "zeta": (_parse_positive, 4.0),
    "U0": (_parse_positive, 1.0),
    "L0": (_parse_positive, 1.0),
    "l0": (_parse_positive, 1.0),
    "d0": (_parse_positive, 1.0),
    "nu": (_parse_positive, 0.1),
    "n_density": (_parse_positive, 1.0),
    "gamma1": (parse_gamma, "constant 1"),
    "gamma2": (parse_gamma, "constant 1"),
    "gamma3": (parse_gamma, "constant 1"),
    "cutoff_L": (_parse_float, None),
    "gamma_source": (_parse_choice((GIVEN_FIELD, SELF_CONSISTENT)), None),
    "initial_u": (_parse_choice(INITIAL_U), "rest"),
    "u_amplitude": (_parse_float, 1.0),
    "initial_C": (_parse_initial_C, "identity"),
    "frozen_grad_u": (_parse_floats(4), None),
    "u_series": (str, None),
    "C_series": (str, None),
    "output_dir": (str, "output"),
}


@dataclass
class RunConfig:
    mode: str
    dt: float
    t_end: float
    nx: int
    ny: int
    N_H: int
    output_every: int
    snapshot_every: int
    params: NondimParams
    gamma1: GammaSpec
    gamma2: GammaSpec
    gamma3: GammaSpec
    cutoff_L: Optional[float]
    gamma_source: str
    initial_u: str
    u_amplitude: float
    initial_C: tuple
    frozen_grad_u: Optional[tuple]
    u_series: Optional[str]
    C_series: Optional[str]
    output_dir: str
    a: float = 1.0
    admissibility: tuple = field(default=())
    ratio_ok: bool = True
    source_lines: dict = field(default_factory=dict, repr=False)

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))

    @property
    def C0(self):
        c11, c12, c22 = self.initial_C
        return np.array([[c11, c12], [c12, c22]])

    @property
    def grad_u(self):
        if self.frozen_grad_u is None:
            return None
        return np.array(self.frozen_grad_u).reshape(2, 2)

    def replace(self, **changes):
        """Copy with some fields changed (used for dt-halving studies)."""
        return dataclasses.replace(self, **changes)


def _split_lines(text):
    entries = {}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("missing key before '='", lineno)
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", lineno)
        if not value:
            raise ConfigError(f"missing value for {key!r}", lineno)
        entries[key] = value
        lines[key] = lineno
    return entries, lines


def parse_config(text) -> RunConfig:
    """Parse and validate a configuration; raises :class:`ConfigError`."""
    entries, lines = _split_lines(text)
    values = {}
    for key, (parser, default) in _SCHEMA.items():
        if key in entries:
            try:
                values[key] = parser(entries[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}", lines[key]) from None
        elif default is REQUIRED:
            raise ConfigError(f"missing required key {key!r}")
        elif isinstance(default, str) and parser is not str:
            values[key] = parser(default)
        else:
            values[key] = default

    def fail(msg, *keys):
        line = max((lines[k] for k in keys if k in lines), default=None)
        raise ConfigError(msg, line)

    mode = values["mode"]
    if values["ny"] is None:
        values["ny"] = values["nx"]
    for key in ("nx", "ny"):
        n = values[key]
        if n < 8 or n % 2:
            fail(f"{key} must be an even integer >= 8, got {n}", key)
    if values["N_H"] < 2:
        fail(f"N_H must be >= 2, got {values['N_H']}", "N_H")
    n_steps = round(values["t_end"] / values["dt"])
    if n_steps < 1 or abs(n_steps * values["dt"] - values["t_end"]) > 1e-9 * values["t_end"]:
        fail("t_end must be an integer multiple of dt", "t_end", "dt")
    if values["output_every"] < 1:
        fail("output_every must be >= 1", "output_every")
    if values["snapshot_every"] < 0:
        fail("snapshot_every must be >= 0", "snapshot_every")

    L = values["cutoff_L"]
    if L is not None:
        if not L > 1:
            fail(f"cutoff_L must exceed 1, got {L}", "cutoff_L")
        bound = step_bound(L)
        if values["dt"] > bound * (1.0 + 1e-12):
            fail(f"dt = {values['dt']:g} violates Δt ≤ (4L²)⁻¹: dt > 1/(4L²) = {bound:g}",
                 "cutoff_L", "dt")

    g1, g2, g3 = values["gamma1"], values["gamma2"], values["gamma3"]
    try:
        d = 2
        trC_eq = float(d)
        g1_eq, g2_eq = gamma_eval(g1, trC_eq), gamma_eval(g2, trC_eq)
        params = derive_nondim(values["k_tau"], values["zeta"], values["U0"], values["L0"],
                               values["l0"], values["d0"], values["nu"], values["n_density"],
                               g1_eq, g2_eq)
        maxwellian = make_maxwellian(values["k_tau"], g1_eq, g2_eq, d)
    except InvalidParameterError as exc:
        fail(str(exc), "k_tau", "zeta", "U0", "L0", "l0", "d0", "nu", "n_density")

    ratio_ok = check_ratio_condition(g1, g2, values["k_tau"])
    hookean_mp = mode == "mp" and g1.kind == CONSTANT and g2.kind == CONSTANT
    if not ratio_ok and not hookean_mp:
        fail("gamma1(s)/gamma2(s) must equal k_tau for all s (ratio condition) in mode "
             f"{mode!r}", "gamma1", "gamma2", "k_tau")

    verdicts = (admissibility_for(g1, g2, g3, d, CLASSICAL_THM31),
                admissibility_for(g1, g2, g3, d, REGULAR_THM32_COR33))
    for v in verdicts:
        log.info("admissibility %s: %s%s", v.theorem,
                 "admissible" if v.admissible else "NOT admissible",
                 "" if v.admissible else f" (violated: {', '.join(v.violated_rules)})")

    source = values["gamma_source"]
    if source is None:
        source = SELF_CONSISTENT if mode == "kp" else GIVEN_FIELD
    if mode == "kp" and source != SELF_CONSISTENT:
        fail("mode 'kp' has no macroscopic field; use gamma_source = self_consistent",
             "gamma_source")

    if mode in ("fp_given", "kp", "closure_compare"):
        C0 = np.array(values["initial_C"])
        S = np.array([[C0[0], C0[1]], [C0[1], C0[2]]])
        eig = np.linalg.eigvalsh(S)
        if eig[0] <= 0:
            fail("initial_C must be positive definite", "initial_C")
        if eig[1] >= 2.0 * maxwellian.a:
            fail(f"initial_C largest eigenvalue {eig[1]:g} must be below 2a = "
                 f"{2 * maxwellian.a:g}", "initial_C")
    if values["frozen_grad_u"] is not None:
        G = values["frozen_grad_u"]
        if abs(G[0] + G[3]) > 1e-10:
            fail("frozen_grad_u must be trace free (divergence-free flow)", "frozen_grad_u")
        if values["initial_u"] != "rest":
            fail("frozen_grad_u requires initial_u = rest", "frozen_grad_u", "initial_u")
    if mode != "fp_given":
        for key in ("u_series", "C_series"):
            if values[key] is not None:
                fail(f"{key} is only used in mode 'fp_given'", key)

    return RunConfig(
        mode=mode, dt=values["dt"], t_end=values["t_end"], nx=values["nx"], ny=values["ny"],
        N_H=values["N_H"], output_every=values["output_every"],
        snapshot_every=values["snapshot_every"], params=params, gamma1=g1, gamma2=g2,
        gamma3=g3, cutoff_L=L, gamma_source=source, initial_u=values["initial_u"],
        u_amplitude=values["u_amplitude"], initial_C=tuple(values["initial_C"]),
        frozen_grad_u=values["frozen_grad_u"], u_series=values["u_series"],
        C_series=values["C_series"], output_dir=values["output_dir"], a=maxwellian.a,
        admissibility=verdicts, ratio_ok=ratio_ok, source_lines=lines,
    )


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def format_report(cfg: RunConfig):
    """Human-readable admissibility and ratio-condition summary."""
    lines = [f"mode = {cfg.mode}",
             f"ratio_condition = {'ok' if cfg.ratio_ok else 'violated'}",
             f"lambda = {cfg.params.lam!r}", f"eps = {cfg.params.eps!r}",
             f"maxwellian_a = {cfg.a!r}"]
    for v in cfg.admissibility:
        lines.append(f"{v.theorem} = {'admissible' if v.admissible else 'inadmissible'}")
        if v.violated_rules:
            lines.append(f"{v.theorem}.violated = {' '.join(v.violated_rules)}")
        if v.warnings:
            lines.append(f"{v.theorem}.warnings = {' '.join(v.warnings)}")
    return "\n".join(lines) + "\n"
