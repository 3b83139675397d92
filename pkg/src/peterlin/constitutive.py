"""Constitutive functions, the equilibrium Maxwellian and parameter checks.

The spring/diffusion/stress coefficients gamma_1, gamma_2, gamma_3 are
restricted to power laws ``coeff * s**exponent`` (plus constants), each
carrying the lower/upper growth constants used by the admissibility rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidParameterError

POWER_LAW = "power_law"
CONSTANT = "constant"
AFFINE = "affine"
_KINDS = (POWER_LAW, CONSTANT, AFFINE)


@dataclass(frozen=True)
class GammaSpec:
    kind: str
    exponent: float
    lower_const: float
    upper_const: float
    eval_coeff: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidParameterError(f"unknown gamma kind {self.kind!r}")
        if self.kind == CONSTANT and self.exponent != 0:
            raise InvalidParameterError("constant gamma must have exponent 0")
        if self.kind == AFFINE and self.exponent != 1:
            raise InvalidParameterError("affine gamma must have exponent 1")
        if not self.exponent >= 0:
            raise InvalidParameterError(f"exponent must be >= 0, got {self.exponent}")
        for name in ("lower_const", "upper_const", "eval_coeff"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise InvalidParameterError(f"{name} must be positive, got {value}")
        if not self.lower_const <= self.eval_coeff <= self.upper_const:
            raise InvalidParameterError(
                "growth constants must bracket the coefficient: "
                f"{self.lower_const} <= {self.eval_coeff} <= {self.upper_const}"
            )

    @classmethod
    def power_law(cls, coeff, exponent, lower=None, upper=None):
        return cls(POWER_LAW, float(exponent),
                   float(coeff if lower is None else lower),
                   float(coeff if upper is None else upper), float(coeff))

    @classmethod
    def constant(cls, coeff, lower=None, upper=None):
        return cls(CONSTANT, 0.0,
                   float(coeff if lower is None else lower),
                   float(coeff if upper is None else upper), float(coeff))

    @classmethod
    def affine(cls, coeff, lower=None, upper=None):
        return cls(AFFINE, 1.0,
                   float(coeff if lower is None else lower),
                   float(coeff if upper is None else upper), float(coeff))

    def __call__(self, s):
        return gamma_eval(self, s)


def gamma_eval(spec: GammaSpec, s):
    """Evaluate a constitutive function at ``s >= 0`` (scalar or array)."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or np.any(np.isnan(s_arr)):
        raise DomainError("constitutive functions are defined for s >= 0 only")
    if spec.kind == CONSTANT:
        out = np.full_like(s_arr, spec.eval_coeff)
    elif spec.kind == AFFINE:
        out = spec.eval_coeff * s_arr
    else:
        out = spec.eval_coeff * s_arr ** spec.exponent
    return float(out) if np.ndim(out) == 0 else out


def big_gamma(gamma2: GammaSpec, lam, tr_C):
    """Configuration-space diffusion coefficient ``gamma_2(tr C) / (2 lambda)``."""
    if not lam > 0:
        raise InvalidParameterError(f"lambda must be positive, got {lam}")
    return gamma_eval(gamma2, tr_C) / (2.0 * lam)


def check_ratio_condition(gamma1: GammaSpec, gamma2: GammaSpec, k_tau, rtol=1e-12) -> bool:
    """True when gamma_1(s) / gamma_2(s) equals ``k_tau`` for every s > 0.

    For power laws this holds iff both share the exponent and the
    coefficient ratio is ``k_tau``.
    """
    if gamma1.exponent != gamma2.exponent:
        return False
    ratio = gamma1.eval_coeff / gamma2.eval_coeff
    return abs(ratio - k_tau) <= rtol * abs(k_tau)


@dataclass(frozen=True)
class Maxwellian:
    a: float
    b: float
    d: int

    def __call__(self, R):
        """Evaluate M at points ``R`` with the coordinate on the last axis."""
        R = np.asarray(R, dtype=float)
        return self.b * np.exp(-np.sum(R * R, axis=-1) / (2.0 * self.a))


def make_maxwellian(k_tau, gamma1_at_eq, gamma2_at_eq, d=2) -> Maxwellian:
    for name, value in (("k_tau", k_tau), ("gamma1_at_eq", gamma1_at_eq),
                        ("gamma2_at_eq", gamma2_at_eq)):
        if not value > 0:
            raise InvalidParameterError(f"{name} must be positive, got {value}")
    if d not in (2, 3):
        raise InvalidParameterError(f"dimension must be 2 or 3, got {d}")
    a = k_tau * gamma2_at_eq / gamma1_at_eq
    b = (2.0 * math.pi * a) ** (-d / 2.0)
    return Maxwellian(a=a, b=b, d=d)


@dataclass(frozen=True)
class NondimParams:
    k_tau: float
    zeta: float
    U0: float
    L0: float
    l0: float
    d0: float
    gamma_M: float
    lam: float
    eps: float
    nu: float
    n_density: float
    gamma1_eq: float = 1.0
    gamma2_eq: float = 1.0

    @property
    def maxwellian_scale(self):
        return self.k_tau * self.gamma2_eq / self.gamma1_eq


def derive_nondim(k_tau, zeta, U0, L0, l0, d0, nu, n_density,
                  gamma1_eq=1.0, gamma2_eq=1.0) -> NondimParams:
    """Derive the Deborah number and centre-of-mass diffusion from primitives."""
    values = dict(k_tau=k_tau, zeta=zeta, U0=U0, L0=L0, l0=l0, d0=d0, nu=nu,
                  n_density=n_density, gamma1_eq=gamma1_eq, gamma2_eq=gamma2_eq)
    for name, value in values.items():
        if not (value > 0 and math.isfinite(value)):
            raise InvalidParameterError(f"{name} must be positive, got {value}")
    gamma_M = float(k_tau)
    lam = (zeta / (4.0 * gamma_M)) * (U0 / L0)
    eps = (l0 / L0) ** 2 / (8.0 * lam)
    return NondimParams(k_tau=float(k_tau), zeta=float(zeta), U0=float(U0),
                        L0=float(L0), l0=float(l0), d0=float(d0),
                        gamma_M=gamma_M, lam=lam, eps=eps, nu=float(nu),
                        n_density=float(n_density), gamma1_eq=float(gamma1_eq),
                        gamma2_eq=float(gamma2_eq))


CLASSICAL_THM31 = "classical_thm31"
REGULAR_THM32_COR33 = "regular_thm32_cor33"

# rule identifiers reported in AdmissibilityVerdict.violated_rules
RULE_SUM = "alpha+beta+1>2"
RULE_ALPHA_BETA = "alpha>beta+1"
RULE_BETA = "beta>=0"
RULE_ALPHA_RANGE = "0<alpha<=2"
RULE_GAMMA_LOWER = "gamma>=1"
RULE_GAMMA_UPPER = "gamma<=alpha+1"
RULE_BOUNDARY = "d*B2*C2<A1*B1"
WARN_PSI_PRIME = "psi_prime_growth_not_checked"


@dataclass(frozen=True)
class AdmissibilityVerdict:
    theorem: str
    admissible: bool
    violated_rules: tuple = ()
    warnings: tuple = field(default=())


def _upper_exponent_rules(alpha, gamma_exp, A1, B1, B2, C2, d):
    if gamma_exp < alpha + 1:
        return []
    if gamma_exp == alpha + 1:
        return [] if d * B2 * C2 < A1 * B1 else [RULE_BOUNDARY]
    return [RULE_GAMMA_UPPER]


def check_admissibility(alpha, beta, gamma_exp, A1=1.0, A2=1.0, B1=1.0, B2=1.0,
                        C1=1.0, C2=1.0, d=2, theorem=CLASSICAL_THM31):
    """Check the exponent hypotheses guaranteeing well-posedness of the macro model.

    ``alpha``, ``beta`` and ``gamma_exp`` are the growth exponents of
    gamma_1, gamma_3 and gamma_2; ``A*``, ``B*``, ``C*`` their growth
    constants. Every failing sub-rule is listed, in a fixed order.
    """
    if d not in (2, 3):
        raise InvalidParameterError(f"dimension must be 2 or 3, got {d}")
    violated = []
    warnings = ()
    if theorem == CLASSICAL_THM31:
        if not alpha + beta + 1 > 2:
            violated.append(RULE_SUM)
        if not alpha > beta + 1:
            violated.append(RULE_ALPHA_BETA)
        if not beta >= 0:
            violated.append(RULE_BETA)
        violated += _upper_exponent_rules(alpha, gamma_exp, A1, B1, B2, C2, d)
        warnings = (WARN_PSI_PRIME,)
    elif theorem == REGULAR_THM32_COR33:
        if not (alpha == 0 and gamma_exp == 1):
            if not 0 < alpha <= 2:
                violated.append(RULE_ALPHA_RANGE)
            if gamma_exp < alpha + 1 and not gamma_exp >= 1:
                violated.append(RULE_GAMMA_LOWER)
            violated += _upper_exponent_rules(alpha, gamma_exp, A1, B1, B2, C2, d)
    else:
        raise InvalidParameterError(f"unknown theorem {theorem!r}")
    return AdmissibilityVerdict(theorem=theorem, admissible=not violated,
                                violated_rules=tuple(violated), warnings=warnings)


def admissibility_for(gamma1: GammaSpec, gamma2: GammaSpec, gamma3: GammaSpec,
                      d=2, theorem=CLASSICAL_THM31):
    """Run :func:`check_admissibility` with exponents and constants taken from specs."""
    return check_admissibility(
        gamma1.exponent, gamma3.exponent, gamma2.exponent,
        A1=gamma1.lower_const, A2=gamma1.upper_const,
        B1=gamma3.lower_const, B2=gamma3.upper_const,
        C1=gamma2.lower_const, C2=gamma2.upper_const,
        d=d, theorem=theorem,
    )
