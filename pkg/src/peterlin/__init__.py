"""Numerical laboratory for the kinetic Peterlin model of dilute polymer solutions.

Macroscopic model: Navier-Stokes + conformation tensor equation.
Kinetic model: Navier-Stokes + Fokker-Planck equation for psi/M, discretised
with a Maxwellian-weighted Hermite basis in configuration space. The two are
compared to check that kinetic second moments solve the macroscopic equation.
"""

__version__ = "0.1.0"

from .config import RunConfig, load_config, parse_config
from .conformation import MPState, mp_step
from .constitutive import (AdmissibilityVerdict, GammaSpec, Maxwellian, NondimParams, big_gamma,
                           check_admissibility, check_ratio_condition, derive_nondim, gamma_eval,
                           make_maxwellian)
from .diagnostics import (DiagnosticsRow, closure_residual, conformation_from_psi,
                          fisher_information, radial_moment, relative_entropy)
from .driver import ClosureReport, compare_closure, run, run_fp_given, run_kp, run_mp
from .fokker_planck import (FPConfig, HermiteBasis, cutoff_beta, drift_apply, fp_step,
                            gaussian_psi_hat, ou_implicit_solve)
from .grid import TorusGrid2D
from .ns_solver import NSConfig, NSState, kramers_stress, ns_step
