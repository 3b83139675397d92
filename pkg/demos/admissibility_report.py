"""
Checking constitutive choices before a run
==========================================

The macroscopic model is known to be well posed only for certain growth
exponents of gamma_1, gamma_2, gamma_3. ``check_admissibility`` evaluates
both rule sets and names every rule that fails, and the config parser
prints the same verdicts (``peterlin validate``).
"""

from peterlin.config import format_report, parse_config
from peterlin.constitutive import (CLASSICAL_THM31, REGULAR_THM32_COR33, GammaSpec,
                                   check_admissibility, check_ratio_condition)

cases = [
    ("alpha=2, beta=0.5, gamma=1", dict(alpha=2.0, beta=0.5, gamma_exp=1.0), CLASSICAL_THM31),
    ("alpha=1, beta=0, gamma=1", dict(alpha=1.0, beta=0.0, gamma_exp=1.0), CLASSICAL_THM31),
    ("alpha=1, gamma=2, unit constants", dict(alpha=1.0, beta=1.0, gamma_exp=2.0),
     REGULAR_THM32_COR33),
    ("alpha=0, gamma=1", dict(alpha=0.0, beta=1.0, gamma_exp=1.0), REGULAR_THM32_COR33),
]
for label, kwargs, theorem in cases:
    v = check_admissibility(d=2, theorem=theorem, **kwargs)
    status = "admissible" if v.admissible else "violates " + ", ".join(v.violated_rules)
    print(f"{theorem:20s} {label:34s} -> {status}")

# the kinetic model additionally needs gamma_1 = k_tau * gamma_2
g2 = GammaSpec.power_law(1.0, 1.0)
print("\nratio gamma1 = 2 s, gamma2 = s, k_tau = 2:",
      check_ratio_condition(GammaSpec.power_law(2.0, 1.0), g2, 2.0))
print("ratio gamma1 = s^2, gamma2 = s, k_tau = 1:",
      check_ratio_condition(GammaSpec.power_law(1.0, 2.0), g2, 1.0))

print("\nreport for a nonlinear Peterlin configuration:")
print(format_report(parse_config("""
    mode = kp
    dt = 0.001
    t_end = 0.1
    gamma1 = power_law 1 1
    gamma2 = power_law 1 1
    gamma3 = power_law 1 1
""")))
