"""Physical constants shared across the package.

Molar quantities are kmol-based throughout: R_UNIVERSAL is in J/(kmol*K),
molecular weights in kg/kmol, molar concentrations in kmol/m^3.
"""

# Universal gas constant, J/(kmol*K)
R_UNIVERSAL = 8314.46261815324

# Reference pressure for standard-state entropy and equilibrium, Pa
P_REF = 101325.0
