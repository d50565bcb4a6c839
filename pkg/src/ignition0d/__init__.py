"""Differentiable 0D combustion-reactor toolkit.

A well-stirred constant-volume reactor (NASA-7 thermodynamics, Arrhenius
kinetics, fixed-step RK4) whose heat deposition and rate constants can be
driven by small neural networks and trained end-to-end through the
integrator by reverse-mode automatic differentiation, plus kernel-ridge,
plain-MLP and DBSCAN baselines for ignition-map studies.
"""

__version__ = "0.1.0"
