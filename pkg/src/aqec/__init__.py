"""Autonomous error-correction simulator.

Builds small dissipatively-stabilized qubit models, optimizes two-quadrature
coupling pulses by gradient ascent, evolves pulse-reset cycles under Lindblad
dissipation with phase-dependent loss rates, and extracts logical lifetimes
and residual-error scaling.
"""

__version__ = "0.1.0"
