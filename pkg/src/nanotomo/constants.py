"""Physical constants and fixed model coefficients shared by every module."""

from scipy import constants as _c

#: reduced Planck constant, J s (CODATA 2018)
HBAR: float = _c.hbar
#: Boltzmann constant, J/K (CODATA 2018)
K_B: float = _c.k

#: eigenvalue of the fundamental doubly-clamped flexural mode
BETA1: float = 4.7300
#: effective-mass coefficient of the doubly-clamped beam (midpoint coordinate)
C_C: float = 0.735
#: default wall thickness, m (graphene interlayer spacing)
T_WALL_DEFAULT: float = 0.34e-9
