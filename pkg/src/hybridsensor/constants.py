"""Physical constants and default sensor parameters.

All quantities are SI. Angular frequencies are rad/s, plain frequencies Hz.
"""

import math

# CODATA 2018 exact value
BOLTZMANN = 1.380649e-23  # J/K

# 87Rb D2 line; counter-propagating two-photon geometry gives k_eff = 4*pi/lambda
RB87_D2_WAVELENGTH = 780.24e-9  # m
DEFAULT_KEFF = 4.0 * math.pi / RB87_D2_WAVELENGTH  # rad/m

STANDARD_GRAVITY = 9.80665  # m/s^2

# Default interferometer timing and atom number for the reference design
DEFAULT_T = 0.050        # pulse separation, s
DEFAULT_TC = 1.5         # cycle time, s
DEFAULT_ATOM_NUMBER = 1e7
DEFAULT_CONTRAST = 1.0

# Default optomechanical retro-reflector mechanics
DEFAULT_TEST_MASS = 2e-3         # kg
DEFAULT_QUALITY_FACTOR = 5e5
DEFAULT_TM_TEMPERATURE = 293.0   # K, room temperature (not otherwise constrained)

# Measurement band of the combined sensor, DC to 1 kHz. The harmonic sum that
# yields the hybrid sensitivity is evaluated only inside this band.
DEFAULT_HYBRID_BAND_HZ = 1000.0
