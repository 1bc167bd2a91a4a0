"""Physical constants shared across the package (SI units)."""

import math

SPEED_OF_LIGHT = 2.99792458e8  # m/s, exact
PLANCK = 6.62607015e-34  # J s, exact
GM_EARTH = 3.986004418e14  # m^3/s^2
EARTH_RADIUS = 6.371e6  # m, mean spherical radius

ARCSEC = math.pi / (180.0 * 3600.0)  # rad per arcsecond
FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))  # ~2.3548

PS_PER_S = 1e12
PS_PER_NS = 1e3
