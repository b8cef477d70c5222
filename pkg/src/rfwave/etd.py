"""phi-functions for exponential time differencing."""

from __future__ import annotations

import numpy as np

SERIES_CUTOFF = 1e-3


def phi1(z):
    """(e^z - 1)/z with a 6-term Taylor branch for |z| < 1e-3."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < SERIES_CUTOFF
    zs = np.where(small, 1.0, z)
    series = 1 + z / 2 + z**2 / 6 + z**3 / 24 + z**4 / 120 + z**5 / 720
    return np.where(small, series, np.expm1(zs) / zs)


def phi2(z):
    """(e^z - 1 - z)/z^2 with a 6-term Taylor branch for |z| < 1e-3."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < SERIES_CUTOFF
    zs = np.where(small, 1.0, z)
    series = 0.5 + z / 6 + z**2 / 24 + z**3 / 120 + z**4 / 720 + z**5 / 5040
    return np.where(small, series, (np.expm1(zs) - zs) / zs**2)
