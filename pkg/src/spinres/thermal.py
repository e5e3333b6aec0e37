"""Thermal polarization of a two-level spin ensemble.

For a Zeeman splitting h f at temperature T the lower level holds the
fraction 1 / (1 + exp(-h f / k_B T)).  The normalized population difference
is then tanh(h f / 2 k_B T), and the collective coupling scales with the
square root of it.  Note the half: the Boltzmann exponent is split
symmetrically between the two levels.
"""

import math
from dataclasses import dataclass

import numpy as np

from .constants import K_B_MHZ_PER_K, MHZ_PER_GHZ
from .errors import InsufficientDataError, ValidationError


@dataclass(frozen=True)
class ThermalPoint:
    temperature: float  # K
    g_coll_measured: float  # MHz

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValidationError(f"temperature must be positive, got {self.temperature}")
        if not self.g_coll_measured >= 0:
            raise ValidationError("measured g_coll must be non-negative")


def _check(f_ghz, temperature):
    t = np.asarray(temperature, dtype=float)
    if not f_ghz > 0:
        raise ValidationError("transition frequency must be positive")
    if np.any(~(t > 0)):
        raise ValidationError("temperature must be positive")
    return t


def boltzmann_populations(f_ghz, temperature):
    """(lower, upper) level populations, normalized to 1."""
    t = _check(f_ghz, temperature)
    r = np.exp(-f_ghz * MHZ_PER_GHZ / (K_B_MHZ_PER_K * t))
    return 1.0 / (1.0 + r), r / (1.0 + r)


def polarization(f_ghz, temperature):
    """tanh(h f / 2 k_B T); scalar in, scalar out."""
    t = _check(f_ghz, temperature)
    p = np.tanh(f_ghz * MHZ_PER_GHZ / (2.0 * K_B_MHZ_PER_K * t))
    return float(p) if p.ndim == 0 else p


def g_coll_at_temperature(g0, f_ghz, temperature):
    if g0 < 0:
        raise ValidationError("g0 must be non-negative")
    return g0 * np.sqrt(polarization(f_ghz, temperature))


def extrapolate_zero_T(points, f_ghz):
    """Least-squares zero-temperature coupling from (T, g_coll) points.

    The model ``g0 sqrt(p(T))`` is linear in g0, so the unweighted fit is
    closed form.  Returns ``(g0, rms_residual)``, both in MHz.
    """
    points = list(points)
    if len(points) < 2:
        raise InsufficientDataError(f"need at least 2 thermal points, got {len(points)}")
    temps = np.array([p.temperature for p in points])
    if np.all(temps == temps[0]):
        raise InsufficientDataError("thermal points need at least two distinct temperatures")
    y = np.array([p.g_coll_measured for p in points])
    s = np.sqrt(polarization(f_ghz, temps))
    g0 = float(s @ y / (s @ s))
    rms = math.sqrt(float(np.mean((y - g0 * s) ** 2)))
    return g0, rms
