"""Resonator + spin-ensemble response.

Conventions
-----------
All user-facing rates are ordinary-frequency quantities in MHz.  ``kappa`` is
the cavity FWHM, ``gamma`` the *half* width of the spin Lorentzian and
``g_coll`` the collective coupling rate.  With these the spin-induced
broadening of the cavity line is

    Gamma_Z = 2 g_coll^2 gamma / (Delta^2 + gamma^2)

and the total FWHM is ``kappa + sum_k Gamma_Z,k``.  Lines are summed
independently, which is adequate while they are separated by much more than
their widths; overlapping lines would need the full coupled-mode model
(:func:`s21_trace`).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .constants import (
    HBAR,
    HZ_PER_MHZ,
    MHZ_PER_GHZ,
    MU_0,
    MU_B_MHZ_PER_T,
    TWO_PI,
)
from .errors import ValidationError


@dataclass(frozen=True)
class CavityParams:
    """Resonator: ``f_r`` in GHz, loaded ``Q``, FWHM ``kappa`` in MHz.

    ``kappa`` defaults to ``1000 f_r / Q``; ``Q`` may be omitted when
    ``kappa`` is given.
    """

    f_r: float
    Q: float = None
    kappa: float = None

    def __post_init__(self):
        if not (self.f_r > 0 and math.isfinite(self.f_r)):
            raise ValidationError("cavity f_r must be positive")
        if self.Q is None and self.kappa is None:
            raise ValidationError("cavity needs Q or kappa")
        if self.Q is not None and not self.Q > 1:
            raise ValidationError("cavity Q must exceed 1")
        if self.kappa is None:
            object.__setattr__(self, "kappa", MHZ_PER_GHZ * self.f_r / self.Q)
        elif not self.kappa > 0:
            raise ValidationError("cavity kappa must be positive")
        elif self.Q is None:
            object.__setattr__(self, "Q", MHZ_PER_GHZ * self.f_r / self.kappa)
        else:
            implied = MHZ_PER_GHZ * self.f_r / self.Q
            if abs(implied - self.kappa) > 1e-6 * implied:
                raise ValidationError(
                    f"kappa = {self.kappa} MHz is inconsistent with f_r/Q = {implied} MHz"
                )

    @property
    def f_r_mhz(self):
        return MHZ_PER_GHZ * self.f_r


@dataclass(frozen=True)
class EnsembleTransition:
    label: str
    g_factor: float
    gamma: float  # MHz, half width
    g_coll: float  # MHz

    def __post_init__(self):
        if not self.g_factor > 0:
            raise ValidationError(f"{self.label}: g_factor must be positive")
        if not self.gamma > 0:
            raise ValidationError(f"{self.label}: gamma must be positive")
        if not self.g_coll >= 0:
            raise ValidationError(f"{self.label}: g_coll must be non-negative")

    def resonance_field(self, f_r_ghz):
        """Field (T) where this line crosses the cavity frequency."""
        return MHZ_PER_GHZ * f_r_ghz / (self.g_factor * MU_B_MHZ_PER_T)


@dataclass(frozen=True)
class CouplingGeometry:
    mode_volume: float  # m^3
    magnetic_moment: float  # J/T

    def __post_init__(self):
        if not self.mode_volume > 0:
            raise ValidationError("mode volume must be positive")


def detuning(cavity, t, field):
    """Cavity minus spin frequency (MHz) at field ``field`` (T)."""
    return cavity.f_r_mhz - t.g_factor * MU_B_MHZ_PER_T * np.asarray(field, dtype=float)


def spin_linewidth(t, delta):
    """Spin-induced broadening (MHz) of the cavity FWHM at detuning ``delta``."""
    delta = np.asarray(delta, dtype=float)
    out = 2.0 * t.g_coll**2 * t.gamma / (delta * delta + t.gamma**2)
    return float(out) if out.ndim == 0 else out


def _unpack(transitions):
    g = np.array([t.g_factor for t in transitions], dtype=float)
    w = np.array([t.gamma for t in transitions], dtype=float)
    c = np.array([t.g_coll for t in transitions], dtype=float)
    return g, w, c


def total_linewidth(cavity, transitions, field):
    """Cavity FWHM (MHz) including every ensemble line, on scalar or array field."""
    b = np.asarray(field, dtype=float)
    g, w, c = _unpack(transitions)
    out = kernels.linewidth_model(
        np.atleast_1d(b), cavity.kappa, cavity.f_r_mhz, g, w, c, MU_B_MHZ_PER_T
    )
    return float(out[0]) if b.ndim == 0 else out.reshape(b.shape)


def s21_complex(cavity, transitions, field, probe_ghz):
    """Complex transmission, normalized to 1 at f_r for the bare cavity.

    Coupled damped modes, with every frequency in MHz (angular = 2 pi f)::

        S21 = pi kappa / ( 2 pi i (f - f_r) + pi kappa
                           + sum_k (2 pi g_k)^2 / (2 pi i (f - f_s,k) + 2 pi gamma_k) )

    The numerator ``(kappa/2) * 2 pi`` is the bare-cavity peak normalization.
    """
    f = np.asarray(probe_ghz, dtype=float) * MHZ_PER_GHZ
    if f.ndim != 1 or f.size == 0:
        raise ValidationError("probe frequency grid must be a non-empty 1-D sequence")
    if np.any(np.diff(f) < 0):
        raise ValidationError("probe frequency grid must be sorted")
    k = cavity.kappa
    denom = 1j * TWO_PI * (f - cavity.f_r_mhz) + math.pi * k
    for t in transitions:
        f_s = t.g_factor * MU_B_MHZ_PER_T * float(field)
        denom = denom + (TWO_PI * t.g_coll) ** 2 / (1j * TWO_PI * (f - f_s) + TWO_PI * t.gamma)
    return math.pi * k / denom


def s21_trace(cavity, transitions, field, probe_ghz, offset_db=0.0):
    """Magnitude (dB) and phase (rad) of the transmission on ``probe_ghz``.

    ``offset_db`` is the net gain/attenuation of the measurement chain added
    to the normalized magnitude.
    """
    s = s21_complex(cavity, transitions, field, probe_ghz)
    mag_db = 20.0 * np.log10(np.abs(s)) + offset_db
    return mag_db, np.angle(s)


def fwhm_from_trace(probe_ghz, mag_db):
    """FWHM (MHz) of a transmission peak from its half-power points.

    Crossings are located by linear interpolation of |S21|^2; the peak must
    fall off below half power on both sides of the grid.
    """
    f = np.asarray(probe_ghz, dtype=float) * MHZ_PER_GHZ
    power = 10.0 ** (np.asarray(mag_db, dtype=float) / 10.0)
    i0 = int(np.argmax(power))
    half = 0.5 * power[i0]
    left = np.flatnonzero(power[: i0 + 1] < half)
    right = np.flatnonzero(power[i0:] < half)
    if left.size == 0 or right.size == 0:
        raise ValidationError("trace does not drop below half power on both sides")
    il = left[-1]
    ir = i0 + right[0]
    fl = f[il] + (half - power[il]) * (f[il + 1] - f[il]) / (power[il + 1] - power[il])
    fr = f[ir - 1] + (half - power[ir - 1]) * (f[ir] - f[ir - 1]) / (power[ir] - power[ir - 1])
    return float(fr - fl)


def single_spin_coupling(cavity, geom):
    """Single-spin coupling g_c / 2 pi in Hz.

    g_c = mu_m sqrt(mu_0 omega_r / (2 hbar V_c)) with omega_r = 2 pi f_r.
    """
    omega_r = TWO_PI * cavity.f_r * 1e9
    g_c = geom.magnetic_moment * math.sqrt(MU_0 * omega_r / (2.0 * HBAR * geom.mode_volume))
    return g_c / TWO_PI


def spins_needed(kappa_mhz, g_c_hz):
    """Spin number at which g_c sqrt(N) reaches kappa: (kappa / g_c)^2."""
    if not (kappa_mhz > 0 and g_c_hz > 0):
        raise ValidationError("kappa and g_c must be positive")
    return (kappa_mhz * HZ_PER_MHZ / g_c_hz) ** 2


def collective_coupling(g_c, n_spins):
    """g_c sqrt(N), in the units of ``g_c``."""
    return g_c * math.sqrt(n_spins)
