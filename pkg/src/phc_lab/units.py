"""Unit-bearing scalar types and exact conversions.

Conventions used across the package:

* vacuum wavelength in nm
* optical frequency in THz
* rates (cavity and emitter linewidths, couplings) in GHz
* Q and mode volume are dimensionless; mode volume is in units of (lambda/n)^3

The scalar types subclass ``float`` so they drop straight into numpy
arithmetic while still carrying their unit in the type and validating their
domain on construction.
"""

from __future__ import annotations

from dataclasses import dataclass

# speed of light, exact SI value
C_M_PER_S = 299_792_458.0
# the same constant in nm*THz, so that f[THz] = C_NM_THZ / lambda[nm]
C_NM_THZ = 299_792.458
# and in nm/fs, used by the time-domain solver
C_NM_PER_FS = 299.792458

N_DIAMOND = 2.41


class _Quantity(float):
    unit = ""
    allow_zero = False

    def __new__(cls, value):
        v = float(value)
        if not v == v:
            raise ValueError(f"{cls.__name__} must not be NaN")
        if v < 0 or (v == 0 and not cls.allow_zero):
            bound = ">= 0" if cls.allow_zero else "> 0"
            raise ValueError(f"{cls.__name__} must be {bound}, got {v!r} {cls.unit}")
        return super().__new__(cls, v)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({float(self)!r} {self.unit})".rstrip()


class Wavelength(_Quantity):
    """Vacuum wavelength in nm."""

    unit = "nm"


class Frequency(_Quantity):
    """Optical frequency in THz."""

    unit = "THz"


class Rate(_Quantity):
    """Linewidth, decay or coupling rate in GHz (ordinary frequency units)."""

    unit = "GHz"
    allow_zero = True


class QualityFactor(_Quantity):
    unit = ""


@dataclass(frozen=True)
class ModeVolume:
    """Mode volume in units of (lambda/n_ref)^3."""

    v: float
    n_ref: float = N_DIAMOND

    def __post_init__(self) -> None:
        if not self.v > 0:
            raise ValueError(f"mode volume must be > 0, got {self.v}")
        if not self.n_ref >= 1:
            raise ValueError(f"n_ref must be >= 1, got {self.n_ref}")

    def absolute_nm3(self, wavelength_nm: float) -> float:
        return self.v * (wavelength_nm / self.n_ref) ** 3

    @classmethod
    def from_absolute(cls, volume_nm3: float, wavelength_nm: float, n_ref: float = N_DIAMOND) -> "ModeVolume":
        return cls(volume_nm3 / (wavelength_nm / n_ref) ** 3, n_ref)


def wavelength_to_frequency(wavelength_nm: float) -> Frequency:
    """Vacuum wavelength (nm) to frequency (THz)."""
    lam = Wavelength(wavelength_nm)
    return Frequency(C_NM_THZ / lam)


def frequency_to_wavelength(frequency_thz: float) -> Wavelength:
    nu = Frequency(frequency_thz)
    return Wavelength(C_NM_THZ / nu)


def q_to_kappa(q: float, wavelength_nm: float) -> Rate:
    """Cavity energy decay rate kappa = nu0 / Q, returned in GHz."""
    q = QualityFactor(q)
    nu_ghz = wavelength_to_frequency(wavelength_nm) * 1e3
    return Rate(nu_ghz / q)


def kappa_to_q(kappa_ghz: float, wavelength_nm: float) -> QualityFactor:
    kappa = Rate(kappa_ghz)
    if kappa == 0:
        raise ValueError("kappa must be > 0 to define a Q")
    return QualityFactor(wavelength_to_frequency(wavelength_nm) * 1e3 / kappa)


def fwhm_to_q(wavelength_nm: float, fwhm_nm: float) -> QualityFactor:
    """Q = lambda0 / FWHM for a line measured on a wavelength axis."""
    lam = Wavelength(wavelength_nm)
    width = Wavelength(fwhm_nm)
    if width >= lam:
        raise ValueError(f"FWHM {width} nm must be smaller than the centre wavelength {lam} nm")
    return QualityFactor(lam / width)


def wavelength_interval_to_ghz(delta_nm: float, wavelength_nm: float) -> Rate:
    """First-order conversion of a small wavelength interval to a frequency interval."""
    lam = Wavelength(wavelength_nm)
    return Rate(abs(delta_nm) * C_NM_THZ / lam**2 * 1e3)
