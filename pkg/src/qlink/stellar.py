"""Expected photon count rates from reference stars through the receiver chain."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .constants import FWHM_PER_SIGMA
from .errors import EmptyChain, InvalidParameter

ZERO_MAG_FLUX = 1.0e3  # photons cm^-2 s^-1 A^-1, V band, outside the atmosphere


@dataclass(frozen=True)
class StarSpec:
    v_magnitude: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.v_magnitude):
            raise InvalidParameter("v_magnitude must be finite")


@dataclass(frozen=True)
class ReceiverChain:
    aperture_area: float  # cm^2
    mirror_reflectivities: tuple[float, ...]
    bandwidth: float  # Angstrom
    qe_fiber: float = 1.0
    extra_optics: float = 1.0
    atmospheric_transmission: float = 1.0
    pinhole_coupling: float = 1.0
    sky_background: float = 0.0  # counts/s added after the chain

    def __post_init__(self):
        object.__setattr__(self, "mirror_reflectivities", tuple(self.mirror_reflectivities))
        if not self.aperture_area > 0:
            raise InvalidParameter("aperture_area must be > 0")
        if not self.bandwidth > 0:
            raise InvalidParameter("bandwidth must be > 0")
        for name in ("qe_fiber", "extra_optics", "atmospheric_transmission", "pinhole_coupling"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise InvalidParameter(f"{name} must be in (0, 1], got {v}")
        if self.sky_background < 0:
            raise InvalidParameter("sky_background must be >= 0")


@dataclass(frozen=True)
class CountRateResult:
    rate: float
    factor_log: list[tuple[str, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"rate_per_s": self.rate,
                "factors": [{"name": n, "value": v} for n, v in self.factor_log]}


def zero_mag_flux() -> float:
    return ZERO_MAG_FLUX


def mirror_chain_reflectivity(reflectivities) -> float:
    refl = list(reflectivities)
    if not refl:
        raise EmptyChain("mirror chain is empty")
    out = 1.0
    for r in refl:
        if not 0 < r <= 1:
            raise InvalidParameter(f"reflectivity must be in (0, 1], got {r}")
        out *= r
    return out


def expected_count_rate(star: StarSpec, chain: ReceiverChain) -> CountRateResult:
    """Detected photon rate (1/s) from ``star`` through ``chain``.

    The factor log multiplies out to the returned rate when the sky
    background is zero; a nonzero background is appended as an additive term.
    """
    factors = [
        ("zero_mag_flux", zero_mag_flux()),
        ("magnitude_scale", 10.0 ** (-0.4 * star.v_magnitude)),
        ("aperture_area_cm2", chain.aperture_area),
        ("bandwidth_angstrom", chain.bandwidth),
        ("mirror_reflectivity", mirror_chain_reflectivity(chain.mirror_reflectivities)),
        ("qe_fiber", chain.qe_fiber),
        ("extra_optics", chain.extra_optics),
        ("atmospheric_transmission", chain.atmospheric_transmission),
        ("pinhole_coupling", chain.pinhole_coupling),
    ]
    rate = 1.0
    for _, v in factors:
        rate *= v
    if chain.sky_background:
        factors.append(("sky_background_additive", chain.sky_background))
        rate += chain.sky_background
    return CountRateResult(rate, factors)


def pinhole_coupling_fraction(seeing_fwhm: float, pinhole_diameter: float) -> float:
    """Energy of a circular Gaussian seeing disk that falls inside the pinhole."""
    if not seeing_fwhm > 0:
        raise InvalidParameter("seeing_fwhm must be > 0")
    if pinhole_diameter < 0:
        raise InvalidParameter("pinhole_diameter must be >= 0")
    sigma = seeing_fwhm / FWHM_PER_SIGMA
    return -math.expm1(-((pinhole_diameter / 2.0) ** 2) / (2.0 * sigma**2))
