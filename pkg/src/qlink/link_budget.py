"""Retroreflector radar link equation and the step-by-step intercept chain.

Two formulations of the same geometric loss are evaluated side by side:

* the radar equation, ``N = eta_q E lambda/(hc) eta_T G_T sigma (1/(4 pi R^2))^2
  A_T eta_R T_A^2 T_c^2`` with a Gaussian on-axis gain ``G_T = 8/theta^2``;
* the intercept chain, (target / uplink spot)^2 x active fraction x
  (aperture / downlink spot)^2.

With the geometric cross-section used here the radar form is exactly half
the intercept chain (Gaussian peak versus uniform top-hat spot).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constants import ARCSEC, PLANCK, SPEED_OF_LIGHT
from .errors import InvalidParameter

STATION_DIVERGENCE_RANGE = (1.0 * ARCSEC, 20.0 * ARCSEC)


@dataclass(frozen=True)
class TransmitterSpec:
    pulse_energy: float  # J
    wavelength: float  # m
    divergence: float  # rad, full angle
    rep_rate: float  # Hz

    def __post_init__(self):
        for name in ("pulse_energy", "wavelength", "divergence", "rep_rate"):
            if not getattr(self, name) > 0:
                raise InvalidParameter(f"{name} must be > 0, got {getattr(self, name)}")

    @property
    def divergence_in_station_range(self) -> bool:
        lo, hi = STATION_DIVERGENCE_RANGE
        return lo * (1 - 1e-12) <= self.divergence <= hi * (1 + 1e-12)


@dataclass(frozen=True)
class TargetSpec:
    effective_diameter: float  # m
    active_retro_fraction: float
    return_divergence: float  # rad, full angle
    cross_section: float | None = None  # m^2, overrides the geometric model

    def __post_init__(self):
        if not (self.effective_diameter > 0 and self.return_divergence > 0):
            raise InvalidParameter("effective_diameter and return_divergence must be > 0")
        if not 0 < self.active_retro_fraction <= 1:
            raise InvalidParameter(
                f"active_retro_fraction must be in (0, 1], got {self.active_retro_fraction}"
            )
        if self.cross_section is not None and not self.cross_section > 0:
            raise InvalidParameter("cross_section must be > 0")

    def geometric_cross_section(self) -> float:
        """Active area times the retro gain 4 pi / (return cone solid angle)."""
        area = math.pi * self.effective_diameter**2 / 4.0
        solid_angle = math.pi * (self.return_divergence / 2.0) ** 2
        return area * self.active_retro_fraction * 4.0 * math.pi / solid_angle

    @property
    def sigma(self) -> float:
        if self.cross_section is not None:
            return self.cross_section
        return self.geometric_cross_section()


@dataclass(frozen=True)
class OpticalChain:
    eta_q: float = 1.0
    eta_T: float = 1.0
    eta_R: float = 1.0
    T_A: float = 1.0
    T_c: float = 1.0

    def __post_init__(self):
        for name in ("eta_q", "eta_T", "eta_R", "T_A", "T_c"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise InvalidParameter(f"{name} must be in (0, 1], got {v}")


@dataclass(frozen=True)
class LinkBudgetResult:
    photons_per_pulse: float
    spot_diameter: float
    uplink_fraction: float
    retro_fraction: float
    downlink_fraction: float
    step_chain: float
    end_to_end: float
    photoelectrons: float
    factor_log: list[tuple[str, float]] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "photons_per_pulse": self.photons_per_pulse,
            "spot_diameter_m": self.spot_diameter,
            "uplink_fraction": self.uplink_fraction,
            "retro_fraction": self.retro_fraction,
            "downlink_fraction": self.downlink_fraction,
            "step_chain": self.step_chain,
            "end_to_end": self.end_to_end,
            "photoelectrons": self.photoelectrons,
            "factors": [{"name": n, "value": v} for n, v in self.factor_log],
            "flags": list(self.flags),
        }


def photons_per_pulse(tx: TransmitterSpec) -> float:
    return tx.pulse_energy * tx.wavelength / (PLANCK * SPEED_OF_LIGHT)


def footprint_diameter(divergence: float, range_m: float) -> float:
    if divergence < 0 or range_m < 0:
        raise InvalidParameter("divergence and range must be >= 0")
    return divergence * range_m


def geometric_intercept(target_diameter: float, spot_diameter: float) -> tuple[float, bool]:
    """Fraction of a uniform spot caught by a collector; clamped to 1.

    Returns ``(fraction, clamped)``.
    """
    if target_diameter <= 0:
        raise InvalidParameter("target_diameter must be > 0")
    if spot_diameter <= target_diameter:
        return 1.0, spot_diameter < target_diameter
    return (target_diameter / spot_diameter) ** 2, False


def transmitter_gain(divergence: float) -> float:
    if not divergence > 0:
        raise InvalidParameter("divergence must be > 0")
    return 8.0 / divergence**2


def intercept_chain(uplink_fraction: float, active_fraction: float,
                    downlink_fraction: float, spreading_factor: float = 1.0) -> float:
    """Product of the narrative efficiency factors."""
    if not 0 < spreading_factor <= 1:
        raise InvalidParameter(f"spreading_factor must be in (0, 1], got {spreading_factor}")
    return uplink_fraction * active_fraction * downlink_fraction * spreading_factor


def step_chain_efficiency(tx: TransmitterSpec, target: TargetSpec, range_m: float,
                          rx_aperture_diameter: float, spreading_factor: float = 1.0,
                          uplink_spot: float | None = None,
                          downlink_spot: float | None = None) -> float:
    """Uplink intercept x active retro fraction x downlink intercept x spreading.

    Spot diameters default to divergence x range; pass ``uplink_spot`` or
    ``downlink_spot`` to use quoted spot sizes instead.
    """
    if uplink_spot is None:
        uplink_spot = footprint_diameter(tx.divergence, range_m)
    if downlink_spot is None:
        downlink_spot = footprint_diameter(target.return_divergence, range_m)
    up, _ = geometric_intercept(target.effective_diameter, uplink_spot)
    down, _ = geometric_intercept(rx_aperture_diameter, downlink_spot)
    return intercept_chain(up, target.active_retro_fraction, down, spreading_factor)


def radar_equation(tx: TransmitterSpec, target: TargetSpec, chain: OpticalChain,
                   range_m: float, aperture_area: float,
                   spreading_factor: float = 1.0, uplink_spot: float | None = None,
                   downlink_spot: float | None = None) -> LinkBudgetResult:
    """Expected photoelectrons per pulse with a per-factor breakdown.

    ``end_to_end`` is the product of ``factor_log``; photoelectrons are
    photons_per_pulse x end_to_end x eta_q x eta_R. The ``step_chain``
    cross-check uses quoted spot diameters when given, otherwise
    divergence x range.
    """
    if not range_m > 0:
        raise InvalidParameter(f"range must be > 0, got {range_m}")
    if not aperture_area > 0:
        raise InvalidParameter(f"aperture_area must be > 0, got {aperture_area}")
    if not 0 < spreading_factor <= 1:
        raise InvalidParameter(f"spreading_factor must be in (0, 1], got {spreading_factor}")

    n_tx = photons_per_pulse(tx)
    gain = transmitter_gain(tx.divergence)
    inv_sphere = 1.0 / (4.0 * math.pi * range_m**2)
    factors = [
        ("eta_T", chain.eta_T),
        ("G_T", gain),
        ("sigma_sat", target.sigma),
        ("inverse_square_two_way", inv_sphere**2),
        ("A_T", aperture_area),
        ("T_A^2", chain.T_A**2),
        ("T_c^2", chain.T_c**2),
        ("spreading_factor", spreading_factor),
    ]
    end_to_end = 1.0
    for _, v in factors:
        end_to_end *= v

    spot = uplink_spot if uplink_spot is not None else footprint_diameter(tx.divergence, range_m)
    if downlink_spot is None:
        downlink_spot = footprint_diameter(target.return_divergence, range_m)
    up, up_clamped = geometric_intercept(target.effective_diameter, spot)
    rx_diameter = math.sqrt(4.0 * aperture_area / math.pi)
    down, down_clamped = geometric_intercept(rx_diameter, downlink_spot)
    flags = []
    if up_clamped:
        flags.append("uplink_intercept_clamped")
    if down_clamped:
        flags.append("downlink_intercept_clamped")

    return LinkBudgetResult(
        photons_per_pulse=n_tx,
        spot_diameter=spot,
        uplink_fraction=up,
        retro_fraction=target.active_retro_fraction,
        downlink_fraction=down,
        step_chain=intercept_chain(up, target.active_retro_fraction, down, spreading_factor),
        end_to_end=end_to_end,
        photoelectrons=n_tx * end_to_end * chain.eta_q * chain.eta_R,
        factor_log=factors,
        flags=flags,
    )


def photoelectrons_vs_range(tx: TransmitterSpec, target: TargetSpec, chain: OpticalChain,
                            aperture_area: float, spreading_factor: float = 1.0
                            ) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorised N_pe(R); exploits the exact R^-4 law from one reference evaluation."""
    ref_range = 1.0e6
    ref = radar_equation(tx, target, chain, ref_range, aperture_area,
                         spreading_factor).photoelectrons

    def n_pe(range_m):
        r = np.asarray(range_m, dtype=float)
        return ref * (ref_range / r) ** 4

    return n_pe


def sweep(tx: TransmitterSpec, target: TargetSpec, chain: OpticalChain,
          aperture_area: float, ranges=None, divergences=None,
          spreading_factor: float = 1.0) -> list[dict]:
    """Tabulate photoelectrons over ranges (at fixed divergence) or divergences."""
    rows = []
    if ranges is not None:
        for r in ranges:
            res = radar_equation(tx, target, chain, float(r), aperture_area, spreading_factor)
            rows.append({"range_m": float(r), "divergence_rad": tx.divergence,
                         "end_to_end": res.end_to_end, "photoelectrons": res.photoelectrons})
    if divergences is not None:
        r = ranges[0] if ranges is not None else 6.0e6
        for d in divergences:
            tx_d = TransmitterSpec(tx.pulse_energy, tx.wavelength, float(d), tx.rep_rate)
            res = radar_equation(tx_d, target, chain, float(r), aperture_area, spreading_factor)
            rows.append({"range_m": float(r), "divergence_rad": float(d),
                         "end_to_end": res.end_to_end, "photoelectrons": res.photoelectrons})
    return rows
