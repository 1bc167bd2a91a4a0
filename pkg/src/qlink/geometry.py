"""Circular-orbit pass geometry over a single ground station.

The satellite moves on a great circle at constant mean motion. The pass is
fixed by its maximum elevation: the station sits at a cross-track central
angle from the ground track, so culmination happens at ``t = 0``. Earth
rotation, refraction and perturbations are ignored.

Station-centred frame: the station is on the +z axis of an Earth-centred
frame, +x points toward the ground track at culmination and +y along the
direction of motion at culmination.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .constants import EARTH_RADIUS, GM_EARTH, SPEED_OF_LIGHT
from .errors import BelowHorizon, InvalidParameter, NeverVisible


@dataclass(frozen=True)
class CircularOrbit:
    altitude: float
    body_radius: float = EARTH_RADIUS
    grav_parameter: float = GM_EARTH

    def __post_init__(self):
        if not self.altitude > 0:
            raise InvalidParameter(f"altitude must be > 0, got {self.altitude}")
        if not (self.body_radius > 0 and self.grav_parameter > 0):
            raise InvalidParameter("body_radius and grav_parameter must be > 0")

    @property
    def radius(self) -> float:
        return self.body_radius + self.altitude

    @property
    def mean_motion(self) -> float:
        """Angular rate along the orbit (rad/s)."""
        return math.sqrt(self.grav_parameter / self.radius**3)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.mean_motion

    @property
    def speed(self) -> float:
        return math.sqrt(self.grav_parameter / self.radius)


def central_angle_at_elevation(orbit: CircularOrbit, elevation: float) -> float:
    """Earth-centred angle between station and satellite seen at ``elevation``."""
    ratio = orbit.body_radius * math.cos(elevation) / orbit.radius
    return math.acos(ratio) - elevation


def range_at_elevation(orbit: CircularOrbit, elevation: float) -> float:
    """Slant range to a satellite on ``orbit`` seen at ``elevation`` (rad)."""
    re, r = orbit.body_radius, orbit.radius
    s = re * math.sin(elevation)
    return -s + math.sqrt(s * s + r * r - re * re)


@dataclass(frozen=True)
class PassGeometry:
    orbit: CircularOrbit
    max_elevation: float
    epoch_at_culmination: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.max_elevation <= math.pi / 2:
            raise InvalidParameter(
                f"max_elevation must be in (0, pi/2], got {self.max_elevation}"
            )

    @property
    def cross_track_angle(self) -> float:
        """Central angle between station and ground track (0 for overhead)."""
        return max(central_angle_at_elevation(self.orbit, self.max_elevation), 0.0)

    def _satellite_position(self, t):
        alpha = self.orbit.mean_motion * (np.asarray(t, dtype=float) - self.epoch_at_culmination)
        beta = self.cross_track_angle
        r = self.orbit.radius
        x = r * np.cos(alpha) * math.sin(beta)
        y = r * np.sin(alpha)
        z = r * np.cos(alpha) * math.cos(beta)
        return x, y, z

    def topocentric(self, t):
        """Return (range, elevation, azimuth) arrays at times ``t`` (no horizon check).

        Azimuth is measured from +x toward +y in the local horizontal plane.
        """
        x, y, z = self._satellite_position(t)
        dz = z - self.orbit.body_radius
        rng = np.sqrt(x * x + y * y + dz * dz)
        elevation = np.arcsin(np.clip(dz / rng, -1.0, 1.0))
        azimuth = np.arctan2(y, x)
        return rng, elevation, azimuth

    def elevation(self, t):
        return self.topocentric(t)[1]


def _check_visible(elevation, t):
    el = np.atleast_1d(elevation)
    if np.any(el < 0):
        bad = np.atleast_1d(np.asarray(t, dtype=float))
        bad = bad[np.argmax(el < 0)] if bad.size == el.size else bad[0]
        raise BelowHorizon(f"satellite below the horizon at t={bad:g} s")


def slant_range(pass_: PassGeometry, t):
    """Station-to-satellite distance (m) at time(s) ``t`` relative to the pass epoch.

    Raises BelowHorizon if any requested time has negative elevation.
    """
    t_arr = np.asarray(t, dtype=float)
    alpha = pass_.orbit.mean_motion * (t_arr - pass_.epoch_at_culmination)
    cos_gamma = np.cos(alpha) * math.cos(pass_.cross_track_angle)
    re, r = pass_.orbit.body_radius, pass_.orbit.radius
    rho = np.sqrt(re * re + r * r - 2.0 * re * r * cos_gamma)
    sin_el = (r * cos_gamma - re) / rho
    _check_visible(sin_el, t_arr)
    return float(rho) if rho.ndim == 0 else rho


def time_of_flight(range_m):
    """Two-way light travel time (s) for a one-way distance ``range_m``."""
    r = np.asarray(range_m, dtype=float)
    if np.any(r < 0):
        raise InvalidParameter("range must be >= 0")
    tof = 2.0 * r / SPEED_OF_LIGHT
    return float(tof) if tof.ndim == 0 else tof


def visibility_window(pass_: PassGeometry, min_elevation: float = 0.0,
                      xtol: float = 1e-9) -> tuple[float, float]:
    """Interval (t_start, t_end) around culmination with elevation >= ``min_elevation``.

    The crossing is located by bisection on the along-track angle (tolerance
    ``xtol`` rad), so the result does not depend on any closed-form inversion.
    """
    if min_elevation >= pass_.max_elevation:
        raise NeverVisible(
            f"min_elevation {min_elevation:g} rad >= max_elevation {pass_.max_elevation:g} rad"
        )
    n = pass_.orbit.mean_motion

    def excess(alpha):
        return float(pass_.elevation(pass_.epoch_at_culmination + alpha / n)) - min_elevation

    # elevation decreases monotonically in |alpha| on [0, pi]; keep the
    # inner bracket so both endpoints are guaranteed visible
    lo, hi = 0.0, math.pi
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if excess(mid) >= 0:
            lo = mid
        else:
            hi = mid
    dt = lo / n
    return pass_.epoch_at_culmination - dt, pass_.epoch_at_culmination + dt


@dataclass(frozen=True)
class TrackingRates:
    azimuth_rate: float
    elevation_rate: float
    total_rate: float
    trackable: bool


def tracking_rates(pass_: PassGeometry, t: float, step: float = 0.1,
                   limits: tuple[float, float] = (math.radians(20.0), math.radians(5.0))
                   ) -> TrackingRates:
    """Central-difference angular rates (rad/s) of the line of sight at ``t``.

    ``total_rate`` is the angular speed of the line of sight itself, which
    stays finite at zenith where the azimuth rate does not. ``trackable``
    compares |azimuth_rate| and |elevation_rate| against ``limits``.
    """
    times = np.array([t - step / 2, t, t + step / 2])
    rng, el, az = pass_.topocentric(times)
    _check_visible(el, times)
    daz = (az[2] - az[0] + math.pi) % (2 * math.pi) - math.pi
    az_rate = daz / step
    el_rate = (el[2] - el[0]) / step

    x, y, z = pass_._satellite_position(times[[0, 2]])
    los = np.stack([x, y, z - pass_.orbit.body_radius], axis=1)
    los /= np.linalg.norm(los, axis=1)[:, None]
    # atan2 form keeps precision for small angles
    cross = np.linalg.norm(np.cross(los[0], los[1]))
    total = math.atan2(cross, float(np.dot(los[0], los[1]))) / step

    trackable = abs(az_rate) <= limits[0] and abs(el_rate) <= limits[1]
    return TrackingRates(float(az_rate), float(el_rate), float(total), bool(trackable))


def range_table(pass_: PassGeometry, times) -> np.ndarray:
    """Structured array with columns t_s, range_m, tof_ns, elevation_deg."""
    times = np.asarray(times, dtype=float)
    rng = slant_range(pass_, times)
    el = pass_.elevation(times)
    out = np.empty(times.size, dtype=[("t_s", float), ("range_m", float),
                                      ("tof_ns", float), ("elevation_deg", float)])
    out["t_s"] = times
    out["range_m"] = rng
    out["tof_ns"] = np.asarray(time_of_flight(rng)) * 1e9
    out["elevation_deg"] = np.degrees(el)
    return out


def range_table_csv(table: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t_s", "range_m", "tof_ns", "elevation_deg"])
    for row in table:
        w.writerow([f"{row['t_s']:.6f}", f"{row['range_m']:.3f}",
                    f"{row['tof_ns']:.2f}", f"{row['elevation_deg']:.6f}"])
    return buf.getvalue()
