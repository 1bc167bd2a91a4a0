"""Seeded generators for synthetic photon time-tag streams.

Every generator owns its own ``numpy.random.Generator`` built from the
seed, and draws a fixed number of variates per call so that identical
arguments give bit-identical streams. Float times are rounded half-to-even
to integer picoseconds at emission.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.signal import lfilter

from .constants import FWHM_PER_SIGMA, PS_PER_NS, PS_PER_S
from .errors import EmptyWindow, InvalidParameter
from .geometry import PassGeometry, slant_range, time_of_flight, visibility_window
from .link_budget import TransmitterSpec
from .timetag import BACKGROUND, DEFAULT_EPOCH, FIRE, RETURN, TimeTagStream, apply_dead_time


@dataclass(frozen=True)
class DetectorModel:
    jitter_sigma: float = 0.0  # ps
    dead_time: float = 0.0  # ps
    dark_rate: float = 0.0  # 1/s, uniform background

    def __post_init__(self):
        for name in ("jitter_sigma", "dead_time", "dark_rate"):
            if getattr(self, name) < 0:
                raise InvalidParameter(f"{name} must be >= 0")

    @classmethod
    def from_fwhm_ns(cls, jitter_fwhm_ns: float, dead_time_ns: float = 0.0,
                     dark_rate: float = 0.0) -> "DetectorModel":
        return cls(jitter_fwhm_ns * PS_PER_NS / FWHM_PER_SIGMA,
                   dead_time_ns * PS_PER_NS, dark_rate)


@dataclass(frozen=True)
class ScintillationModel:
    log_sigma: float = 0.0
    correlation_time: float = 0.01  # s

    def __post_init__(self):
        if self.log_sigma < 0:
            raise InvalidParameter("log_sigma must be >= 0")
        if not self.correlation_time > 0:
            raise InvalidParameter("correlation_time must be > 0")


def lognormal_intensity(n: int, step: float, scint: ScintillationModel,
                        rng: np.random.Generator) -> np.ndarray:
    """Unit-mean log-normal factor driven by a stationary Ornstein-Uhlenbeck process.

    Samples are spaced ``step`` seconds apart; the log-intensity has standard
    deviation ``log_sigma`` and autocorrelation exp(-lag/correlation_time).
    """
    eps = rng.standard_normal(n)
    if scint.log_sigma == 0 or n == 0:
        return np.ones(n)
    a = math.exp(-step / scint.correlation_time)
    s = scint.log_sigma
    drive = eps * (s * math.sqrt(1.0 - a * a))
    drive[0] = s * eps[0]
    x = lfilter([1.0], [1.0, -a], drive)
    return np.exp(x - 0.5 * s * s)


def _fire_times_ps(n: int, rep_rate: float) -> np.ndarray:
    return np.rint(np.arange(n) * (PS_PER_S / rep_rate)).astype(np.int64)


def _background(rng, rate, span_ps):
    if rate <= 0 or span_ps <= 0:
        return np.empty(0, np.int64)
    n = rng.poisson(rate * span_ps / PS_PER_S)
    return np.rint(rng.uniform(0.0, span_ps, n)).astype(np.int64)


def _assemble(parts, det: DetectorModel, epoch, meta) -> TimeTagStream:
    ts = np.concatenate([p[0] for p in parts])
    ch = np.concatenate([np.full(p[0].size, p[1], np.uint8) for p in parts])
    stream = TimeTagStream.from_unsorted(ts, ch, epoch, meta)
    return apply_dead_time(stream, int(round(det.dead_time)))


def simulate_pass_returns(pass_: PassGeometry,
                          photoelectrons: Callable[[np.ndarray], np.ndarray] | float,
                          laser: TransmitterSpec, det: DetectorModel, seed: int,
                          window: tuple[float, float] | None = None,
                          epoch: str = DEFAULT_EPOCH) -> TimeTagStream:
    """Fire/return stream for a satellite pass.

    One fire per laser period across ``window`` (seconds relative to
    culmination; defaults to the horizon-to-horizon visibility). Each fire
    yields a return at fire + 2R/c + jitter with probability
    min(1, N_pe(R)). Timestamps count from the first fire; ``meta['t0_s']``
    holds that fire's time relative to culmination.
    """
    if window is None:
        window = visibility_window(pass_, 0.0)
    t0, t1 = window
    n = int(math.floor((t1 - t0) * laser.rep_rate + 1e-9))
    if n <= 0:
        raise EmptyWindow(f"window {window} holds no laser fires")
    rng = np.random.default_rng(seed)

    fires = _fire_times_ps(n, laser.rep_rate)
    t_fire = t0 + fires / PS_PER_S
    tof_ps = np.asarray(time_of_flight(slant_range(pass_, t_fire))) * PS_PER_S
    if callable(photoelectrons):
        n_pe = np.asarray(photoelectrons(slant_range(pass_, t_fire)), dtype=float)
    else:
        n_pe = np.full(n, float(photoelectrons))
    p = np.minimum(1.0, n_pe)
    detected = rng.random(n) < p
    jitter = rng.normal(0.0, det.jitter_sigma, n) if det.jitter_sigma > 0 else np.zeros(n)
    returns = np.rint(fires + tof_ps + jitter).astype(np.int64)[detected]
    span = int(fires[-1] + PS_PER_S / laser.rep_rate)
    bg = _background(rng, det.dark_rate, span)

    meta = {"kind": "pass", "t0_s": t0, "rep_rate_hz": laser.rep_rate, "n_fires": n,
            "seed": seed}
    return _assemble([(fires, FIRE), (returns, RETURN), (bg, BACKGROUND)], det, epoch, meta)


def simulate_ground_target(distance: float, instrument_offset: float, rep_rate: float,
                           n_pulses: int, det: DetectorModel, seed: int,
                           return_probability: float = 1.0,
                           epoch: str = DEFAULT_EPOCH) -> TimeTagStream:
    """Calibration run against a fixed retroreflector at ``distance`` metres.

    ``instrument_offset`` is in seconds. A return probability of 1 models a
    fully aligned receiver.
    """
    if not distance > 0:
        raise InvalidParameter(f"distance must be > 0, got {distance}")
    if not rep_rate > 0 or n_pulses < 0:
        raise InvalidParameter("rep_rate must be > 0 and n_pulses >= 0")
    if not 0 <= return_probability <= 1:
        raise InvalidParameter("return_probability must be in [0, 1]")
    rng = np.random.default_rng(seed)
    fires = _fire_times_ps(n_pulses, rep_rate)
    delay_ps = (time_of_flight(distance) + instrument_offset) * PS_PER_S
    detected = rng.random(n_pulses) < return_probability
    jitter = (rng.normal(0.0, det.jitter_sigma, n_pulses) if det.jitter_sigma > 0
              else np.zeros(n_pulses))
    returns = np.rint(fires + delay_ps + jitter).astype(np.int64)[detected]
    span = int(round(n_pulses * PS_PER_S / rep_rate))
    bg = _background(rng, det.dark_rate, span)
    meta = {"kind": "ground_target", "t0_s": 0.0, "rep_rate_hz": rep_rate,
            "n_fires": n_pulses, "distance_m": distance, "seed": seed}
    return _assemble([(fires, FIRE), (returns, RETURN), (bg, BACKGROUND)], det, epoch, meta)


def simulate_star_counts(rate: float, duration: float, scint: ScintillationModel, seed: int,
                         modulation=None,
                         step: float | None = None, det: DetectorModel | None = None,
                         epoch: str = DEFAULT_EPOCH) -> TimeTagStream:
    """Star photon arrivals on the ``return`` channel.

    Inhomogeneous Poisson process with intensity
    rate x scintillation(t) x (1 + sum_k depth_k sin 2 pi f_k t), held
    piecewise constant over ``step`` seconds (default: the smaller of 1 ms,
    a tenth of the correlation time and a twentieth of the shortest
    modulation period). ``modulation`` is one ``(frequency, depth)`` pair or
    a sequence of them; depths must sum to at most 1.
    """
    if not rate > 0:
        raise InvalidParameter(f"rate must be > 0, got {rate}")
    if duration < 0:
        raise InvalidParameter(f"duration must be >= 0, got {duration}")
    det = det or DetectorModel()
    meta = {"kind": "star", "t0_s": 0.0, "rate_hz": rate, "duration_s": duration,
            "seed": seed}
    if duration == 0:
        return TimeTagStream.empty(epoch, meta)
    if step is None:
        step = min(1e-3, scint.correlation_time / 10.0)
        if modulation is not None:
            f_max = float(np.max(np.atleast_2d(modulation)[:, 0]))
            if f_max > 0:
                step = min(step, 1.0 / (20.0 * f_max))
    n_cells = int(math.ceil(duration / step - 1e-9))
    edges = np.minimum(np.arange(n_cells + 1) * step, duration)
    width = np.diff(edges)
    mid = edges[:-1] + width / 2

    rng = np.random.default_rng(seed)
    intensity = rate * lognormal_intensity(n_cells, step, scint, rng)
    if modulation is not None:
        comps = [modulation] if np.ndim(modulation) == 1 else list(modulation)
        depths = [d for _, d in comps]
        if min(depths) < 0 or sum(depths) > 1:
            raise InvalidParameter("modulation depths must be >= 0 and sum to at most 1")
        total = np.ones(n_cells)
        for freq, depth in comps:
            # cell-averaged sinusoid keeps the rate exact for any step
            if freq > 0:
                avg = np.cos(2 * np.pi * freq * edges[:-1]) - np.cos(2 * np.pi * freq * edges[1:])
                total += depth * avg / (2 * np.pi * freq * width)
        intensity = intensity * total
    counts = rng.poisson(intensity * width)
    starts = np.repeat(edges[:-1], counts)
    widths = np.repeat(width, counts)
    t = starts + rng.random(starts.size) * widths
    ts = np.rint(t * PS_PER_S).astype(np.int64)
    bg = _background(rng, det.dark_rate, int(round(duration * PS_PER_S)))
    return _assemble([(ts, RETURN), (bg, BACKGROUND)], det, epoch, meta)
