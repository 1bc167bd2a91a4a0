"""Signal recovery from time-tag streams.

Times of flight are fitted with a Chebyshev series on the fire-epoch
domain mapped to [-1, 1]; the least-squares system is solved by SVD so that
degree-60 fits stay well posed. Coincidence gating and instrument-offset
calibration work directly on integer-picosecond streams.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev

from .constants import PS_PER_NS, PS_PER_S
from .errors import IllConditioned, InvalidParameter, NoReturns, OutOfDomain, Underdetermined
from .timetag import BACKGROUND, FIRE, RETURN, TimeTagStream

MAX_CONDITION = 1e10
MAX_DEGREE = 60


@dataclass(frozen=True)
class RangeObservation:
    fire_epoch: float  # s
    measured_tof: float  # ns

    def __post_init__(self):
        if not self.measured_tof > 0:
            raise InvalidParameter("measured_tof must be > 0")


@dataclass(frozen=True)
class RangeFit:
    degree: int
    domain: tuple[float, float]
    coefficients: np.ndarray
    rms_residual_ns: float

    def to_dict(self) -> dict:
        return {"degree": self.degree, "domain": list(self.domain),
                "coefficients": [float(c) for c in self.coefficients],
                "rms_residual_ns": self.rms_residual_ns}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RangeFit":
        return cls(int(d["degree"]), tuple(d["domain"]),
                   np.asarray(d["coefficients"], dtype=float), float(d["rms_residual_ns"]))


def _normalize(t, domain):
    lo, hi = domain
    return (2.0 * np.asarray(t, dtype=float) - (lo + hi)) / (hi - lo)


def clenshaw(coefficients, x):
    """Evaluate sum c_k T_k(x) by Clenshaw's backward recurrence."""
    c = np.asarray(coefficients, dtype=float)
    x = np.asarray(x, dtype=float)
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    two_x = 2.0 * x
    for ck in c[:0:-1]:
        b1, b2 = two_x * b1 - b2 + ck, b1
    return x * b1 - b2 + c[0]


def observations_arrays(obs):
    """Split observations (objects or an (n, 2) array) into epoch and ToF arrays."""
    if isinstance(obs, np.ndarray) and obs.ndim == 2:
        return obs[:, 0].astype(float), obs[:, 1].astype(float)
    t = np.array([o.fire_epoch for o in obs], dtype=float)
    y = np.array([o.measured_tof for o in obs], dtype=float)
    return t, y


def fit_tof_polynomial(obs, degree: int, t=None, tof_ns=None) -> RangeFit:
    """Least-squares Chebyshev fit of time of flight (ns) against fire epoch (s).

    Pass either a sequence of RangeObservation or the arrays ``t``/``tof_ns``.
    """
    if t is None:
        t, y = observations_arrays(obs)
    else:
        t, y = np.asarray(t, dtype=float), np.asarray(tof_ns, dtype=float)
    if degree < 0:
        raise InvalidParameter("degree must be >= 0")
    if degree > MAX_DEGREE:
        raise InvalidParameter(f"degree above {MAX_DEGREE} is not supported")
    if t.size <= degree:
        raise Underdetermined(f"{t.size} observations cannot determine degree {degree}")
    domain = (float(t.min()), float(t.max()))
    if degree > 0 and not domain[1] > domain[0]:
        raise Underdetermined("observation epochs span a degenerate domain")
    if domain[1] == domain[0]:
        domain = (domain[0] - 0.5, domain[1] + 0.5)

    x = _normalize(t, domain)
    basis = chebyshev.chebvander(x, degree)
    # center the data so the ~1e7 ns mean does not eat the precision of the residuals
    offset = float(np.mean(y))
    coef, _, rank, sv = np.linalg.lstsq(basis, y - offset, rcond=None)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else math.inf
    if rank < degree + 1 or cond > MAX_CONDITION:
        raise IllConditioned(f"design matrix condition number {cond:.3g} (rank {rank})")
    coef[0] += offset
    resid = y - clenshaw(coef, x)
    rms = float(np.sqrt(np.mean(resid**2)))
    return RangeFit(degree, domain, coef, rms)


def predict_tof(fit: RangeFit, t):
    """Predicted time of flight (ns) at epoch(s) ``t``; raises OutOfDomain outside the fit."""
    t_arr = np.asarray(t, dtype=float)
    lo, hi = fit.domain
    if np.any((t_arr < lo) | (t_arr > hi)):
        raise OutOfDomain(f"epoch outside fit domain [{lo}, {hi}]")
    val = clenshaw(fit.coefficients, _normalize(t_arr, fit.domain))
    return float(val) if val.ndim == 0 else val


def fit_residuals(fit: RangeFit, t, tof_ns) -> np.ndarray:
    return np.asarray(tof_ns, dtype=float) - predict_tof(fit, t)


def pair_returns(stream: TimeTagStream, channels=(RETURN,)):
    """Pair each selected event with the closest preceding fire.

    Returns ``(fire_ps, event_ps)`` arrays; events before the first fire are dropped.
    """
    fires = stream.timestamps[stream.channels == FIRE]
    mask = np.isin(stream.channels, channels)
    events = stream.timestamps[mask]
    if fires.size == 0 or events.size == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    idx = np.searchsorted(fires, events, side="right") - 1
    ok = idx >= 0
    return fires[idx[ok]], events[ok]


def observations_from_stream(stream: TimeTagStream, channels=(RETURN,)):
    """Range observations (fire epoch in s, ToF in ns) from fire/return pairs.

    When several events follow one fire only the first is kept.
    """
    fire_ps, ev_ps = pair_returns(stream, channels)
    if fire_ps.size:
        first = np.concatenate([[True], fire_ps[1:] != fire_ps[:-1]])
        fire_ps, ev_ps = fire_ps[first], ev_ps[first]
    t = fire_ps / PS_PER_S
    tof = (ev_ps - fire_ps) / PS_PER_NS
    return np.column_stack([t, tof]) if t.size else np.empty((0, 2))


@dataclass(frozen=True)
class CoincidenceReport:
    accepted: TimeTagStream
    n_signal_candidates: int
    n_rejected: int
    window_ns: float
    residuals_ns: np.ndarray
    n_fires_used: int = 0
    n_fires_skipped: int = 0
    accepted_by_channel: dict = field(default_factory=dict)

    def summary(self) -> dict:
        res = self.residuals_ns
        return {
            "window_ns": self.window_ns,
            "n_signal_candidates": self.n_signal_candidates,
            "n_rejected": self.n_rejected,
            "n_fires_used": self.n_fires_used,
            "n_fires_skipped": self.n_fires_skipped,
            "accepted_by_channel": dict(self.accepted_by_channel),
            "residual_mean_ns": float(res.mean()) if res.size else None,
            "residual_rms_ns": float(np.sqrt(np.mean(res**2))) if res.size else None,
        }


def coincidence_filter(stream: TimeTagStream, fit: RangeFit, window: float,
                       offset: float = 0.0) -> CoincidenceReport:
    """Keep non-fire events inside a gate of width ``window`` ns around each predicted return.

    The gate for a fire at ``f`` is centred on f + predict_tof(f) + offset
    (``offset`` in ns). Fires outside the fit domain are skipped and counted.
    An event is accepted if the nearest gate centre is within window/2.
    """
    if not window > 0:
        raise InvalidParameter("window must be > 0")
    fires = stream.timestamps[stream.channels == FIRE]
    t_fire = fires / PS_PER_S
    lo, hi = fit.domain
    inside = (t_fire >= lo) & (t_fire <= hi)
    used = fires[inside]
    centers = used + (predict_tof(fit, t_fire[inside]) + offset) * PS_PER_NS if used.size else \
        np.empty(0)
    centers = np.sort(np.asarray(centers, dtype=float))

    ev_mask = stream.channels != FIRE
    ev_idx = np.flatnonzero(ev_mask)
    ev = stream.timestamps[ev_idx].astype(float)
    half = window * PS_PER_NS / 2.0
    if centers.size and ev.size:
        j = np.searchsorted(centers, ev)
        left = centers[np.clip(j - 1, 0, centers.size - 1)]
        right = centers[np.clip(j, 0, centers.size - 1)]
        d_left = ev - left
        d_right = ev - right
        nearest = np.where(np.abs(d_left) <= np.abs(d_right), d_left, d_right)
        ok = np.abs(nearest) <= half
    else:
        nearest = np.zeros(ev.size)
        ok = np.zeros(ev.size, dtype=bool)

    keep = np.zeros(len(stream), dtype=bool)
    keep[ev_idx[ok]] = True
    accepted = stream.subset(keep)
    by_channel = {"return": accepted.count("return"), "background": accepted.count("background")}
    return CoincidenceReport(
        accepted=accepted,
        n_signal_candidates=int(ok.sum()),
        n_rejected=int(ev.size - ok.sum()),
        window_ns=float(window),
        residuals_ns=nearest[ok] / PS_PER_NS,
        n_fires_used=int(used.size),
        n_fires_skipped=int(fires.size - used.size),
        accepted_by_channel=by_channel,
    )


def return_rate(report: CoincidenceReport, n_fires: int) -> float:
    if n_fires <= 0:
        raise InvalidParameter("n_fires must be > 0")
    return report.n_signal_candidates / n_fires


@dataclass(frozen=True)
class OffsetEstimate:
    offset_ns: float
    fwhm_ns: float
    bin_edges_ns: np.ndarray
    counts: np.ndarray
    n_returns: int = 0

    def to_dict(self) -> dict:
        return {"offset_ns": self.offset_ns, "fwhm_ns": self.fwhm_ns,
                "n_returns": self.n_returns, "bin_width_ns":
                float(self.bin_edges_ns[1] - self.bin_edges_ns[0])}


def _half_max_crossings(centers, counts, half):
    peak = int(np.argmax(counts))
    i = peak
    while i > 0 and counts[i - 1] >= half:
        i -= 1
    # counts[i-1] < half <= counts[i]
    left = centers[i - 1] + (half - counts[i - 1]) / (counts[i] - counts[i - 1]) * (
        centers[i] - centers[i - 1])
    k = peak
    while k < counts.size - 1 and counts[k + 1] >= half:
        k += 1
    right = centers[k] + (counts[k] - half) / (counts[k] - counts[k + 1]) * (
        centers[k + 1] - centers[k])
    return left, right


def estimate_instrument_offset(stream: TimeTagStream, true_tof: float,
                               bin_width: float = 0.1,
                               channels=(RETURN, BACKGROUND)) -> OffsetEstimate:
    """Histogram of (event - fire - true_tof) and its half-maximum centroid and width.

    ``true_tof`` and ``bin_width`` are in ns. Bins start at the smallest
    delay, so the estimate is exactly equivariant under a common shift of
    the return timestamps. The offset is the mean delay of the events that
    lie between the two half-maximum crossings, which are interpolated
    linearly between bin centres; the FWHM is their separation.
    """
    if not bin_width > 0:
        raise InvalidParameter("bin_width must be > 0")
    fire_ps, ev_ps = pair_returns(stream, channels)
    if ev_ps.size == 0:
        raise NoReturns("stream holds no fire/return pairs")
    # integer-ps differences keep the binning exactly shift-equivariant
    diff_ps = ev_ps - fire_ps
    rel = (diff_ps - diff_ps.min()).astype(float)
    bw_ps = bin_width * PS_PER_NS
    n_bins = int(math.floor(rel.max() / bw_ps)) + 1
    idx = np.minimum(np.floor(rel / bw_ps).astype(np.int64), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    lo = float(diff_ps.min()) / PS_PER_NS - true_tof
    # zero padding so the half-max crossing always exists
    counts = np.concatenate([[0], counts, [0]])
    edges = lo + (np.arange(n_bins + 3) - 1) * bin_width
    centers = edges[:-1] + bin_width / 2

    half = counts.max() / 2.0
    left, right = _half_max_crossings(centers, counts.astype(float), half)
    delay = diff_ps / PS_PER_NS - true_tof
    core = (delay >= left) & (delay <= right)
    if not core.any():
        # every event in one bin narrower than a ps grid step
        core = idx == int(np.argmax(counts)) - 1
    offset = float(np.mean(diff_ps[core])) / PS_PER_NS - true_tof
    fwhm = float(right - left)
    return OffsetEstimate(offset, fwhm, edges, counts, int(ev_ps.size))
