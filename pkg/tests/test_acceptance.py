"""End-to-end acceptance checks, one test per criterion.

Run ``pytest tests/test_acceptance.py`` to get a PASS/FAIL line per criterion
in the terminal summary, with the measured values in brackets.
"""

import math
import time

import numpy as np
import pytest

from qlink.analysis import coincidence_filter, estimate_instrument_offset, fit_tof_polynomial
from qlink.cli import main
from qlink.constants import ARCSEC
from qlink.counts import bin_events, detect_lines, dispersion_test, periodogram
from qlink.geometry import CircularOrbit, PassGeometry, slant_range, time_of_flight
from qlink.link_budget import (
    OpticalChain,
    TargetSpec,
    TransmitterSpec,
    footprint_diameter,
    geometric_intercept,
    intercept_chain,
    photons_per_pulse,
    radar_equation,
    step_chain_efficiency,
)
from qlink.scenario import preset
from qlink.simulate import DetectorModel, ScintillationModel, simulate_ground_target, simulate_star_counts
from qlink.stellar import StarSpec, expected_count_rate


def rel(a, b):
    return abs(a - b) / abs(b)


@pytest.mark.criterion(1, "spot size at 1 arcsec and 6e6 m")
def test_spot_size(record_property):
    d = footprint_diameter(ARCSEC, 6e6)
    record_property("detail", f"{d:.3f} m vs 29.1 m, rel {rel(d, 29.1):.1e}")
    assert rel(d, 29.1) <= 0.01


@pytest.mark.criterion(2, "uplink and downlink intercept fractions")
def test_intercept_fractions(record_property):
    up, up_clamped = geometric_intercept(0.6, 29.0)
    down, down_clamped = geometric_intercept(1.5, 100.0)
    record_property("detail", f"{up:.4e}, {down:.4e}")
    assert not (up_clamped or down_clamped)
    assert rel(up, (0.6 / 29.0) ** 2) <= 1e-3
    assert rel(down, (1.5 / 100.0) ** 2) <= 1e-3


@pytest.mark.criterion(3, "R^-4 law over 100 random scenarios")
def test_inverse_fourth_power(record_property):
    rng = np.random.default_rng(20240601)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        tx = TransmitterSpec(rng.uniform(1e-3, 1.0), rng.uniform(400e-9, 1600e-9),
                             rng.uniform(1, 20) * ARCSEC, rng.uniform(1, 1e4))
        tgt = TargetSpec(rng.uniform(0.1, 2.0), rng.uniform(0.01, 1.0),
                         rng.uniform(1, 20) * ARCSEC)
        chain = OpticalChain(*rng.uniform(0.05, 1.0, 5))
        r = rng.uniform(4e5, 4e7)
        area = rng.uniform(0.01, 5.0)
        a = radar_equation(tx, tgt, chain, r, area).photoelectrons
        b = radar_equation(tx, tgt, chain, 2 * r, area).photoelectrons
        worst = max(worst, rel(b / a, 1 / 16))
    elapsed = time.perf_counter() - t0
    record_property("detail", f"worst rel {worst:.1e}, {elapsed:.2f} s")
    assert worst <= 1e-10
    assert elapsed < 1.0


@pytest.mark.criterion(4, "narrative intercept chain with and without extra spreading")
def test_narrative_chain(record_property):
    # the quoted, rounded factors
    plain = intercept_chain(4.3e-4, 0.1, 2.3e-4)
    spread = intercept_chain(4.3e-4, 0.1, 2.3e-4, spreading_factor=1e-2)
    # the same chain from the quoted spot sizes, unrounded
    tx = TransmitterSpec(0.1, 532e-9, ARCSEC, 10.0)
    tgt = TargetSpec(0.6, 0.1, 3 * ARCSEC)
    exact = step_chain_efficiency(tx, tgt, 6e6, 1.5, uplink_spot=29.0, downlink_spot=100.0)
    record_property("detail", f"{plain:.3e}, {spread:.3e} with 1e-2; unrounded spots give {exact:.3e}")
    assert rel(plain, 9.9e-9) <= 0.02
    assert rel(spread, 1e-10) <= 0.05
    assert exact == pytest.approx((0.6 / 29) ** 2 * 0.1 * (1.5 / 100) ** 2, rel=1e-12)


@pytest.mark.criterion(5, "photons per 100 mJ pulse at 532 nm")
def test_photons_per_pulse(record_property):
    n = photons_per_pulse(TransmitterSpec(0.1, 532e-9, ARCSEC, 10.0))
    record_property("detail", f"{n:.4e} vs 2.68e17")
    assert rel(n, 2.68e17) <= 5e-3


@pytest.mark.criterion(6, "ground-target times of flight")
def test_ground_target_tof(record_property):
    a = time_of_flight(45.25) * 1e9
    b = time_of_flight(192.47) * 1e9
    record_property("detail", f"{a:.3f} ns, {b:.3f} ns")
    assert rel(a, 301.9) <= 5e-4
    assert rel(b, 1284.0) <= 5e-4


@pytest.mark.criterion(7, "instrument offset recovered from ground-target runs, 20 seeds")
def test_calibration_closure(record_property):
    sc = preset("ground-target-c")
    g = sc["ground_target"]
    det = sc.detector()
    true_tof = time_of_flight(g["distance_m"]) * 1e9
    t0 = time.perf_counter()
    offsets, widths = [], []
    for seed in range(20):
        s = simulate_ground_target(g["distance_m"], g["instrument_offset_ns"] * 1e-9,
                                   g["rep_rate_hz"], g["n_pulses"], det, seed)
        est = estimate_instrument_offset(s, true_tof)
        offsets.append(est.offset_ns)
        widths.append(est.fwhm_ns)
    elapsed = time.perf_counter() - t0
    offsets, widths = np.array(offsets), np.array(widths)
    record_property("detail", f"offset {offsets.min():.3f}..{offsets.max():.3f} ns, "
                              f"fwhm {widths.min():.3f}..{widths.max():.3f} ns, {elapsed:.1f} s")
    assert np.all(np.abs(offsets - 116.1) <= 0.1)
    assert np.all(np.abs(widths - 1.3) <= 0.2)
    assert elapsed < 10.0


@pytest.mark.criterion(8, "degree-60 fit of a 24000-sample pass with 1 ns noise")
def test_orbit_fit_closure(record_property):
    pg = PassGeometry(CircularOrbit(5.9e6), math.radians(60.0))
    t = -1200.0 + np.arange(24000) * 0.1
    rng = np.random.default_rng(7)
    tof = time_of_flight(slant_range(pg, t)) * 1e9 + rng.normal(0.0, 1.0, t.size)
    t0 = time.perf_counter()
    fit = fit_tof_polynomial(None, 60, t=t, tof_ns=tof)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"rms {fit.rms_residual_ns:.3f} ns, {elapsed:.2f} s")
    assert fit.degree == 60
    assert fit.rms_residual_ns <= 3.0
    assert elapsed < 10.0


@pytest.mark.criterion(9, "coincidence window: monotone and background rate b*w")
def test_coincidence_properties(record_property):
    b, w, n_pulses, rep = 1e5, 50.0, 100_000, 17000.0
    det = DetectorModel.from_fwhm_ns(1.3, 0.0, b)
    delay_ns = time_of_flight(45.25) * 1e9 + 116.1
    t0 = time.perf_counter()
    accepted_bg = 0
    monotone = True
    for seed in range(20):
        s = simulate_ground_target(45.25, 116.1e-9, rep, n_pulses, det, seed)
        fires = s.select("fire") / 1e12
        fit = fit_tof_polynomial(None, 1, t=fires, tof_ns=np.full(fires.size, delay_ns))
        rep_w = coincidence_filter(s, fit, w)
        accepted_bg += rep_w.accepted_by_channel["background"]
        if seed < 3:
            prev = None
            for win in (0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 200.0):
                acc = set(coincidence_filter(s, fit, win).accepted.timestamps.tolist())
                if prev is not None and not prev <= acc:
                    monotone = False
                prev = acc
    elapsed = time.perf_counter() - t0
    gates = 20 * n_pulses
    p = b * w * 1e-9
    expected = gates * p
    sigma = math.sqrt(gates * p * (1 - p))
    z = (accepted_bg - expected) / sigma
    record_property("detail", f"background {accepted_bg} vs {expected:.0f} (z={z:+.2f}), "
                              f"nested={monotone}, {elapsed:.1f} s")
    assert monotone
    assert abs(z) <= 3.0
    assert elapsed < 30.0


@pytest.mark.criterion(10, "18 Hz line and its harmonic in a 91 s star run")
def test_star_periodogram(record_property):
    scint = ScintillationModel(0.0, 0.05)
    t0 = time.perf_counter()
    s = simulate_star_counts(2e4, 91.0, scint, 1, modulation=(18.0, 0.5))
    pg = periodogram(bin_events(s, 0.01, end=91.0))
    top = detect_lines(pg)[0]
    s2 = simulate_star_counts(2e4, 91.0, scint, 2, modulation=[(18.0, 0.5), (36.0, 0.25)])
    pg2 = periodogram(bin_events(s2, 0.01, end=91.0))
    lines = detect_lines(pg2)
    elapsed = time.perf_counter() - t0
    h = [ln for ln in lines if abs(ln.frequency - 36.0) <= pg2.resolution]
    record_property("detail", f"top {top.frequency:.4f} Hz (res {pg.resolution:.4f}), "
                              f"36 Hz flagged of {h[0].is_harmonic_of if h else None}, {elapsed:.2f} s")
    assert abs(top.frequency - 18.0) <= pg.resolution
    assert abs(lines[0].frequency - 18.0) <= pg2.resolution
    assert len(h) == 1 and h[0].is_harmonic_of == lines[0].frequency
    assert elapsed < 5.0


@pytest.mark.criterion(11, "Vega expected count rate")
def test_vega_chain(record_property):
    res = expected_count_rate(StarSpec(0.0), preset("vega-mlro").receiver_chain())
    # zero-mag flux x area x bandwidth x mirrors x QE/fibre x optics x atmosphere
    hand = 1e3 * 1700 * 800 * 0.70 * 0.1 * 0.29 * 0.7
    record_property("detail", f"{res.rate:.4e} /s vs hand {hand:.4e}")
    assert rel(res.rate, hand) <= 5e-3
    assert rel(res.rate, 1.93e7) <= 5e-3


@pytest.mark.criterion(12, "dispersion test nulls over 100 seeds each")
def test_statistical_nulls(record_property):
    t0 = time.perf_counter()
    poisson_pass = lognormal_fail = 0
    for seed in range(100):
        s = simulate_star_counts(2e4, 91.0, ScintillationModel(0.0, 0.05), seed)
        poisson_pass += dispersion_test(bin_events(s, 0.01, end=91.0)).poisson_plausible
        s = simulate_star_counts(2e4, 91.0, ScintillationModel(0.5, 0.05), 1000 + seed)
        lognormal_fail += not dispersion_test(bin_events(s, 0.01, end=91.0)).poisson_plausible
    elapsed = time.perf_counter() - t0
    record_property("detail", f"poisson pass {poisson_pass}/100, "
                              f"log-normal fail {lognormal_fail}/100, {elapsed:.1f} s")
    assert poisson_pass >= 95
    assert lognormal_fail >= 95
    assert elapsed < 60.0


@pytest.mark.criterion(13, "simulate and analyze outputs byte-identical across reruns")
def test_determinism(record_property, tmp_path, capsys):
    jobs = [("ground-target-c", "calibrate"), ("vega-mlro", "spectrum"),
            ("lageos-mlro", "fit"), ("lageos-mlro", "coincidence")]
    t0 = time.perf_counter()
    for run in ("a", "b"):
        out = tmp_path / run
        for name in sorted({n for n, _ in jobs}):
            assert main(["simulate", "--scenario", name, "--out", str(out)]) == 0
        for name, mode in jobs:
            assert main(["analyze", str(out / f"{name}_seed1.timetag"), "--mode", mode,
                         "--scenario", name, "--out", str(out)]) == 0
    capsys.readouterr()
    elapsed = time.perf_counter() - t0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    same = [(tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files]
    record_property("detail", f"{sum(same)}/{len(files)} files identical, {elapsed:.1f} s")
    assert files == sorted(p.name for p in (tmp_path / "b").iterdir())
    assert all(same)
    assert elapsed < 10.0
