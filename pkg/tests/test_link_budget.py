import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlink.constants import ARCSEC
from qlink.errors import InvalidParameter
from qlink.link_budget import (
    OpticalChain,
    TargetSpec,
    TransmitterSpec,
    footprint_diameter,
    geometric_intercept,
    intercept_chain,
    photoelectrons_vs_range,
    photons_per_pulse,
    radar_equation,
    step_chain_efficiency,
    sweep,
    transmitter_gain,
)

HC = 6.62607015e-34 * 2.99792458e8


def test_single_photon_energy_gives_one_photon():
    tx = TransmitterSpec(HC / 532e-9, 532e-9, ARCSEC, 10)
    assert photons_per_pulse(tx) == pytest.approx(1.0, rel=1e-12)


def test_mlro_photons_per_pulse(mlro_laser):
    # hand product 0.1 * 532e-9 / 1.98645e-25
    assert photons_per_pulse(mlro_laser) == pytest.approx(2.678e17, rel=1e-3)
    double = TransmitterSpec(0.2, 532e-9, ARCSEC, 10)
    assert photons_per_pulse(double) == 2 * photons_per_pulse(mlro_laser)


@pytest.mark.parametrize("div_arcsec, expected", [(1, 29.09), (3, 87.27), (0, 0.0)])
def test_footprint(div_arcsec, expected):
    assert footprint_diameter(div_arcsec * ARCSEC, 6e6) == pytest.approx(expected, abs=0.01)


@pytest.mark.parametrize("target, spot, expected", [
    (0.6, 29.0, 4.2806e-4),
    (1.5, 100.0, 2.25e-4),
    (1.2, 1.2, 1.0),
])
def test_geometric_intercept(target, spot, expected):
    frac, clamped = geometric_intercept(target, spot)
    assert frac == pytest.approx(expected, rel=1e-4)
    assert not clamped


def test_intercept_clamps_when_spot_is_smaller():
    frac, clamped = geometric_intercept(2.0, 1.0)
    assert frac == 1.0 and clamped


def test_transmitter_gain():
    assert transmitter_gain(math.sqrt(8)) == pytest.approx(1.0)
    assert transmitter_gain(ARCSEC) == pytest.approx(3.40e11, rel=2e-3)
    assert transmitter_gain(ARCSEC / 2) == pytest.approx(4 * transmitter_gain(ARCSEC))
    with pytest.raises(InvalidParameter):
        transmitter_gain(0.0)


def test_step_chain_with_quoted_spots(mlro_laser, lageos_target):
    eff = step_chain_efficiency(mlro_laser, lageos_target, 6e6, 1.5,
                                uplink_spot=29.0, downlink_spot=100.0)
    assert eff == pytest.approx((0.6 / 29) ** 2 * 0.1 * (1.5 / 100) ** 2, rel=1e-12)
    assert eff == pytest.approx(9.63e-9, rel=1e-3)


def test_step_chain_with_rounded_quoted_factors():
    assert intercept_chain(4.3e-4, 0.1, 2.3e-4) == pytest.approx(9.89e-9, rel=1e-3)
    assert intercept_chain(4.3e-4, 0.1, 2.3e-4, 1e-2) == pytest.approx(9.89e-11, rel=1e-3)


def test_step_chain_identity():
    tx = TransmitterSpec(0.1, 532e-9, 1e-6, 10)
    tgt = TargetSpec(1.0, 1.0, 1e-6)
    assert step_chain_efficiency(tx, tgt, 1e6, 1.0) == pytest.approx(1.0)


def test_identity_configuration_returns_photon_count(mlro_laser):
    r = 6e6
    sigma = (4 * math.pi * r**2) ** 2 / transmitter_gain(mlro_laser.divergence)
    tgt = TargetSpec(0.6, 0.1, 3 * ARCSEC, cross_section=sigma)
    res = radar_equation(mlro_laser, tgt, OpticalChain(), r, 1.0)
    assert res.photoelectrons == pytest.approx(photons_per_pulse(mlro_laser), rel=1e-12)


def test_radar_equation_matches_written_formula(mlro_laser, lageos_target):
    chain = OpticalChain(eta_q=0.3, eta_T=0.8, eta_R=0.6, T_A=0.7, T_c=0.9)
    r, area = 7.3e6, 1.77
    res = radar_equation(mlro_laser, lageos_target, chain, r, area)
    by_hand = (0.3 * 0.1 * 532e-9 / HC * 0.8 * 8 / ARCSEC**2 * lageos_target.sigma
               * (1 / (4 * math.pi * r**2)) ** 2 * area * 0.6 * 0.7**2 * 0.9**2)
    assert res.photoelectrons == pytest.approx(by_hand, rel=1e-12)
    prod = math.prod(v for _, v in res.factor_log)
    assert prod == pytest.approx(res.end_to_end, rel=1e-12)
    assert res.photoelectrons == pytest.approx(
        res.photons_per_pulse * res.end_to_end * chain.eta_q * chain.eta_R, rel=1e-12)


def test_radar_is_half_of_step_chain_with_geometric_sigma(mlro_laser, lageos_target):
    res = radar_equation(mlro_laser, lageos_target, OpticalChain(), 6e6, math.pi * 1.5**2 / 4)
    assert res.end_to_end / res.step_chain == pytest.approx(0.5, rel=1e-12)


def test_doubling_range_divides_by_16(mlro_laser, lageos_target, unit_chain):
    a = radar_equation(mlro_laser, lageos_target, unit_chain, 6e6, 1.77).photoelectrons
    b = radar_equation(mlro_laser, lageos_target, unit_chain, 12e6, 1.77).photoelectrons
    assert b / a == pytest.approx(1 / 16, rel=1e-12)


@settings(max_examples=100)
@given(r=st.floats(1e5, 1e8), k=st.floats(0.1, 10), div=st.floats(0.5, 30),
       eta=st.floats(0.01, 1.0))
def test_range_law_property(r, k, div, eta):
    tx = TransmitterSpec(0.1, 532e-9, div * ARCSEC, 10)
    tgt = TargetSpec(0.6, 0.1, 3 * ARCSEC)
    chain = OpticalChain(eta, eta, eta, eta, eta)
    a = radar_equation(tx, tgt, chain, r, 1.7).photoelectrons
    b = radar_equation(tx, tgt, chain, k * r, 1.7).photoelectrons
    assert b == pytest.approx(a * k**-4, rel=1e-10)


def test_monotonicity(mlro_laser, lageos_target):
    base = radar_equation(mlro_laser, lageos_target, OpticalChain(0.5, 0.5, 0.5, 0.5, 0.5),
                          6e6, 1.0).photoelectrons
    for name in ("eta_q", "eta_T", "eta_R", "T_A", "T_c"):
        kw = dict(eta_q=0.5, eta_T=0.5, eta_R=0.5, T_A=0.5, T_c=0.5)
        kw[name] = 0.9
        assert radar_equation(mlro_laser, lageos_target, OpticalChain(**kw), 6e6,
                              1.0).photoelectrons > base
    chain = OpticalChain(0.5, 0.5, 0.5, 0.5, 0.5)
    assert radar_equation(mlro_laser, lageos_target, chain, 6e6, 2.0).photoelectrons > base
    assert radar_equation(mlro_laser, lageos_target, chain, 7e6, 1.0).photoelectrons < base
    wide = TransmitterSpec(0.1, 532e-9, 2 * ARCSEC, 10)
    assert radar_equation(wide, lageos_target, chain, 6e6, 1.0).photoelectrons < base


def test_divergence_scaling_of_both_forms(lageos_target):
    narrow = TransmitterSpec(0.1, 532e-9, 2 * ARCSEC, 10)
    wide = TransmitterSpec(0.1, 532e-9, 4 * ARCSEC, 10)
    a = radar_equation(narrow, lageos_target, OpticalChain(), 6e6, 1.77)
    b = radar_equation(wide, lageos_target, OpticalChain(), 6e6, 1.77)
    assert b.end_to_end / a.end_to_end == pytest.approx(0.25, rel=1e-12)
    assert b.step_chain / a.step_chain == pytest.approx(0.25, rel=1e-12)


def test_invalid_inputs(mlro_laser, lageos_target, unit_chain):
    with pytest.raises(InvalidParameter):
        radar_equation(mlro_laser, lageos_target, unit_chain, 0.0, 1.0)
    with pytest.raises(InvalidParameter):
        radar_equation(mlro_laser, lageos_target, unit_chain, 1e6, -1.0)
    with pytest.raises(InvalidParameter):
        TransmitterSpec(-0.1, 532e-9, ARCSEC, 10)
    with pytest.raises(InvalidParameter):
        OpticalChain(T_A=1.5)
    with pytest.raises(InvalidParameter):
        TargetSpec(0.6, 0.0, ARCSEC)


def test_station_divergence_flag():
    assert TransmitterSpec(0.1, 532e-9, 5 * ARCSEC, 10).divergence_in_station_range
    assert not TransmitterSpec(0.1, 532e-9, 25 * ARCSEC, 10).divergence_in_station_range


def test_clamp_flag_recorded(mlro_laser):
    tgt = TargetSpec(50.0, 0.5, 3 * ARCSEC)
    res = radar_equation(mlro_laser, tgt, OpticalChain(), 1e6, 1.0)
    assert "uplink_intercept_clamped" in res.flags
    assert res.uplink_fraction == 1.0


def test_photoelectrons_vs_range_agrees(mlro_laser, lageos_target, unit_chain):
    f = photoelectrons_vs_range(mlro_laser, lageos_target, unit_chain, 1.77)
    for r in (6e6, 8.5e6):
        direct = radar_equation(mlro_laser, lageos_target, unit_chain, r, 1.77).photoelectrons
        assert float(f(r)) == pytest.approx(direct, rel=1e-12)


def test_sweep_rows(mlro_laser, lageos_target, unit_chain):
    rows = sweep(mlro_laser, lageos_target, unit_chain, 1.77, ranges=[6e6, 12e6])
    assert rows[1]["photoelectrons"] / rows[0]["photoelectrons"] == pytest.approx(1 / 16)
    rows = sweep(mlro_laser, lageos_target, unit_chain, 1.77,
                 divergences=np.array([1, 2]) * ARCSEC)
    assert rows[1]["photoelectrons"] / rows[0]["photoelectrons"] == pytest.approx(0.25)


def test_to_dict_lists_factors(mlro_laser, lageos_target, unit_chain):
    d = radar_equation(mlro_laser, lageos_target, unit_chain, 6e6, 1.77).to_dict()
    assert [f["name"] for f in d["factors"]][:3] == ["eta_T", "G_T", "sigma_sat"]
    assert {"end_to_end", "photoelectrons", "step_chain"} <= d.keys()
