import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlink.errors import EmptyChain, InvalidParameter
from qlink.stellar import (
    ReceiverChain,
    StarSpec,
    expected_count_rate,
    mirror_chain_reflectivity,
    pinhole_coupling_fraction,
    zero_mag_flux,
)


def vega_chain(**kw):
    args = dict(aperture_area=1700.0, mirror_reflectivities=(0.70,), bandwidth=800.0,
                qe_fiber=0.1, extra_optics=0.29, atmospheric_transmission=0.7,
                pinhole_coupling=1.0)
    args.update(kw)
    return ReceiverChain(**args)


def test_zero_mag_flux():
    assert zero_mag_flux() == 1e3


def test_magnitude_scaling():
    chain = vega_chain()
    r0 = expected_count_rate(StarSpec(0.0), chain).rate
    assert expected_count_rate(StarSpec(2.5), chain).rate == pytest.approx(0.1 * r0, rel=1e-12)
    assert expected_count_rate(StarSpec(5.0), chain).rate == pytest.approx(1e-2 * r0, rel=1e-12)


def test_mirror_chain():
    assert mirror_chain_reflectivity([0.9] + [0.97] * 6) == pytest.approx(0.7497, abs=1e-4)
    assert mirror_chain_reflectivity([1.0] * 7) == 1.0
    assert mirror_chain_reflectivity([0.5, 0.5]) == 0.25
    with pytest.raises(EmptyChain):
        mirror_chain_reflectivity([])


def test_vega_rate_from_listed_factors():
    res = expected_count_rate(StarSpec(0.0), vega_chain())
    hand = 1e3 * 1700 * 800 * 0.70 * 0.1 * 0.29 * 0.7
    assert res.rate == pytest.approx(hand, rel=1e-12)
    assert res.rate == pytest.approx(1.93e7, rel=5e-3)
    assert math.prod(v for _, v in res.factor_log) == pytest.approx(res.rate, rel=1e-12)


def test_vega_rate_with_seven_mirror_breakdown():
    res = expected_count_rate(StarSpec(0.0),
                              vega_chain(mirror_reflectivities=[0.9] + [0.97] * 6))
    assert res.rate == pytest.approx(2.07e7, rel=5e-3)


def test_bare_flux():
    chain = ReceiverChain(1.0, (1.0,), 1.0)
    assert expected_count_rate(StarSpec(0.0), chain).rate == 1e3


@given(st.sampled_from(["qe_fiber", "extra_optics", "atmospheric_transmission",
                        "pinhole_coupling"]), st.floats(0.05, 1.0))
def test_rate_is_multiplicative(name, k):
    base = vega_chain(**{name: 1.0})
    scaled = vega_chain(**{name: k})
    assert expected_count_rate(StarSpec(), scaled).rate == pytest.approx(
        k * expected_count_rate(StarSpec(), base).rate, rel=1e-12)


def test_sky_background_is_additive():
    res = expected_count_rate(StarSpec(), vega_chain(sky_background=500.0))
    assert res.rate == pytest.approx(1e3 * 1700 * 800 * 0.7 * 0.1 * 0.29 * 0.7 + 500.0)


def test_invalid_chain():
    with pytest.raises(InvalidParameter):
        vega_chain(qe_fiber=0.0)
    with pytest.raises(InvalidParameter):
        vega_chain(bandwidth=-1.0)
    with pytest.raises(InvalidParameter):
        StarSpec(float("nan"))


def test_pinhole_coupling():
    assert pinhole_coupling_fraction(1.0, 10.0) >= 0.999
    assert pinhole_coupling_fraction(2.0, 2.0) == pytest.approx(0.5, rel=1e-12)
    assert pinhole_coupling_fraction(1.0, 0.0) == 0.0


def test_pinhole_small_limit_is_area_ratio():
    # small pinholes: 1 - exp(-x) ~ x = ln2 (d/fwhm)^2 = area ratio scaled by 4 ln 2
    f = pinhole_coupling_fraction(1.0, 1e-3)
    assert f == pytest.approx(4 * math.log(2) * (1e-3 / 2) ** 2 / 1.0**2, rel=1e-5)


@given(st.floats(0.1, 5), st.floats(0.01, 5), st.floats(1.01, 3))
def test_pinhole_monotone(fwhm, d, k):
    f = pinhole_coupling_fraction(fwhm, d)
    assert 0 < f < 1 or f == pytest.approx(1.0)
    assert pinhole_coupling_fraction(fwhm, d * k) >= f
    assert pinhole_coupling_fraction(fwhm * k, d) <= f
