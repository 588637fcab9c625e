"""Channel model tests: sector gain boundaries, close-in path loss values,
fading moments, and the received-power product."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iabsim.channel import (
    AntennaPattern,
    ChannelModel,
    FadingModel,
    PathLossParams,
    _fading_array,
    _gain_array,
    _link_gain_array,
    _path_gain_array,
    antenna_gain,
    link_path_gain,
    path_loss,
    received_power,
    sample_fading,
)

PAT = AntennaPattern(main_lobe_gain=100.0, side_lobe_gain=0.5, half_power_beamwidth=math.radians(30))


# ---------------------------------------------------------------------------
# Antenna pattern
# ---------------------------------------------------------------------------

def test_antenna_gain_main_and_side():
    assert antenna_gain(PAT, 0.0) == 100.0
    assert antenna_gain(PAT, math.radians(10)) == 100.0
    assert antenna_gain(PAT, math.radians(-10)) == 100.0
    assert antenna_gain(PAT, math.radians(20)) == 0.5
    assert antenna_gain(PAT, math.pi) == 0.5


def test_antenna_gain_boundary_is_main_lobe():
    # The half-beamwidth edge itself still gets the main lobe.
    edge = 0.5 * PAT.half_power_beamwidth
    assert antenna_gain(PAT, edge) == 100.0
    assert antenna_gain(PAT, -edge) == 100.0
    assert antenna_gain(PAT, edge + 1e-9) == 0.5


def test_antenna_gain_wraps_full_turns():
    assert antenna_gain(PAT, 2 * math.pi) == 100.0
    assert antenna_gain(PAT, 2 * math.pi + math.radians(20)) == 0.5
    assert antenna_gain(PAT, -2 * math.pi + math.radians(5)) == 100.0
    assert antenna_gain(PAT, 2 * math.pi - math.radians(5)) == 100.0


def test_antenna_pattern_validation():
    with pytest.raises(ValueError):
        AntennaPattern(0.0, 0.5, 1.0)
    with pytest.raises(ValueError):
        AntennaPattern(1.0, 2.0, 1.0)  # side above main
    with pytest.raises(ValueError):
        AntennaPattern(1.0, 0.5, 0.0)
    with pytest.raises(ValueError):
        AntennaPattern(1.0, 0.5, 7.0)  # wider than a full turn


@given(st.floats(-50, 50, allow_nan=False))
@settings(max_examples=200, deadline=None)
def test_antenna_gain_properties(angle):
    g = antenna_gain(PAT, angle)
    assert g in (100.0, 0.5)
    assert antenna_gain(PAT, -angle) == g  # symmetric pattern
    assert antenna_gain(PAT, angle + 2 * math.pi) == g  # periodic


def test_gain_array_matches_scalar():
    angles = np.linspace(-8, 8, 400)
    arr = _gain_array(PAT, angles)
    expected = [antenna_gain(PAT, float(a)) for a in angles]
    assert np.array_equal(arr, expected)


# ---------------------------------------------------------------------------
# Path loss
# ---------------------------------------------------------------------------

def test_path_loss_reference_value_28ghz():
    # 1 m free-space intercept at 28 GHz: 32.4 + 20*log10(28) dB.
    params = PathLossParams(carrier_ghz=28.0)
    expected_db = 32.4 + 20 * math.log10(28.0)
    assert math.isclose(params.intercept_db, expected_db)
    assert math.isclose(path_loss(params, 1.0, los=True), 10 ** (-expected_db / 10), rel_tol=1e-12)
    # At the reference distance the visibility state does not matter.
    assert path_loss(params, 1.0, True) == path_loss(params, 1.0, False)


def test_path_loss_exponent_slopes():
    params = PathLossParams(carrier_ghz=28.0)
    g1 = path_loss(params, 1.0, True)
    # LOS exponent 2: 100x distance costs 40 dB.
    assert math.isclose(path_loss(params, 100.0, True), g1 * 1e-4, rel_tol=1e-12)
    # NLOS exponent 3: 100x distance costs 60 dB.
    assert math.isclose(path_loss(params, 100.0, False), g1 * 1e-6, rel_tol=1e-12)


def test_path_loss_clamps_below_one_meter():
    params = PathLossParams(carrier_ghz=28.0)
    assert path_loss(params, 0.3, True) == path_loss(params, 1.0, True)


def test_path_loss_rejects_nonpositive_distance():
    params = PathLossParams(carrier_ghz=28.0)
    with pytest.raises(ValueError):
        path_loss(params, 0.0, True)
    with pytest.raises(ValueError):
        path_loss(params, -5.0, False)


def test_path_loss_custom_reference():
    params = PathLossParams(carrier_ghz=28.0, reference_db=60.0)
    assert params.intercept_db == 60.0
    assert math.isclose(path_loss(params, 10.0, True), 10 ** (-8.0), rel_tol=1e-12)


def test_path_loss_params_validation():
    with pytest.raises(ValueError):
        PathLossParams(carrier_ghz=0.0)
    with pytest.raises(ValueError):
        PathLossParams(carrier_ghz=28.0, exponent_los=3.0, exponent_nlos=2.0)
    with pytest.raises(ValueError):
        PathLossParams(carrier_ghz=28.0, exponent_los=0.0)


@given(
    st.floats(0.5, 5000.0, allow_nan=False),
    st.floats(0.5, 5000.0, allow_nan=False),
    st.booleans(),
)
@settings(max_examples=200, deadline=None)
def test_path_loss_monotone_nonincreasing(d1, d2, los):
    params = PathLossParams(carrier_ghz=28.0)
    lo, hi = sorted((d1, d2))
    assert path_loss(params, hi, los) <= path_loss(params, lo, los) + 1e-18


@given(st.floats(1.0, 5000.0, allow_nan=False))
@settings(max_examples=100, deadline=None)
def test_path_loss_nlos_never_above_los(d):
    params = PathLossParams(carrier_ghz=28.0)
    assert path_loss(params, d, False) <= path_loss(params, d, True)


def test_path_gain_array_matches_scalar():
    params = PathLossParams(carrier_ghz=28.0)
    d = np.array([0.4, 1.0, 17.3, 250.0, 900.0])
    los = np.array([True, False, True, False, True])
    arr = _path_gain_array(params, d, los)
    expected = [path_loss(params, float(di), bool(li)) for di, li in zip(d, los)]
    assert np.allclose(arr, expected, rtol=1e-15)
    with pytest.raises(ValueError):
        _path_gain_array(params, np.array([1.0, 0.0]), np.array([True, True]))


# ---------------------------------------------------------------------------
# Fading
# ---------------------------------------------------------------------------

def test_fading_deterministic_unit():
    model = FadingModel(kind="deterministic-unit")
    rng = np.random.default_rng(0)
    assert sample_fading(model, True, rng) == 1.0
    assert sample_fading(model, False, rng) == 1.0
    arr = _fading_array(model, np.array([True, False, True]), rng)
    assert np.array_equal(arr, np.ones(3))


def test_fading_validation():
    with pytest.raises(ValueError):
        FadingModel(kind="rayleigh-ish")
    with pytest.raises(ValueError):
        FadingModel(m_los=0.3)
    FadingModel(m_los=0.5, m_nlos=0.5)  # boundary allowed


def test_fading_moments():
    # Gamma(m, 1/m): mean 1, variance 1/m.
    model = FadingModel(m_los=3.0, m_nlos=2.0)
    rng = np.random.default_rng(1234)
    n = 200_000
    los_draws = _fading_array(model, np.ones(n, bool), rng)
    nlos_draws = _fading_array(model, np.zeros(n, bool), rng)
    assert abs(los_draws.mean() - 1.0) < 0.01
    assert abs(nlos_draws.mean() - 1.0) < 0.01
    assert abs(los_draws.var() - 1 / 3.0) < 0.01
    assert abs(nlos_draws.var() - 1 / 2.0) < 0.015
    assert (los_draws > 0).all() and (nlos_draws > 0).all()


def test_fading_deterministic_given_seed():
    model = FadingModel()
    a = _fading_array(model, np.array([True, False, False, True]), np.random.default_rng(7))
    b = _fading_array(model, np.array([True, False, False, True]), np.random.default_rng(7))
    assert np.array_equal(a, b)
    assert sample_fading(model, True, np.random.default_rng(9)) == sample_fading(
        model, True, np.random.default_rng(9)
    )


# ---------------------------------------------------------------------------
# Received power and channel composition
# ---------------------------------------------------------------------------

def test_received_power_product():
    # 0.25 W through gains 10 and 4, path gain 1e-9, fading 2.
    assert math.isclose(received_power(0.25, 10.0, 4.0, 1e-9, 2.0), 2e-8, rel_tol=1e-15)
    assert received_power(0.25, 10.0, 4.0, 1e-9) == 0.25 * 10 * 4 * 1e-9


def test_received_power_rejects_negative():
    with pytest.raises(ValueError):
        received_power(-1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        received_power(1.0, 1.0, 1.0, -1e-9)


@given(
    st.floats(1e-6, 10.0),
    st.floats(0.01, 1000.0),
    st.floats(0.01, 1000.0),
    st.floats(1e-15, 1.0),
    st.floats(2.0, 100.0),
)
@settings(max_examples=100, deadline=None)
def test_received_power_linear_in_tx_power(p, gt, gr, l, scale):
    base = received_power(p, gt, gr, l)
    assert math.isclose(received_power(p * scale, gt, gr, l), base * scale, rel_tol=1e-12)


def test_link_path_gain_flag_off_equals_path_loss():
    chan = ChannelModel(PathLossParams(carrier_ghz=28.0), FadingModel())
    assert link_path_gain(chan, 123.0, True) == path_loss(chan.path_loss, 123.0, True)


def test_link_path_gain_inverse_distance_flag():
    base = ChannelModel(PathLossParams(carrier_ghz=28.0), FadingModel())
    extra = ChannelModel(
        PathLossParams(carrier_ghz=28.0), FadingModel(), inverse_distance_factor=True
    )
    d = 200.0
    assert math.isclose(
        link_path_gain(extra, d, True), link_path_gain(base, d, True) / d, rel_tol=1e-12
    )
    # Below 1 m the extra factor clamps like the path loss does.
    assert link_path_gain(extra, 0.5, True) == link_path_gain(base, 0.5, True)


def test_link_gain_array_matches_scalar():
    for flag in (False, True):
        chan = ChannelModel(
            PathLossParams(carrier_ghz=28.0), FadingModel(), inverse_distance_factor=flag
        )
        d = np.array([0.7, 3.0, 55.0, 640.0])
        los = np.array([False, True, False, True])
        arr = _link_gain_array(chan, d, los)
        expected = [link_path_gain(chan, float(di), bool(li)) for di, li in zip(d, los)]
        assert np.allclose(arr, expected, rtol=1e-15)
