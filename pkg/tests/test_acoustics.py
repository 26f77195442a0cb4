import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flsonar import acoustics as ac
from flsonar.errors import ConfigurationError, DomainError
from flsonar.worldsim import AcousticParams, make_beams

ENV = ac.EnvironmentParams()


def env(**kw):
    base = dict(temperature=10.0, salinity=35.0, sonar_depth=50.0, seafloor_depth=75.0)
    base.update(kw)
    return ac.EnvironmentParams(**base)


# -- sound speed -------------------------------------------------------------


def test_sound_speed_freezing_reference():
    # T=0, S=35, z=0 leaves only the constant term; sonar_depth must be > 0
    # so take the depth term off by hand.
    e = env(temperature=0.0, sonar_depth=1.0, seafloor_depth=2.0)
    assert ac.sound_speed(e) - 0.016 * 1.0 == pytest.approx(1449.2, abs=1e-9)


def test_sound_speed_ten_degrees():
    e = env(sonar_depth=1e-9, seafloor_depth=1.0)
    # 1449.2 + 46 - 5.5 + 0.29
    assert ac.sound_speed(e) == pytest.approx(1490.0, abs=0.1)


def test_sound_speed_depth_term():
    deep = env(sonar_depth=1000.0, seafloor_depth=2000.0)
    shallow = env(sonar_depth=1e-9, seafloor_depth=2000.0)
    assert ac.sound_speed(deep) - ac.sound_speed(shallow) == pytest.approx(16.0, abs=0.1)


@pytest.mark.parametrize("field,value", [("temperature", 45.0), ("temperature", -5.0), ("salinity", 50.0)])
def test_sound_speed_domain_names_field(field, value):
    with pytest.raises(DomainError, match=field):
        ac.sound_speed(env(**{field: value}))


# -- absorption --------------------------------------------------------------


def _absorption_reference(f, t, s, depth):
    # independent transcription: Schulkin-Marsh with the boric term of Thorp
    relax = 21.9 * math.pow(10.0, 6.0 - 1520.0 / (273.0 + t))
    a = s * 2.34e-6 * relax * f**2 / (relax**2 + f**2)
    b = 3.38e-6 * f**2 / relax
    mg = 8.68e3 * (a + b) * (1.0 - 6.54e-4 * depth * 0.1)
    return 0.11 * f**2 / (1.0 + f**2) + mg + 0.003


def test_absorption_dual_implementation():
    e = env(temperature=4.0)
    got = ac.absorption_coeff(10.0, e)
    ref = _absorption_reference(10.0, 4.0, 35.0, 50.0)
    assert abs(got - ref) / ref < 1e-9


def test_absorption_nonnegative_and_monotone():
    f = np.linspace(1.0, 1000.0, 400)
    a = np.array([ac.absorption_coeff(x, ENV) for x in f])
    assert np.all(a >= 0)
    assert np.all(np.diff(a) >= 0)
    assert ac.absorption_coeff(100.0, ENV) > ac.absorption_coeff(10.0, ENV)


@pytest.mark.parametrize("f", [0.0, -1.0])
def test_absorption_rejects_nonpositive_frequency(f):
    with pytest.raises(DomainError):
        ac.absorption_coeff(f, ENV)


# -- transmission loss -------------------------------------------------------


def test_transmission_loss_reference_points():
    a = ac.absorption_coeff(675.0, ENV)
    assert ac.transmission_loss(1.0, 675.0, ENV) == pytest.approx(a / 1000.0, abs=1e-12)
    assert ac.transmission_loss(10.0, 675.0, ENV) == pytest.approx(20.0 + a * 0.01, abs=1e-12)
    hand = 20.0 * math.log10(50.0) + _absorption_reference(675.0, 10.0, 35.0, 50.0) * 0.05
    assert abs(ac.transmission_loss(50.0, 675.0, ENV) - hand) < 1e-9


def test_transmission_loss_inside_reference_distance():
    with pytest.raises(DomainError):
        ac.transmission_loss(0.5, 675.0, ENV)


@given(st.floats(1.0, 1000.0), st.floats(0.01, 100.0))
def test_transmission_loss_increasing(r, dr):
    assert ac.transmission_loss(r + dr, 675.0, ENV) > ac.transmission_loss(r, 675.0, ENV)


# -- beam patterns -----------------------------------------------------------

BEAMS = make_beams(AcousticParams(), 3)


def test_boresight_is_zero_db():
    for b in BEAMS:
        assert ac.beam_pattern_loss(b, b.center_angle) == 0.0


@pytest.mark.parametrize("angle", [-5.0, 5.0])
def test_forward_beam_five_db_width(angle):
    assert ac.beam_pattern_loss(BEAMS[1], angle) == pytest.approx(5.0, abs=0.25)


@pytest.mark.parametrize("beam", [0, 2])
@pytest.mark.parametrize("delta", [-10.0, 10.0])
def test_side_beam_five_db_width(beam, delta):
    b = BEAMS[beam]
    assert ac.beam_pattern_loss(b, b.center_angle + delta) == pytest.approx(5.0, abs=0.25)


def test_cutoffs_sit_at_five_db():
    for b in BEAMS:
        assert ac.beam_pattern_loss(b, b.cutoff_low) == pytest.approx(5.0, abs=0.25)
        assert ac.beam_pattern_loss(b, b.cutoff_high) == pytest.approx(5.0, abs=0.25)


@given(st.floats(0.0, 60.0))
def test_pattern_symmetric(delta):
    b = BEAMS[1]
    assert ac.beam_pattern_loss(b, delta) == pytest.approx(ac.beam_pattern_loss(b, -delta), abs=1e-9)


def test_line_array_matches_closed_form():
    n, d = 8, ac.calibrate_spacing(8, 5.0)
    beam = ac.BeamSpec(0.0, tuple((x, 0.0) for x in ac.line_array(n, d)), -5.0, 5.0)
    for angle in (1.0, 3.0, 7.0):
        x = math.pi * d * math.sin(math.radians(angle))
        ref = -20 * math.log10(abs(math.sin(n * x) / (n * math.sin(x))))
        assert ac.beam_pattern_loss(beam, angle) == pytest.approx(ref, abs=1e-9)


def test_vertical_pattern_five_db_at_half_width():
    b = BEAMS[1]
    assert ac.beam_pattern_loss(b, 0.0, elevation=5.0) == pytest.approx(5.0, abs=0.25)


def test_empty_elements_rejected():
    with pytest.raises(ConfigurationError):
        ac.beam_pattern_loss(ac.BeamSpec(0.0, (), -5.0, 5.0), 0.0)


def test_angle_domain():
    with pytest.raises(DomainError):
        ac.beam_pattern_loss(BEAMS[1], 181.0)


# -- noise -------------------------------------------------------------------


def _noise_reference(f, wind_kn, shipping):
    w = wind_kn * 0.514444
    comps = [
        17 - 30 * math.log10(f),
        40 + 20 * (shipping - 0.5) + 26 * math.log10(f) - 60 * math.log10(f + 0.03),
        50 + 7.5 * w**0.5 + 20 * math.log10(f) - 40 * math.log10(f + 0.4),
        -15 + 20 * math.log10(f),
    ]
    return 10 * math.log10(sum(10 ** (c / 10) for c in comps))


def test_noise_dual_implementation():
    got = ac.ambient_noise_level(100.0, env(sea_state=2, shipping_level=0.5))
    assert abs(got - _noise_reference(100.0, 8.5, 0.5)) < 1e-9


def test_noise_sea_state_ordering():
    calm = ac.ambient_noise_level(20.0, env(sea_state=0))
    rough = ac.ambient_noise_level(20.0, env(sea_state=6))
    assert rough > calm


@given(st.floats(0.1, 2000.0), st.integers(0, 6), st.floats(0.0, 1.0))
def test_noise_power_sum_dominates(f, ss, ship):
    e = env(sea_state=ss, shipping_level=ship)
    comps = ac.noise_components(f, e)
    total = ac.ambient_noise_level(f, e)
    assert total >= max(comps.values()) - 1e-12
    for drop in comps:
        rest = [v for k, v in comps.items() if k != drop]
        assert ac.power_sum_db(rest) <= total + 1e-12


# -- backscatter -------------------------------------------------------------


def test_lambert_reference_angles():
    assert ac.backscatter_strength("seafloor", 90.0, ENV) == ENV.lambert_mu
    assert ac.backscatter_strength("seafloor", 30.0, ENV) == pytest.approx(ENV.lambert_mu - 6.0206, abs=1e-3)


@given(st.floats(0.01, 90.0))
def test_volume_is_constant(angle):
    assert ac.backscatter_strength("volume", angle, ENV) == ENV.volume_scattering


def test_surface_capped_and_increasing():
    vals = [ac.backscatter_strength("surface", g, env(sea_state=4)) for g in (1, 5, 20, 60, 90)]
    assert all(v <= 0.0 for v in vals)
    assert vals == sorted(vals)


@pytest.mark.parametrize("kind", ["seafloor", "surface"])
@pytest.mark.parametrize("angle", [0.0, -1.0, 91.0])
def test_boundary_grazing_domain(kind, angle):
    with pytest.raises(DomainError):
        ac.backscatter_strength(kind, angle, ENV)


def test_unknown_kind():
    with pytest.raises(ConfigurationError):
        ac.backscatter_strength("bubbles", 10.0, ENV)


# -- sonar equation ----------------------------------------------------------

SONAR = ac.SonarParams()


def test_echo_level_unit_range_boresight():
    a = ac.absorption_coeff(SONAR.frequency, ENV)
    got = ac.echo_level(0.0, 1.0, 0.0, BEAMS[1], SONAR, ENV)
    assert got == pytest.approx(SONAR.source_level - 2 * a / 1000, abs=1e-12)


def test_echo_level_doubling_range():
    a = ac.absorption_coeff(SONAR.frequency, ENV)
    drop = ac.echo_level(-20, 10.0, 0.0, BEAMS[1], SONAR, ENV) - ac.echo_level(-20, 20.0, 0.0, BEAMS[1], SONAR, ENV)
    assert drop == pytest.approx(40 * math.log10(2) + 2 * a * 10 / 1000, abs=1e-9)


@given(st.floats(1.0, 49.0), st.floats(0.01, 1.0))
def test_echo_level_decreasing_in_range(r, dr):
    assert ac.echo_level(-25, r + dr, 2.0, BEAMS[1], SONAR, ENV) < ac.echo_level(-25, r, 2.0, BEAMS[1], SONAR, ENV)


def test_echo_level_range_domain():
    with pytest.raises(DomainError):
        ac.echo_level(-20, 60.0, 0.0, BEAMS[1], SONAR, ENV)


def test_pure_functions_repeatable():
    a = [ac.ambient_noise_level(675.0, ENV), ac.transmission_loss(33.3, 675.0, ENV), ac.beam_pattern_loss(BEAMS[0], -12.0)]
    b = [ac.ambient_noise_level(675.0, ENV), ac.transmission_loss(33.3, 675.0, ENV), ac.beam_pattern_loss(BEAMS[0], -12.0)]
    assert a == b


# -- parameter validation -----------------------------------------------------


@pytest.mark.parametrize(
    "kw,field",
    [
        (dict(sonar_depth=80.0), "sonar_depth"),
        (dict(sea_state=7), "sea_state"),
        (dict(shipping_level=1.5), "shipping_level"),
    ],
)
def test_environment_invariants(kw, field):
    with pytest.raises(ConfigurationError, match=field):
        env(**kw)


def test_sonar_range_multiple():
    with pytest.raises(ConfigurationError, match="max_range"):
        ac.SonarParams(cell_length=0.3, max_range=50.0)
    assert ac.SonarParams().n_range == 100


def test_beam_center_inside_cutoffs():
    with pytest.raises(ConfigurationError):
        ac.BeamSpec(6.0, ((0.0, 0.0),), -5.0, 5.0)
