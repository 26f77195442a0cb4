import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flsonar.acoustics import SonarParams
from flsonar.errors import ConfigurationError, DimensionError
from flsonar.harness.oracles import mc_translation_overlap
from flsonar.occupancy import (
    EMPTY,
    OCCUPIED,
    MapGeometry,
    PingSet,
    PolarMap,
    PredictedLevels,
    VelocityBelief,
    bayes_update,
    build_map,
    format_map,
    measurement_likelihood,
    overlap_area_rotation,
    overlap_area_translation,
    propagate,
    rotation_matrix,
    translation_matrix,
)
from flsonar.worldsim import AcousticParams, make_beams

SONAR = SonarParams()
THREE = make_beams(AcousticParams(), 3)
ONE = make_beams(AcousticParams(), 1)
GEOM3 = build_map(SONAR, THREE).geometry
GEOM1 = build_map(SONAR, ONE).geometry
SQUARE = MapGeometry(40, 0.5, (-15.0, -5.0, 5.0, 15.0))  # equal-width sectors


# -- construction ------------------------------------------------------------


def test_single_beam_map():
    m = build_map(SONAR, ONE, 0.5)
    assert m.cells.shape == (100, 1)
    assert np.all(m.cells == 0.5)
    assert m.beam_edges == (-5.0, 5.0)


def test_three_beam_map():
    m = build_map(SONAR, THREE, 0.5)
    assert m.cells.shape == (100, 3)
    assert m.beam_edges == (-25.0, -5.0, 5.0, 25.0)


@pytest.mark.parametrize("prior", [0.0, 1.0, -0.1])
def test_prior_bounds(prior):
    with pytest.raises(ConfigurationError):
        build_map(SONAR, ONE, prior)


def test_overlapping_beams_rejected():
    from flsonar.acoustics import BeamSpec

    a = BeamSpec(0.0, ((0, 0),), -5.0, 5.0)
    b = BeamSpec(8.0, ((0, 0),), 4.0, 12.0)
    with pytest.raises(ConfigurationError, match="overlap"):
        build_map(SONAR, (a, b))


def test_locate_cell_bounds():
    # ring i covers (i*l_c, (i+1)*l_c], sector j covers (edge_j, edge_j+1]
    ring, beam = GEOM3.locate([0.5, 0.5000001, 50.0, 50.1], [0.0, 0.0, 0.0, 0.0])
    assert list(ring) == [0, 1, 99, -1]
    edge = math.tan(math.radians(5.0)) * 10.0
    _, beam = GEOM3.locate([10.0, 10.0], [edge, edge * 1.0001])
    assert list(beam) == [1, 2]


# -- translational overlap ---------------------------------------------------


def test_zero_shift_identity():
    assert overlap_area_translation((10, 1), (10, 1), 0.0, 1.0, GEOM3) == 1.0
    assert overlap_area_translation((10, 1), (11, 1), 0.0, 1.0, GEOM3) == 0.0
    assert overlap_area_translation((10, 1), (11, 1), 2.0, 0.0, GEOM3) == 0.0


def test_quarter_cell_shift_against_sampling():
    rng = np.random.default_rng(3)
    shift = 0.25 * GEOM1.cell_length
    for target in [(40, 0), (60, 0)]:
        for source in [(target[0], 0), (target[0] + 1, 0)]:
            got = overlap_area_translation(target, source, shift, 1.0, GEOM1)
            ref = mc_translation_overlap(GEOM1, target, source, shift, 1_000_000, rng)
            assert abs(got - ref) < 2e-3


@pytest.mark.parametrize("shift", [0.37, -0.6, 1.3, 2.5])
def test_translation_matches_sampling_across_beams(shift):
    rng = np.random.default_rng(int(abs(shift) * 100) + 7)
    target = (20, 0)
    mat, _ = translation_matrix(GEOM3, shift)
    row = mat[target[0] * 3 + target[1]]
    for idx in np.flatnonzero(row > 1e-4):
        src = (int(idx // 3), int(idx % 3))
        ref = mc_translation_overlap(GEOM3, target, src, shift, 1_000_000, rng)
        assert abs(row[idx] - ref) < 2e-3


@settings(max_examples=40)
@given(st.floats(-3.0, 3.0), st.integers(0, 99), st.integers(0, 2))
def test_translation_rows_sum_to_at_most_one(shift, i, j):
    mat, out = translation_matrix(GEOM3, shift)
    k = i * 3 + j
    assert mat[k].sum() <= 1.0 + 1e-6
    assert np.all(mat[k] >= 0.0)
    # whatever does not come from inside the map comes from outside
    assert mat[k].sum() + out[k] == pytest.approx(1.0, abs=1e-6)


def test_translation_matrix_is_read_only():
    mat, _ = translation_matrix(GEOM3, 1.0)
    with pytest.raises(ValueError):
        mat[0, 0] = 1.0


# -- rotational overlap ------------------------------------------------------


def test_rotation_identity():
    assert overlap_area_rotation((5, 1), (5, 1), 0.0, 1.0, SQUARE) == 1.0
    assert overlap_area_rotation((5, 2), (5, 1), 0.0, 1.0, SQUARE) == 0.0


def test_rotation_full_width_moves_to_neighbour():
    omega = math.radians(10.0)  # one sector width per second
    assert overlap_area_rotation((5, 2), (5, 1), omega, 1.0, SQUARE) == pytest.approx(1.0)
    assert overlap_area_rotation((5, 1), (5, 1), omega, 1.0, SQUARE) == pytest.approx(0.0)


def test_rotation_half_width_splits():
    omega = math.radians(5.0)
    assert overlap_area_rotation((5, 1), (5, 1), omega, 1.0, SQUARE) == pytest.approx(0.5)
    assert overlap_area_rotation((5, 2), (5, 1), omega, 1.0, SQUARE) == pytest.approx(0.5)


def test_rotation_requires_same_ring():
    assert overlap_area_rotation((5, 1), (6, 1), 0.0, 1.0, SQUARE) == 0.0


def test_rotation_normalised_by_shifted_source_width():
    # a 20 deg side sector rotated by 10 deg puts half of itself in the
    # neighbouring 10 deg forward sector
    omega = math.radians(10.0)
    assert overlap_area_rotation((5, 1), (5, 0), omega, 1.0, GEOM3) == pytest.approx(0.5)


# -- propagation -------------------------------------------------------------


def _random_map(geom, seed, prior=0.5):
    rng = np.random.default_rng(seed)
    return PolarMap(geom, rng.uniform(0, 1, geom.shape), prior)


def test_zero_velocity_is_bit_exact_identity():
    m = _random_map(GEOM3, 0)
    out = propagate(m, VelocityBelief(0.0, 0.0, 0.0, 0.0), 1.0)
    assert np.array_equal(out.cells, m.cells)
    assert out.cells is not m.cells


def test_deterministic_shift_against_sampling():
    cells = np.full(GEOM1.shape, 0.0)
    cells[60, 0] = 1.0
    m = PolarMap(GEOM1, cells, 0.5)
    lc = GEOM1.cell_length
    out = propagate(m, VelocityBelief(lc, 0.0, 0.0, 0.0), 1.0)
    rng = np.random.default_rng(11)
    assert np.argmax(out.cells[:, 0]) == 59
    for target in (58, 59, 60):
        ref = mc_translation_overlap(GEOM1, (target, 0), (60, 0), lc, 1_000_000, rng)
        assert abs(out.cells[target, 0] - ref) < 2e-3


def _areas(geom):
    return np.array([[geom.cell_area(i, j) for j in range(geom.n_beams)] for i in range(geom.n_range)])


@settings(max_examples=30)
@given(st.sampled_from([0.0, 0.25, 0.5, 1.0, 1.7, 2.5]), st.integers(0, 1000))
def test_translation_mass_bound(v, seed):
    # area-weighted occupancy: a shifted cell keeps its area, so mass can
    # only be lost behind the vehicle or gained through prior refill
    m = _random_map(GEOM3, seed)
    area = _areas(GEOM3)
    _, out = translation_matrix(GEOM3, v)
    new = propagate(m, VelocityBelief(v, 0.0, 0.0, 0.0), 1.0)
    bound = np.sum(area * m.cells) + m.prior * np.sum(area.reshape(-1) * out)
    assert np.sum(area * new.cells) <= bound + 1e-9


@given(st.floats(-0.3, 0.3), st.integers(0, 1000))
def test_rotation_conserves_ring_mass(omega, seed):
    m = _random_map(SQUARE, seed, prior=0.3)
    new = propagate(m, VelocityBelief(0.0, 0.0, omega, 0.0), 1.0)
    ratio, uncovered = rotation_matrix(SQUARE, math.degrees(omega))
    kept = ratio.sum(axis=0)  # fraction of each source sector still on the map
    for i in range(SQUARE.n_range):
        expected = m.cells[i] @ kept + m.prior * uncovered.sum()
        assert new.cells[i].sum() == pytest.approx(expected, abs=1e-9)


def test_translation_then_rotation_order():
    m = _random_map(GEOM3, 5)
    v, w = 2.0, 0.2
    out = propagate(m, VelocityBelief(v, 0.0, w, 0.0), 1.0)
    mat, outside = translation_matrix(GEOM3, v)
    t = np.clip(mat @ m.cells.reshape(-1) + m.prior * outside, 0, 1).reshape(GEOM3.shape)
    ratio, unc = rotation_matrix(GEOM3, math.degrees(w))
    tr = np.clip(t @ ratio.T + m.prior * unc[None, :], 0, 1)
    assert np.allclose(out.cells, tr, atol=1e-12)
    r = np.clip(m.cells @ ratio.T + m.prior * unc[None, :], 0, 1)
    rt = np.clip(mat @ r.reshape(-1) + m.prior * outside, 0, 1).reshape(GEOM3.shape)
    assert not np.allclose(out.cells, rt)


def test_inflow_from_beyond_range_is_prior():
    m = PolarMap(GEOM1, np.zeros(GEOM1.shape), 0.5)
    out = propagate(m, VelocityBelief(2.0, 0.0, 0.0, 0.0), 1.0)
    assert out.cells[-1, 0] == pytest.approx(0.5)
    assert out.cells[50, 0] == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=25)
@given(
    st.floats(-4.0, 4.0), st.floats(0.0, 1.0), st.floats(-0.5, 0.5), st.floats(0.0, 0.1),
    st.sampled_from([1, 3, 5]), st.integers(0, 100),
)
def test_propagation_stays_in_unit_interval(v, vs, w, ws, nodes, seed):
    m = _random_map(GEOM3, seed)
    out = propagate(m, VelocityBelief(v, vs, w, ws, nodes), 1.0)
    assert np.all((out.cells >= 0) & (out.cells <= 1))


def test_velocity_belief_validation():
    with pytest.raises(ConfigurationError):
        VelocityBelief(nodes=4)
    with pytest.raises(ConfigurationError):
        VelocityBelief(v_std=-1.0)


# -- measurement model -------------------------------------------------------


def _levels(geom, occ=20.0, empty=10.0, sigma=3.0):
    return PredictedLevels(np.full(geom.shape, occ), np.full(geom.shape, empty), sigma)


def test_likelihood_mode_and_midpoint():
    pred = _levels(GEOM1)
    at_occ = measurement_likelihood(20.0, (0, 0), OCCUPIED, pred) / measurement_likelihood(20.0, (0, 0), EMPTY, pred)
    assert at_occ > 1.0
    mid = measurement_likelihood(15.0, (0, 0), OCCUPIED, pred) / measurement_likelihood(15.0, (0, 0), EMPTY, pred)
    assert mid == pytest.approx(1.0, abs=1e-12)


@given(st.floats(-50, 150))
def test_equal_means_uninformative(z):
    pred = _levels(GEOM1, 12.0, 12.0)
    assert measurement_likelihood(z, (3, 0), OCCUPIED, pred) == measurement_likelihood(z, (3, 0), EMPTY, pred)


def test_sigma_must_be_positive():
    with pytest.raises(ConfigurationError):
        _levels(GEOM1, sigma=0.0)


def test_bayes_three_to_one():
    pred = _levels(GEOM1, occ=1.0, empty=0.0, sigma=1.0)
    z = math.log(3.0) + 0.5  # log-likelihood ratio ln 3
    m = build_map(SONAR, ONE, 0.5)
    out = bayes_update(m, PingSet(np.full((1, 100), z)), pred)
    assert np.allclose(out.cells, 0.75, atol=1e-12)


def test_bayes_uninformative_and_idempotent():
    pred = _levels(GEOM3, 10.0, 10.0)
    m = _random_map(GEOM3, 2)
    ping = PingSet(np.full((3, 100), 33.0))
    once = bayes_update(m, ping, pred)
    assert np.array_equal(once.cells, m.cells)
    assert np.array_equal(bayes_update(once, ping, pred).cells, once.cells)


@given(st.floats(-100, 200), st.sampled_from([0.0, 1.0]))
def test_bayes_absorbing(z, p):
    pred = _levels(GEOM1)
    m = PolarMap(GEOM1, np.full(GEOM1.shape, p), 0.5)
    out = bayes_update(m, PingSet(np.full((1, 100), z)), pred)
    assert np.all(out.cells == p)


def test_bayes_updates_own_column_only():
    pred = _levels(GEOM3)
    traces = np.full((3, 100), 15.0)  # midpoint: no information
    traces[2, 40] = 25.0
    out = bayes_update(build_map(SONAR, THREE), PingSet(traces), pred)
    changed = np.argwhere(out.cells != 0.5)
    assert changed.tolist() == [[40, 2]]


def test_bayes_dimension_mismatch():
    with pytest.raises(DimensionError):
        bayes_update(build_map(SONAR, THREE), PingSet(np.zeros((1, 100))), _levels(GEOM3))
    with pytest.raises(DimensionError):
        bayes_update(build_map(SONAR, THREE), PingSet(np.zeros((3, 100))), _levels(GEOM1))


@given(st.integers(0, 10_000), st.floats(0.5, 10.0))
def test_bayes_unit_interval_fuzz(seed, sigma):
    rng = np.random.default_rng(seed)
    m = _random_map(GEOM3, seed)
    pred = PredictedLevels(rng.uniform(0, 60, GEOM3.shape), rng.uniform(0, 60, GEOM3.shape), sigma)
    out = bayes_update(m, PingSet(rng.uniform(-50, 150, (3, 100))), pred)
    assert np.all((out.cells >= 0) & (out.cells <= 1))


def test_format_map_dump():
    m = build_map(SONAR, THREE, 0.5)
    text = format_map(m)
    rows = text.strip().split("\n")
    assert len(rows) == 100
    assert rows[0] == "0.500000 0.500000 0.500000"
