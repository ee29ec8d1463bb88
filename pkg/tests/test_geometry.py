import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import mc_overlap, random_convex, square
from cellopt.errors import DimensionError
from cellopt.geometry import WorldPolygon, contains, in_annulus, in_bounds, place, projection_gap, separated
from cellopt.model import Resource


def unit_square(cx, cy):
    return WorldPolygon(np.array(square(0.5)) + [cx, cy])


def test_place_translates():
    r = Resource(0, (0.0, 0.0), tuple(map(tuple, square(0.5))), True)
    p = place(r, (3, 4))
    assert np.allclose(p.centroid, (3, 4))
    assert np.allclose(place(r, (0, 0)).vertices, square(0.5))


def test_place_fixed_ignores_coords():
    r = Resource(0, (1.0, 1.0), tuple(map(tuple, square(0.5))), False)
    assert np.allclose(place(r, (7, -3)).vertices, place(r, (0, 0)).vertices)


def test_place_dimension_mismatch():
    r = Resource(0, (0.0, 0.0), tuple(map(tuple, square(0.5))), True)
    with pytest.raises(DimensionError):
        place(r, (1, 2, 3))


def test_normals_are_minus_dy_dx():
    p = unit_square(0, 0)
    e = p.edges
    assert np.array_equal(p.normals, np.column_stack((-e[:, 1], e[:, 0])))
    # outward for a CCW polygon: first edge runs along +x at the bottom
    assert tuple(p.normals[0]) == (0.0, 1.0) or tuple(p.normals[0]) == (-0.0, 1.0)


def test_separated_with_gap():
    res = separated(unit_square(0, 0), unit_square(3, 0))
    assert res.separated
    assert abs(abs(res.axis[0]) - 1.0) < 1e-12 and abs(res.axis[1]) < 1e-12


def test_overlapping_squares():
    assert not separated(unit_square(0, 0), unit_square(0.5, 0)).separated


def test_touching_squares_overlap():
    assert not separated(unit_square(0, 0), unit_square(1, 0)).separated
    assert separated(unit_square(0, 0), unit_square(1 + 1e-9, 0)).separated


def test_annulus_inclusive():
    assert in_annulus((1.0, 0.0), (0, 0), 1.0, 2.0)
    assert in_annulus((2.0, 0.0), (0, 0), 1.0, 2.0)
    assert not in_annulus((0.0, 0.0), (0, 0), 0.5, 2.0)
    assert in_annulus((0.0, 1.5), (0, 0), 1.0, 2.0)


def test_bounds():
    assert in_bounds([0.0, -1.0], [(0, 1), (-1, 1)])
    assert not in_bounds([0.0, 1.0 + 1e-12], [(0, 1), (-1, 1)])
    assert in_bounds([], [])
    with pytest.raises(DimensionError):
        in_bounds([0.0], [])


def test_contains_closed():
    p = unit_square(0, 0)
    assert contains(p, [[0.5, 0.5], [0, 0], [0.5, 0]]).all()
    assert not contains(p, [[0.51, 0]]).any()


seeds = st.integers(0, 2**32 - 1)


@given(seeds)
@settings(max_examples=200, deadline=None)
def test_symmetry(seed):
    rng = np.random.default_rng(seed)
    a, b = random_convex(rng), random_convex(rng)
    assert separated(a, b).separated == separated(b, a).separated


@given(seeds, st.floats(-50, 50), st.floats(-50, 50))
@settings(max_examples=200, deadline=None)
def test_translation_covariance(seed, dx, dy):
    rng = np.random.default_rng(seed)
    a, b = random_convex(rng), random_convex(rng)
    if abs(projection_gap(a, b)) < 1e-9:
        return
    assert separated(a, b).separated == separated(a.translated((dx, dy)), b.translated((dx, dy))).separated


@given(seeds)
@settings(max_examples=200, deadline=None)
def test_witness_axis_separates(seed):
    rng = np.random.default_rng(seed)
    a, b = random_convex(rng), random_convex(rng)
    res = separated(a, b)
    if res.separated:
        axis = np.array(res.axis)
        pa, pb = a.vertices @ axis, b.vertices @ axis
        assert pa.max() < pb.min() or pb.max() < pa.min()
    assert res.separated == (projection_gap(a, b) > 0)


def test_agrees_with_point_sampling():
    rng = np.random.default_rng(7)
    mc_rng = np.random.default_rng(8)
    for _ in range(200):
        a, b = random_convex(rng), random_convex(rng)
        if abs(projection_gap(a, b)) <= 1e-6:
            continue
        assert separated(a, b).separated == (not mc_overlap(a, b, mc_rng))
