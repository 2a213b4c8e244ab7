import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maskloop.geo import (
    EARTH_RADIUS_KM,
    CoordinateError,
    DistanceMatrix,
    distance_matrix,
    haversine_km,
    instance_distances,
)
from maskloop.instance import DistanceOverride, generate_synthetic

lats = st.floats(-90, 90, allow_nan=False)
lons = st.floats(-180, 180, allow_nan=False)


def chord_oracle(a, b):
    """Great-circle distance from the 3-D chord between unit vectors."""
    def unit(p):
        la, lo = np.radians(p)
        return np.array([np.cos(la) * np.cos(lo), np.cos(la) * np.sin(lo), np.sin(la)])

    chord = np.linalg.norm(unit(a) - unit(b))
    return 2 * EARTH_RADIUS_KM * np.arcsin(min(1.0, chord / 2))


def test_known_distances():
    assert haversine_km((0, 0), (0, 0)) == 0.0
    # a quarter meridian
    assert haversine_km((0, 0), (90, 0)) == pytest.approx(math.pi / 2 * EARTH_RADIUS_KM, rel=1e-12)
    # one degree of longitude on the equator
    assert haversine_km((0, 10), (0, 11)) == pytest.approx(2 * math.pi * EARTH_RADIUS_KM / 360, rel=1e-12)


def test_antipode():
    assert haversine_km((0, 0), (0, 180)) == pytest.approx(math.pi * EARTH_RADIUS_KM, rel=1e-12)
    assert haversine_km((48.4, -123.3), (-48.4, 56.7)) == pytest.approx(math.pi * EARTH_RADIUS_KM, rel=1e-9)


@given(lats, lons, lats, lons)
def test_symmetric_bitwise(a1, o1, a2, o2):
    assert haversine_km((a1, o1), (a2, o2)) == haversine_km((a2, o2), (a1, o1))


@given(lats, lons, lats, lons)
def test_agrees_with_chord_oracle(a1, o1, a2, o2):
    d = haversine_km((a1, o1), (a2, o2))
    assert 0.0 <= d <= math.pi * EARTH_RADIUS_KM + 1e-9
    assert d == pytest.approx(chord_oracle((a1, o1), (a2, o2)), rel=1e-6, abs=1e-6)


@given(lats, lons, lats, lons, lats, lons)
def test_triangle_inequality(a1, o1, a2, o2, a3, o3):
    p, q, r = (a1, o1), (a2, o2), (a3, o3)
    assert haversine_km(p, r) <= haversine_km(p, q) + haversine_km(q, r) + 1e-6


@pytest.mark.parametrize("bad", [(91, 0), (-90.5, 0), (0, 180.01), (float("nan"), 0)])
def test_rejects_bad_coordinates(bad):
    with pytest.raises(CoordinateError):
        haversine_km(bad, (0, 0))


def test_matrix_shape_ids_and_csv():
    dm = distance_matrix([(48.0, -123.0), (49.0, -124.0)], [(50.0, -125.0)], ["a", "b"], ["s"])
    assert dm.shape == (2, 1)
    assert dm.km[1, 0] == haversine_km((49.0, -124.0), (50.0, -125.0))
    lines = dm.to_csv().splitlines()
    assert lines[0] == "id,s"
    assert lines[1].startswith("a,") and len(lines[1].split(",")[1].split(".")[1]) == 6
    with pytest.raises(ValueError):
        dm.km[0, 0] = 1.0


def test_matrix_validation():
    with pytest.raises(ValueError):
        DistanceMatrix(("a",), ("b", "c"), np.zeros((1, 3)))
    with pytest.raises(ValueError):
        DistanceMatrix(("a",), ("b",), np.array([[-1.0]]))
    with pytest.raises(ValueError):
        distance_matrix([], [(0, 0)])


def test_instance_distances_and_override():
    inst = generate_synthetic(4, 3, 2, 1)
    d_hs, d_ss = instance_distances(inst)
    assert d_hs.shape == (3, 2) and d_ss.shape == (2, 2)
    assert np.all(np.diag(d_ss.km) == 0.0)
    assert np.array_equal(d_ss.km, d_ss.km.T)
    assert d_hs.from_ids == ("H01", "H02", "H03")
    ov = DistanceOverride(((1.0, 2.0), (3.0, 4.0), (5.0, 6.0)), ((0.0, 7.5), (7.5, 0.0)))
    o_hs, o_ss = instance_distances(replace(inst, distance_override=ov))
    assert o_hs.km.tolist() == [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]
    assert o_ss.km.tolist() == [[0.0, 7.5], [7.5, 0.0]]


def test_single_site_matrix_is_zero():
    inst = generate_synthetic(4, 2, 1, 1)
    _, d_ss = instance_distances(inst)
    assert d_ss.km.tolist() == [[0.0]]
