import json
import math

import numpy as np
import pytest

from geonets.manifold import (
    DistanceError,
    Finite,
    FullSphere,
    Paraboloid,
    RealProjective2,
    distance,
    gaussian_curvature,
    get_manifold,
    injectivity_radius_estimate,
    minimal_directions,
    spheroid,
)
from oracles import fd_curvature_paraboloid, fd_curvature_revolution, meridian_arc

N = np.array([0.0, 0.0, 1.0])
S = -N
X = np.array([1.0, 0.0, 0.0])


def test_sphere_distances(s2):
    assert distance(s2, N, S) == pytest.approx(math.pi, abs=1e-15)
    assert distance(s2, N, N) == 0.0
    assert distance(s2, X, N) == pytest.approx(math.pi / 2, abs=1e-15)


def test_rp2_distance_orthogonal_lifts(rp2):
    assert distance(rp2, N, X) == pytest.approx(math.pi / 2, abs=1e-15)


def test_rp2_distance_is_min_over_lifts(rp2, rng):
    for _ in range(200):
        a, b = rng.normal(size=(2, 3))
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        lifts = [math.acos(np.clip(a @ b, -1, 1)), math.acos(np.clip(-a @ b, -1, 1))]
        assert distance(rp2, a, b) == pytest.approx(min(lifts), abs=1e-9)


def test_plane_distance(plane):
    assert distance(plane, [0, 0], [3, 4]) == pytest.approx(5.0)


def test_paraboloid_apex_distance_matches_meridian_integral(paraboloid):
    q = paraboloid.from_chart(1.0, 0.0)
    expected = (math.sqrt(2) + math.asinh(1)) / 2
    assert meridian_arc(1.0) == pytest.approx(expected, abs=1e-14)
    assert distance(paraboloid, paraboloid.from_chart(0, 0), q) == pytest.approx(expected, abs=1e-12)
    assert distance(paraboloid, paraboloid.from_chart(0, 0), q) == pytest.approx(1.147793, abs=1e-6)


def test_paraboloid_bvp_agrees_with_apex_fast_path(paraboloid):
    apex = paraboloid.from_chart(0, 0)
    for r, v in [(0.5, 0.3), (1.0, 0.0), (2.0, 2.0)]:
        q = paraboloid.from_chart(r, v)
        con = paraboloid.minimal(apex, q)
        assert con.shots[0].length == pytest.approx(meridian_arc(r), abs=1e-8)


@pytest.mark.parametrize("name", ["s2", "rp2", "plane"])
def test_triangle_inequality_analytic(name, rng):
    m = get_manifold(name)
    for _ in range(1000):
        a, b, c = (m.random_point(rng) for _ in range(3))
        assert m.distance(a, c) <= m.distance(a, b) + m.distance(b, c) + 1e-8
        assert m.distance(a, b) == pytest.approx(m.distance(b, a), abs=1e-12)


def test_triangle_inequality_paraboloid(paraboloid, rng):
    # numeric distances are expensive; a handful of triples near the apex
    pts = [paraboloid.from_chart(r, v) for r, v in zip(rng.uniform(0.1, 1.2, 9), rng.uniform(0, 2 * np.pi, 9))]
    for a, b, c in zip(pts[0::3], pts[1::3], pts[2::3]):
        dab, dbc, dac = paraboloid.distance(a, b), paraboloid.distance(b, c), paraboloid.distance(a, c)
        assert dac <= dab + dbc + 1e-8


def test_sphere_distance_bounded_by_pi(s2, rng):
    for _ in range(500):
        assert s2.distance(s2.random_point(rng), s2.random_point(rng)) <= math.pi


def test_minimal_directions_examples(s2, rp2):
    W = minimal_directions(s2, S, N)
    assert isinstance(W, FullSphere)
    assert len(W.sample()) == 64
    W = minimal_directions(s2, X, N)
    assert isinstance(W, Finite) and len(W) == 1
    np.testing.assert_allclose(W.directions[0], N, atol=1e-15)
    W = minimal_directions(rp2, X, N)
    assert len(W) == 2
    got = sorted(W.directions.tolist())
    np.testing.assert_allclose(got, [[0, 0, -1], [0, 0, 1]], atol=1e-15)


def test_minimal_directions_rejects_equal_points(s2):
    with pytest.raises(ValueError):
        minimal_directions(s2, N, N)


def test_full_sphere_sampling_is_uniform(s2):
    W = minimal_directions(s2, S, N)
    ang = np.sort(W.angles(8))
    np.testing.assert_allclose(np.diff(ang), np.pi / 4, atol=1e-12)
    np.testing.assert_allclose(W.sample(8) @ S, 0, atol=1e-15)


@pytest.mark.parametrize("name", ["s2", "rp2", "plane"])
def test_minimal_directions_land_on_target(name, rng):
    m = get_manifold(name)
    for _ in range(50):
        p, q = m.random_point(rng), m.random_point(rng)
        W = m.minimal_directions(q, p)
        for w in W.sample(8):
            assert abs(np.linalg.norm(w) - 1) < 1e-10
            end = m.exp(q, m.distance(q, p) * w)
            assert m.same_point(end, p, 1e-6)


@pytest.mark.parametrize("target", [(0.7, 1.0), (1.3, 2.5)])
def test_paraboloid_minimal_directions_land_on_target(paraboloid, target):
    q = paraboloid.from_chart(0.9, 0.2)
    p = paraboloid.from_chart(*target)
    W = paraboloid.minimal_directions(q, p)
    d = paraboloid.distance(q, p)
    for w in W.sample():
        assert abs(np.linalg.norm(w) - 1) < 1e-10
        assert np.linalg.norm(paraboloid.exp(q, d * w) - p) < 1e-6


def test_spheroid_cut_point_has_two_directions(ellipsoid):
    # points symmetric across the axis: mirror-image minimal geodesics
    q = ellipsoid.at_height(0.3, 0.0)
    p = ellipsoid.at_height(-0.3, math.pi)
    W = ellipsoid.minimal_directions(q, p)
    assert len(W) >= 1
    d = ellipsoid.distance(q, p)
    for w in W.sample():
        assert np.linalg.norm(ellipsoid.exp(q, d * w) - p) < 1e-6


def test_spheroid_poles_are_focal(ellipsoid):
    top = ellipsoid.at_height(ellipsoid.z_max)
    bottom = ellipsoid.at_height(ellipsoid.z_min)
    W = ellipsoid.minimal_directions(bottom, top)
    assert W.is_full
    assert ellipsoid.distance(top, bottom) == pytest.approx(ellipsoid.meridian_length(ellipsoid.z_max), abs=1e-7)


def test_curvature(s2, rp2, plane, paraboloid, rng):
    assert gaussian_curvature(s2, s2.random_point(rng)) == 1.0
    assert gaussian_curvature(rp2, rp2.random_point(rng)) == 1.0
    assert gaussian_curvature(plane, [0.3, 0.1]) == 0.0
    assert gaussian_curvature(paraboloid, paraboloid.from_chart(0, 0)) == pytest.approx(1.0, abs=1e-15)
    assert fd_curvature_paraboloid(1e-3) == pytest.approx(1.0, abs=1e-5)
    for r in [0.3, 1.0, 2.5]:
        K = gaussian_curvature(paraboloid, paraboloid.from_chart(r, 1.0))
        assert K == pytest.approx(1 / (1 + r * r) ** 2, rel=1e-12)
        assert K == pytest.approx(fd_curvature_paraboloid(r), rel=1e-6)


def test_revolution_curvature_matches_metric_oracle(ellipsoid):
    S = lambda z: 1.0 - z * z / 1.05**2  # noqa: E731
    for z in [-0.8, -0.2, 0.0, 0.5, 0.9]:
        K = ellipsoid.gaussian_curvature(ellipsoid.at_height(z, 0.4))
        assert K == pytest.approx(fd_curvature_revolution(S, z), rel=1e-6)


def test_numeric_paraboloid_curvature_matches_analytic():
    # a generic revolution surface with the paraboloid profile
    from geonets.manifold import RevolutionSurface

    m = RevolutionSurface("par", radius_sq_coef=(0.0, 2.0), z_min=0.0, z_max=50.0, curvature_lower_bound=0.0)
    for r in [0.0, 0.5, 2.0]:
        x = np.array([r, 0.0, r * r / 2])
        assert m.gaussian_curvature(x) == pytest.approx(1 / (1 + r * r) ** 2, rel=1e-10)


def test_manifold_metadata(s2, rp2, ellipsoid):
    assert s2.injectivity_radius == math.pi and s2.curvature_lower_bound == 1
    assert rp2.injectivity_radius == math.pi / 2 and rp2.diameter == math.pi / 2
    assert ellipsoid.injectivity_radius is None
    assert 0.85 < ellipsoid.curvature_lower_bound <= 1 / 1.05**2 + 1e-9
    est = injectivity_radius_estimate(ellipsoid)
    assert 2.5 < est < ellipsoid.diameter


def test_rp2_canonical_representative(rp2):
    x = rp2.point([-0.6, 0.0, 0.8])
    assert x[0] > 0
    assert rp2.same_point(x, [0.6, 0, -0.8])
    x = rp2.point([0.0, -1.0, 0.0])
    np.testing.assert_allclose(x, [0, 1, 0])


def test_sphere_point_invariant(s2, rng):
    for _ in range(100):
        assert abs(np.linalg.norm(s2.random_point(rng)) - 1) < 1e-12


def test_get_manifold_ids(tmp_path):
    assert isinstance(get_manifold("paraboloid"), Paraboloid)
    assert isinstance(get_manifold("rp2"), RealProjective2)
    m = get_manifold("spheroid:1.2")
    assert m.z_max == pytest.approx(1.2)
    f = tmp_path / "prof.json"
    f.write_text(json.dumps({"radius_sq_poly": [1.0, 0.0, -1 / 1.05**2], "z_min": -1.05, "z_max": 1.05}))
    m = get_manifold(f"revolution:{f}")
    assert m.closed
    assert m.gaussian_curvature(m.at_height(0.0)) == pytest.approx(spheroid(1.05).gaussian_curvature(m.at_height(0.0)))
    with pytest.raises(ValueError):
        get_manifold("torus")


def test_numeric_failures_raise(ellipsoid):
    from geonets.manifold import RevolutionSurface, ShootingError

    # a finite open cylinder: the fan leaves the chart, which must raise
    # (naming the offending height) rather than return a guess
    m = RevolutionSurface("cyl", radius_sq_coef=(1.0,), z_min=-0.5, z_max=0.5, curvature_lower_bound=0.0, diameter=4.0)
    with pytest.raises(ShootingError, match="z ="):
        m.distance(m.at_height(0.4, 0.0), m.at_height(-0.4, 1.0))
    assert issubclass(DistanceError, ShootingError)
