import itertools
import math
import random

import pytest

from fluc.geodesy import EnuPoint, euclid3_m
from fluc.planner import (Empty, NonPositive, Obstacle, TooMany, Unroutable,
                          diagonal_leg, optimize_order, path_length,
                          route_around)


def brute_force_order(start, waypoints):
    """Independent oracle: minimum over all n! orderings, lexicographic ties."""
    best_perm = None
    best_len = math.inf
    for perm in itertools.permutations(range(len(waypoints))):
        pts = [start] + [waypoints[i] for i in perm]
        length = path_length(pts)
        if length < best_len:
            best_len = length
            best_perm = perm
    return best_perm, best_len


def random_point(rng, scale=100.0):
    return EnuPoint(rng.uniform(-scale, scale), rng.uniform(-scale, scale),
                    rng.uniform(0, 50))


# -- optimize_order ---------------------------------------------------------

def test_single_waypoint():
    start = EnuPoint(0, 0, 0)
    wp = EnuPoint(30, 40, 0)
    route = optimize_order(start, [wp])
    assert route.points == (wp,)
    assert route.total_length == pytest.approx(50.0)


def test_square_corners_match_brute_force():
    start = EnuPoint(0, 0, 0)
    wps = [EnuPoint(0, 100, 10), EnuPoint(100, 100, 10),
           EnuPoint(100, 0, 10), EnuPoint(0, 0, 10)]
    route = optimize_order(start, wps)
    perm, length = brute_force_order(start, wps)
    assert route.points == tuple(wps[i] for i in perm)
    assert route.total_length == pytest.approx(length)


def test_five_waypoints_match_oracle_over_seeds():
    for seed in range(200):
        rng = random.Random(seed)
        start = random_point(rng)
        wps = [random_point(rng) for _ in range(5)]
        route = optimize_order(start, wps)
        perm, length = brute_force_order(start, wps)
        assert route.points == tuple(wps[i] for i in perm), f"seed {seed}"
        assert route.total_length == pytest.approx(length)


def test_result_beats_random_permutations():
    rng = random.Random(42)
    start = random_point(rng)
    wps = [random_point(rng) for _ in range(7)]
    route = optimize_order(start, wps)
    for _ in range(100):
        perm = list(range(7))
        rng.shuffle(perm)
        sampled = path_length([start] + [wps[i] for i in perm])
        assert route.total_length <= sampled + 1e-9


def test_two_opt_not_worse_than_nearest_neighbor():
    from fluc.planner import _nearest_neighbor, _perm_length
    rng = random.Random(3)
    for _ in range(20):
        start = random_point(rng)
        wps = [random_point(rng) for _ in range(12)]
        route = optimize_order(start, wps)
        seed_order = _nearest_neighbor(start, wps)
        assert route.total_length <= _perm_length(start, wps, seed_order) + 1e-9


def test_total_length_recomputes():
    rng = random.Random(5)
    start = random_point(rng)
    wps = [random_point(rng) for _ in range(6)]
    route = optimize_order(start, wps)
    recomputed = path_length((start,) + route.points)
    assert abs(route.total_length - recomputed) <= 1e-9 * max(1.0, recomputed)


def test_limits():
    start = EnuPoint(0, 0, 0)
    with pytest.raises(Empty):
        optimize_order(start, [])
    with pytest.raises(TooMany):
        optimize_order(start, [EnuPoint(i, 0, 0) for i in range(65)])


# -- route_around -----------------------------------------------------------

def clearance_violations(points, obstacles, step=0.5):
    """Dense-sampling oracle: count samples inside any inflated cylinder."""
    bad = 0
    for a, b in zip(points, points[1:]):
        n = max(1, math.ceil(euclid3_m(a, b) / step))
        for k in range(n + 1):
            t = k / n
            e = a.east + t * (b.east - a.east)
            no = a.north + t * (b.north - a.north)
            u = a.up + t * (b.up - a.up)
            for obs in obstacles:
                if u <= obs.height and math.hypot(e - obs.center_east, no - obs.center_north) < obs.radius + 5.0:
                    bad += 1
    return bad


def test_no_obstacles_direct():
    a, b = EnuPoint(0, 0, 10), EnuPoint(100, 0, 10)
    assert route_around(a, b, []) == [a, b]


def test_single_centered_obstacle_detour():
    a, b = EnuPoint(0, 0, 10), EnuPoint(100, 0, 10)
    obs = Obstacle(50, 0, 10, 50)
    points = route_around(a, b, [obs], margin=5.0)
    assert points[0] == a and points[-1] == b
    assert len(points) == 3
    detour = points[1]
    assert detour.east == pytest.approx(50.0, abs=1e-9)
    assert abs(detour.north) == pytest.approx(15.75, abs=1e-9)
    assert clearance_violations(points, [obs]) == 0


def test_endpoint_inside_obstacle_unroutable():
    a = EnuPoint(0, 0, 10)
    inside = EnuPoint(50, 0, 10)
    obs = Obstacle(50, 0, 10, 50)
    with pytest.raises(Unroutable):
        route_around(a, inside, [obs])
    with pytest.raises(Unroutable):
        route_around(inside, a, [obs])


def test_obstacle_above_flight_band_ignored():
    a, b = EnuPoint(0, 0, 60), EnuPoint(100, 0, 60)
    obs = Obstacle(50, 0, 10, 50)
    assert route_around(a, b, [obs]) == [a, b]


def test_random_single_obstacle_instances_clear():
    rng = random.Random(11)
    produced = 0
    while produced < 100:
        a = EnuPoint(rng.uniform(-200, -50), rng.uniform(-50, 50), rng.uniform(5, 40))
        b = EnuPoint(rng.uniform(50, 200), rng.uniform(-50, 50), rng.uniform(5, 40))
        obs = Obstacle(rng.uniform(-30, 30), rng.uniform(-30, 30),
                       rng.uniform(3, 25), rng.uniform(20, 60))
        try:
            points = route_around(a, b, [obs], margin=5.0)
        except Unroutable as e:
            assert "inside" in str(e)  # only endpoint-in-obstacle may be skipped
            continue
        produced += 1
        assert points[0] == a and points[-1] == b
        assert clearance_violations(points, [obs]) == 0


# -- diagonal_leg -----------------------------------------------------------

def test_diagonal_leg_200m():
    leg = diagonal_leg(200.0)
    assert leg.east == pytest.approx(141.4214, abs=1e-4)
    assert leg.north == pytest.approx(141.4214, abs=1e-4)
    assert leg.up == 0.0


def test_diagonal_leg_norm_equals_distance():
    for d in (1.0, 57.3, 200.0, 1234.5):
        leg = diagonal_leg(d)
        assert math.hypot(leg.east, leg.north) == pytest.approx(d, abs=1e-9)
        assert leg.east == leg.north


def test_diagonal_leg_rejects_non_positive():
    with pytest.raises(NonPositive):
        diagonal_leg(0.0)
    with pytest.raises(NonPositive):
        diagonal_leg(-5.0)
