import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjavoid.collision import Rect, exact_rect_intersect
from hjavoid.grid import GridSpec
from hjavoid.levelset import (CircularMotion, DeceleratingMotion, FixedMotion, LinearMotion,
                              ObstacleSpec, box_inclusion, combine_max, combine_min,
                              crossing_road, curved_road, disk_avoidance, evaluate_on_grid,
                              motion_from_dict, motion_pose, motion_to_dict, rect_avoidance,
                              rect_corners, straight_road, target_box, varying_width_road)

S4_XS, S4_YS = (-14, -22, -22, -14), (3.5, 3.5, -3.5, -3.5)


def z(x, y, psi=0.0, v=10.0):
    return (x, y, psi, v)


# -- algebra -------------------------------------------------------------------


def test_combine_idempotent():
    g = straight_road(-3.5, 3.5)
    for y in (-5, 0, 2, 4):
        assert combine_max(g, g)(z(0, y)) == combine_min(g, g)(z(0, y)) == g(z(0, y))


def test_combine_signs():
    g1, g2 = target_box(x_min=0, psi_center=None), target_box(x_max=-1, psi_center=None)
    p = z(1.0, 0)  # g1 = -1, g2 = 2
    assert combine_max(g1, g2)(p) == 2 and combine_min(g1, g2)(p) == -1


@settings(max_examples=200)
@given(st.floats(-30, 30), st.floats(-30, 30))
def test_max_min_are_intersection_and_union(x, y):
    a, b = straight_road(-3.5, 3.5), varying_width_road(3.5, -3.5, -7, -15)
    p = z(x, y)
    assert (combine_max(a, b)(p) <= 0) == (a(p) <= 0 and b(p) <= 0)
    assert (combine_min(a, b)(p) <= 0) == (a(p) <= 0 or b(p) <= 0)


# -- roads -----------------------------------------------------------------------


def test_straight_road():
    g = straight_road(-3.5, 3.5)
    assert g(z(0, 0)) == -3.5
    assert g(z(7, 3.5)) == 0
    assert g(z(-3, 5)) == 1.5


@pytest.mark.parametrize("xy,expected", [((-20, -5), 1.5), ((0, -5), -2.0), ((0, 0), -3.5)])
def test_varying_width_road(xy, expected):
    assert varying_width_road(3.5, -3.5, -7, -15)(z(*xy)) == pytest.approx(expected)


def test_curved_road_examples():
    g = curved_road((0, 0), 46.5, 53.5, 0, math.pi)
    # mid-road: radial terms are -3.5, the angular terms -pi/2 dominate the max
    assert g(z(0, 50)) == pytest.approx(-math.pi / 2)
    assert g(z(0, 55)) == pytest.approx(1.5)
    p = (50 * math.cos(-0.05), 50 * math.sin(-0.05))
    assert g(z(*p)) > 0
    assert g(z(0, 0)) > 0  # centre: radial terms only


def test_curved_road_rejects_inverted_radii():
    with pytest.raises(ValueError):
        curved_road((0, 0), 53.5, 46.5, 0, math.pi)


def test_crossing_road():
    g = crossing_road(S4_XS, S4_YS)
    assert g(z(-35, 0)) < 0  # horizontal street
    assert g(z(-18, 15)) < 0  # vertical street
    assert g(z(-14, 3.5)) == pytest.approx(0)
    assert g(z(-5, 10)) > 0  # forbidden quadrant


# -- target ----------------------------------------------------------------------


def test_target_box_examples():
    phi = target_box(x_min=0, y_min=-3.5, y_max=3.5, psi_center=0, psi_tol=0.1)
    assert phi(z(1, 0, 0)) < 0
    assert phi(z(-1, 0, 0)) == pytest.approx(1)
    assert phi(z(1, 0, 0.2)) == pytest.approx(0.1)


def test_target_union_of_boxes():
    right = target_box(x_min=-3, y_min=-3.5, y_max=3.5, psi_center=0)
    top = target_box(x_min=-22, x_max=-14, y_min=16, psi_center=math.pi / 2)
    phi = combine_min(right, top)
    assert phi(z(-1, 0, 0)) < 0
    assert phi(z(-18, 18, math.pi / 2)) < 0
    assert phi(z(-18, 18, 0)) > 0


# -- corners and inclusion -------------------------------------------------------


def test_rect_corners_axis_aligned():
    assert sorted(rect_corners((0, 0), 0.0, (1, 1))) == [(-1, -1), (-1, 1), (1, -1), (1, 1)]


def test_rect_corners_rotated():
    pts = rect_corners((0, 0), math.pi / 2, (2, 1))
    assert any(np.allclose(p, (-1, 2)) for p in pts)


@settings(max_examples=50)
@given(st.floats(-100, 100), st.floats(-100, 100), st.floats(-4, 4))
def test_rect_corners_translate(x, y, psi):
    a = np.array(rect_corners((0, 0), psi, (1.5, 0.5)))
    b = np.array(rect_corners((x, y), psi, (1.5, 0.5)))
    np.testing.assert_allclose(b - a, np.broadcast_to((x, y), a.shape), atol=1e-9)


@pytest.mark.parametrize("X,expected", [((0, 0), 1), ((0.5, 2), -1), ((1, 0), 0)])
def test_box_inclusion(X, expected):
    assert box_inclusion(X, (1, 1)) == expected


@settings(max_examples=200)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_box_inclusion_sign_matches_membership(x, y):
    inside = abs(x) <= 1.5 and abs(y) <= 0.5
    assert (box_inclusion((x, y), (1.5, 0.5)) >= 0) == inside


# -- avoidance functions ---------------------------------------------------------


def rect_ob(x, y, psi=0.0, half=(1.0, 1.0)):
    return ObstacleSpec(FixedMotion(x, y, psi), half_lengths=half)


def test_rect_avoidance_far_and_coincident():
    g = rect_avoidance((1, 1), [rect_ob(10, 0)])
    assert g(z(0, 0)) < 0
    # identical squares: corners sit on each other's boundary, g = 0 (not certified safe)
    assert g(z(10, 0)) == 0
    assert rect_avoidance((1, 1), [rect_ob(10, 0, 0.3, (0.5, 0.5))])(z(10, 0)) > 0


def test_rotated_copy_is_another_corner_counterexample():
    # a square turned by 0.3 rad about the same centre: no corner inside the other
    g = rect_avoidance((1, 1), [rect_ob(0, 0, 0.3)])
    assert g(z(0, 0)) < 0
    assert exact_rect_intersect(Rect(0, 0, 0, 1, 1), Rect(0, 0, 0.3, 1, 1))


def test_rect_avoidance_plus_sign_counterexample():
    g = rect_avoidance((3, 0.5), [rect_ob(0, 0, 0.0, (0.5, 3))])
    assert g(z(0, 0)) == pytest.approx(-2.5)
    assert exact_rect_intersect(Rect(0, 0, 0, 3, 0.5), Rect(0, 0, 0, 0.5, 3))


def _corner_condition_direct(v: Rect, o: Rect) -> bool:
    def inside(p, r):
        c, s = math.cos(r.psi), math.sin(r.psi)
        dx, dy = p[0] - r.x, p[1] - r.y
        return abs(c * dx + s * dy) <= r.lx and abs(-s * dx + c * dy) <= r.ly
    return not any(inside(p, o) for p in v.corners()) and not any(inside(p, v) for p in o.corners())


def test_rect_avoidance_sign_is_corner_condition():
    rng = np.random.default_rng(11)
    for _ in range(10_000):
        v = Rect(0.0, 0.0, rng.uniform(-math.pi, math.pi), *rng.uniform(0.2, 3, 2))
        o = Rect(*rng.uniform(-5, 5, 2), rng.uniform(-math.pi, math.pi), *rng.uniform(0.2, 3, 2))
        g = rect_avoidance((v.lx, v.ly), [rect_ob(o.x, o.y, o.psi, (o.lx, o.ly))])
        assert (g((v.x, v.y, v.psi, 0.0)) < 0) == _corner_condition_direct(v, o)


def test_rect_avoidance_max_over_obstacles():
    obs = [rect_ob(10, 0, half=(0.5, 0.5)), rect_ob(-10, 0, half=(0.5, 0.5))]
    g = rect_avoidance((1, 1), obs)
    assert g(z(-10, 0.2)) > 0 and g(z(10, 0.2)) > 0 and g(z(0, 0)) < 0


def test_disk_avoidance():
    ob = ObstacleSpec(FixedMotion(5, 0), radius=1.0)
    g = disk_avoidance([ob], 2.0)
    assert g(z(2, 0)) == pytest.approx(0)
    assert g(z(-20, 0)) < 0


def test_disk_avoidance_max_aggregation():
    obs = [ObstacleSpec(FixedMotion(50, 0), radius=1.0), ObstacleSpec(FixedMotion(2, 0), radius=1.0)]
    g = disk_avoidance(obs, 1.5)
    # overlaps only the second disk: flagged
    assert math.hypot(2, 0) < 2.5 and g(z(0, 0)) > 0


def test_obstacle_spec_validation():
    with pytest.raises(ValueError):
        ObstacleSpec(FixedMotion(0, 0))
    with pytest.raises(ValueError):
        ObstacleSpec(FixedMotion(0, 0), half_lengths=(1, 0))
    with pytest.raises(ValueError):
        ObstacleSpec(FixedMotion(0, 0), radius=-1)


# -- motions -----------------------------------------------------------------------


def test_linear_motion():
    x, y, psi = motion_pose(LinearMotion(-10, 1.5, 10, 0), 2.0)
    assert (x, y, psi) == pytest.approx((10, 1.5, 0))


def test_decelerating_motion_stops():
    m = DeceleratingMotion(0, 0, 0.0, 5.0, 5.0)
    assert m.pose(1.0)[0] == pytest.approx(2.5)
    assert m.pose(2.0)[0] == pytest.approx(2.5)
    assert m.stop_time == 1.0


def test_circular_motion_frozen_and_tangent():
    m = CircularMotion(0, 0, 10, 0.3, 0.0)
    assert m.pose(0) == m.pose(5)
    m = CircularMotion(0, 0, 10, 0.0, 1.0)
    x, y, psi = m.pose(0.0)
    assert (x, y) == pytest.approx((10, 0)) and psi == pytest.approx(-math.pi / 2)


@pytest.mark.parametrize("m", [FixedMotion(1, 2, 0.5), LinearMotion(0, 1, 2, 3),
                               DeceleratingMotion(0, 0, 1.0, 5, 5), CircularMotion(0, 0, 48, 2.2, -0.1)])
def test_motion_dict_round_trip(m):
    assert motion_from_dict(motion_to_dict(m)) == m


@settings(max_examples=50)
@given(st.floats(0, 10), st.floats(0, 10))
def test_fixed_obstacles_are_time_frozen(s1, s2):
    g = rect_avoidance((1, 1), [rect_ob(-10, -1.5)])
    assert not g.time_dependent
    assert g(z(-8, 0), s1) == g(z(-8, 0), s2)


# -- Lipschitz bounds ------------------------------------------------------------


EXPRESSIONS = {
    "straight": (straight_road(-3.5, 3.5), 1.0),
    "varying": (varying_width_road(3.5, -3.5, -7, -15), 1.0),
    "crossing": (crossing_road(S4_XS, S4_YS), 1.0),
    "target": (target_box(x_min=0, y_min=-3.5, y_max=3.5), 1.0),
    "curved": (curved_road((0, 0), 46.5, 53.5, 0, math.pi), 1.0),
}


@pytest.mark.parametrize("name", sorted(EXPRESSIONS))
def test_empirical_lipschitz(name):
    g, L = EXPRESSIONS[name]
    rng = np.random.default_rng(5)
    if name == "curved":
        # inside the annulus the angular term has slope 1/rho <= 1/r_down
        r = rng.uniform(40, 60, (2, 2000))
        th = rng.uniform(0, math.pi, (2, 2000))
        pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
        L = max(1.0, 1 / 40)
    else:
        pts = rng.uniform(-40, 40, (2, 2, 2000))
    psi = rng.uniform(-1, 1, (2, 2000))
    a = g((pts[0, 0], pts[0, 1], psi[0], 0 * psi[0]))
    b = g((pts[1, 0], pts[1, 1], psi[1], 0 * psi[1]))
    dist = np.sqrt((pts[0, 0] - pts[1, 0]) ** 2 + (pts[0, 1] - pts[1, 1]) ** 2 + (psi[0] - psi[1]) ** 2)
    assert np.all(np.abs(a - b) <= L * dist * math.sqrt(3) + 1e-9)


def test_evaluate_on_grid_broadcasts():
    grid = GridSpec.from_bounds([-5, -5, -1, 5], [5, 5, 1, 65], [5, 6, 3, 2])
    arr = evaluate_on_grid(straight_road(-3.5, 3.5), grid)
    assert arr.shape == grid.shape
    assert arr[0, 0, 0, 0] == pytest.approx(1.5)
