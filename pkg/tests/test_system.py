import math

import numpy as np
import pytest

from cyclicprox.engine import SelectionStrategy, run_trajectory
from cyclicprox.geometry import Region, hausdorff, point_to_set_distance, sample
from cyclicprox.order import OrderRelation, OrderThresholds
from cyclicprox.system import (
    FAIL,
    PASS,
    VACUOUS,
    AffinePiece,
    CyclicSystem,
    MultiMap,
    OutsideUnionError,
    apply,
    check_assumption3,
    check_assumption4,
    check_assumption5,
    check_assumption7,
    check_containment,
    check_contraction,
    composite_apply,
    subset_index,
)

from conftest import intersecting_system, two_interval_system

CW = OrderRelation("componentwise")


def T_two_interval(x, k=0.5):
    """Hand-written two-interval map, independent of the package."""
    return 2 + k * (1 - x) if x <= 1 else 1 - k * (x - 2)


# -- construction ----------------------------------------------------------

def test_distances_cached(two_interval):
    assert two_interval.D == (1.0, 1.0)
    assert two_interval.D_max == 1.0
    assert two_interval.k == 0.25
    assert intersecting_system().D == (0.0, 0.0)


def test_product_of_constants_rejected():
    with pytest.raises(ValueError, match="product of constants >= 1"):
        two_interval_system(k=1.0)


def test_individual_constant_may_exceed_one():
    pieces = [AffinePiece.make([2.0], -0.5, [1.0]), AffinePiece.make([1.0], -0.5, [2.0])]
    sys = CyclicSystem((Region.interval(0, 1), Region.interval(2, 3)), MultiMap.affine(pieces), (1.5, 0.5))
    assert sys.k == 0.75


def test_bad_constructions():
    A = Region.interval(0, 1)
    piece = AffinePiece.make([0.5], 0.0, [0.0])
    with pytest.raises(ValueError):
        CyclicSystem((A, A), MultiMap.affine([piece]), (0.5, 0.5))
    with pytest.raises(ValueError):
        CyclicSystem((A, A), MultiMap.affine([piece, piece]), (0.5,))
    with pytest.raises(ValueError):
        CyclicSystem((A, Region.box([0, 0], [1, 1])), MultiMap.affine([piece, piece]), (0.5, 0.5))
    with pytest.raises(ValueError):
        AffinePiece.make([0.0], 1.0, [0.0], radius=-1)


# -- membership and application ------------------------------------------------

def test_subset_index_examples(two_interval, intersecting):
    assert subset_index(two_interval, [0.5]) == 1
    assert subset_index(two_interval, [2.5]) == 2
    assert subset_index(intersecting, [0.5]) == 1
    with pytest.raises(OutsideUnionError, match="outside cyclic union"):
        subset_index(two_interval, [1.5])


def test_apply_examples(two_interval):
    image, target = apply(two_interval, [1.0])
    assert target == 2
    np.testing.assert_array_equal(image.points, [[2.0]])
    # the construction maps A1 into A2: brute force on a fine grid
    for x in np.linspace(0, 1, 1001):
        assert 2 <= T_two_interval(x) <= 3
        assert 0 <= T_two_interval(x + 2) <= 1
    with pytest.raises(OutsideUnionError):
        apply(two_interval, [1.5])


def test_ball_valued_zero_radius_is_affine():
    pieces = [AffinePiece.make([2.0], -0.5, [1.0]), AffinePiece.make([1.0], -0.5, [2.0])]
    A = (Region.interval(0, 1), Region.interval(2, 3))
    a = CyclicSystem(A, MultiMap.affine(pieces), (0.5, 0.5))
    b = CyclicSystem(A, MultiMap.ball_valued(pieces), (0.5, 0.5))
    for x in np.linspace(0, 1, 7):
        ia, ib = apply(a, [x])[0], apply(b, [x])[0]
        assert hausdorff(ia, ib) == 0


def test_table_map_lookup():
    A = Region.cloud([[0.0], [1.0]])
    B = Region.cloud([[3.0], [4.0]])
    m = MultiMap.table([(1, [0.0], [[3.0], [4.0]]), (1, [1.0], [3.0]), (2, [3.0], [1.0]), (2, [4.0], [0.0])])
    sys = CyclicSystem((A, B), m, (0.5, 0.5))
    image, target = apply(sys, [0.0])
    assert target == 2
    np.testing.assert_array_equal(image.points, [[3.0], [4.0]])
    np.testing.assert_array_equal(apply(sys, [4.0])[0].points, [[0.0]])
    with pytest.raises(KeyError):
        sys.mapping.image(1, np.array([0.5]))
    with pytest.raises(ValueError):
        MultiMap.table([(1, [0.0], np.empty((0, 1)))])


def test_composite_apply_examples(two_interval):
    # 0.5 -> 2.25 -> 1 - 0.5 * 0.25
    assert composite_apply(two_interval, [0.5], 2)[0] == pytest.approx(T_two_interval(T_two_interval(0.5)))
    assert composite_apply(two_interval, [0.5], 2)[0] == pytest.approx(0.875)
    np.testing.assert_array_equal(composite_apply(two_interval, [0.3], 0), [0.3])
    # T^2 x = 1 - k^2 (1 - x) on A1 has the fixed point 1
    assert composite_apply(two_interval, [1.0], 2)[0] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        composite_apply(two_interval, [0.5], -1)


def test_composite_apply_returns_to_start_subset(shipped):
    sys = shipped.system
    for i, A in enumerate(sys.subsets, start=1):
        for x in sample(A, 20, 1):
            z = composite_apply(sys, x, sys.p, index=i)
            assert point_to_set_distance(z, A) <= 1e-9 or shipped.name == "violating"


# -- containment ---------------------------------------------------------------

def test_shipped_containment(shipped):
    """Sampled image points of 500 samples per subset stay in the successor."""
    sys = shipped.system
    worst = 0.0
    for i in range(1, sys.p + 1):
        nxt = sys.subset(sys.next_index(i))
        for x in sample(sys.subset(i), 500, 0):
            img = sys.mapping.image(i, x)
            for y in sample(img, 16, 2):
                worst = max(worst, point_to_set_distance(y, nxt))
    assert worst <= 1e-9
    assert check_containment(sys).status == PASS


def test_containment_detects_escape():
    pieces = [AffinePiece.make([2.0], -2.0, [1.0]), AffinePiece.make([1.0], -0.5, [2.0])]
    sys = CyclicSystem((Region.interval(0, 1), Region.interval(2, 3)), MultiMap.affine(pieces), (0.5, 0.5))
    v = check_containment(sys, samples_per_subset=11)
    assert v.status == FAIL
    assert v.witness["subset"] == 1 and v.witness["excess"] == pytest.approx(1.0)


# -- contraction ---------------------------------------------------------------

def test_two_interval_equality_case(two_interval):
    v = check_contraction(two_interval, CW, samples_per_subset=100)
    assert v.status == PASS
    assert abs(v.margin) <= 1e-9
    # independent brute force on a 100-point grid
    xs = np.linspace(0, 1, 100)
    ys = np.linspace(2, 3, 100)
    for x in xs:
        for y in ys:
            slack = 0.5 * abs(x - y) + 0.5 * 1.0 - abs(T_two_interval(x) - T_two_interval(y))
            assert abs(slack) <= 1e-9


def test_constant_map_has_nonnegative_slack():
    A = Region.interval(0, 1)
    piece = AffinePiece.make([0.3], 0.0, [0.0])
    sys = CyclicSystem((A,), MultiMap.affine([piece]), (0.9,))
    v = check_contraction(sys, CW, samples_per_subset=50)
    assert v.status == PASS and v.margin >= 0


def test_violating_map_fails_with_witness():
    pieces = [AffinePiece.make([2.0], -2.0, [1.0]), AffinePiece.make([1.0], -0.5, [2.0])]
    sys = CyclicSystem((Region.interval(0, 1), Region.interval(2, 4)), MultiMap.affine(pieces), (0.5, 0.5))
    v = check_contraction(sys, CW, samples_per_subset=50)
    assert v.status == FAIL
    x, y = v.witness["x"][0], v.witness["y"][0]
    Tx = 2 + 2 * (1 - x) if x <= 1 else 1 - 0.5 * (x - 2)
    Ty = 2 + 2 * (1 - y) if y <= 1 else 1 - 0.5 * (y - 2)
    i = v.witness["subset"]
    assert 0.5 * abs(x - y) + 0.5 * sys.D[i - 1] - abs(Tx - Ty) < 0


def test_contraction_vacuous_without_ordered_pairs():
    # the boxes sit north-west and south-east of each other: no point of one
    # is componentwise below a point of the other
    A, B = Region.box([0, 2], [1, 3]), Region.box([2, 0], [3, 1])
    pieces = [AffinePiece.make([2.5, 0.5], 0.0, [0, 0]), AffinePiece.make([0.5, 2.5], 0.0, [0, 0])]
    sys = CyclicSystem((A, B), MultiMap.affine(pieces), (0.5, 0.5))
    v = check_contraction(sys, CW, samples_per_subset=20)
    assert v.status == VACUOUS and not v.passed


# -- seed pair and thresholds ------------------------------------------------------

def test_seed_pair_examples(two_interval, intersecting):
    v = check_assumption3(two_interval, OrderThresholds(1.5, (1.5, 1.5)))
    assert v.status == PASS
    assert v.witness["x"] == [1.0] and v.witness["y"] == [2.0]
    assert check_assumption3(two_interval, OrderThresholds(1.5, (0.5, 0.5))).status == FAIL
    assert check_assumption3(intersecting, OrderThresholds(1.0, (0.01, 0.01))).status == PASS


def test_threshold_examples(two_interval):
    v = check_assumption4(two_interval, OrderThresholds(1.5, (1.5, 1.5)))
    assert v.status == PASS and v.margin == pytest.approx(0.0)
    assert check_assumption4(two_interval, OrderThresholds(1.49, (1.5, 1.5))).status == FAIL
    # d0j = D_j collapses the requirement to max d0j
    assert check_assumption4(two_interval, OrderThresholds(1.0, (1.0, 1.0))).status == PASS
    assert check_assumption4(two_interval, OrderThresholds(0.999, (1.0, 1.0))).status == FAIL


def test_threshold_formula_by_hand():
    pieces = [AffinePiece.make([2.0], -0.5, [1.0]), AffinePiece.make([1.0], -0.2, [2.0])]
    sys = CyclicSystem((Region.interval(0, 1), Region.interval(2, 3)), MultiMap.affine(pieces), (3.0, 0.2))
    t = OrderThresholds(1.0, (1.5, 1.2))
    required = max(1.5, 1.2, 3.0 * (1.5 - 1) + 1, 0.2 * (1.2 - 1) + 1)
    assert check_assumption4(sys, t).margin == pytest.approx(1.0 - required)


def test_strong_threshold_examples(two_interval):
    assert check_assumption5(two_interval, OrderThresholds(2.1, (1.5, 1.5))).status == PASS
    v = check_assumption5(two_interval, OrderThresholds(2.0, (1.5, 1.5)))
    assert v.status == FAIL and v.margin == pytest.approx(0.0)


def test_strong_threshold_singletons():
    A, B = Region.singleton([0.0]), Region.singleton([1.0])
    pieces = [AffinePiece.make([1.0], 0.0, [0.0]), AffinePiece.make([0.0], 0.0, [1.0])]
    sys = CyclicSystem((A, B), MultiMap.affine(pieces), (0.5, 0.5))
    t = OrderThresholds(1.3, (1.5, 1.5))
    # diam = 0 so the spread term is just D = 1; the k term is 0.5 * 0.5 + 1
    assert check_assumption5(sys, t).margin == pytest.approx(1.3 - 1.25)


def test_threshold_length_mismatch(two_interval):
    with pytest.raises(ValueError):
        check_assumption4(two_interval, OrderThresholds(1.5, (1.5,)))


# -- limit comparability -------------------------------------------------------------

def _run(sys, x0, max_steps=10_000):
    return run_trajectory(sys, CW, OrderThresholds(1.5, (1.5,) * sys.p), SelectionStrategy(), [x0],
                          max_steps=max_steps)


def test_limit_comparability_intersecting(intersecting):
    assert check_assumption7(intersecting, CW, _run(intersecting, 0.9)).status == PASS


def test_limit_comparability_collapsing_map():
    A = Region.interval(0, 1)
    piece = AffinePiece.make([0.5], 0.0, [0.0])
    sys = CyclicSystem((A, A), MultiMap.affine([piece, piece]), (0.5, 0.5))
    traj = _run(sys, 0.1)
    v = check_assumption7(sys, CW, traj)
    assert v.status == FAIL
    assert v.witness["x"] == [0.1]
    assert v.margin == pytest.approx(-0.5 * 0.4)


def test_limit_comparability_skips_the_limit_itself(intersecting):
    traj = _run(intersecting, 0.0)
    v = check_assumption7(intersecting, CW, traj)
    assert v.status == PASS and v.checked == 0


def test_limit_comparability_needs_convergence(two_interval):
    traj = _run(two_interval, 0.0, max_steps=4)
    assert not traj.converged
    with pytest.raises(ValueError):
        check_assumption7(two_interval, CW, traj)


def test_limit_comparability_equality_case(two_interval):
    # the affine equality case meets the strict inequality with zero gap
    v = check_assumption7(two_interval, CW, _run(two_interval, 0.0))
    assert v.status == FAIL
    assert abs(v.margin) <= 1e-12
