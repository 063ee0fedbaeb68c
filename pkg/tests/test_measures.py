import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gctypical.classes import (AllFunctions, Balls, BoundedLipschitz, Composed, ConvexHull, HalfLines,
                               Halfspaces, IncompatibleClassError, Intervals, Rectangles, VoronoiCells,
                               class_from_json, class_to_json, eval_member, vc_dimension)
from gctypical.measures import (FINITE, VECTOR, DiscreteMeasure, ModelMeasure, SignedDifference,
                                empirical_measure, from_weighted_points, loads, dumps, measure_from_json,
                                merge, model_from_json, pmf, point_mass, uniform_box, uniform_pmf)


# ---------------------------------------------------------------------------
# empirical measures


def test_constant_tuple_gives_single_atom():
    m = empirical_measure(["a", "a", "a", "a"])
    assert m.as_dict() == {"a": 1.0}


def test_binary_counts():
    assert empirical_measure([0, 1, 0, 1]).as_dict() == {0: 0.5, 1: 0.5}


def test_multiplicities_in_r1():
    m = empirical_measure([[0.0], [0.0], [1.0]])
    assert m.kind == VECTOR and m.dim == 1
    assert m.mass([0.0]) == pytest.approx(2 / 3, abs=1e-15)
    assert m.mass([1.0]) == pytest.approx(1 / 3, abs=1e-15)


@pytest.mark.parametrize("bad", [[], [0, [0.5, 1.0]], [[0.0], [0.0, 1.0]]])
def test_rejects_empty_or_mixed(bad):
    with pytest.raises((ValueError, TypeError)):
        empirical_measure(bad)


def test_float_array_is_vector_and_int_array_is_symbols():
    assert empirical_measure(np.array([0.1, 0.2])).kind == VECTOR
    assert empirical_measure(np.array([1, 2, 2])).kind == FINITE


@given(st.lists(st.integers(0, 4), min_size=1, max_size=40))
def test_empirical_weights_are_frequencies(z):
    m = empirical_measure(z)
    assert math.isclose(math.fsum(m.weights), 1.0, abs_tol=1e-12)
    for s, w in m.as_dict().items():
        assert w == pytest.approx(z.count(s) / len(z), abs=1e-15)


# ---------------------------------------------------------------------------
# validation


def test_weights_must_sum_to_one():
    with pytest.raises(ValueError):
        DiscreteMeasure(FINITE, (0, 1), [0.5, 0.6])


def test_support_must_be_distinct():
    with pytest.raises(ValueError):
        DiscreteMeasure(FINITE, (0, 0), [0.5, 0.5])
    with pytest.raises(ValueError):
        DiscreteMeasure(VECTOR, [[0.0, 1.0], [0.0, 1.0]], [0.5, 0.5])


def test_negative_weight_rejected():
    with pytest.raises(ValueError):
        DiscreteMeasure(FINITE, (0, 1), [1.5, -0.5])


def test_pmf_drops_zero_entries_and_sorts():
    m = pmf({"b": 0.25, "a": 0.75, "c": 0.0})
    assert m.support == ("a", "b")


def test_from_weighted_points_aggregates_duplicates():
    m = from_weighted_points(VECTOR, [[1.0], [0.0], [1.0]], [0.2, 0.3, 0.5])
    assert m.mass([1.0]) == pytest.approx(0.7)


def test_projection_of_product_symbols():
    m = pmf({(0, 0): 0.25, (0, 1): 0.25, (1, 1): 0.5})
    assert m.project([0]).as_dict() == {0: 0.5, 1: 0.5}
    assert m.project([1]).as_dict() == {0: 0.25, 1: 0.75}


def test_merge_signed_weights():
    pts, c = merge(pmf({0: 0.5, 1: 0.5}), pmf({1: 0.25, 2: 0.75}))
    assert pts == (0, 1, 2)
    np.testing.assert_allclose(c, [0.5, 0.25, -0.75])


def test_models():
    box = uniform_box([0, 0], [1, 2])
    assert box.nonatomic and box.dim == 2 and box.point_kind == VECTOR
    with pytest.raises(ValueError):
        uniform_box([0], [0])
    with pytest.raises(ValueError):
        ModelMeasure("pmf", measure=uniform_pmf([0, 1]), nonatomic=True)
    ref = ModelMeasure("reference", measure=empirical_measure(np.linspace(0, 1, 50)), nonatomic=True)
    assert ref.reference_size == 50
    assert box.project([1]).high.tolist() == [2.0]


def test_signed_difference_checks_kinds():
    with pytest.raises(ValueError):
        SignedDifference(uniform_pmf([0, 1]), point_mass([0.5]))
    with pytest.raises(ValueError):
        SignedDifference(point_mass([0.5]), uniform_box([0, 0], [1, 1]))


# ---------------------------------------------------------------------------
# JSON


@given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6)), min_size=1, max_size=15, unique=True),
       st.integers(0, 2 ** 31))
def test_vector_json_round_trip(points, seed):
    w = np.random.default_rng(seed).random(len(points)) + 0.01
    m = from_weighted_points(VECTOR, points, w)
    back = loads(dumps(m))
    np.testing.assert_array_equal(back.support, m.support)
    assert np.max(np.abs(back.weights - m.weights)) <= 1e-15


def test_finite_json_round_trip_with_tuple_symbols():
    m = pmf({(0, 1): 0.3, (1, 0): 0.7})
    back = measure_from_json(json.loads(json.dumps(m.to_json())))
    assert back.as_dict() == m.as_dict()


def test_model_json_round_trip():
    box = uniform_box([0], [3])
    assert model_from_json(box.to_json()).high.tolist() == [3.0]
    ref = ModelMeasure("reference", measure=empirical_measure(np.linspace(0, 1, 5)), nonatomic=True)
    back = loads(dumps(ref))
    assert back.kind == "reference" and back.nonatomic


# ---------------------------------------------------------------------------
# classes


def test_eval_member_examples():
    assert eval_member(Halfspaces(2), ((1, 0), 0), (2, 5)) == 1.0
    assert eval_member(HalfLines(), (0.5, "left"), 0.7) == 0.0
    assert eval_member(Balls(2), ((0, 0), 1.0), (1, 0)) == 1.0


def test_eval_member_other_classes():
    assert eval_member(Rectangles(2), ((0, 0), (1, 1)), (1, 0.5)) == 1.0
    assert eval_member(Intervals(), (0, 1), 1.5) == 0.0
    assert eval_member(VoronoiCells(2, 1), ([[0.0], [1.0]], 0), 0.5) == 1.0  # closed cells share the bisector
    assert eval_member(AllFunctions(), {"a": -0.5}, "a") == -0.5
    F = ConvexHull((0, 1), np.array([[1.0, 0.0], [0.0, -1.0]]))
    assert eval_member(F, [0.5, 0.5], 1) == -0.5
    assert eval_member(BoundedLipschitz(), lambda z: 0.3 * z[0], [1.0]) == pytest.approx(0.3)
    assert eval_member(Composed(HalfLines(), (1,)), (0.5, "left"), (9.0, 0.2)) == 1.0


@pytest.mark.parametrize("F,params,z", [
    (Halfspaces(2), ((1, 0, 0), 0), (0, 0)),
    (Balls(2), ((0, 0), -1.0), (0, 0)),
    (HalfLines("left"), (0.0, "right"), 0.0),
    (AllFunctions(), {"a": 2.0}, "a"),
    (ConvexHull((0,), np.array([[1.0], [1.0]])), [0.8, 0.8], 0),
])
def test_eval_member_rejects_invalid_params(F, params, z):
    with pytest.raises(ValueError):
        eval_member(F, params, z)


def test_vc_dimensions_of_classical_classes():
    assert vc_dimension(Halfspaces(2)) == 3
    assert vc_dimension(Rectangles(2)) == 4
    assert vc_dimension(Balls(3)) == 4
    assert vc_dimension(HalfLines("left")) == 1
    assert vc_dimension(AllFunctions()) is None


@pytest.mark.parametrize("F", [
    AllFunctions(), HalfLines("right"), Intervals(), Halfspaces(3), Rectangles(1), Balls(2),
    VoronoiCells(3, 2), BoundedLipschitz("max"),
    ConvexHull(((0, 0), (0, 1)), np.array([[0.5, -1.0]])),
    Composed(Halfspaces(1), (0,)),
])
def test_class_json_round_trip(F):
    assert class_from_json(json.loads(json.dumps(class_to_json(F)))) == F


def test_class_parameters_validated():
    with pytest.raises(ValueError):
        Halfspaces(0)
    with pytest.raises(ValueError):
        HalfLines("up")
    with pytest.raises(ValueError):
        ConvexHull((0, 1), np.array([[2.0, 0.0]]))
    with pytest.raises(ValueError):
        class_from_json({"class": "nope"})


def test_incompatible_class_is_a_value_error():
    assert issubclass(IncompatibleClassError, ValueError)
