import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from patient_zero.analytic import (DETProfile, PathLengthDist, RBTreeParams, RETParams, boe_success,
                                   class_success_bound, det_path_length_dist, ls_plus_success_lb, ls_success,
                                   p_cond, path_classes, rb_path_class_count, rb_path_count,
                                   rb_path_count_recurrence, ret_expected_profile, ret_expected_size,
                                   ret_path_length_approx, ret_profile_matrix)
from patient_zero.network import ParameterError
from patient_zero.validation import brute_force_class_counts

RB = RBTreeParams(3, 2)


def test_p_cond():
    assert p_cond(0.0, 0.7) == 0.0
    assert p_cond(0.3, 0.0) == pytest.approx(0.3)
    assert p_cond(0.5, 0.5) == pytest.approx(2 / 3)
    with pytest.raises(ParameterError):
        p_cond(0.0, 1.0)


def test_path_count_examples():
    assert rb_path_count(0, RB, exact=True) == 1
    assert rb_path_count(1, RB, exact=True) == 5
    assert rb_path_count(2, RB, exact=True) == 18
    assert rb_path_count(2, RB) == pytest.approx(18)


def test_class_count_examples():
    assert rb_path_class_count(0, 1, 0, 0, RB) == 1
    assert rb_path_class_count(1, 0, 1, 1, RB) == RB.d_h
    assert rb_path_class_count(1, 2, 0, 0, RB) == RB.d_c
    assert rb_path_class_count(4, 4, 0, 0, RB) == 0  # same parity as n


@pytest.mark.parametrize("d_c,d_h", [(3, 2), (2, 1), (1, 2)])
def test_class_counts_match_enumeration(d_c, d_h):
    rb = RBTreeParams(d_c, d_h)
    for n in range(6):
        counts = brute_force_class_counts(d_c, d_h, n)
        for k, a, b in path_classes(n):
            assert counts.get((k, a, b), 0) == rb_path_class_count(n, k, a, b, rb)
        assert sum(counts.values()) == rb_path_count_recurrence(n, rb)


def test_ls_success_examples():
    assert ls_success(PathLengthDist(np.array([0.2, 0.3, 0.5])), 0.0) == pytest.approx(1.0)
    assert ls_success(PathLengthDist.point(0), 0.6) == 1.0
    assert ls_success(PathLengthDist.point(2), 1 / 3) == pytest.approx(4 / 9)


def test_ls_plus_bound_examples():
    dist = PathLengthDist(np.array([0.1, 0.2, 0.3, 0.2, 0.2]))
    assert ls_plus_success_lb(dist, 0.0, RB) == pytest.approx(1.0)
    assert ls_plus_success_lb(PathLengthDist.point(0), 0.4, RB) == 1.0
    assert ls_plus_success_lb(PathLengthDist.point(1), 0.4, RB) == pytest.approx(0.6)


def test_bound_is_composition_of_class_counts_and_class_bounds():
    p = 0.37
    for n in range(2, 12):
        composed = sum(rb_path_class_count(n, k, a, b, RB) * class_success_bound(n, k, a, b, p)
                       for k, a, b in path_classes(n)) / rb_path_count_recurrence(n, RB)
        assert ls_plus_success_lb(PathLengthDist.point(n), p, RB) == pytest.approx(composed)


def test_swapped_exponent_form_disagrees():
    """The alternative exponent does not reproduce the class composition."""
    dist = PathLengthDist.point(6)
    assert not math.isclose(ls_plus_success_lb(dist, 0.3, RB, swapped=True),
                            ls_plus_success_lb(dist, 0.3, RB), rel_tol=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=14), st.floats(0, 1), st.floats(0, 1))
def test_success_formulas_nonincreasing_in_p(weights, p1, p2):
    w = np.array(weights)
    if w.sum() == 0:
        return
    dist = PathLengthDist(w / w.sum())
    lo, hi = sorted((p1, p2))
    assert ls_success(dist, hi) <= ls_success(dist, lo) + 1e-12
    assert ls_plus_success_lb(dist, hi, RB) <= ls_plus_success_lb(dist, lo, RB) + 1e-12
    assert ls_success(dist, lo) <= ls_plus_success_lb(dist, lo, RB) + 1e-12


def test_ret_profile_examples():
    ret = RETParams(5, 4, 0.271)
    assert ret_expected_profile(7, 0, ret) == 1.0
    assert ret_expected_profile(3, 4, ret) == 0.0
    assert ret_expected_profile(1, 1, ret) == pytest.approx(5 * 0.271)
    assert ret_expected_size(0, ret) == 1.0
    assert ret_expected_size(1, ret) == pytest.approx(1 + 5 * 0.271)
    for t in range(21):
        assert ret_expected_size(t, ret) == pytest.approx(sum(ret_expected_profile(t, l, ret) for l in range(t + 1)),
                                                          abs=1e-9)
    a = ret_profile_matrix(12, ret)
    for t in range(13):
        for l in range(13):
            assert a[t, l] == pytest.approx(ret_expected_profile(t, l, ret), abs=1e-9)


def test_ret_size_degree_one_limit():
    ret = RETParams(3, 1, 0.2)
    assert ret_expected_size(5, ret) == pytest.approx(1 + 3 * 0.2 * 5)
    near = RETParams(3, 1 + 1e-7, 0.2)
    assert ret_expected_size(5, near) == pytest.approx(ret_expected_size(5, ret), rel=1e-5)


def test_det_toy_profile():
    c = np.array([[1, 0], [1, 1], [1, 2], [1, 3]], dtype=float)
    q = 0.5 * 0.4
    s = 1 - q
    dist = det_path_length_dist(DETProfile(c), 0.5, 0.4)
    assert dist[0] == pytest.approx(q)
    assert dist[1] == pytest.approx(q * (s + s ** 2 + s ** 3))


def test_det_certain_hospitalization_and_validation():
    c = np.array([[1, 0], [1, 2]], dtype=float)
    assert det_path_length_dist(DETProfile(c), 0.0, 1.0)[0] == 1.0
    with pytest.raises(ValueError):
        DETProfile(np.array([[1, 0], [1, 0]], dtype=float))
    with pytest.raises(ValueError):
        DETProfile(np.array([[2, 0], [2, 1]], dtype=float))


def test_det_from_ret_is_a_distribution():
    ret = RETParams.from_model(3, 2, 0.1, 3, 0.5, 0.2)
    assert (ret.d_r, ret.d) == (5, 4)
    assert ret.p_i == pytest.approx(0.271)
    dist = ret_path_length_approx(ret)
    assert np.all(dist.pmf >= 0)
    assert 1 - 1e-6 <= dist.total <= 1 + 1e-6
    # near-certain hospitalization stops at the root
    assert ret_path_length_approx(RETParams(5, 4, 0.271, 0.0, 0.999))[0] > 0.99


def test_boe_examples():
    assert boe_success(4, 0.3, 0.0, 0.2) == pytest.approx(1.0)
    assert boe_success(4, 0.3, 1.0, 0.2) == 0.0
    # re-derived by hand: q = 1/2, exponent log 5 / log 2, inner base 3/4
    expected = 0.5 * (0.5 + 0.5 * 0.75 ** (math.log(5) / math.log(2)))
    assert boe_success(2, 0.5, 0.5, 0.5) == pytest.approx(expected)
    assert boe_success(2, 0.5, 0.5, 0.5) == pytest.approx(0.3782, abs=1e-4)
