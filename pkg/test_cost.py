# -*- coding: utf-8 -*-
"""
Affine FLOPs model and the analytic attention count.

"""
import itertools
import numpy as np
import pytest
from hypothesis import given, strategies as st

from purepass import cost
from purepass.cost import CostProfile
from purepass.mixer import CategoryPartition


def _rel(a, b):
    return abs(a - b) / abs(b)


def test_calibrate_single_point():
    profile = cost.calibrate([(0.3889, 79.30)], 87.15)
    assert profile.maskable_flops == pytest.approx(20.185, abs=1e-3)
    assert profile.total_flops_full == 87.15


def test_calibrate_with_full_point():
    profile = cost.calibrate([(0.0, 87.15), (0.3171, 80.75)], 87.15)
    assert profile.maskable_flops == pytest.approx(20.18, abs=5e-3)


@given(s=st.floats(min_value=0.01, max_value=80.0))
def test_calibrate_full_masking_recovers_saving(s):
    profile = cost.calibrate([(1.0, 87.15 - s)], 87.15)
    assert profile.maskable_flops == pytest.approx(s, rel=1e-9)


def test_calibrate_needs_nonzero_fraction():
    with pytest.raises(ValueError):
        cost.calibrate([(0.0, 87.15), (0.0, 87.0)])


def test_calibrate_rejects_out_of_range_fraction():
    with pytest.raises(ValueError):
        cost.calibrate([(1.5, 60.0)])


def test_calibrated_triple_predicts_the_rest():
    profile = cost.calibrate([(0.0, 87.15), (0.3889, 79.30)], 87.15)
    assert _rel(cost.predict_flops(profile, 0.3171).predicted_flops, 80.75) < 0.005
    assert _rel(cost.predict_flops(profile, 0.895).predicted_flops, 69.09) < 0.005


def test_any_two_points_predict_the_others():
    for pair in itertools.combinations(cost.PAPER_POINTS, 2):
        profile = cost.fit_affine(pair)
        for p, flops in cost.PAPER_POINTS:
            assert _rel(cost.predict_flops(profile, p).predicted_flops, flops) < 0.005


def test_fit_affine_needs_two_fractions():
    with pytest.raises(ValueError):
        cost.fit_affine([(0.3, 80.0), (0.3, 81.0)])


def test_default_profile_predictions():
    assert cost.predict_flops(cost.DEFAULT_PROFILE, 0.0).predicted_flops == 87.15
    assert cost.predict_flops(cost.DEFAULT_PROFILE, 0.3171).predicted_flops == pytest.approx(80.75, rel=0.005)
    assert cost.predict_flops(cost.DEFAULT_PROFILE, 0.895).predicted_flops == pytest.approx(69.09, rel=0.005)


def test_savings_restated():
    average = cost.predict_flops(cost.DEFAULT_PROFILE, cost.REFERENCE_CORPUS_PURE_FRACTION)
    no_fusion = cost.predict_flops(cost.DEFAULT_PROFILE, 0.3171)
    assert _rel(average.flops_saved, 7.85) < 0.005
    assert _rel(no_fusion.flops_saved, 6.40) < 0.005
    assert average.baseline_flops == 87.15
    assert average.saved_fraction == pytest.approx(average.flops_saved / 87.15)


@given(p=st.floats(min_value=0.0, max_value=1.0))
def test_prediction_bounds(p):
    profile = cost.DEFAULT_PROFILE
    r = cost.predict_flops(profile, p)
    low = profile.total_flops_full - profile.maskable_flops
    assert low - 1e-9 <= r.predicted_flops <= profile.total_flops_full
    assert r.predicted_flops + r.flops_saved == pytest.approx(profile.total_flops_full)


@pytest.mark.parametrize("p", [-0.01, 1.01])
def test_prediction_rejects_out_of_range(p):
    with pytest.raises(ValueError):
        cost.predict_flops(cost.DEFAULT_PROFILE, p)


@pytest.mark.parametrize("kwargs", [dict(total_flops_full=10.0, maskable_flops=10.0),
                                    dict(total_flops_full=10.0, maskable_flops=0.0),
                                    dict(total_flops_full=10.0, maskable_flops=2.0, params=0)])
def test_profile_invariants(kwargs):
    with pytest.raises(ValueError):
        CostProfile(**kwargs)


def test_attention_flops_examples():
    assert cost.attention_flops_count(CategoryPartition(groups=(), group_capacity=4), 8) == 0
    one = CategoryPartition(groups=(np.array([0]),), group_capacity=4)
    assert cost.attention_flops_count(one, 2) == 16


def test_split_groups_count_fewer_flops():
    c = 8
    split = CategoryPartition(groups=(np.arange(2), np.arange(2, 4)), group_capacity=2)
    whole = CategoryPartition(groups=(np.arange(4),), group_capacity=4)
    assert cost.attention_flops_count(split, c) < cost.attention_flops_count(whole, c)
    assert cost.attention_flops_count(whole, c) - cost.attention_flops_count(split, c) == 2 * 16 * c - 2 * 8 * c


def test_attention_flops_head_count_must_divide():
    one = CategoryPartition(groups=(np.array([0]),), group_capacity=4)
    assert cost.attention_flops_count(one, 48, head_count=4) == cost.attention_flops_count(one, 48)
    with pytest.raises(ValueError):
        cost.attention_flops_count(one, 48, head_count=5)


def test_parse_profile_values_and_comments():
    profile = cost.parse_profile("# light model\ntotal_flops_full = 90.0\nmaskable_flops=25  # measured\nparams=800000\n")
    assert profile == CostProfile(total_flops_full=90.0, maskable_flops=25.0, params=800_000)


def test_parse_profile_points_refit():
    profile = cost.parse_profile("point=0.3889,79.30\n")
    assert profile.maskable_flops == pytest.approx(20.185, abs=1e-3)


@pytest.mark.parametrize("text", ["bogus=1\n", "total_flops_full\n", "maskable_flops=abc\n", "point=0.5\n"])
def test_parse_profile_errors_carry_line(text):
    with pytest.raises(ValueError, match="cfg:1"):
        cost.parse_profile(text, source="cfg")


def test_load_profile(tmp_path):
    path = tmp_path / "light.profile"
    path.write_text("total_flops_full=87.15\nmaskable_flops=20.18\n")
    assert cost.load_profile(str(path)) == cost.DEFAULT_PROFILE
    with pytest.raises(OSError):
        cost.load_profile(str(tmp_path / "missing.profile"))


def test_reference_models_present():
    names = [m[0] for m in cost.REFERENCE_MODELS]
    assert len(set(names)) == len(names)
    assert all(params > 0 and flops > 0 for _, params, flops in cost.REFERENCE_MODELS)
