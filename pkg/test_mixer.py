# -*- coding: utf-8 -*-
"""
Category grouping, grouped attention and the pure-pass splice.

"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from purepass import classify, mixer, cost
from purepass.masks import PurityMask
from purepass.mixer import TokenField, MixerWeights, MixerTrace


def _one_hot(categories, m=None):
    categories = np.asarray(categories)
    m = m or int(categories.max()) + 1
    return np.eye(m)[categories]


def _random_field(rng, n, c, m=6):
    return TokenField(tokens=rng.standard_normal((n, c)), similarity=rng.standard_normal((n, m)))


def _naive_attention(x, weights):
    """ dense attention written out head by head """
    n, c = x.shape
    h = weights.head_count
    d = c // h
    q, k, v = x @ weights.w_q, x @ weights.w_k, x @ weights.w_v
    out = np.zeros((n, c))
    for head in range(h):
        sl = slice(head * d, (head + 1) * d)
        for i in range(n):
            logits = (k[:, sl] @ q[i, sl]) / np.sqrt(d)
            p = np.exp(logits - logits.max())
            p /= p.sum()
            out[i, sl] = p @ v[:, sl]
    return out


def _naive_groups(field, selected, capacity):
    cats = [int(np.argmax(field.similarity[i])) for i in selected]
    order = [i for _, i in sorted(zip(cats, selected))]
    return [order[s:s + capacity] for s in range(0, len(order), capacity)]


def _naive_pure_pass(field, mask, bypass, weights, capacity):
    flat = mask.values.ravel()
    hard = [i for i in range(field.token_count) if flat[i] == 1]
    out = np.array(bypass, dtype=np.float64)
    for group in _naive_groups(field, hard, capacity):
        out[group] = _naive_attention(field.tokens[group], weights)
    return out


def test_categorize_runs_match_capacity():
    field = TokenField(tokens=np.zeros((4, 2)), similarity=_one_hot([0, 0, 1, 1]))
    part = mixer.categorize(field, None, 2)
    assert [g.tolist() for g in part.groups] == [[0, 1], [2, 3]]


def test_categorize_sorts_by_category_then_index():
    field = TokenField(tokens=np.zeros((3, 2)), similarity=_one_hot([1, 0, 1]))
    part = mixer.categorize(field, None, 4)
    assert [g.tolist() for g in part.groups] == [[1, 0, 2]]


def test_categorize_empty_selection():
    field = TokenField(tokens=np.zeros((3, 2)), similarity=_one_hot([1, 0, 1]))
    part = mixer.categorize(field, np.array([], dtype=np.int64), 4)
    assert len(part) == 0
    assert part.indices().size == 0


def test_categorize_similarity_ties_take_smallest_category():
    field = TokenField(tokens=np.zeros((2, 2)), similarity=np.array([[1.0, 1.0], [0.0, 2.0]]))
    part = mixer.categorize(field, None, 1)
    assert [g.tolist() for g in part.groups] == [[0], [1]]


def test_categorize_groups_full_except_last():
    rng = np.random.default_rng(0)
    field = _random_field(rng, 37, 4)
    part = mixer.categorize(field, None, 8)
    assert part.sizes() == [8, 8, 8, 8, 5]
    assert sorted(part.indices().tolist()) == list(range(37))


def test_categorize_rejects_bad_capacity_and_indices():
    field = _random_field(np.random.default_rng(1), 4, 2)
    with pytest.raises(ValueError):
        mixer.categorize(field, None, 0)
    with pytest.raises(ValueError):
        mixer.categorize(field, np.array([0, 4]), 2)


def test_token_field_rows_must_agree():
    with pytest.raises(ValueError):
        TokenField(tokens=np.zeros((3, 2)), similarity=np.zeros((4, 2)))


def test_default_head_count():
    assert mixer.default_head_count(48) == 4
    assert mixer.default_head_count(8) == 1
    assert mixer.default_head_count(16) == 2
    assert mixer.default_head_count(3) == 1


def test_weights_must_split_into_heads():
    w = np.eye(6)
    with pytest.raises(ValueError):
        MixerWeights(w_q=w, w_k=w, w_v=w, head_count=4)


def test_single_token_group_is_value_projection():
    rng = np.random.default_rng(2)
    field = _random_field(rng, 1, 8)
    weights = MixerWeights.random(8, head_count=2, seed=3)
    part = mixer.categorize(field, None, 4)
    out = mixer.grouped_msa(field, part, weights)
    np.testing.assert_allclose(out, field.tokens @ weights.w_v, rtol=1e-12)


def test_zero_logits_average_the_group():
    rng = np.random.default_rng(3)
    field = TokenField(tokens=rng.standard_normal((5, 4)), similarity=np.zeros((5, 1)))
    z = np.zeros((4, 4))
    weights = MixerWeights(w_q=z, w_k=z, w_v=np.eye(4), head_count=2)
    out = mixer.grouped_msa(field, mixer.categorize(field, None, 8), weights)
    np.testing.assert_allclose(out, np.tile(field.tokens.mean(axis=0), (5, 1)), rtol=1e-12, atol=1e-15)


def test_three_token_group_matches_dense_oracle():
    rng = np.random.default_rng(4)
    field = _random_field(rng, 3, 8)
    weights = MixerWeights.random(8, head_count=2, seed=5)
    out = mixer.grouped_msa(field, mixer.categorize(field, None, 4), weights)
    np.testing.assert_allclose(out, _naive_attention(field.tokens, weights), rtol=1e-9, atol=1e-12)


def test_non_finite_projection_raises():
    field = TokenField(tokens=np.full((2, 2), 1e200), similarity=np.zeros((2, 1)))
    w = np.full((2, 2), 1e200)
    weights = MixerWeights(w_q=w, w_k=w, w_v=w, head_count=1)
    with pytest.raises(FloatingPointError):
        mixer.grouped_msa(field, mixer.categorize(field, None, 2), weights)


def test_score_overflow_raises():
    # projections stay finite, q @ k^T does not
    field = TokenField(tokens=np.full((2, 2), 1e155), similarity=np.zeros((2, 1)))
    eye = np.eye(2)
    weights = MixerWeights(w_q=eye, w_k=eye, w_v=eye, head_count=1)
    with pytest.raises(FloatingPointError):
        mixer.grouped_msa(field, mixer.categorize(field, None, 2), weights)


def test_score_overflow_never_reaches_pure_pass_output():
    field = TokenField(tokens=np.full((4, 2), 1e155), similarity=np.zeros((4, 1)))
    eye = np.eye(2)
    weights = MixerWeights(w_q=eye, w_k=eye, w_v=eye, head_count=1)
    mask = PurityMask(np.array([[1, 1], [0, 0]], dtype=np.uint8))
    with pytest.raises(FloatingPointError):
        mixer.pure_pass_ac_msa(field, mask, np.zeros((4, 2)), weights)


def test_all_hard_mask_equals_full_path():
    rng = np.random.default_rng(5)
    field = _random_field(rng, 16, 8)
    weights = MixerWeights.random(8, seed=1)
    mask = PurityMask(np.ones((4, 4), dtype=np.uint8))
    out = mixer.pure_pass_ac_msa(field, mask, rng.standard_normal((16, 8)), weights, capacity=5)
    np.testing.assert_allclose(out, mixer.full_ac_msa(field, weights, capacity=5), rtol=1e-12, atol=0)


def test_all_pure_mask_returns_bypass():
    rng = np.random.default_rng(6)
    field = _random_field(rng, 16, 8)
    bypass = rng.standard_normal((16, 8))
    mask = PurityMask(np.zeros((4, 4), dtype=np.uint8))
    trace = MixerTrace.for_tokens(16)
    out = mixer.pure_pass_ac_msa(field, mask, bypass, MixerWeights.random(8), trace=trace)
    np.testing.assert_array_equal(out, bypass)
    assert trace.score_entries == 0
    assert trace.groups == 0


def test_mixed_mask_matches_row_splice_oracle():
    rng = np.random.default_rng(7)
    field = _random_field(rng, 16, 8, m=3)
    bypass = rng.standard_normal((16, 8))
    weights = MixerWeights.random(8, head_count=2, seed=9)
    mask = PurityMask((rng.random((4, 4)) < 0.5).astype(np.uint8))
    out = mixer.pure_pass_ac_msa(field, mask, bypass, weights, capacity=3)
    expected = _naive_pure_pass(field, mask, bypass, weights, 3)
    np.testing.assert_allclose(out, expected, rtol=1e-9, atol=1e-12)


def test_every_row_written_once():
    rng = np.random.default_rng(8)
    field = _random_field(rng, 64, 8)
    mask = PurityMask((rng.random((8, 8)) < 0.3).astype(np.uint8))
    trace = MixerTrace.for_tokens(64)
    mixer.pure_pass_ac_msa(field, mask, rng.standard_normal((64, 8)), MixerWeights.random(8), capacity=7, trace=trace)
    assert np.all(trace.row_writes == 1)
    assert trace.score_entries == sum(n * n for n in trace.group_sizes)


def test_uncompensated_pure_rows_are_zero():
    rng = np.random.default_rng(10)
    field = _random_field(rng, 9, 8)
    mask = PurityMask(np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=np.uint8))
    out = mixer.pure_pass_ac_msa(field, mask, rng.standard_normal((9, 8)), MixerWeights.random(8), compensate=False)
    pure = np.flatnonzero(mask.values.ravel() == 0)
    assert not np.any(out[pure])


def test_shape_mismatch_rejected():
    rng = np.random.default_rng(11)
    field = _random_field(rng, 9, 8)
    weights = MixerWeights.random(8)
    with pytest.raises(ValueError):
        mixer.pure_pass_ac_msa(field, PurityMask(np.ones((2, 2), dtype=np.uint8)), np.zeros((9, 8)), weights)
    with pytest.raises(ValueError):
        mixer.pure_pass_ac_msa(field, PurityMask(np.ones((3, 3), dtype=np.uint8)), np.zeros((9, 4)), weights)
    with pytest.raises(ValueError):
        mixer.grouped_msa(field, mixer.categorize(field), MixerWeights.random(16))


def test_fewer_hard_tokens_fewer_score_entries():
    rng = np.random.default_rng(12)
    field = _random_field(rng, 64, 8)
    weights = MixerWeights.random(8)
    full = MixerTrace.for_tokens(64)
    mixer.full_ac_msa(field, weights, capacity=16, trace=full)
    part = MixerTrace.for_tokens(64)
    mask = PurityMask((rng.random((8, 8)) < 0.5).astype(np.uint8))
    mixer.pure_pass_ac_msa(field, mask, np.zeros((64, 8)), weights, capacity=16, trace=part)
    assert part.score_entries <= full.score_entries


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_permutation_within_category_permutes_output(seed):
    rng = np.random.default_rng(seed)
    n, c = 12, 8
    cats = rng.integers(0, 3, size=n)
    field = TokenField(tokens=rng.standard_normal((n, c)), similarity=_one_hot(cats, 3))
    bypass = rng.standard_normal((n, c))
    mask_flat = (rng.random(n) < 0.6).astype(np.uint8)
    weights = MixerWeights.random(c, seed=2)

    # permute token positions among members of category 0 only
    perm = np.arange(n)
    members = np.flatnonzero(cats == 0)
    perm[members] = rng.permutation(members)

    out = mixer.pure_pass_ac_msa(field, PurityMask(mask_flat.reshape(3, 4)), bypass, weights, capacity=n)
    permuted = TokenField(tokens=field.tokens[perm], similarity=field.similarity[perm])
    out_p = mixer.pure_pass_ac_msa(permuted, PurityMask(mask_flat[perm].reshape(3, 4)),
                                   bypass[perm], weights, capacity=n)
    np.testing.assert_allclose(out_p, out[perm], rtol=1e-9, atol=1e-12)


def test_random_fields_agree_with_full_path_and_oracle():
    rng = np.random.default_rng(2025)
    for case in range(200):
        c = int(rng.choice([8, 48]))
        n = int(rng.integers(1, 257))
        field = _random_field(rng, n, c, m=int(rng.integers(1, 17)))
        weights = MixerWeights.random(c, seed=case)
        capacity = int(rng.choice([1, 4, 16, 64, 128]))
        bypass = rng.standard_normal((n, c))

        ones = PurityMask(np.ones((1, n), dtype=np.uint8))
        full = mixer.full_ac_msa(field, weights, capacity=capacity)
        np.testing.assert_allclose(mixer.pure_pass_ac_msa(field, ones, bypass, weights, capacity), full,
                                   rtol=1e-12, atol=0)

        mask = PurityMask((rng.random((1, n)) < rng.random()).astype(np.uint8))
        out = mixer.pure_pass_ac_msa(field, mask, bypass, weights, capacity)
        pure = np.flatnonzero(mask.values.ravel() == 0)
        assert np.array_equal(out[pure], bypass[pure])

        # dense oracle on one group per case keeps the suite fast
        part = mixer.categorize(field, None, capacity)
        group = part.groups[case % len(part)]
        sub = TokenField(tokens=field.tokens[group], similarity=field.similarity[group])
        np.testing.assert_allclose(mixer.grouped_msa(sub, mixer.categorize(sub, None, len(group)), weights),
                                   _naive_attention(field.tokens[group], weights), rtol=1e-9, atol=1e-12)


def test_attention_flops_grow_with_each_hard_pixel():
    rng = np.random.default_rng(31)
    for _ in range(20):
        c = int(rng.choice([8, 48]))
        n = int(rng.integers(1, 65))
        field = _random_field(rng, n, c)
        capacity = int(rng.choice([1, 3, 8, 128]))
        flat = np.zeros(n, dtype=np.uint8)

        def counted():
            hard = np.flatnonzero(flat)
            return cost.attention_flops_count(mixer.categorize(field, hard, capacity), c)

        previous = counted()
        assert previous == 0
        for i in rng.permutation(n):
            flat[i] = 1
            now = counted()
            assert now >= previous
            previous = now


def test_tokens_from_image_similarity_agrees_with_labels():
    rng = np.random.default_rng(13)
    centers = classify.make_color_centers()
    image = classify.NormalizedImage(rng.random((6, 5, 3)))
    field = mixer.tokens_from_image(image, centers, channels=16, seed=4)
    assert field.tokens.shape == (30, 16)
    assert field.similarity.shape == (30, 16)
    labels = classify.classify_pixels(image, centers).labels.ravel()
    np.testing.assert_array_equal(np.argmax(field.similarity, axis=1), labels)
    again = mixer.tokens_from_image(image, centers, channels=16, seed=4)
    np.testing.assert_array_equal(again.tokens, field.tokens)


def test_trace_keeps_the_partition_that_ran():
    rng = np.random.default_rng(14)
    field = _random_field(rng, 36, 8)
    mask = PurityMask((rng.random((6, 6)) < 0.4).astype(np.uint8))
    trace = MixerTrace.for_tokens(36)
    mixer.pure_pass_ac_msa(field, mask, np.zeros((36, 8)), MixerWeights.random(8), capacity=5, trace=trace)
    expected = mixer.categorize(field, np.flatnonzero(mask.values.ravel()), 5)
    assert [g.tolist() for g in trace.partition.groups] == [g.tolist() for g in expected.groups]
    assert trace.partition.sizes() == trace.group_sizes
