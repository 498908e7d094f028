"""Scoring and ranking: hand cases, brute-force oracles, tie contracts."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clickrank.encoders import EncodedIndex
from clickrank.ranker import (
    Feedback,
    RankerParams,
    group_similarity,
    rank,
    score_no_feedback,
    score_with_feedback,
    similarity,
    top_k,
)
from tests.conftest import unit_rows


def _index(rows: np.ndarray, uni: np.ndarray | None = None) -> EncodedIndex:
    return EncodedIndex(crossmodal=rows, unimodal=rows if uni is None else uni)


# -- similarity -------------------------------------------------------------


def test_similarity_hand_cases():
    e1, e2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    assert similarity(e1, e1) == 1.0
    assert similarity(e1, e2) == 0.0
    assert similarity(e1, -e1) == -1.0
    # unnormalized inputs are normalized internally
    assert similarity(3 * e1, 7 * e1) == 1.0
    assert similarity([1.0, 1.0], [1.0, 0.0]) == pytest.approx(1 / np.sqrt(2), abs=1e-12)


def test_similarity_is_clamped():
    v = np.full(64, 0.125)
    assert -1.0 <= similarity(v, v) <= 1.0


def test_similarity_error_paths():
    with pytest.raises(ValueError, match="non-finite"):
        similarity([np.nan, 0.0], [1.0, 0.0])
    with pytest.raises(ValueError, match="zero-norm"):
        similarity([0.0, 0.0], [1.0, 0.0])


def test_group_similarity_is_mean_of_pairwise(rng):
    v = unit_rows(rng, 1, 6)[0]
    group = unit_rows(rng, 4, 6)
    expected = np.mean([similarity(v, g) for g in group])
    assert group_similarity(v, group) == pytest.approx(expected, abs=1e-12)


def test_group_similarity_rejects_empty():
    with pytest.raises(ValueError, match="empty group"):
        group_similarity(np.ones(3), np.zeros((0, 3)))


# -- params and feedback containers ------------------------------------------


def test_ranker_params_validation():
    RankerParams(0.0, 0.0)
    with pytest.raises(ValueError):
        RankerParams(-0.1, 0.5)
    with pytest.raises(ValueError):
        RankerParams(1.0, float("nan"))


def test_feedback_validation():
    fb = Feedback([3, 1], [2])
    assert fb.likes == (3, 1) and fb.dislikes == (2,)
    assert not fb.is_empty
    assert Feedback((), ()).is_empty
    with pytest.raises(ValueError, match="duplicate id in likes"):
        Feedback((1, 1), ())
    with pytest.raises(ValueError, match="duplicate id in dislikes"):
        Feedback((), (2, 2))
    with pytest.raises(ValueError, match="overlap"):
        Feedback((1, 2), (2, 3))


# -- scoring ------------------------------------------------------------------


def test_score_no_feedback_is_cosine_to_each_row(rng):
    rows = unit_rows(rng, 12, 5)
    query = unit_rows(rng, 1, 5)[0]
    scores = score_no_feedback(query, _index(rows))
    for i in range(12):
        assert scores[i] == pytest.approx(similarity(query, rows[i]), abs=1e-6)


def test_score_no_feedback_rejects_dim_mismatch(rng):
    rows = unit_rows(rng, 4, 5)
    with pytest.raises(ValueError, match="dimension mismatch"):
        score_no_feedback(np.ones(3, dtype=np.float32), _index(rows))


def test_score_with_feedback_matches_formula(rng):
    cross = unit_rows(rng, 15, 6)
    uni = unit_rows(rng, 15, 6)
    query = unit_rows(rng, 1, 6)[0]
    fb = Feedback((2, 5), (9,))
    params = RankerParams(lambda_p=1.0, lambda_n=0.5)
    scores = score_with_feedback(query, fb, params, _index(cross, uni))
    for i in range(15):
        expected = (
            similarity(query, cross[i])
            + 1.0 * group_similarity(uni[i], uni[list(fb.likes)])
            - 0.5 * group_similarity(uni[i], uni[list(fb.dislikes)])
        )
        assert scores[i] == pytest.approx(expected, abs=1e-5)


def test_score_with_feedback_zero_lambdas_reduce_to_baseline(rng):
    rows = unit_rows(rng, 10, 4)
    query = unit_rows(rng, 1, 4)[0]
    fb = Feedback((1,), (2,))
    base = score_no_feedback(query, _index(rows))
    got = score_with_feedback(query, fb, RankerParams(0.0, 0.0), _index(rows))
    assert got.tobytes() == base.tobytes()


def test_score_with_feedback_empty_feedback_reduces_to_baseline(rng):
    rows = unit_rows(rng, 10, 4)
    query = unit_rows(rng, 1, 4)[0]
    base = score_no_feedback(query, _index(rows))
    got = score_with_feedback(query, Feedback((), ()), RankerParams(1.0, 0.5), _index(rows))
    assert got.tobytes() == base.tobytes()


def test_score_with_feedback_rejects_bad_ids(rng):
    rows = unit_rows(rng, 5, 4)
    query = unit_rows(rng, 1, 4)[0]
    with pytest.raises(ValueError, match="invalid id"):
        score_with_feedback(query, Feedback((7,), ()), RankerParams(), _index(rows))


def test_liking_an_item_raises_its_score(rng):
    rows = unit_rows(rng, 20, 8)
    query = unit_rows(rng, 1, 8)[0]
    base = score_no_feedback(query, _index(rows))
    boosted = score_with_feedback(query, Feedback((4,), ()), RankerParams(1.0, 0.0), _index(rows))
    # the liked item gains its self-similarity, the maximum possible gain
    gain = boosted.astype(np.float64) - base.astype(np.float64)
    assert gain[4] == pytest.approx(gain.max(), abs=1e-6)


# -- rank / top_k ---------------------------------------------------------------


def sort_oracle(scores):
    """Full sort on (-score, id) pairs, the contract rank() must match."""
    ids = sorted(range(len(scores)), key=lambda i: (-float(scores[i]), i))
    ranks = [0] * len(scores)
    for position, i in enumerate(ids, start=1):
        ranks[i] = position
    return ids, ranks


def test_rank_matches_sort_oracle_with_ties():
    scores = np.array([0.5, 0.9, 0.5, 0.1, 0.9], dtype=np.float32)
    ranking = rank(scores)
    ids, ranks = sort_oracle(scores)
    assert ranking.order.tolist() == ids == [1, 4, 0, 2, 3]
    assert ranking.rank.tolist() == ranks


def test_rank_random_arrays_match_oracle(rng):
    for _ in range(50):
        n = int(rng.integers(1, 60))
        # coarse grid forces frequent exact ties
        scores = rng.choice(np.linspace(-1, 1, 7), size=n).astype(np.float32)
        ranking = rank(scores)
        ids, ranks = sort_oracle(scores)
        assert ranking.order.tolist() == ids
        assert ranking.rank.tolist() == ranks


def test_rank_outputs_are_read_only():
    ranking = rank(np.array([0.3, 0.1], dtype=np.float32))
    with pytest.raises(ValueError):
        ranking.rank[0] = 7
    with pytest.raises(ValueError):
        ranking.order[0] = 7


def test_rank_error_paths():
    with pytest.raises(ValueError, match="non-empty 1-d"):
        rank(np.zeros((2, 2)))
    with pytest.raises(ValueError, match="non-empty 1-d"):
        rank(np.zeros(0))
    with pytest.raises(ValueError, match="non-finite score at index 1"):
        rank(np.array([0.1, np.nan, 0.2]))


def test_top_k_prefix_and_bounds():
    scores = np.array([0.1, 0.9, 0.5], dtype=np.float32)
    assert top_k(scores, 2) == [1, 2]
    assert top_k(scores, 3) == rank(scores).order.tolist()
    with pytest.raises(ValueError, match=r"k must be in \[1, 3\]"):
        top_k(scores, 0)
    with pytest.raises(ValueError, match=r"k must be in \[1, 3\]"):
        top_k(scores, 4)


@settings(max_examples=60)
@given(
    st.lists(st.floats(-1, 1, allow_nan=False, width=32), min_size=1, max_size=40),
)
def test_rank_is_a_permutation_with_consistent_inverse(vals):
    scores = np.array(vals, dtype=np.float32)
    ranking = rank(scores)
    n = len(vals)
    assert sorted(ranking.order.tolist()) == list(range(n))
    assert sorted(ranking.rank.tolist()) == list(range(1, n + 1))
    for i in range(n):
        assert ranking.order[ranking.rank[i] - 1] == i
