import itertools
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import EXAMPLE_COVER_5_3, ensembles
from expertcover.cover import greedy_cover, random_ensemble
from expertcover.decoders import (
    build_authority_index,
    decode,
    lookup_decode,
    ml_decode,
    predict_batch,
    vote_decode,
)
from expertcover.errors import DuplicateScopeWarning, ParameterError, SizeLimitError
from expertcover.model import Ensemble, OutputSet, confusion_witness, uncovered_pairs
from oracles import ml_by_hand, vote_by_hand


class TestAuthorityIndex:
    def test_example_cover(self, cover53):
        idx = build_authority_index(cover53)
        one_based = [[i + 1 for i in c] for c in idx.members]
        assert one_based == [[1, 2], [1, 3, 4], [1, 3, 4], [2, 3], [2, 4]]
        assert sum(idx.sizes) == sum(len(s) for s in cover53.scopes)

    def test_empty_flagged(self):
        assert build_authority_index(Ensemble(3, [[1, 2]])).empty_classes == (3,)

    def test_single_full_scope(self):
        idx = build_authority_index(Ensemble(4, [[1, 2, 3, 4]]))
        assert idx.members == ((0,), (0,), (0,), (0,))


class TestVote:
    @pytest.mark.parametrize("noise", [1, 4, 5])
    def test_example_cover_class_two(self, cover53, noise):
        res = vote_decode(cover53, (2, noise, 2, 2))
        assert res.predicted == 2 and res.scores[1] == 1.0

    def test_triangle(self):
        res = vote_decode(Ensemble(3, [[1, 2], [2, 3], [1, 3]]), (1, 3, 1))
        assert res.predicted == 1
        assert res.scores == (1.0, 0.0, 0.5)

    def test_binary(self):
        assert vote_decode(Ensemble(2, [[1, 2]]), (2,)).predicted == 2

    def test_empty_authority_never_wins(self):
        res = vote_decode(Ensemble(3, [[1, 2]]), (2,))
        assert res.scores[2] == -1.0 and res.predicted == 2

    def test_tie_goes_low(self):
        res = vote_decode(Ensemble(4, [[1, 2], [3, 4]]), (2, 3))
        assert res.tie and res.predicted == 2

    @settings(max_examples=100)
    @given(ensembles(max_k=6, max_m=6), st.data())
    def test_matches_definition(self, e, data):
        y = tuple(data.draw(st.sampled_from(s.classes)) for s in e.scopes)
        scopes = [set(s.classes) for s in e.scopes]
        assert vote_decode(e, y).predicted == vote_by_hand(e.num_classes, scopes, y)

    @settings(max_examples=60)
    @given(ensembles(max_k=6, max_m=6), st.data())
    def test_full_score_iff_all_authorities_agree(self, e, data):
        y = tuple(data.draw(st.sampled_from(s.classes)) for s in e.scopes)
        res = vote_decode(e, y)
        idx = build_authority_index(e)
        for k in e.classes:
            agree = bool(idx.of(k)) and all(y[i] == k for i in idx.of(k))
            assert (res.scores[k - 1] == 1.0) == agree


class TestML:
    def test_two_disjoint_pairs_tie(self):
        res = ml_decode(Ensemble(4, [[1, 2], [3, 4]]), (1, 3))
        assert res.predicted == 1 and res.tie
        assert res.scores[0] == res.scores[2] == pytest.approx(-math.log(2))
        assert res.scores[1] == res.scores[3] == -math.inf

    @pytest.mark.filterwarnings("ignore::expertcover.errors.DuplicateScopeWarning")
    def test_contradicting_duplicates_leave_unknown_classes(self):
        # classes 3 and 4 are outside both scopes, so each keeps likelihood 1/4
        res = ml_decode(Ensemble(4, [[1, 2], [1, 2]]), (1, 2))
        assert not res.fallback_used and res.predicted == 3
        assert res.scores[2] == pytest.approx(-math.log(4))

    @pytest.mark.filterwarnings("ignore::expertcover.errors.DuplicateScopeWarning")
    def test_fallback_when_every_class_impossible(self):
        e = Ensemble(4, [[1, 2], [1, 2], [3, 4], [3, 4]])
        res = ml_decode(e, (1, 2, 3, 4))
        assert res.fallback_used
        assert all(s == -math.inf for s in res.scores)
        assert res.predicted == vote_decode(e, (1, 2, 3, 4)).predicted

    def test_heterogeneous_sizes_exact(self):
        # class 1 is noise for one size-4 scope, class 5 for two size-2 scopes: both 1/4
        e = Ensemble(6, [[1, 2], [1, 3], [2, 3, 4, 5]])
        res = ml_decode(e, (1, 1, 5))
        assert res.tie and res.predicted == 1
        assert res.scores[0] == res.scores[4]
        assert res.scores[5] == pytest.approx(-math.log(16))

    @settings(max_examples=100)
    @given(ensembles(max_k=6, max_m=6), st.data())
    def test_matches_exact_products(self, e, data):
        y = tuple(data.draw(st.sampled_from(s.classes)) for s in e.scopes)
        scopes = [set(s.classes) for s in e.scopes]
        expected = ml_by_hand(e.num_classes, scopes, y)
        res = ml_decode(e, y)
        if expected is None:
            assert res.fallback_used
        else:
            assert res.predicted == expected and not res.fallback_used


class TestLookup:
    def test_example_cover_class_four(self, cover53):
        for y in OutputSet(cover53, 4):
            assert lookup_decode(cover53, y).predicted == 4

    def test_ambiguous(self):
        res = lookup_decode(Ensemble(3, [[1, 2], [2, 3]]), (1, 3))
        assert res.ambiguous and res.matches == (1, 3)

    def test_single_scope(self):
        e = Ensemble(5, [[1, 2, 3, 4, 5]])
        assert [lookup_decode(e, (k,)).predicted for k in range(1, 6)] == [1, 2, 3, 4, 5]

    def test_cap(self):
        e = random_ensemble(10, 3, 30, 0)
        with pytest.raises(SizeLimitError):
            lookup_decode(e, tuple(s.classes[0] for s in e.scopes), cap=100)


def test_unknown_decoder(cover53):
    with pytest.raises(ParameterError):
        decode(cover53, (1, 1, 2, 2), "bayes")


@pytest.mark.parametrize("decoder", ["vote", "ml", "lookup"])
@settings(max_examples=60, deadline=None)
@given(e=ensembles(max_k=6, max_m=6), data=st.data())
def test_batch_matches_single(decoder, e, data):
    rows = [tuple(data.draw(st.sampled_from(s.classes)) for s in e.scopes) for _ in range(5)]
    batch = predict_batch(e, np.array(rows), decoder)
    assert batch.tolist() == [decode(e, y, decoder).predicted for y in rows]


def _all_covers():
    for K in range(2, 7):
        for R in range(2, K + 1):
            yield greedy_cover(K, R)


@pytest.mark.parametrize("decoder", ["vote", "ml", "lookup"])
def test_zero_error_on_greedy_covers(decoder):
    for e in _all_covers():
        for k in e.classes:
            for y in OutputSet(e, k):
                assert decode(e, y, decoder).predicted == k


@pytest.mark.parametrize("seed", range(100))
def test_zero_error_on_random_covers(seed):
    rng = np.random.default_rng(seed)
    K = int(rng.integers(3, 11))
    R = int(rng.integers(2, K + 1))
    e = random_ensemble(K, R, 1, seed)
    while uncovered_pairs(e):
        e = e.extended(random_ensemble(K, R, 1, int(rng.integers(1 << 30))).scopes)
    for k in e.classes:
        os_ = OutputSet(e, k)
        Y = np.concatenate(list(os_.batches())) if os_.cardinality <= 10**5 else os_.sample(10**4, rng)
        for decoder in ("vote", "ml", "lookup"):
            assert (predict_batch(e, Y, decoder) == k).all()


@settings(max_examples=100)
@given(ensembles(max_k=6, max_m=6))
def test_converse_witness_defeats_every_decoder(e):
    for k, k2 in uncovered_pairs(e):
        y = confusion_witness(e, k, k2)
        for decoder in ("vote", "ml", "lookup"):
            p = decode(e, y, decoder).predicted
            assert p != k or p != k2


@settings(max_examples=60)
@given(ensembles(max_k=6, max_m=6), st.data())
def test_permutation_invariance(e, data):
    y = tuple(data.draw(st.sampled_from(s.classes)) for s in e.scopes)
    perm = data.draw(st.permutations(range(e.m)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DuplicateScopeWarning)
        ep = Ensemble(e.num_classes, [e.scopes[i] for i in perm])
    yp = tuple(y[i] for i in perm)
    for fn in (vote_decode, ml_decode):
        a, b = fn(e, y), fn(ep, yp)
        assert a.predicted == b.predicted and a.scores == pytest.approx(b.scores)


def test_zero_error_statement_helpers():
    # every pair in the example cover shares a scope
    e = Ensemble(5, EXAMPLE_COVER_5_3)
    assert all(confusion_witness(e, a, b) is None for a, b in itertools.combinations(e.classes, 2))
