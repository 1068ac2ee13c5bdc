"""Decoding the true class from one joint observation of the local classifiers.

Three decoders are provided:

* ``vote``: normalised authority vote. Class ``k`` scores the fraction of the
  classifiers trained on ``k`` that voted ``k``.
* ``ml``: maximum likelihood under uniform noise on unfamiliar classes.
* ``lookup``: exact output-set membership.

All argmaxes break ties toward the lowest class label. Each decoder has a
single-observation form returning a :class:`DecodeResult` and a vectorised
form over an ``(n, m)`` array used by the simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, ParameterError, SizeLimitError
from .model import DEFAULT_ENUMERATION_CAP, Ensemble, OutputSet

DECODERS = ("vote", "ml", "lookup")
EMPTY_AUTHORITY_SCORE = -1.0


@dataclass(frozen=True)
class AuthorityIndex:
    """Per class, the 0-based indices of classifiers trained on it."""

    num_classes: int
    members: tuple[tuple[int, ...], ...]

    def of(self, k: int) -> tuple[int, ...]:
        return self.members[k - 1]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.members)

    @property
    def empty_classes(self) -> tuple[int, ...]:
        return tuple(k for k, c in enumerate(self.members, start=1) if not c)


def build_authority_index(ensemble: Ensemble) -> AuthorityIndex:
    members = tuple(
        tuple(i for i, s in enumerate(ensemble.scopes) if k in s) for k in ensemble.classes
    )
    return AuthorityIndex(ensemble.num_classes, members)


@dataclass(frozen=True)
class DecodeResult:
    predicted: int
    scores: tuple[float, ...]
    tie: bool = False
    fallback_used: bool = False


def _argmax_lowest(scores: Sequence[float]) -> tuple[int, bool]:
    best = max(scores)
    winners = [k for k, s in enumerate(scores, start=1) if s == best]
    return winners[0], len(winners) > 1


def vote_decode(ensemble: Ensemble, y: Sequence[int], index: AuthorityIndex | None = None) -> DecodeResult:
    y = ensemble.check_outputs(y)
    index = index or build_authority_index(ensemble)
    if all(not c for c in index.members):  # pragma: no cover - every scope has >= 2 classes
        raise ConfigurationError("no class has an authority classifier")
    scores = []
    for members in index.members:
        if not members:
            scores.append(EMPTY_AUTHORITY_SCORE)
            continue
        k = len(scores) + 1
        scores.append(sum(1 for i in members if y[i] == k) / len(members))
    predicted, tie = _argmax_lowest(scores)
    return DecodeResult(predicted, tuple(scores), tie=tie)


def _noise_denominators(ensemble: Ensemble) -> tuple[int, ...]:
    """Per class, the product of scope sizes of the classifiers that do not know it."""
    return tuple(math.prod(len(s) for s in ensemble.scopes if k not in s) for k in ensemble.classes)


def ml_decode(ensemble: Ensemble, y: Sequence[int]) -> DecodeResult:
    """Maximum-likelihood class; scores are log-likelihoods (``-inf`` when impossible).

    A class is possible iff every classifier trained on it voted for it; its
    likelihood is then the inverse product of the other classifiers' scope
    sizes. Likelihoods are compared exactly through those integer products.
    If no class is possible (only for contradictory hand-made inputs) the
    vote decoder decides and ``fallback_used`` is set.
    """
    y = ensemble.check_outputs(y)
    denoms = _noise_denominators(ensemble)
    possible = [all(y[i] == k for i, s in enumerate(ensemble.scopes) if k in s) for k in ensemble.classes]
    scores = tuple(-math.log(d) if ok else -math.inf for d, ok in zip(denoms, possible))
    if not any(possible):
        v = vote_decode(ensemble, y)
        return DecodeResult(v.predicted, scores, tie=v.tie, fallback_used=True)
    best = min(d for d, ok in zip(denoms, possible) if ok)
    winners = [k for k, d, ok in zip(ensemble.classes, denoms, possible) if ok and d == best]
    return DecodeResult(winners[0], scores, tie=len(winners) > 1)


@dataclass(frozen=True)
class LookupResult:
    """Classes whose output set contains the observation."""

    matches: tuple[int, ...]

    @property
    def ambiguous(self) -> bool:
        return len(self.matches) != 1

    @property
    def predicted(self) -> int | None:
        return self.matches[0] if len(self.matches) == 1 else None


def lookup_decode(ensemble: Ensemble, y: Sequence[int], cap: int = DEFAULT_ENUMERATION_CAP) -> LookupResult:
    y = ensemble.check_outputs(y)
    sets = [OutputSet(ensemble, k, cap=cap) for k in ensemble.classes]
    too_big = [s.k for s in sets if s.cardinality > cap]
    if too_big:
        raise SizeLimitError(f"output sets of classes {too_big} exceed the lookup cap {cap}")
    return LookupResult(tuple(s.k for s in sets if y in s))


def decode(ensemble: Ensemble, y: Sequence[int], decoder: str = "vote") -> DecodeResult:
    """Single-observation decode by name; ``lookup`` reports match flags as scores."""
    if decoder == "vote":
        return vote_decode(ensemble, y)
    if decoder == "ml":
        return ml_decode(ensemble, y)
    if decoder == "lookup":
        res = lookup_decode(ensemble, y)
        scores = tuple(1.0 if k in res.matches else 0.0 for k in ensemble.classes)
        if res.matches:
            return DecodeResult(res.matches[0], scores, tie=res.ambiguous)
        v = vote_decode(ensemble, y)
        return DecodeResult(v.predicted, scores, tie=v.tie, fallback_used=True)
    raise ParameterError(f"unknown decoder {decoder!r}; choose from {DECODERS}")


# -- vectorised forms --


@lru_cache(maxsize=64)
def _batch_tables(ensemble: Ensemble) -> tuple[np.ndarray, np.ndarray]:
    auth = ensemble.membership.sum(axis=0).astype(np.int64)
    denoms = _noise_denominators(ensemble)
    # dense rank of the exact likelihood denominators: smaller denominator, better rank
    order = {d: r for r, d in enumerate(sorted(set(denoms)))}
    ml_rank = np.array([order[d] for d in denoms], dtype=np.int64)
    return auth, ml_rank


def _vote_counts(ensemble: Ensemble, Y: np.ndarray) -> np.ndarray:
    n = Y.shape[0]
    counts = np.zeros((n, ensemble.num_classes), dtype=np.int64)
    rows = np.arange(n)
    member = ensemble.membership
    for i in range(ensemble.m):
        col = Y[:, i] - 1
        ok = member[i, col]
        counts[rows[ok], col[ok]] += 1
    return counts


def _vote_batch(counts: np.ndarray, auth: np.ndarray) -> np.ndarray:
    # equal ratios of small integers divide to identical doubles, so ties survive
    num = counts.astype(np.float64)
    den = auth.astype(np.float64)
    scores = np.where(den > 0, num / np.where(den > 0, den, 1.0), EMPTY_AUTHORITY_SCORE)
    return np.argmax(scores, axis=1) + 1


def predict_batch(ensemble: Ensemble, Y: np.ndarray, decoder: str = "vote") -> np.ndarray:
    """Predicted labels for each row of ``Y`` (shape ``(n, m)``, 1-based labels)."""
    if decoder not in DECODERS:
        raise ParameterError(f"unknown decoder {decoder!r}; choose from {DECODERS}")
    Y = np.asarray(Y, dtype=np.int64)
    if Y.ndim != 2 or Y.shape[1] != ensemble.m:
        raise ParameterError(f"expected an (n, {ensemble.m}) array, got shape {Y.shape}")
    auth, ml_rank = _batch_tables(ensemble)
    counts = _vote_counts(ensemble, Y)
    if decoder == "vote":
        return _vote_batch(counts, auth)
    possible = counts == auth[None, :]
    any_possible = possible.any(axis=1)
    if decoder == "ml":
        key = np.where(possible, ml_rank[None, :], np.iinfo(np.int64).max)
        pred = np.argmin(key, axis=1) + 1
    else:
        pred = np.argmax(possible, axis=1) + 1
    if not any_possible.all():
        pred = np.where(any_possible, pred, _vote_batch(counts, auth))
    return pred
