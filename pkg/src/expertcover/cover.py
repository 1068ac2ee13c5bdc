"""Constructing ensembles that satisfy the covering condition.

Every class pair must share at least one scope. With scopes of size ``R`` the
problem is set cover over the ``K(K-1)/2`` class pairs, where each candidate
scope covers ``R(R-1)/2`` of them.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np

from .bounds import perfect_lower_bound
from .errors import CoverageError, DuplicateScopeWarning, ParameterError, SizeLimitError
from .model import Ensemble, ExpertScope, Pair, uncovered_pairs

MAX_SCAN_CLASSES = 20
SCAN_CHUNK = 1 << 15
DEFAULT_MAX_NODES = 10**8


def _check_kr(K: int, R: int) -> None:
    if not (isinstance(K, (int, np.integer)) and isinstance(R, (int, np.integer))):
        raise ParameterError(f"K and R must be integers, got {K!r}, {R!r}")
    if K < 2 or not 2 <= R <= K:
        raise ParameterError(f"need 2 <= R <= K, got K={K}, R={R}")


def _guard_scan(K: int) -> None:
    if K > MAX_SCAN_CLASSES:
        raise SizeLimitError(
            f"candidate scan over all size-R scopes is limited to K <= {MAX_SCAN_CLASSES}, got K={K}"
        )


def harmonic(n: int) -> float:
    return float(sum(Fraction(1, i) for i in range(1, n + 1)))


def _pair_index(K: int) -> np.ndarray:
    idx = np.full((K, K), -1, dtype=np.int64)
    for p, (a, b) in enumerate(itertools.combinations(range(K), 2)):
        idx[a, b] = idx[b, a] = p
    return idx


def _uncovered_mask(K: int, scopes: Iterable[ExpertScope]) -> np.ndarray:
    pid = _pair_index(K)
    unc = np.ones(K * (K - 1) // 2, dtype=bool)
    for s in scopes:
        for a, b in s.pairs():
            unc[pid[a - 1, b - 1]] = False
    return unc


def _bitmask(labels0: Iterable[int]) -> int:
    return sum(1 << int(c) for c in labels0)


def _combo_chunks(K: int, R: int) -> Iterator[np.ndarray]:
    it = itertools.combinations(range(K), R)
    while True:
        chunk = list(itertools.islice(it, SCAN_CHUNK))
        if not chunk:
            return
        yield np.array(chunk, dtype=np.int64)


def _best_candidate(K: int, R: int, uncovered: np.ndarray, exclude: set[int]) -> tuple[int, tuple[int, ...] | None]:
    """Scan all size-R scopes in lexicographic order; return (gain, scope0) of the first maximiser."""
    pid = _pair_index(K)
    positions = list(itertools.combinations(range(R), 2))
    weights = (1 << np.arange(K, dtype=np.int64)) if exclude else None
    best_gain, best = -1, None
    for arr in _combo_chunks(K, R):
        gains = np.zeros(len(arr), dtype=np.int64)
        for p, q in positions:
            gains += uncovered[pid[arr[:, p], arr[:, q]]]
        if exclude:
            masks = weights[arr].sum(axis=1)
            gains[np.isin(masks, np.fromiter(exclude, dtype=np.int64))] = -1
        j = int(np.argmax(gains))
        if gains[j] > best_gain:
            best_gain, best = int(gains[j]), tuple(int(c) for c in arr[j])
    return best_gain, best


def complete_cover(partial: Ensemble | None, R: int, num_classes: int | None = None) -> tuple[ExpertScope, ...]:
    """Greedily choose extra size-``R`` scopes until every class pair is covered.

    Only pairs left uncovered by ``partial`` count toward a candidate's gain,
    and scopes already in ``partial`` are never proposed. Returns just the
    added scopes, possibly none. Pass ``partial=None`` with ``num_classes`` to
    start from nothing.
    """
    if partial is None:
        if num_classes is None:
            raise ParameterError("num_classes is required when partial is None")
        K, existing = int(num_classes), ()
    else:
        K, existing = partial.num_classes, partial.scopes
    _check_kr(K, R)
    _guard_scan(K)
    unc = _uncovered_mask(K, existing)
    exclude = {_bitmask(c - 1 for c in s.classes) for s in existing if len(s) == R}
    pid = _pair_index(K)
    added = []
    while unc.any():
        gain, best = _best_candidate(K, R, unc, exclude)
        if best is None or gain <= 0:  # pragma: no cover - some size-R scope always covers a missing pair
            raise CoverageError("no remaining candidate covers an uncovered pair")
        for a, b in itertools.combinations(best, 2):
            unc[pid[a, b]] = False
        exclude.add(_bitmask(best))
        added.append(ExpertScope(tuple(c + 1 for c in best)))
    return tuple(added)


def greedy_cover(K: int, R: int) -> Ensemble:
    """Greedy set cover of all class pairs by size-``R`` scopes.

    Each step takes the scope covering the most still-uncovered pairs; ties go
    to the lexicographically smallest class set.
    """
    return Ensemble(K, complete_cover(None, R, num_classes=K))


def prune_cover(pool: Ensemble) -> Ensemble:
    """Greedy minimal sub-collection of ``pool`` that still covers every pair."""
    missing = uncovered_pairs(pool)
    if missing:
        k, k2 = missing[0]
        raise CoverageError(f"pool does not cover pair ({k}, {k2})", pair=(k, k2))
    K = pool.num_classes
    pid = _pair_index(K)
    scope_pairs = [np.array([pid[a - 1, b - 1] for a, b in s.pairs()], dtype=np.int64) for s in pool.scopes]
    order = sorted(range(pool.m), key=lambda i: (pool.scopes[i].classes, i))
    unc = np.ones(K * (K - 1) // 2, dtype=bool)
    chosen = []
    while unc.any():
        best_gain, best = 0, None
        for i in order:
            g = int(unc[scope_pairs[i]].sum())
            if g > best_gain:
                best_gain, best = g, i
        unc[scope_pairs[best]] = False
        chosen.append(best)
    return Ensemble(K, tuple(pool.scopes[i] for i in chosen))


def optimal_cover(K: int, R: int, budget: int | None = None, max_nodes: int = DEFAULT_MAX_NODES) -> Ensemble | None:
    """Minimum-size cover by size-``R`` scopes, or None if it needs more than ``budget`` scopes.

    Iterative deepening from the pair-counting lower bound. At each node the
    lowest uncovered pair is branched on, trying only scopes that contain it;
    nodes whose uncovered count exceeds what the remaining depth can cover
    are cut. ``budget`` defaults to the greedy cover size.
    """
    _check_kr(K, R)
    _guard_scan(K)
    floor = perfect_lower_bound(K, R)
    if budget is None:
        budget = greedy_cover(K, R).m
    if budget < floor:
        return None
    branching = math.comb(K - 2, R - 2)
    estimate = sum(branching**d for d in range(floor, budget + 1))
    if estimate > max_nodes:
        raise SizeLimitError(f"estimated {estimate} search nodes exceeds the guard {max_nodes}")

    pid = _pair_index(K)
    n_pairs = K * (K - 1) // 2
    rho = R * (R - 1) // 2
    combos = list(itertools.combinations(range(K), R))
    cover_mask = [sum(1 << int(pid[a, b]) for a, b in itertools.combinations(c, 2)) for c in combos]
    by_pair: list[list[int]] = [[] for _ in range(n_pairs)]
    for ci, c in enumerate(combos):
        for a, b in itertools.combinations(c, 2):
            by_pair[pid[a, b]].append(ci)

    nodes = 0
    failed: dict[int, int] = {}

    def search(unc: int, left: int, chosen: list[int]) -> bool:
        nonlocal nodes
        if unc == 0:
            return True
        if left == 0 or unc.bit_count() > left * rho or failed.get(unc, -1) >= left:
            return False
        nodes += 1
        if nodes > max_nodes:
            raise SizeLimitError(f"search exceeded {max_nodes} nodes")
        p = (unc & -unc).bit_length() - 1
        for ci in by_pair[p]:
            chosen.append(ci)
            if search(unc & ~cover_mask[ci], left - 1, chosen):
                return True
            chosen.pop()
        failed[unc] = max(failed.get(unc, -1), left)
        return False

    full = (1 << n_pairs) - 1
    for size in range(floor, budget + 1):
        chosen: list[int] = []
        if search(full, size, chosen):
            return Ensemble(K, tuple(tuple(c + 1 for c in combos[ci]) for ci in chosen))
    return None


def random_ensemble(K: int, R: int, m: int, seed: int) -> Ensemble:
    """``m`` scopes drawn i.i.d. uniformly from all size-``R`` subsets (with replacement).

    Row ``i`` depends only on ``seed`` and ``i``, so the draw for ``m`` is a
    prefix of the draw for any larger ``m``.
    """
    _check_kr(K, R)
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    rng = np.random.default_rng(seed)
    keys = rng.random((m, K))
    rows = np.sort(np.argsort(keys, axis=1, kind="stable")[:, :R], axis=1) + 1
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DuplicateScopeWarning)
        return Ensemble(K, tuple(tuple(int(v) for v in r) for r in rows))


@dataclass(frozen=True)
class CoverReport:
    ensemble: Ensemble
    covered: bool
    size_m: int
    lower_bound: int
    approx_ratio_bound: float
    uncovered: tuple[Pair, ...]

    def summary(self) -> str:
        status = "covered" if self.covered else f"NOT covered ({len(self.uncovered)} uncovered pairs)"
        return f"{status}, size {self.size_m}, lower bound {self.lower_bound}"


def cover_report(ensemble: Ensemble, R: int | None = None) -> CoverReport:
    """Covering status and size against the pair-counting floor for max scope size ``R``."""
    if R is None:
        R = int(ensemble.scope_sizes.max())
    missing = tuple(uncovered_pairs(ensemble))
    return CoverReport(
        ensemble=ensemble,
        covered=not missing,
        size_m=ensemble.m,
        lower_bound=perfect_lower_bound(ensemble.num_classes, R),
        approx_ratio_bound=harmonic(R * (R - 1) // 2),
        uncovered=missing,
    )
