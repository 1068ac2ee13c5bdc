"""Classifier configurations, their matrix view, output sets and distinguishability.

Class labels are 1-based everywhere in the public API. A configuration of
local experts is an :class:`Ensemble`: the number of classes ``K`` plus an
ordered list of :class:`ExpertScope` objects, one per local classifier.
"""

from __future__ import annotations

import itertools
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DuplicateScopeWarning, EnsembleFormatError, ParameterError, SizeLimitError

OutputVector = tuple[int, ...]
Pair = tuple[int, int]

DEFAULT_ENUMERATION_CAP = 10**7


@dataclass(frozen=True, order=True)
class ExpertScope:
    """The sorted set of classes one local classifier was trained on."""

    classes: tuple[int, ...]

    def __post_init__(self):
        try:
            labels = [int(c) for c in self.classes]
        except (TypeError, ValueError) as exc:
            raise EnsembleFormatError(f"scope labels must be integers: {self.classes!r}") from exc
        if len(set(labels)) != len(labels):
            raise EnsembleFormatError(f"duplicate label in scope {list(self.classes)}")
        if len(labels) < 2:
            raise EnsembleFormatError(f"scope {labels} has fewer than 2 classes")
        if min(labels) < 1:
            raise EnsembleFormatError(f"scope {labels} has a label below 1")
        object.__setattr__(self, "classes", tuple(sorted(labels)))

    def __len__(self):
        return len(self.classes)

    def __iter__(self):
        return iter(self.classes)

    def __contains__(self, k):
        return k in self.classes

    def pairs(self) -> Iterator[Pair]:
        return itertools.combinations(self.classes, 2)

    def __repr__(self):
        return "{" + ",".join(map(str, self.classes)) + "}"


def _as_scope(obj) -> ExpertScope:
    if isinstance(obj, ExpertScope):
        return obj
    return ExpertScope(tuple(obj))


@dataclass(frozen=True)
class Ensemble:
    """``m`` local classifiers over ``num_classes`` classes.

    Scopes may be given as any iterables of labels. Duplicate scopes are kept
    (and counted in ``m``) but trigger a :class:`DuplicateScopeWarning`.
    """

    num_classes: int
    scopes: tuple[ExpertScope, ...] = field(default=())

    def __post_init__(self):
        K = self.num_classes
        if isinstance(K, bool) or not isinstance(K, (int, np.integer)) or K < 2:
            raise EnsembleFormatError(f"num_classes must be an integer >= 2, got {K!r}")
        object.__setattr__(self, "num_classes", int(K))
        scopes = tuple(_as_scope(s) for s in self.scopes)
        if not scopes:
            raise EnsembleFormatError("an ensemble needs at least one classifier")
        for s in scopes:
            if s.classes[-1] > K:
                raise EnsembleFormatError(f"scope {list(s.classes)} has a label above K={K}")
        object.__setattr__(self, "scopes", scopes)
        dups = self.duplicate_scopes()
        if dups:
            warnings.warn(
                f"duplicate scopes {[list(s.classes) for s in dups]}", DuplicateScopeWarning, stacklevel=3
            )

    @property
    def m(self) -> int:
        return len(self.scopes)

    @property
    def classes(self) -> range:
        return range(1, self.num_classes + 1)

    def __len__(self):
        return len(self.scopes)

    def __iter__(self):
        return iter(self.scopes)

    def duplicate_scopes(self) -> list[ExpertScope]:
        counts = Counter(self.scopes)
        return [s for s, c in counts.items() if c > 1]

    def as_lists(self) -> list[list[int]]:
        return [list(s.classes) for s in self.scopes]

    def without(self, indices: Iterable[int]) -> Ensemble:
        """Copy with the classifiers at the given 0-based positions removed."""
        drop = set(indices)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DuplicateScopeWarning)
            return Ensemble(self.num_classes, tuple(s for i, s in enumerate(self.scopes) if i not in drop))

    def extended(self, scopes: Iterable) -> Ensemble:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DuplicateScopeWarning)
            return Ensemble(self.num_classes, self.scopes + tuple(_as_scope(s) for s in scopes))

    # -- cached array views (read-only) --

    @cached_property
    def membership(self) -> np.ndarray:
        """Boolean ``m x K`` array, column ``j`` is class ``j + 1``."""
        a = np.zeros((self.m, self.num_classes), dtype=bool)
        for i, s in enumerate(self.scopes):
            a[i, [c - 1 for c in s.classes]] = True
        a.flags.writeable = False
        return a

    @cached_property
    def scope_sizes(self) -> np.ndarray:
        sizes = np.array([len(s) for s in self.scopes], dtype=np.int64)
        sizes.flags.writeable = False
        return sizes

    @cached_property
    def padded_scopes(self) -> np.ndarray:
        """``m x max|scope|`` label array, rows padded with zeros."""
        out = np.zeros((self.m, int(self.scope_sizes.max())), dtype=np.int64)
        for i, s in enumerate(self.scopes):
            out[i, : len(s)] = s.classes
        out.flags.writeable = False
        return out

    def check_outputs(self, y: Sequence[int]) -> OutputVector:
        """Validate and normalise a joint observation against this ensemble."""
        try:
            y = tuple(int(v) for v in y)
        except (TypeError, ValueError) as exc:
            raise ParameterError(f"output vector must contain integers: {y!r}") from exc
        if len(y) != self.m:
            raise ParameterError(f"output vector has {len(y)} entries, ensemble has {self.m} classifiers")
        for i, (v, s) in enumerate(zip(y, self.scopes)):
            if v not in s:
                raise ParameterError(f"output {v} of classifier {i + 1} is not in its scope {list(s.classes)}")
        return y

    def check_class(self, k: int) -> int:
        if not 1 <= k <= self.num_classes:
            raise ParameterError(f"class {k} outside 1..{self.num_classes}")
        return int(k)


@dataclass(frozen=True)
class ClassificationMatrix:
    """Binary ``m x K`` matrix; row ``i`` marks the classes of classifier ``i``."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool)
        if bits.ndim != 2 or bits.shape[0] < 1 or bits.shape[1] < 2:
            raise EnsembleFormatError(f"classification matrix must be m x K with m>=1, K>=2; got {bits.shape}")
        if (bits.sum(axis=1) < 2).any():
            raise EnsembleFormatError("every row of a classification matrix needs weight >= 2")
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)

    @property
    def rows(self) -> int:
        return self.bits.shape[0]

    @property
    def cols(self) -> int:
        return self.bits.shape[1]

    def __eq__(self, other):
        if not isinstance(other, ClassificationMatrix):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool((self.bits == other.bits).all())

    def __hash__(self):
        return hash((self.bits.shape, self.bits.tobytes()))

    def tolist(self) -> list[list[int]]:
        return self.bits.astype(int).tolist()


def to_matrix(ensemble: Ensemble) -> ClassificationMatrix:
    return ClassificationMatrix(ensemble.membership.copy())


def from_matrix(matrix: ClassificationMatrix) -> Ensemble:
    scopes = [tuple(int(j) + 1 for j in np.flatnonzero(row)) for row in matrix.bits]
    return Ensemble(matrix.cols, tuple(scopes))


def pair_cooccurrence(bits: np.ndarray) -> np.ndarray:
    b = bits.astype(np.int64)
    return b.T @ b


def is_fully_distinguishing(matrix: ClassificationMatrix | Ensemble) -> bool:
    """True iff every pair of columns shares a 1 in some row."""
    bits = matrix.membership if isinstance(matrix, Ensemble) else matrix.bits
    co = pair_cooccurrence(bits)
    return bool((co > 0).all())


def uncovered_pairs(ensemble: Ensemble) -> list[Pair]:
    """Class pairs ``(k, k2)``, ``k < k2``, that share no scope, in lexicographic order."""
    co = pair_cooccurrence(ensemble.membership)
    ks, k2s = np.nonzero(np.triu(co == 0, k=1))
    return [(int(a) + 1, int(b) + 1) for a, b in zip(ks, k2s)]


def output_sets_disjoint(ensemble: Ensemble, k: int, k2: int) -> bool:
    """Whether classes ``k`` and ``k2`` have disjoint output sets.

    Decided by the shared-scope criterion: the sets are disjoint exactly when
    some classifier was trained on both classes.
    """
    k, k2 = ensemble.check_class(k), ensemble.check_class(k2)
    if k == k2:
        raise ParameterError("distinguishability needs two different classes")
    a = ensemble.membership
    return bool((a[:, k - 1] & a[:, k2 - 1]).any())


def confusion_witness(ensemble: Ensemble, k: int, k2: int) -> OutputVector | None:
    """An output vector consistent with both ``k`` and ``k2``, or None if they are distinguishable.

    Classifiers that know exactly one of the two classes output it; classifiers
    that know neither output their lowest label.
    """
    if output_sets_disjoint(ensemble, k, k2):
        return None
    y = []
    for s in ensemble.scopes:
        if k in s:
            y.append(k)
        elif k2 in s:
            y.append(k2)
        else:
            y.append(s.classes[0])
    return tuple(y)


class OutputSet:
    """Lazy view of all joint outputs consistent with true class ``k``.

    Iteration runs an odometer over the classifiers that do not know ``k``,
    in classifier order with the first coordinate varying slowest and each
    coordinate starting from its lowest label.
    """

    def __init__(self, ensemble: Ensemble, k: int, cap: int = DEFAULT_ENUMERATION_CAP):
        self.ensemble = ensemble
        self.k = ensemble.check_class(k)
        self.cap = cap
        self.fixed = tuple(i for i, s in enumerate(ensemble.scopes) if self.k in s)
        self.free = tuple(i for i, s in enumerate(ensemble.scopes) if self.k not in s)

    @property
    def cardinality(self) -> int:
        return math.prod(len(self.ensemble.scopes[i]) for i in self.free)

    def __len__(self):
        return self.cardinality

    def __contains__(self, y) -> bool:
        if len(y) != self.ensemble.m:
            return False
        for v, s in zip(y, self.ensemble.scopes):
            if self.k in s:
                if v != self.k:
                    return False
            elif v not in s:
                return False
        return True

    def _guard(self):
        if self.cardinality > self.cap:
            raise SizeLimitError(
                f"output set of class {self.k} has {self.cardinality} elements, above the cap {self.cap}"
            )

    def __iter__(self) -> Iterator[OutputVector]:
        self._guard()
        base = [self.k] * self.ensemble.m
        choices = [self.ensemble.scopes[i].classes for i in self.free]
        for combo in itertools.product(*choices):
            for i, v in zip(self.free, combo):
                base[i] = v
            yield tuple(base)

    def batches(self, size: int = 65536) -> Iterator[np.ndarray]:
        """Enumerate as ``(n, m)`` integer arrays, same order as iteration."""
        self._guard()
        total = self.cardinality
        sizes = [len(self.ensemble.scopes[i]) for i in self.free]
        labels = self.ensemble.padded_scopes
        for start in range(0, total, size):
            idx = np.arange(start, min(start + size, total), dtype=np.int64)
            out = np.full((idx.size, self.ensemble.m), self.k, dtype=np.int64)
            # mixed-radix digits, last free coordinate fastest
            for pos in range(len(self.free) - 1, -1, -1):
                digit = idx % sizes[pos]
                idx = idx // sizes[pos]
                i = self.free[pos]
                out[:, i] = labels[i, digit]
            yield out

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """``n`` elements drawn uniformly (with replacement) from the set."""
        out = np.full((n, self.ensemble.m), self.k, dtype=np.int64)
        labels = self.ensemble.padded_scopes
        for i in self.free:
            digit = rng.integers(0, len(self.ensemble.scopes[i]), size=n)
            out[:, i] = labels[i, digit]
        return out
