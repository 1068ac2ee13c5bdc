"""Closed-form bounds on the number of local classifiers, and the output entropy.

All logarithms are natural. Rational prefactors are kept exact with
:class:`fractions.Fraction`; only the log factor is floating point.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .errors import BoundUndefinedError, ParameterError, PrecisionWarning

NEAR_INTEGER = 1e-9


def _check_kr(K: int, R: int) -> None:
    if K < 2 or not 2 <= R <= K:
        raise ParameterError(f"need 2 <= R <= K, got K={K}, R={R}")


def _check_prob(name: str, p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ParameterError(f"{name} must lie in (0, 1), got {p}")


def _ceil(x: float) -> int:
    nearest = round(x)
    if x != nearest and abs(x - nearest) < NEAR_INTEGER:
        warnings.warn(f"ceiling argument {x!r} is within {NEAR_INTEGER} of an integer", PrecisionWarning, stacklevel=3)
    return math.ceil(x)


def pair_ratio(K: int, R: int) -> Fraction:
    """Number of class pairs over pairs covered by one size-R scope."""
    return Fraction(K * (K - 1), R * (R - 1))


def perfect_lower_bound(K: int, R: int) -> int:
    """Fewest size-R scopes that can possibly cover every class pair."""
    _check_kr(K, R)
    return -(-K * (K - 1) // (R * (R - 1)))


def perfect_upper_bound_exists(K: int, R: int) -> int:
    """A size at which some fully distinguishing ensemble of size-R scopes is guaranteed to exist."""
    _check_kr(K, R)
    return _ceil(float(pair_ratio(K, R)) * math.log(K * (K - 1) / 2) + 1)


def perfect_upper_bound_whp(K: int, R: int, delta: float) -> int:
    """Size at which uniform random size-R scopes cover every pair with probability >= 1 - delta."""
    _check_kr(K, R)
    _check_prob("delta", delta)
    return max(0, _ceil(float(pair_ratio(K, R)) * math.log(K * (K - 1) / (2 * delta))))


def conditional_entropy(K: int, R: int, m: int) -> float:
    """Entropy (nats) of the outputs of ``m`` size-R classifiers given a uniform true class."""
    _check_kr(K, R)
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    return m * (K - R) / K * math.log(R)


def stat_lower_bound_raw(K: int, R: int, epsilon: float) -> float:
    """The Fano-type bound before ceiling and clamping; may be negative."""
    _check_kr(K, R)
    _check_prob("epsilon", epsilon)
    if R >= K:
        raise BoundUndefinedError("the statistical bounds need R < K")
    return K / R * ((1 - epsilon) * math.log(K) - math.log(2)) / math.log(R)


def stat_lower_bound(K: int, R: int, epsilon: float) -> int:
    """Fewest size-R classifiers any decoder needs for error probability <= epsilon.

    Clamped at 0; :func:`stat_lower_bound_raw` tells whether the bound is vacuous.
    """
    raw = stat_lower_bound_raw(K, R, epsilon)
    return max(0, _ceil(raw))


def stat_upper_bound(K: int, R: int, epsilon: float) -> int:
    """Random size-R classifiers with ML decoding reach error <= epsilon at this many."""
    _check_kr(K, R)
    _check_prob("epsilon", epsilon)
    if R >= K:
        raise BoundUndefinedError("the statistical upper bound needs R < K (one full classifier suffices)")
    return _ceil(float(Fraction(K * (K - 1), (K - R) * (R - 1))) * math.log(K / epsilon))


@dataclass(frozen=True)
class BoundTable:
    K: int
    R: int
    epsilon: float
    delta: float
    perfect_lb: int
    perfect_ub_exists: int
    perfect_ub_whp: int
    stat_lb: int | None
    stat_ub: int | None
    cond_entropy_per_m: float
    stat_lb_vacuous: bool
    stat_degenerate: bool


def bound_table(K: int, R: int, epsilon: float = 0.1, delta: float = 0.1) -> BoundTable:
    _check_kr(K, R)
    _check_prob("epsilon", epsilon)
    _check_prob("delta", delta)
    degenerate = R >= K
    stat_lb = stat_ub = None
    vacuous = False
    if not degenerate:
        raw = stat_lower_bound_raw(K, R, epsilon)
        vacuous = raw <= 0
        stat_lb = stat_lower_bound(K, R, epsilon)
        stat_ub = stat_upper_bound(K, R, epsilon)
    return BoundTable(
        K=K,
        R=R,
        epsilon=epsilon,
        delta=delta,
        perfect_lb=perfect_lower_bound(K, R),
        perfect_ub_exists=perfect_upper_bound_exists(K, R),
        perfect_ub_whp=perfect_upper_bound_whp(K, R, delta),
        stat_lb=stat_lb,
        stat_ub=stat_ub,
        cond_entropy_per_m=conditional_entropy(K, R, 1),
        stat_lb_vacuous=vacuous,
        stat_degenerate=degenerate,
    )


def format_bound_table(t: BoundTable, bits: bool = False) -> str:
    unit = "bits" if bits else "nats"
    h = t.cond_entropy_per_m / math.log(2) if bits else t.cond_entropy_per_m
    rows = [
        ("K", t.K),
        ("R", t.R),
        ("epsilon", t.epsilon),
        ("delta", t.delta),
        ("perfect_lb", t.perfect_lb),
        ("perfect_ub_exists", t.perfect_ub_exists),
        ("perfect_ub_whp", t.perfect_ub_whp),
        ("stat_lb", "degenerate (R = K)" if t.stat_degenerate else f"{t.stat_lb}" + (" (vacuous)" if t.stat_lb_vacuous else "")),
        ("stat_ub", "degenerate (R = K)" if t.stat_degenerate else t.stat_ub),
        (f"cond_entropy_per_m [{unit}]", f"{h:.6f}"),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)
