"""Noise channel, error-probability estimation and verification harnesses.

The channel: a classifier trained on the true class outputs it; any other
classifier outputs a uniform label from its own scope, independently of the
rest. Every listed classifier, duplicates included, gets its own noise.

Monte Carlo draws use :class:`~expertcover.rng.CounterRNG`. Trial ``t`` takes
its true class from slot 0 and classifier ``i``'s noise from slot ``i + 1``,
so results do not depend on how trials are split across workers.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .cover import random_ensemble
from .decoders import DECODERS, predict_batch
from .errors import ParameterError, SizeLimitError
from .io import ensemble_digest
from .model import DEFAULT_ENUMERATION_CAP, Ensemble, OutputSet, OutputVector, is_fully_distinguishing, uncovered_pairs
from .rng import MAX_SLOTS, MAX_TRIALS, CounterRNG

BLOCK = 1 << 16
MAX_REMOVAL_SUBSETS = 10**4


def wilson_interval(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    if n <= 0:
        raise ParameterError("Wilson interval needs n >= 1")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # the endpoints are exact at the extremes; rounding would otherwise leave them off by an ulp
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


def _check_decoder(decoder: str) -> None:
    if decoder not in DECODERS:
        raise ParameterError(f"unknown decoder {decoder!r}; choose from {DECODERS}")


# -- channel --


@dataclass(frozen=True)
class ChannelSample:
    true_class: int
    outputs: OutputVector
    seed_state: tuple[int, int]  # (seed, trial)


def sample_channel(ensemble: Ensemble, k: int, rng: np.random.Generator) -> OutputVector:
    """One joint output for true class ``k`` using a numpy generator."""
    k = ensemble.check_class(k)
    return tuple(k if k in s else s.classes[int(rng.integers(len(s)))] for s in ensemble.scopes)


def _channel(ensemble: Ensemble, rng: CounterRNG, trials: np.ndarray, Z: np.ndarray) -> np.ndarray:
    if ensemble.m + 1 > MAX_SLOTS:
        raise SizeLimitError(f"at most {MAX_SLOTS - 1} classifiers supported by the simulator")
    Y = np.empty((trials.size, ensemble.m), dtype=np.int64)
    labels = ensemble.padded_scopes
    member = ensemble.membership
    for i, size in enumerate(ensemble.scope_sizes):
        noise = labels[i, rng.integers(trials, i + 1, int(size))]
        Y[:, i] = np.where(member[i, Z - 1], Z, noise)
    return Y


def draw_trials(ensemble: Ensemble, seed: int, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    """True classes ``Z`` (shape ``(n,)``) and outputs ``Y`` (shape ``(n, m)``) for trials ``start..stop-1``."""
    if not 0 <= start <= stop <= MAX_TRIALS:
        raise ParameterError(f"trial range [{start}, {stop}) invalid")
    rng = CounterRNG(seed)
    trials = np.arange(start, stop, dtype=np.uint64)
    Z = rng.integers(trials, 0, ensemble.num_classes) + 1
    return Z, _channel(ensemble, rng, trials, Z)


def draw_trial(ensemble: Ensemble, seed: int, trial: int) -> ChannelSample:
    Z, Y = draw_trials(ensemble, seed, trial, trial + 1)
    return ChannelSample(int(Z[0]), tuple(int(v) for v in Y[0]), (int(seed), int(trial)))


def channel_outputs(ensemble: Ensemble, k: int, seed: int, n: int) -> np.ndarray:
    """``n`` joint outputs with the true class fixed to ``k``."""
    k = ensemble.check_class(k)
    trials = np.arange(n, dtype=np.uint64)
    return _channel(ensemble, CounterRNG(seed), trials, np.full(n, k, dtype=np.int64))


# -- error probability --


@dataclass(frozen=True)
class SimulationReport:
    trials: int
    errors: int
    p_e_hat: float
    ci_low: float
    ci_high: float
    decoder: str
    seed: int
    ensemble_digest: str

    def summary(self) -> str:
        return (
            f"decoder={self.decoder} trials={self.trials} errors={self.errors} "
            f"p_e={self.p_e_hat:.6g} 95%CI=[{self.ci_low:.6g}, {self.ci_high:.6g}] seed={self.seed}"
        )


def _block_errors(args) -> int:
    ensemble, decoder, seed, start, stop = args
    Z, Y = draw_trials(ensemble, seed, start, stop)
    return int((predict_batch(ensemble, Y, decoder) != Z).sum())


def estimate_pe(
    ensemble: Ensemble,
    decoder: str = "vote",
    trials: int = 10_000,
    seed: int = 0,
    prior: str = "uniform",
    workers: int = 1,
) -> SimulationReport:
    """Monte Carlo error probability with a uniform prior on the true class."""
    _check_decoder(decoder)
    if prior != "uniform":
        raise ParameterError("only the uniform class prior is supported")
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    jobs = [(ensemble, decoder, seed, s, min(s + BLOCK, trials)) for s in range(0, trials, BLOCK)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_block_errors, jobs))
    else:
        counts = [_block_errors(j) for j in jobs]
    errors = sum(counts)
    lo, hi = wilson_interval(errors, trials)
    return SimulationReport(trials, errors, errors / trials, lo, hi, decoder, int(seed), ensemble_digest(ensemble))


# -- adversarial verification --


@dataclass(frozen=True)
class Counterexample:
    true_class: int
    outputs: OutputVector
    predicted: int


@dataclass(frozen=True)
class AdversarialReport:
    passed: bool
    decoder: str
    exhaustive: bool
    checked: int
    counterexample: Counterexample | None


def verify_adversarial(
    ensemble: Ensemble,
    decoder: str = "vote",
    cap: int = DEFAULT_ENUMERATION_CAP,
    samples: int | None = None,
    seed: int = 0,
) -> AdversarialReport:
    """Check ``decode(y) == k`` for every class ``k`` and every output ``y`` consistent with it.

    Output sets above ``cap`` are sampled uniformly (``samples`` draws each,
    seeded) when ``samples`` is given, otherwise :class:`SizeLimitError`.
    Stops at the first counterexample.
    """
    _check_decoder(decoder)
    exhaustive = True
    checked = 0
    for k in ensemble.classes:
        outputs = OutputSet(ensemble, k, cap=cap)
        if outputs.cardinality <= cap:
            batches = outputs.batches()
        elif samples is not None:
            exhaustive = False
            batches = [outputs.sample(samples, np.random.default_rng([seed, k]))]
        else:
            raise SizeLimitError(
                f"output set of class {k} has {outputs.cardinality} elements (cap {cap}); enable sampling"
            )
        for Y in batches:
            pred = predict_batch(ensemble, Y, decoder)
            bad = np.flatnonzero(pred != k)
            if bad.size:
                j = int(bad[0])
                checked += j + 1
                cx = Counterexample(k, tuple(int(v) for v in Y[j]), int(pred[j]))
                return AdversarialReport(False, decoder, exhaustive, checked, cx)
            checked += len(Y)
    return AdversarialReport(True, decoder, exhaustive, checked, None)


# -- random construction --


@dataclass(frozen=True)
class CoverageReport:
    K: int
    R: int
    m: int
    seeds: int
    covered: int
    fraction: float
    ci_low: float
    ci_high: float


def coverage_probability(K: int, R: int, m: int, seeds: int, base_seed: int = 0) -> CoverageReport:
    """Fraction of seeded random ensembles (seeds ``base_seed .. base_seed+seeds-1``) that cover every pair."""
    if seeds < 1:
        raise ParameterError("seeds must be >= 1")
    hits = sum(is_fully_distinguishing(random_ensemble(K, R, m, base_seed + s)) for s in range(seeds))
    lo, hi = wilson_interval(hits, seeds)
    return CoverageReport(K, R, m, seeds, hits, hits / seeds, lo, hi)


# -- robustness to missing classifiers --


@dataclass(frozen=True)
class RemovalRow:
    removed: tuple[int, ...]  # 1-based classifier positions
    uncovered: int
    report: SimulationReport

    @property
    def accuracy(self) -> float:
        return 1.0 - self.report.p_e_hat


@dataclass(frozen=True)
class RobustnessReport:
    drop: int
    decoder: str
    sampled: bool
    rows: tuple[RemovalRow, ...]
    mean_accuracy: float
    std_accuracy: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["removed", "uncovered_pairs", "trials", "errors", "p_e_hat", "ci_low", "ci_high"])
        for r in self.rows:
            rep = r.report
            w.writerow([
                " ".join(map(str, r.removed)), r.uncovered, rep.trials, rep.errors,
                repr(rep.p_e_hat), repr(rep.ci_low), repr(rep.ci_high),
            ])
        return buf.getvalue()


def _removal_subsets(m: int, drop: int, seed: int, limit: int) -> tuple[list[tuple[int, ...]], bool]:
    total = math.comb(m, drop)
    if total <= limit:
        return list(itertools.combinations(range(m), drop)), False
    rng = np.random.default_rng([seed, m, drop])
    picked: set[tuple[int, ...]] = set()
    while len(picked) < limit:
        picked.add(tuple(sorted(int(i) for i in rng.choice(m, size=drop, replace=False))))
    return sorted(picked), True


def robustness_experiment(
    ensemble: Ensemble,
    drop: int,
    decoder: str = "vote",
    trials: int = 10_000,
    seed: int = 0,
    workers: int = 1,
    max_subsets: int = MAX_REMOVAL_SUBSETS,
) -> RobustnessReport:
    """Error rate after removing each size-``drop`` subset of classifiers.

    All removals reuse the same trial seed. Above ``max_subsets`` subsets a
    seeded sample of distinct subsets is used instead.
    """
    _check_decoder(decoder)
    if not 0 <= drop < ensemble.m:
        raise ParameterError(f"drop must satisfy 0 <= drop < m={ensemble.m}, got {drop}")
    subsets, sampled = _removal_subsets(ensemble.m, drop, seed, max_subsets)
    rows = []
    for sub in subsets:
        reduced = ensemble.without(sub)
        rep = estimate_pe(reduced, decoder, trials, seed, workers=workers)
        rows.append(RemovalRow(tuple(i + 1 for i in sub), len(uncovered_pairs(reduced)), rep))
    acc = np.array([r.accuracy for r in rows])
    return RobustnessReport(drop, decoder, sampled, tuple(rows), float(acc.mean()), float(acc.std()))


# -- entropy --


def ensemble_conditional_entropy(ensemble: Ensemble) -> float:
    """Exact output entropy (nats) given a uniform true class, for any scope sizes."""
    return sum(
        math.log(len(s)) for k in ensemble.classes for s in ensemble.scopes if k not in s
    ) / ensemble.num_classes


def plugin_entropy(rows: np.ndarray) -> float:
    _, counts = np.unique(rows, axis=0, return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log(p)).sum())


def estimate_conditional_entropy(ensemble: Ensemble, samples: int, seed: int) -> float:
    """Plug-in estimate of the output entropy given the class, as H(Z, Y) - H(Z)."""
    Z, Y = draw_trials(ensemble, seed, 0, samples)
    joint = np.column_stack([Z, Y])
    return plugin_entropy(joint) - plugin_entropy(Z[:, None])


# -- random configurations --


def random_ensemble_pe(
    K: int, R: int, ms: Sequence[int], seeds: int, decoder: str = "ml", trials: int = 10_000, seed: int = 0
) -> list[tuple[int, float, float]]:
    """Mean and standard deviation of estimated error over ``seeds`` random ensembles, per size ``m``."""
    out = []
    for m in ms:
        pes = [estimate_pe(random_ensemble(K, R, m, s), decoder, trials, seed + s).p_e_hat for s in range(seeds)]
        out.append((int(m), float(np.mean(pes)), float(np.std(pes))))
    return out
