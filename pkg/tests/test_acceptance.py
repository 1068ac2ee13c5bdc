"""Acceptance criteria, one test each.

Every test prints a single ``[PASS]``/``[FAIL]`` line (run with ``-s`` to see
them) and then asserts, so a failure still reports its measured values.
"""

import json
import math
import time
import warnings

import numpy as np
import pytest

from expertcover.bounds import conditional_entropy, perfect_lower_bound, perfect_upper_bound_whp, stat_upper_bound
from expertcover.cli import main
from expertcover.cover import greedy_cover, optimal_cover, random_ensemble
from expertcover.decoders import DECODERS, decode
from expertcover.errors import DuplicateScopeWarning
from expertcover.io import load_ensemble
from expertcover.model import OutputSet, confusion_witness, is_fully_distinguishing, uncovered_pairs
from expertcover.simulator import (
    coverage_probability,
    estimate_conditional_entropy,
    estimate_pe,
    robustness_experiment,
    verify_adversarial,
)


def report(n, ok, detail, elapsed, limit):
    ok = ok and elapsed < limit
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail} ({elapsed:.2f}s, limit {limit}s)")
    return ok


def test_criterion_01_greedy_example(tmp_path, capsys):
    t0 = time.perf_counter()
    code = main(["design", "5", "3", "greedy", "-o", str(tmp_path / "e.json")])
    summary = capsys.readouterr().out.strip()
    e = load_ensemble(tmp_path / "e.json")
    elapsed = time.perf_counter() - t0
    expected = [[1, 2, 3], [1, 4, 5], [2, 3, 4], [2, 3, 5]]
    ok = code == 0 and e.as_lists() == expected and is_fully_distinguishing(e) and summary == "covered, size 4, lower bound 4"
    with capsys.disabled():
        assert report(1, ok, f"design 5 3 greedy -> {e.as_lists()}", elapsed, 1.0)


def test_criterion_02_one_vs_one(tmp_path, capsys):
    t0 = time.perf_counter()
    code = main(["design", "10", "2", "greedy", "-o", str(tmp_path / "e.json")])
    capsys.readouterr()
    e = load_ensemble(tmp_path / "e.json")
    elapsed = time.perf_counter() - t0
    all_pairs = [[a, b] for a in range(1, 11) for b in range(a + 1, 11)]
    ok = code == 0 and e.m == 45 and sorted(e.as_lists()) == all_pairs
    with capsys.disabled():
        assert report(2, ok, f"design 10 2 greedy -> {e.m} scopes, all pairs: {sorted(e.as_lists()) == all_pairs}", elapsed, 1.0)


def test_criterion_03_cover_floor(capsys):
    t0 = time.perf_counter()
    bad = []
    for K in range(3, 13):
        for R in range(2, K + 1):
            lb = perfect_lower_bound(K, R)
            g = greedy_cover(K, R).m
            if g < lb:
                bad.append(("greedy", K, R, g, lb))
            if K <= 7:
                opt = optimal_cover(K, R).m
                ratio_cap = math.log(R * (R - 1) / 2) + 1
                if opt < lb or g / opt > ratio_cap + 1e-12:
                    bad.append(("optimal", K, R, g, opt, lb))
    elapsed = time.perf_counter() - t0
    with capsys.disabled():
        assert report(3, not bad, f"floor and ratio violations: {bad or 'none'}", elapsed, 300.0)


def test_criterion_04_zero_error(capsys):
    t0 = time.perf_counter()
    checked, failures = 0, []
    for K in range(2, 7):
        for R in range(2, K + 1):
            e = greedy_cover(K, R)
            for d in DECODERS:
                rep = verify_adversarial(e, d)
                checked += rep.checked
                if not (rep.passed and rep.exhaustive):
                    failures.append((K, R, d, rep.counterexample))
    elapsed = time.perf_counter() - t0
    with capsys.disabled():
        assert report(4, not failures, f"{checked} outputs checked, counterexamples: {failures or 0}", elapsed, 60.0)


def test_criterion_05_converse(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    found, pairs_checked, failures, seed = 0, 0, [], 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DuplicateScopeWarning)
        while found < 200:
            K = int(rng.integers(3, 8))
            R = int(rng.integers(2, min(K, 5)))
            # small enough that every output set stays under the lookup cap
            m = int(rng.integers(1, 9))
            e = random_ensemble(K, R, m, seed)
            seed += 1
            missing = uncovered_pairs(e)
            if not missing:
                continue
            found += 1
            sets = {k: OutputSet(e, k) for k in e.classes}
            for k, k2 in missing:
                pairs_checked += 1
                y = confusion_witness(e, k, k2)
                if y is None or y not in sets[k] or y not in sets[k2]:
                    failures.append(("witness", seed - 1, k, k2))
                    continue
                for d in DECODERS:
                    # one prediction cannot equal both true classes
                    pred = decode(e, y, d).predicted
                    if pred == k and pred == k2:  # pragma: no cover
                        failures.append((d, seed - 1, k, k2))
    elapsed = time.perf_counter() - t0
    with capsys.disabled():
        assert report(5, not failures, f"{found} non-covering ensembles, {pairs_checked} uncovered pairs each confused", elapsed, 60.0)


@pytest.mark.parametrize("K,R,delta", [(8, 3, 0.1), (10, 4, 0.1), (10, 4, 0.01)])
def test_criterion_06_coverage_probability(capsys, K, R, delta):
    t0 = time.perf_counter()
    m = perfect_upper_bound_whp(K, R, delta)
    rep = coverage_probability(K, R, m, 2000, base_seed=0)
    elapsed = time.perf_counter() - t0
    ok = rep.ci_low >= 1 - delta - 0.02
    with capsys.disabled():
        assert report(
            6, ok, f"K={K} R={R} delta={delta} m={m}: {rep.covered}/2000 covered, Wilson low {rep.ci_low:.4f} >= {1 - delta - 0.02:.2f}", elapsed, 300.0
        )


def test_criterion_07_entropy(capsys):
    t0 = time.perf_counter()
    K, R, m = 10, 4, 6
    exact = conditional_entropy(K, R, m)
    est = estimate_conditional_entropy(random_ensemble(K, R, m, 0), 10**6, 1)
    rel = abs(est - exact) / exact
    elapsed = time.perf_counter() - t0
    with capsys.disabled():
        assert report(7, rel < 0.01 and abs(exact - 4.9907) < 1e-4, f"plug-in {est:.5f} vs {exact:.5f} nats, relative error {rel:.3%}", elapsed, 60.0)


@pytest.mark.parametrize("K,R,eps", [(10, 4, 0.05), (20, 4, 0.1), (12, 3, 0.1)])
def test_criterion_08_statistical_guarantee(capsys, K, R, eps):
    t0 = time.perf_counter()
    m = stat_upper_bound(K, R, eps)
    rep = estimate_pe(random_ensemble(K, R, m, 0), "ml", 2 * 10**5, 1)
    elapsed = time.perf_counter() - t0
    with capsys.disabled():
        assert report(
            8, rep.ci_high <= eps + 0.01, f"K={K} R={R} eps={eps} m={m}: p_e={rep.p_e_hat:.2e}, upper {rep.ci_high:.2e} <= {eps + 0.01:.2f}", elapsed, 300.0
        )


def test_criterion_09_analytic_channel(capsys):
    from fractions import Fraction

    from expertcover.model import Ensemble
    from oracles import exact_error_probability, vote_by_hand

    t0 = time.perf_counter()
    e = Ensemble(4, [[1, 2]])
    exact = exact_error_probability(4, [{1, 2}], lambda y: vote_by_hand(4, [{1, 2}], y))
    rep = estimate_pe(e, "vote", 10**5, 0)
    elapsed = time.perf_counter() - t0
    ok = exact == Fraction(1, 2) and rep.ci_low <= 0.5 <= rep.ci_high
    with capsys.disabled():
        assert report(9, ok, f"exact {exact}, simulated {rep.p_e_hat:.4f} CI [{rep.ci_low:.4f}, {rep.ci_high:.4f}]", elapsed, 10.0)


def test_criterion_10_robustness_structure(capsys):
    t0 = time.perf_counter()
    bad, rows = [], 0
    for K, R in [(5, 3), (6, 3), (7, 3), (8, 4), (10, 4), (10, 2)]:
        e = greedy_cover(K, R)
        rob = robustness_experiment(e, 1, "vote", 5000, 1)
        for row in rob.rows:
            rows += 1
            missing = len(uncovered_pairs(e.without([i - 1 for i in row.removed])))
            if row.uncovered != missing or (missing == 0 and row.report.errors != 0):
                bad.append((K, R, row.removed))
    elapsed = time.perf_counter() - t0
    with capsys.disabled():
        assert report(10, not bad, f"{rows} removal rows cross-checked, mismatches: {bad or 0}", elapsed, 120.0)


def test_criterion_11_determinism(tmp_path, capsys):
    t0 = time.perf_counter()
    runs = []
    for rep in range(2):
        d = tmp_path / f"run{rep}"
        d.mkdir()
        outs = []
        for argv in (
            ["design", "10", "4", "random", "--m", "25", "--seed", "3", "-o", str(d / "r.json")],
            ["design", "8", "3", "greedy", "-o", str(d / "g.json")],
            ["complete", str(d / "r.json"), "4", "-o", str(d / "c.json")],
            ["prune", str(d / "c.json"), "-o", str(d / "p.json")],
            ["simulate", str(d / "r.json"), "ml", "200000", "--seed", "5", "--workers", "2", "--records"],
            ["simulate", str(d / "g.json"), "vote", "5000", "--seed", "5", "--drop", "1", "--csv", str(d / "t.csv")],
            ["verify", str(d / "g.json"), "--mode", "exhaustive", "--decoder", "ml", "--records"],
            ["experiment", "coverage", "8", "3", "40", "--seeds", "200", "--base-seed", "9", "--records"],
            ["experiment", "entropy", str(d / "g.json"), "--samples", "50000", "--seed", "2", "--records"],
            ["experiment", "random", "6", "3", "--m", "2", "6", "--seeds", "4", "--trials", "1000", "--seed", "1"],
        ):
            main(argv)
            outs.append(capsys.readouterr().out)
        files = {p.name: p.read_bytes() for p in sorted(d.iterdir())}
        runs.append((outs, files))
    serial = main(["simulate", str(tmp_path / "run0" / "r.json"), "ml", "200000", "--seed", "5", "--records"])
    serial_result = json.loads(capsys.readouterr().out)["result"]
    parallel_result = json.loads(runs[0][0][4])["result"]
    elapsed = time.perf_counter() - t0
    ok = runs[0] == runs[1] and serial == 0 and serial_result == parallel_result
    with capsys.disabled():
        assert report(11, ok, f"{len(runs[0][0])} subcommands, {len(runs[0][1])} files byte-identical across reruns and worker counts", elapsed, 60.0)
