"""Command-line front end.

Exit status: 0 success, 1 verification failed, 2 usage or parameter error,
3 resource guard tripped.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

from . import __version__
from .bounds import bound_table, format_bound_table
from .cover import complete_cover, cover_report, greedy_cover, prune_cover, random_ensemble
from .decoders import DECODERS, decode
from .errors import CoverageError, DuplicateScopeWarning, ExpertCoverError, ParameterError, SizeLimitError
from .io import RunManifest, canonical_json, ensemble_digest, format_ensemble, load_ensemble
from .model import DEFAULT_ENUMERATION_CAP, uncovered_pairs
from .simulator import (
    coverage_probability,
    estimate_conditional_entropy,
    estimate_pe,
    ensemble_conditional_entropy,
    random_ensemble_pe,
    robustness_experiment,
    verify_adversarial,
)

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3
# paths are left out so that reruns elsewhere match; the digest identifies the input
_NOT_PARAMETERS = {"func", "ensemble", "out", "csv", "records", "command", "experiment"}


class _Fail(Exception):
    """Internal: verification failed, exit 1."""


def _manifest(args, seed=None, ensemble=None) -> RunManifest:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_PARAMETERS}
    name = args.command if args.command != "experiment" else f"experiment {args.experiment}"
    return RunManifest(
        subcommand=name,
        parameters=params,
        seed=seed,
        tool_version=__version__,
        ensemble_digest=ensemble_digest(ensemble) if ensemble is not None else None,
    )


def _emit(args, text: str, record: dict, manifest: RunManifest) -> None:
    if args.records:
        print(canonical_json({"manifest": manifest, "result": record}))
    else:
        print(text)


def _write_ensemble(path, ensemble, manifest) -> None:
    content = format_ensemble(ensemble, manifest)
    if path is None or path == "-":
        sys.stdout.write(content)
    else:
        Path(path).write_text(content)


def _scope_lists(scopes):
    return [list(s.classes) for s in scopes]


# -- subcommands --


def cmd_design(args) -> int:
    if args.method == "greedy":
        if args.m is not None:
            raise ParameterError("--m applies only to the random method")
        ensemble = greedy_cover(args.K, args.R)
        seed = None
    else:
        if args.m is None or args.seed is None:
            raise ParameterError("the random method requires --m and --seed")
        ensemble = random_ensemble(args.K, args.R, args.m, args.seed)
        seed = args.seed
    report = cover_report(ensemble, args.R)
    manifest = _manifest(args, seed, ensemble)
    if args.out:
        _write_ensemble(args.out, ensemble, manifest)
    record = {
        "covered": report.covered,
        "size_m": report.size_m,
        "lower_bound": report.lower_bound,
        "approx_ratio_bound": report.approx_ratio_bound,
        "uncovered": report.uncovered,
        "classifiers": ensemble.as_lists(),
    }
    _emit(args, report.summary(), record, manifest)
    if not args.out and not args.records:
        _write_ensemble(None, ensemble, manifest)
    return EXIT_OK


def cmd_verify(args) -> int:
    ensemble = load_ensemble(args.ensemble)
    manifest = _manifest(args, args.seed if args.samples else None, ensemble)
    if args.mode == "pairs":
        missing = uncovered_pairs(ensemble)
        lines = [f"{len(missing)} uncovered pairs"] + [f"  {a} {b}" for a, b in missing]
        _emit(args, "\n".join(lines), {"uncovered": missing, "passed": not missing}, manifest)
        return EXIT_OK if not missing else EXIT_FAILED
    rep = verify_adversarial(ensemble, args.decoder, cap=args.cap, samples=args.samples, seed=args.seed)
    kind = "exhaustive" if rep.exhaustive else "sampled"
    if rep.passed:
        text = f"pass: {rep.checked} outputs checked ({kind}), 0 counterexamples, decoder {rep.decoder}"
    else:
        cx = rep.counterexample
        text = (
            f"FAIL: decoder {rep.decoder} maps outputs {','.join(map(str, cx.outputs))} of class "
            f"{cx.true_class} to {cx.predicted}"
        )
    _emit(args, text, rep, manifest)
    return EXIT_OK if rep.passed else EXIT_FAILED


def cmd_complete(args) -> int:
    ensemble = load_ensemble(args.ensemble)
    added = complete_cover(ensemble, args.R)
    result = ensemble.extended(added)
    manifest = _manifest(args, None, result)
    if args.out:
        _write_ensemble(args.out, result, manifest)
    lines = [f"{len(added)} scopes added"] + [f"  + {list(s.classes)}" for s in added]
    _emit(args, "\n".join(lines), {"added": _scope_lists(added), "size_m": result.m}, manifest)
    if not args.out and not args.records:
        _write_ensemble(None, result, manifest)
    return EXIT_OK


def cmd_prune(args) -> int:
    pool = load_ensemble(args.ensemble)
    result = prune_cover(pool)
    kept = list(result.scopes)
    removed = []
    for s in pool.scopes:
        if s in kept:
            kept.remove(s)
        else:
            removed.append(s)
    manifest = _manifest(args, None, result)
    if args.out:
        _write_ensemble(args.out, result, manifest)
    lines = [f"{len(removed)} scopes removed, {result.m} kept"] + [f"  - {list(s.classes)}" for s in removed]
    _emit(args, "\n".join(lines), {"removed": _scope_lists(removed), "size_m": result.m}, manifest)
    if not args.out and not args.records:
        _write_ensemble(None, result, manifest)
    return EXIT_OK


def _parse_votes(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ParameterError(f"votes must be comma-separated integers: {text!r}") from exc


def _fmt_score(x: float) -> str:
    return "-inf" if x == -math.inf else f"{x:.6g}"


def cmd_decode(args) -> int:
    ensemble = load_ensemble(args.ensemble)
    res = decode(ensemble, _parse_votes(args.votes), args.decoder)
    manifest = _manifest(args, None, ensemble)
    lines = [f"predicted {res.predicted}"]
    lines += [f"  class {k}: {_fmt_score(s)}" for k, s in zip(ensemble.classes, res.scores)]
    lines.append(f"tie={str(res.tie).lower()} fallback={str(res.fallback_used).lower()}")
    _emit(args, "\n".join(lines), res, manifest)
    return EXIT_OK


def cmd_simulate(args) -> int:
    ensemble = load_ensemble(args.ensemble)
    manifest = _manifest(args, args.seed, ensemble)
    if args.drop is None:
        rep = estimate_pe(ensemble, args.decoder, args.trials, args.seed, workers=args.workers)
        _emit(args, rep.summary(), rep, manifest)
        return EXIT_OK
    rob = robustness_experiment(
        ensemble, args.drop, args.decoder, args.trials, args.seed, workers=args.workers, max_subsets=args.max_subsets
    )
    table = rob.to_csv()
    if args.csv:
        Path(args.csv).write_text("# manifest: " + canonical_json(manifest) + "\n" + table)
    text = (
        f"drop={rob.drop} removals={len(rob.rows)}{' (sampled)' if rob.sampled else ''} "
        f"mean_accuracy={rob.mean_accuracy:.6g} std={rob.std_accuracy:.6g}\n" + table.rstrip("\n")
    )
    _emit(args, text, rob, manifest)
    return EXIT_OK


def cmd_bounds(args) -> int:
    table = bound_table(args.K, args.R, args.epsilon, args.delta)
    manifest = _manifest(args)
    _emit(args, format_bound_table(table, bits=args.bits), table, manifest)
    return EXIT_OK


def cmd_experiment_coverage(args) -> int:
    rep = coverage_probability(args.K, args.R, args.m, args.seeds, base_seed=args.base_seed)
    manifest = _manifest(args, args.base_seed)
    text = (
        f"K={rep.K} R={rep.R} m={rep.m}: {rep.covered}/{rep.seeds} covering "
        f"(fraction {rep.fraction:.6g}, 95%CI [{rep.ci_low:.6g}, {rep.ci_high:.6g}])"
    )
    _emit(args, text, rep, manifest)
    return EXIT_OK


def cmd_experiment_entropy(args) -> int:
    ensemble = load_ensemble(args.ensemble)
    est = estimate_conditional_entropy(ensemble, args.samples, args.seed)
    exact = ensemble_conditional_entropy(ensemble)
    rel = abs(est - exact) / exact if exact else abs(est)
    manifest = _manifest(args, args.seed, ensemble)
    record = {"estimate": est, "exact": exact, "relative_error": rel}
    text = f"H(Y|Z) plug-in {est:.6f} nats, exact {exact:.6f} nats, relative error {rel:.3%}"
    _emit(args, text, record, manifest)
    return EXIT_OK


def cmd_experiment_random(args) -> int:
    rows = random_ensemble_pe(args.K, args.R, args.m, args.seeds, args.decoder, args.trials, args.seed)
    manifest = _manifest(args, args.seed)
    text = "m,mean_p_e,std_p_e\n" + "\n".join(f"{m},{mean!r},{std!r}" for m, mean, std in rows)
    _emit(args, text, {"rows": rows}, manifest)
    return EXIT_OK


# -- parser --


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="expertcover", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def records(sp):
        sp.add_argument("--records", action="store_true", help="print one canonical JSON record")

    d = sub.add_parser("design", help="build an ensemble of size-R scopes")
    d.add_argument("K", type=int)
    d.add_argument("R", type=int)
    d.add_argument("method", choices=["greedy", "random"])
    d.add_argument("--m", type=int)
    d.add_argument("--seed", type=int)
    d.add_argument("-o", "--out")
    records(d)
    d.set_defaults(func=cmd_design)

    v = sub.add_parser("verify", help="check the covering condition or decode every adversarial output")
    v.add_argument("ensemble")
    v.add_argument("--mode", choices=["pairs", "exhaustive"], default="pairs")
    v.add_argument("--decoder", choices=DECODERS, default="vote")
    v.add_argument("--cap", type=int, default=DEFAULT_ENUMERATION_CAP)
    v.add_argument("--samples", type=int, help="sample this many outputs per class above the cap")
    v.add_argument("--seed", type=int, default=0)
    records(v)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("complete", help="add size-R scopes until every pair is covered")
    c.add_argument("ensemble")
    c.add_argument("R", type=int)
    c.add_argument("-o", "--out")
    records(c)
    c.set_defaults(func=cmd_complete)

    pr = sub.add_parser("prune", help="keep a small covering subset of a pool")
    pr.add_argument("ensemble")
    pr.add_argument("-o", "--out")
    records(pr)
    pr.set_defaults(func=cmd_prune)

    dc = sub.add_parser("decode", help="decode one comma-separated output vector")
    dc.add_argument("ensemble")
    dc.add_argument("votes")
    dc.add_argument("--decoder", choices=DECODERS, default="vote")
    records(dc)
    dc.set_defaults(func=cmd_decode)

    s = sub.add_parser("simulate", help="Monte Carlo error probability under uniform noise")
    s.add_argument("ensemble")
    s.add_argument("decoder", choices=DECODERS)
    s.add_argument("trials", type=int)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--drop", type=int, help="remove every subset of this many classifiers")
    s.add_argument("--max-subsets", type=int, default=10**4)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--csv", help="write the per-removal table here")
    records(s)
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bounds", help="bound table for (K, R, epsilon, delta)")
    b.add_argument("K", type=int)
    b.add_argument("R", type=int)
    b.add_argument("epsilon", type=float, nargs="?", default=0.1)
    b.add_argument("delta", type=float, nargs="?", default=0.1)
    b.add_argument("--bits", action="store_true", help="show entropy in bits")
    records(b)
    b.set_defaults(func=cmd_bounds)

    e = sub.add_parser("experiment", help="model-based experiment harnesses")
    esub = e.add_subparsers(dest="experiment", required=True)
    ec = esub.add_parser("coverage", help="probability that random scopes cover every pair")
    ec.add_argument("K", type=int)
    ec.add_argument("R", type=int)
    ec.add_argument("m", type=int)
    ec.add_argument("--seeds", type=int, default=1000)
    ec.add_argument("--base-seed", type=int, required=True)
    records(ec)
    ec.set_defaults(func=cmd_experiment_coverage)
    ee = esub.add_parser("entropy", help="plug-in output entropy against the exact value")
    ee.add_argument("ensemble")
    ee.add_argument("--samples", type=int, default=10**6)
    ee.add_argument("--seed", type=int, required=True)
    records(ee)
    ee.set_defaults(func=cmd_experiment_entropy)
    er = esub.add_parser("random", help="error probability of random ensembles by size")
    er.add_argument("K", type=int)
    er.add_argument("R", type=int)
    er.add_argument("--m", type=int, nargs="+", required=True)
    er.add_argument("--seeds", type=int, default=20)
    er.add_argument("--trials", type=int, default=10_000)
    er.add_argument("--decoder", choices=DECODERS, default="ml")
    er.add_argument("--seed", type=int, required=True)
    records(er)
    er.set_defaults(func=cmd_experiment_random)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DuplicateScopeWarning)
            return args.func(args)
    except SizeLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ExpertCoverError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
