"""Command-line front end: simulate -> sample -> fit -> predict / evaluate.

Exit codes: 0 success, 2 bad flags, 3 extinct population, 4 unreadable
input file, 5 fit failure, 6 locus-count mismatch.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .dataset import evaluation_table, log_log_summary, sample_dataset, sample_mixture, singleton_proportion
from .fwsim import ExtinctionError, PopulationCapError, SimParams, linspace_rates, shift_locations, simulate
from .mixture import FitError, FitOptions, fit, fit_sweep

EXIT_FLAGS, EXIT_EXTINCT, EXIT_INPUT, EXIT_FIT, EXIT_MISMATCH = 2, 3, 4, 5, 6

log = logging.getLogger("disclapmix")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _range(text: str, conv=float) -> tuple:
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected a:b, got {text!r}")
    try:
        return conv(parts[0]), conv(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from None


def _clusters(text: str) -> tuple[int, int]:
    if ":" in text:
        lo, hi = _range(text, int)
    else:
        try:
            lo = hi = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer or a:b, got {text!r}") from None
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=1, help="random seed (default 1)")
    common.add_argument("--quiet", action="store_true", help="suppress summaries on stdout")

    parser = argparse.ArgumentParser(prog="disclapmix", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="forward Fisher-Wright simulation")
    p.add_argument("--g", type=int, required=True, help="generations")
    p.add_argument("--k", type=int, required=True, help="initial population size")
    p.add_argument("--r", type=int, required=True, help="number of loci")
    mu = p.add_mutually_exclusive_group(required=True)
    mu.add_argument("--mu", type=_float_list, help="per-locus mutation rates, comma separated")
    mu.add_argument("--mu-range", type=_range, help="a:b, r evenly spaced rates")
    p.add_argument("--alpha", type=float, default=1.0, help="expected offspring per individual")
    p.add_argument("--shift", type=_int_list, help="add this allele vector after simulation")
    p.add_argument("--cap", type=int, default=10**8, help="abort above this population size")
    p.add_argument("--out", required=True)

    p = sub.add_parser("sample", parents=[common], help="draw a dataset from one or two populations")
    p.add_argument("--pop", nargs="+", required=True, metavar="CSV", help="one population file, or two with --w1")
    p.add_argument("--n", type=int, required=True, help="dataset size")
    p.add_argument("--w1", type=float, help="expected share drawn from the first population")
    p.add_argument("--out", required=True, help="dataset CSV (one row per individual)")
    p.add_argument("--unique-out", help="unique-haplotype CSV (default: <out>.unique.csv)")

    p = sub.add_parser("fit", parents=[common], help="fit a discrete Laplace mixture by EM")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--clusters", type=_clusters, required=True, help="cluster count c or range a:b")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1, help="fit a cluster range with this many threads")
    p.add_argument("--out", required=True, help="model JSON (single c) or output directory (range)")
    p.add_argument("--dispersions-out", help="also write a cluster,locus,dispersion CSV (single c)")

    p = sub.add_parser("predict", parents=[common], help="predict haplotype frequencies")
    p.add_argument("--model", required=True)
    p.add_argument("--haplotypes", required=True, help="haplotype CSV")
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", parents=[common], help="compare predicted with true frequencies")
    p.add_argument("--unique", required=True, help="unique-haplotype CSV from `sample`")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    return parser


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


def cmd_simulate(args, parser) -> None:
    if args.mu is not None:
        rates = tuple(args.mu)
    else:
        rates = linspace_rates(args.mu_range[0], args.mu_range[1], max(args.r, 1))
    try:
        params = SimParams(args.g, args.k, args.r, rates, args.alpha, args.seed, args.cap)
    except ValueError as exc:
        parser.error(str(exc))
    if args.shift is not None and len(args.shift) != args.r:
        parser.error(f"--shift needs {args.r} values, got {len(args.shift)}")
    try:
        table = simulate(params)
    except ExtinctionError as exc:
        raise CliError(EXIT_EXTINCT, f"population extinct at generation {exc.generation}") from None
    except PopulationCapError as exc:
        raise CliError(EXIT_EXTINCT, str(exc)) from None
    if args.shift is not None:
        table = shift_locations(table, np.array(args.shift))
    io.write_population(args.out, table)
    if not args.quiet:
        print(f"individuals: {table.size}")
        print(f"unique haplotypes: {len(table)}")
        top = np.argsort(-table.counts, kind="stable")[:5]
        print(",".join(table.locus_names) + ",N")
        for i in top:
            print(",".join(str(int(a)) for a in table.haplotypes[i]) + f",{int(table.counts[i])}")


def cmd_sample(args, parser) -> None:
    if len(args.pop) > 2:
        parser.error("--pop takes one or two files")
    if len(args.pop) == 2 and args.w1 is None:
        parser.error("two populations need --w1")
    if len(args.pop) == 1 and args.w1 is not None:
        parser.error("--w1 needs two population files")
    if args.n < 1:
        parser.error("--n must be >= 1")
    if args.w1 is not None and not 0.0 < args.w1 < 1.0:
        parser.error("--w1 must lie in (0, 1)")
    unique_out = args.unique_out or str(Path(args.out).with_suffix("")) + ".unique.csv"
    try:
        pops = [io.read_population(path) for path in args.pop]
    except io.FormatError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    rng = np.random.default_rng(args.seed)
    if len(pops) == 1:
        ds = sample_dataset(pops[0], args.n, rng)
    else:
        if pops[0].r != pops[1].r:
            raise CliError(EXIT_INPUT, "population files have different locus counts")
        ds = sample_mixture(pops[0], pops[1], args.n, args.w1, rng)
    io.write_dataset(args.out, ds.db, ds.locus_names)
    io.atomic_write(unique_out, io.unique_csv(ds))
    if ds.n1 is not None:
        n2 = ds.n - ds.n1
        _say(args, f"split: n1={ds.n1} ({ds.n1 / ds.n:.3f}) n2={n2} ({n2 / ds.n:.3f})")
    _say(args, f"singleton proportion: {singleton_proportion(ds):.4f}")


def cmd_fit(args, parser) -> None:
    lo, hi = args.clusters
    if lo < 1 or hi < lo:
        parser.error("--clusters must be c >= 1 or a:b with 1 <= a <= b")
    if args.tol <= 0 or args.max_iter < 1 or args.restarts < 0 or args.jobs < 1:
        parser.error("--tol > 0, --max-iter >= 1, --restarts >= 0 and --jobs >= 1 required")
    if args.dispersions_out and lo != hi:
        parser.error("--dispersions-out applies to a single cluster count")
    try:
        db, names = io.read_dataset(args.data)
    except io.FormatError as exc:
        raise CliError(EXIT_FIT, f"fit failed: {exc}") from None
    if db.shape[0] == 0:
        raise CliError(EXIT_FIT, f"fit failed (c={lo}): dataset {args.data} is empty")
    opts = FitOptions(tol=args.tol, max_iter=args.max_iter, restarts=args.restarts, seed=args.seed)
    if lo == hi:
        try:
            model, _, report = fit(db, lo, opts, names)
        except FitError as exc:
            raise CliError(EXIT_FIT, f"fit failed (c={lo}): {exc}") from None
        io.write_model(args.out, model, report)
        if args.dispersions_out:
            io.atomic_write(args.dispersions_out, io.dispersions_csv(model))
        _say(args, f"c={lo} loglik={report.loglik:.6f} bic={report.bic:.4f} "
                   f"iterations={report.iterations} converged={report.converged}")
        return
    outdir = Path(args.out)
    try:
        fits, best = fit_sweep(db, (lo, hi), opts, names, n_jobs=args.jobs)
    except FitError as exc:
        raise CliError(EXIT_FIT, f"fit failed (c in {lo}..{hi}): {exc}") from None
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    for (model, report), c in zip(fits, range(lo, hi + 1)):
        name = f"model_c{c}.json"
        io.write_model(outdir / name, model, report)
        rows.append((c, report, name))
        _say(args, f"c={c} bic={report.bic:.4f} loglik={report.loglik:.6f} converged={report.converged}")
    io.atomic_write(outdir / "bic.csv", io.bic_csv(rows))
    print(outdir / rows[best][2])


def cmd_predict(args, parser) -> None:
    try:
        model = io.read_model(args.model)
        xs, names = io.read_dataset(args.haplotypes)
    except io.FormatError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    if xs.shape[1] != model.r:
        raise CliError(EXIT_MISMATCH, f"model has {model.r} loci, {args.haplotypes} has {xs.shape[1]}")
    io.atomic_write(args.out, io.predictions_csv(xs, names, model.predict(xs)))
    _say(args, f"predicted {xs.shape[0]} haplotypes")


def cmd_evaluate(args, parser) -> None:
    try:
        model = io.read_model(args.model)
        ds = io.read_unique(args.unique)
    except io.FormatError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    if ds.r != model.r:
        raise CliError(EXIT_MISMATCH, f"model has {model.r} loci, {args.unique} has {ds.r}")
    ev = evaluation_table(ds, model)
    io.atomic_write(args.out, io.evaluation_csv(ev))
    r, ratio = log_log_summary(ev.true_freq, ev.predicted_freq)
    if not args.quiet:
        print(f"rows: {len(ev)}")
        print("log10 pearson r: " + ("undefined" if r is None else f"{r:.4f}"))
        print(f"mean log10(predicted/true): {ratio:.4f}")


COMMANDS = {
    "simulate": cmd_simulate,
    "sample": cmd_sample,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    try:
        COMMANDS[args.command](args, subparser)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    return 0


if __name__ == "__main__":
    sys.exit(main())
