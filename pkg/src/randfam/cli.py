"""Command-line entry point: ``randfam {count,enumerate,sample,test,kde}``.

Results go to stdout (or ``--out``); logs and error messages go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

from randfam import __version__, dataio
from randfam.derangements import (
    DEFAULT_MAX_EXACT_N,
    block_rng,
    count_derangements,
    iter_derangements,
    sample_derangement_block,
)
from randfam.engine import Center, Mode, RfmConfig, StatisticKind, rfm_test
from randfam.errors import DomainError, InputFormatError, SizeRefusalError
from randfam.kde import SILVERMAN, KdeConfig, kde_density
from randfam.shapiro import shapiro_wilk

log = logging.getLogger("randfam")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_DOMAIN = 4
EXIT_SIZE = 5

THREADS_ENV = "RANDFAM_THREADS"
DEFAULT_MC_SAMPLES = 10_000


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"seed must be non-negative, got {text}")
    return value


def _bandwidth(text: str) -> float | str:
    if text == SILVERMAN:
        return text
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bandwidth must be a positive number or {SILVERMAN!r}"
        ) from None
    if not value > 0:
        raise argparse.ArgumentTypeError("bandwidth must be positive")
    return value


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        log.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
        return 1


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_count(args: argparse.Namespace) -> int:
    print(count_derangements(args.n))
    return EXIT_OK


def cmd_enumerate(args: argparse.Namespace) -> int:
    lines = []
    for i, d in enumerate(
        iter_derangements(args.n, max_n=args.max_n, allow_large=args.allow_large)
    ):
        if args.limit is not None and i >= args.limit:
            break
        lines.append(str(d))
        if len(lines) >= 65536:
            sys.stdout.write("\n".join(lines) + "\n")
            lines.clear()
    if lines:
        sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    perms = sample_derangement_block(args.n, args.count, block_rng(args.seed, 0)) + 1
    for row in perms.tolist():
        print(",".join(map(str, row)))
    return EXIT_OK


def cmd_test(args: argparse.Namespace) -> int:
    if args.samples is not None and args.mode != Mode.MONTE_CARLO.value:
        args.parser.error("--samples only applies with --mode mc")
    sample = dataio.read_paired_csv(args.input, delimiter=args.delimiter)
    cfg = RfmConfig(
        statistic=StatisticKind(args.stat),
        mode=Mode(args.mode),
        mc_samples=args.samples or DEFAULT_MC_SAMPLES,
        seed=args.seed,
        histogram_bins=args.bins,
        max_exact_n=args.max_exact_n,
        allow_large=args.allow_large,
        center=Center(args.center),
        workers=args.threads,
    )
    log.info("running %s mode on n=%d with %d worker(s)", cfg.mode.value, sample.n, cfg.workers)
    start = time.perf_counter()
    result = rfm_test(sample, cfg)
    values = result.family.retained

    kde = kde_source = None
    if args.kde:
        kcfg = KdeConfig(bandwidth=args.bandwidth, grid_points=args.kde_grid)
        if values is not None:
            kde, kde_source = kde_density(values, kcfg), "values"
        else:
            edges = result.family.bin_edges
            mids = 0.5 * (edges[:-1] + edges[1:])
            kde = kde_density(mids, kcfg, weights=result.family.histogram)
            kde_source = "histogram"

    sw = None
    if args.shapiro:
        if values is None:
            log.warning("family values were not retained; skipping Shapiro-Wilk")
        else:
            sw = shapiro_wilk(values, seed=args.seed)
    duration = time.perf_counter() - start
    log.info("finished in %.3f s", duration)

    if args.format == "json":
        report = dataio.build_report(
            result,
            version=__version__,
            duration_seconds=duration if args.timing else None,
            histogram=True,
            kde=kde,
            kde_source=kde_source,
            shapiro=sw,
        )
        _emit(dataio.dump_report(report), args.out)
    elif kde is not None:
        _emit(dataio.format_grid_csv(kde, ("x", "density")), args.out)
    else:
        edges = result.family.bin_edges.tolist()
        rows = zip(edges[:-1], edges[1:], result.family.histogram.tolist())
        _emit(dataio.format_grid_csv(rows, ("bin_lo", "bin_hi", "count")), args.out)
    return EXIT_OK


def cmd_kde(args: argparse.Namespace) -> int:
    values = dataio.read_values(args.values)
    cfg = KdeConfig(bandwidth=args.bandwidth, grid_points=args.grid)
    grid = kde_density(values, cfg)
    _emit(dataio.format_grid_csv(grid, ("x", "density")), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randfam",
        description="Restricted (derangement) resampling tests for paired data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="print the number of derangements N(n)")
    p.add_argument("n", type=int)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("enumerate", help="list derangements in lexicographic order")
    p.add_argument("n", type=int)
    p.add_argument("--limit", type=int, default=None, help="stop after this many lines")
    p.add_argument("--max-n", type=int, default=DEFAULT_MAX_EXACT_N)
    p.add_argument("--allow-large", action="store_true", help="lift the size cap")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("sample", help="draw uniform random derangements")
    p.add_argument("n", type=int)
    p.add_argument("--count", type=_positive_int, default=1)
    p.add_argument("--seed", type=_seed, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("test", help="run the random family test on a two-column CSV")
    p.add_argument("input", help="CSV file with x,y columns (header optional)")
    p.add_argument("--stat", choices=[k.value for k in StatisticKind], default="slope")
    p.add_argument("--mode", choices=[m.value for m in Mode], default="exact")
    p.add_argument("--samples", type=_positive_int, default=None,
                   help=f"Monte Carlo draws (default {DEFAULT_MC_SAMPLES})")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--kde", action="store_true", help="include a density grid")
    p.add_argument("--kde-grid", type=int, default=512)
    p.add_argument("--bandwidth", type=_bandwidth, default=SILVERMAN)
    p.add_argument("--shapiro", action="store_true", help="include a Shapiro-Wilk test")
    p.add_argument("--bins", type=_positive_int, default=256)
    p.add_argument("--center", choices=[c.value for c in Center], default="mean",
                   help="centre of the two-sided tail")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help=f"worker processes (default ${THREADS_ENV} or 1)")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--max-exact-n", type=int, default=DEFAULT_MAX_EXACT_N)
    p.add_argument("--allow-large", action="store_true")
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock duration in the report")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("kde", help="Gaussian KDE grid for a file of values")
    p.add_argument("values")
    p.add_argument("--bandwidth", type=_bandwidth, default=SILVERMAN)
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_kde)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.parser = parser
    if getattr(args, "threads", 1) is None:
        args.threads = _default_threads()
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        return args.func(args)
    except InputFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SizeRefusalError as exc:
        hint = " (try --mode mc)" if args.command == "test" else " (see --allow-large)"
        print(f"error: {exc}{hint}", file=sys.stderr)
        return EXIT_SIZE
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
