"""Command line entry point.

    ipdlab run      --config PATH --seeds A..B --out DIR --workers W
    ipdlab rank     --in DIR --type T [--filter EXPR] [--top M] [--out CSV]
    ipdlab analyze  --in DIR --type T --what {correlations,importance,winners} [--approach 1-4]
    ipdlab registry [--write PATH]

Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error,
3 not enough data for the requested analysis. ``$IPDLAB_CONFIG`` names a
default config file for ``run``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import operator
import re
import sys
import warnings
from pathlib import Path
from typing import Callable, Optional

from . import __version__
from .batch import CONFIG_ENV, load_config, parse_seed_span, run_batch
from .strategies import registry
from .tournament import PROTOCOLS, ConfigError, EmptySelection, median_rank_table
from .trials import RecordParseError, load_directory, tournament_results

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3

FILTER_KEYS = ("seed", "N", "k", "n", "p_n", "p_e")
_OPS = {"<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge, "==": operator.eq}
_CLAUSE = re.compile(r"^\s*([A-Za-z_]\w*)\s*(<=|>=|==|<|>)\s*(\S+)\s*$")


class UsageError(Exception):
    pass


def parse_filter(expr: Optional[str]) -> Callable[[dict], bool]:
    """``"p_n<0.5 and N>=10"`` -> predicate over tournament parameters.

    Clauses are joined by ``and``, ``&&`` or ``,``. A clause on a parameter
    that does not apply to the tournament type (n for probabilistic ending)
    is false.
    """
    if expr is None or not expr.strip():
        return lambda params: True
    clauses = []
    for part in re.split(r"\s+and\s+|&&|,", expr.strip()):
        m = _CLAUSE.match(part)
        if not m:
            raise UsageError(f"cannot parse filter clause {part!r}; expected <param> <op> <value>")
        key, op, raw = m.groups()
        if key not in FILTER_KEYS:
            raise UsageError(f"unknown filter key {key!r}; expected one of {', '.join(FILTER_KEYS)}")
        try:
            value = float(raw)
        except ValueError:
            raise UsageError(f"filter value for {key} must be a number, got {raw!r}") from None
        clauses.append((key, _OPS[op], value))

    def predicate(params: dict) -> bool:
        for key, fn, value in clauses:
            actual = params.get(key)
            if actual is None or not fn(actual, value):
                return False
        return True

    return predicate


def _provenance(in_dir: Optional[Path]) -> list[str]:
    lines = [f"# ipdlab {__version__}", f"# registry_manifest {registry.manifest_digest()}"]
    if in_dir is not None:
        manifest = in_dir / "manifest.json"
        if manifest.is_file():
            try:
                data = json.loads(manifest.read_text(encoding="utf-8"))
                lines.append(f"# batch_config {data.get('config_digest', '')}")
            except json.JSONDecodeError:
                pass
    return lines


def write_export(path: Path, header: list[str], columns: list[str], rows: list[list], in_dir=None) -> Path:
    """CSV with provenance comment lines, UTF-8 and LF line endings."""
    path.parent.mkdir(parents=True, exist_ok=True)
    out = io.StringIO()
    for line in _provenance(in_dir) + header:
        out.write(line + "\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(out.getvalue())
    return path


def _load(in_dir: Path):
    if not in_dir.exists():
        raise UsageError(f"input {in_dir} does not exist")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        records = load_directory(in_dir)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return records


# ------------------------------------------------------------------ commands

def cmd_run(args) -> int:
    cfg = load_config(args.config)
    seeds = parse_seed_span(args.seeds) if args.seeds else None
    summary = run_batch(cfg, seeds=seeds, out=args.out, workers=args.workers)
    print(f"wrote {len(summary.written)} trial files to {summary.out / 'trials'}"
          + (f" ({len(summary.skipped)} already present)" if summary.skipped else ""))
    return EXIT_OK


def cmd_rank(args) -> int:
    predicate = parse_filter(args.filter)
    in_dir = Path(args.input)
    records = _load(in_dir)
    try:
        table = median_rank_table(tournament_results(records, args.type), predicate)
    except EmptySelection as exc:
        print(f"no data: {exc}", file=sys.stderr)
        return EXIT_DATA
    if args.top is not None:
        table = table[:args.top]
    rows = [[i, e.name, e.median_r, e.participation] for i, e in enumerate(table, 1)]
    width = max((len(e.name) for e in table), default=4)
    print(f"{'#':>4}  {'name':<{width}}  {'median r':>9}  {'trials':>6}")
    for i, name, r, count in rows:
        print(f"{i:>4}  {name:<{width}}  {r:>9.5f}  {count:>6}")
    out = Path(args.out) if args.out else in_dir / "exports" / f"rank_{args.type}.csv"
    header = [f"# type {args.type}", f"# filter {args.filter or ''}"]
    write_export(out, header, ["position", "name", "median_r", "participation"], rows, in_dir)
    return EXIT_OK


def cmd_analyze(args) -> int:
    from .analysis import reports

    in_dir = Path(args.input)
    records = _load(in_dir)
    if not records:
        print(f"no data: {in_dir} holds no trial records", file=sys.stderr)
        return EXIT_DATA
    df = reports.analysis_frame(records)
    exports = in_dir / "exports"
    header = [f"# type {args.type}"]
    try:
        if args.what == "correlations":
            table = reports.correlation_report(df, args.type)
            rows = [[f, table.loc[f, "r"], table.loc[f, "median_score"]] for f in table.index]
            out = Path(args.out) if args.out else exports / f"correlations_{args.type}.csv"
            write_export(out, header, ["feature", "r", "median_score"], rows, in_dir)
            for f, r, s in rows:
                print(f"{f:<14} {_fmt(r):>8} {_fmt(s):>8}")
        elif args.what == "importance":
            rep = reports.importance_report(df, args.type, args.approach, seed=args.seed, n_trees=args.trees)
            chosen = "" if rep.chosen_k is None else f" {rep.chosen_k}"
            header += [f"# approach {args.approach}", f"# rows {rep.rows}", f"# score {_fmt(rep.score)}",
                       f"# oob_score {_fmt(rep.oob_score)}", f"# chosen_k{chosen}"]
            rows = rep.table[["rank", "feature", "importance"]].values.tolist()
            out = Path(args.out) if args.out else exports / f"importance_{args.type}_approach{args.approach}.csv"
            write_export(out, header, ["rank", "feature", "importance"], rows, in_dir)
            print(f"score {_fmt(rep.score)}  oob_score {_fmt(rep.oob_score)}"
                  + (f"  chosen_k {rep.chosen_k}" if rep.chosen_k is not None else ""))
            for rank, feature, value in rows:
                print(f"{rank:>3}  {feature:<14} {value:.4f}")
        else:
            table = reports.winners_report(df, args.type)
            rows = table[["quantity", "bin_left", "bin_right", "count"]].values.tolist()
            out = Path(args.out) if args.out else exports / f"winners_{args.type}.csv"
            write_export(out, header, ["quantity", "bin_left", "bin_right", "count"], rows, in_dir)
            print(reports.winner_medians(df, args.type).to_string())
    except reports.InsufficientData as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"wrote {out}")
    return EXIT_OK


def _fmt(v) -> str:
    return "" if v is None or v != v else f"{v:.3f}"


def cmd_registry(args) -> int:
    if args.write:
        registry.write_manifest(args.write)
        print(f"wrote {args.write}")
    else:
        sys.stdout.write(registry.render_manifest())
    return EXIT_OK


# ---------------------------------------------------------------- plumbing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ipdlab", description="Iterated prisoner's dilemma tournament trials and analysis.")
    parser.add_argument("--version", action="version", version=f"ipdlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a batch of random trials")
    run.add_argument("--config", help=f"YAML/JSON config (default: ${CONFIG_ENV}, then built-in defaults)")
    run.add_argument("--seeds", help="inclusive seed span A..B (default from config)")
    run.add_argument("--out", help="output directory (default from config, else ./ipdlab-out)")
    run.add_argument("--workers", type=int, help="worker processes")
    run.set_defaults(func=cmd_run)

    rank = sub.add_parser("rank", help="median normalized rank table")
    rank.add_argument("--in", dest="input", required=True)
    rank.add_argument("--type", choices=PROTOCOLS, required=True)
    rank.add_argument("--filter", help='e.g. "p_n<0.5" or "p_e<0.1 and N>=10"')
    rank.add_argument("--top", type=int)
    rank.add_argument("--out", help="CSV path (default: <in>/exports/rank_<type>.csv)")
    rank.set_defaults(func=cmd_rank)

    analyze = sub.add_parser("analyze", help="correlation, importance and winner exports")
    analyze.add_argument("--in", dest="input", required=True)
    analyze.add_argument("--type", choices=PROTOCOLS, required=True)
    analyze.add_argument("--what", choices=("correlations", "importance", "winners"), required=True)
    analyze.add_argument("--approach", type=int, choices=(1, 2, 3, 4), default=1)
    analyze.add_argument("--trees", type=int, default=100)
    analyze.add_argument("--seed", type=int, default=0)
    analyze.add_argument("--out", help="CSV path (default: <in>/exports/...)")
    analyze.set_defaults(func=cmd_analyze)

    reg = sub.add_parser("registry", help="print or write the strategy registry manifest")
    reg.add_argument("--write", help="write the manifest JSON to this path")
    reg.set_defaults(func=cmd_registry)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RecordParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # anything else is a runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
