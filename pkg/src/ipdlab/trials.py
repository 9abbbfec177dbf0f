"""Random trials: sample tournament parameters per seed, run all four protocols.

A trial file holds one or more blocks of the form::

    #trial {"seed": 7, "N": 5, ...}
    #protocol standard
    name,rank,normalized_rank,...
    <N rows>
    #protocol noisy
    ...

Floats are written with ``repr`` so a load reproduces the exact values.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from . import __version__, _rng
from .engine import DEFAULT_TURN_CAP
from .strategies import registry
from .tournament import COLUMNS, PROTOCOLS, ConfigError, ResultRow, TournamentConfig, run_tournament


class TrialError(RuntimeError):
    """A tournament failed inside a trial; the message names seed and protocol."""


class RecordParseError(ValueError):
    def __init__(self, line: int, message: str, source: str = ""):
        where = f"{source}:" if source else ""
        super().__init__(f"{where}line {line}: {message}")
        self.line = line


class RecordMismatchWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ParameterRanges:
    """Inclusive sampling ranges. Integers are drawn uniformly, probabilities uniformly."""

    N: tuple = (3, 195)
    k: tuple = (10, 100)
    n: tuple = (1, 200)
    p_n: tuple = (0.0, 1.0)
    p_e: tuple = (0.0, 1.0)

    def __post_init__(self):
        for name, lowest in (("N", 3), ("k", 1), ("n", 1)):
            lo, hi = getattr(self, name)
            if int(lo) != lo or int(hi) != hi:
                raise ConfigError(f"{name} range must hold integers, got {(lo, hi)}")
            if lo < lowest:
                raise ConfigError(f"{name} range must start at {lowest} or more, got {lo}")
            object.__setattr__(self, name, (int(lo), int(hi)))
        for name in ("p_n", "p_e"):
            lo, hi = (float(v) for v in getattr(self, name))
            if not 0.0 <= lo <= 1.0 or not 0.0 <= hi <= 1.0:
                raise ConfigError(f"{name} range must lie in [0, 1], got {(lo, hi)}")
            object.__setattr__(self, name, (lo, hi))
        for name in ("N", "k", "n", "p_n", "p_e"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"{name} range has min > max: {(lo, hi)}")
        if self.p_e[1] == 0.0:
            raise ConfigError("p_e range must contain positive values")

    @classmethod
    def from_dict(cls, data: dict) -> "ParameterRanges":
        unknown = set(data) - {"N", "k", "n", "p_n", "p_e"}
        if unknown:
            raise ConfigError(f"unknown range keys: {sorted(unknown)}")
        try:
            return cls(**{key: tuple(value) for key, value in data.items()})
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed ranges: {exc}") from None

    def as_dict(self) -> dict:
        return {key: list(value) for key, value in asdict(self).items()}


DESK_RANGES = ParameterRanges(N=(3, 20), k=(5, 10))


@dataclass(frozen=True)
class TrialParams:
    seed: int
    N: int
    k: int
    n: int
    p_n: float
    p_e: float
    roster: tuple


def sample_trial_params(seed: int, ranges: ParameterRanges = ParameterRanges(),
                        pool: Optional[Sequence[str]] = None, master_seed: int = 0) -> TrialParams:
    """Draw N, the roster, k, n, p_n and p_e (in that order) from the seed's own stream."""
    pool = list(registry.names() if pool is None else pool)
    n_lo, n_hi = ranges.N
    if len(pool) < n_lo:
        raise ConfigError(f"strategy pool has {len(pool)} members, fewer than N_min = {n_lo}")
    n_hi = min(n_hi, len(pool))
    gen = _rng.np_substream(master_seed, seed, _rng.SAMPLING_TAG)
    N = int(gen.integers(n_lo, n_hi + 1))
    picks = gen.choice(len(pool), size=N, replace=False)
    roster = tuple(pool[int(i)] for i in picks)
    k = int(gen.integers(ranges.k[0], ranges.k[1] + 1))
    n = int(gen.integers(ranges.n[0], ranges.n[1] + 1))
    p_n = float(gen.uniform(*ranges.p_n))
    p_e = 0.0
    while p_e == 0.0:
        p_e = float(gen.uniform(*ranges.p_e))
    return TrialParams(seed, N, k, n, p_n, p_e, roster)


@dataclass(frozen=True)
class TrialRecord:
    seed: int
    N: int
    k: int
    n: int
    p_n: float
    p_e: float
    roster: tuple
    results: dict = field(compare=True)
    master_seed: int = 0
    turn_cap: int = DEFAULT_TURN_CAP
    engine_version: str = __version__
    manifest_digest: str = ""

    def header(self) -> dict:
        return {
            "seed": self.seed, "N": self.N, "k": self.k, "n": self.n, "p_n": self.p_n, "p_e": self.p_e,
            "master_seed": self.master_seed, "turn_cap": self.turn_cap, "roster": list(self.roster),
            "engine_version": self.engine_version, "manifest_digest": self.manifest_digest,
        }

    def params(self, protocol: str) -> dict:
        """Parameters as they applied to one protocol (unused ones set to None or 0)."""
        probend = protocol in ("probend", "noisy_probend")
        noisy = protocol in ("noisy", "noisy_probend")
        return {"seed": self.seed, "protocol": protocol, "N": self.N, "k": self.k,
                "n": None if probend else self.n, "p_n": self.p_n if noisy else 0.0,
                "p_e": self.p_e if probend else 0.0}


def run_trial(seed: int, ranges: ParameterRanges = ParameterRanges(), pool: Optional[Sequence[str]] = None,
              master_seed: int = 0, turn_cap: int = DEFAULT_TURN_CAP) -> TrialRecord:
    """Sample a trial and play its four tournaments on the same roster."""
    tp = sample_trial_params(seed, ranges, pool, master_seed)
    results = {}
    for protocol in PROTOCOLS:
        try:
            cfg = TournamentConfig(tp.roster, protocol, k=tp.k, n=tp.n, p_n=tp.p_n, p_e=tp.p_e,
                                   turn_cap=turn_cap)
            results[protocol] = tuple(run_tournament(cfg, (master_seed, seed)))
        except Exception as exc:
            raise TrialError(f"seed {seed}, protocol {protocol}: {exc}") from exc
    return TrialRecord(tp.seed, tp.N, tp.k, tp.n, tp.p_n, tp.p_e, tp.roster, results, master_seed, turn_cap,
                       __version__, registry.manifest_digest())


# ------------------------------------------------------------- persistence

def dumps_records(records: Iterable[TrialRecord]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    for rec in records:
        out.write("#trial " + json.dumps(rec.header(), ensure_ascii=False) + "\n")
        for protocol in PROTOCOLS:
            out.write(f"#protocol {protocol}\n")
            writer.writerow(COLUMNS)
            for row in rec.results[protocol]:
                writer.writerow(row.to_fields())
    return out.getvalue()


def loads_records(text: str, source: str = "") -> list[TrialRecord]:
    records = []
    header = None
    results: dict = {}
    protocol = None
    expect_columns = False

    def finish(line_no):
        if header is None:
            return
        missing = [p for p in PROTOCOLS if p not in results]
        if missing:
            raise RecordParseError(line_no, f"trial {header.get('seed')} lacks protocols {missing}", source)
        for p, rows in results.items():
            if len(rows) != header["N"]:
                raise RecordParseError(line_no, f"trial {header['seed']} {p}: expected {header['N']} rows, "
                                                f"got {len(rows)}", source)
        records.append(_record_from(header, results))

    lines = text.splitlines()
    for line_no, line in enumerate(lines, 1):
        if not line.strip():
            continue
        if line.startswith("#trial "):
            finish(line_no)
            try:
                header = json.loads(line[len("#trial "):])
                for key in ("seed", "N", "k", "n", "p_n", "p_e", "roster"):
                    header[key]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise RecordParseError(line_no, f"malformed trial header ({exc})", source) from None
            results, protocol = {}, None
        elif line.startswith("#protocol "):
            if header is None:
                raise RecordParseError(line_no, "protocol block before any trial header", source)
            protocol = line[len("#protocol "):].strip()
            if protocol not in PROTOCOLS:
                raise RecordParseError(line_no, f"unknown protocol {protocol!r}", source)
            if protocol in results:
                raise RecordParseError(line_no, f"duplicate protocol block {protocol!r}", source)
            results[protocol] = []
            expect_columns = True
        elif line.startswith("#"):
            continue
        else:
            if protocol is None:
                raise RecordParseError(line_no, "data row outside a protocol block", source)
            fields = next(csv.reader([line]))
            if expect_columns:
                if tuple(fields) != COLUMNS:
                    raise RecordParseError(line_no, "expected the column header row", source)
                expect_columns = False
                continue
            try:
                results[protocol].append(ResultRow.from_fields(fields))
            except ValueError as exc:
                raise RecordParseError(line_no, f"bad result row: {exc}", source) from None
    finish(len(lines))
    _check_versions(records, source)
    return records


def _record_from(header: dict, results: dict) -> TrialRecord:
    return TrialRecord(
        seed=header["seed"], N=header["N"], k=header["k"], n=header["n"], p_n=header["p_n"],
        p_e=header["p_e"], roster=tuple(header["roster"]),
        results={p: tuple(results[p]) for p in PROTOCOLS},
        master_seed=header.get("master_seed", 0), turn_cap=header.get("turn_cap", DEFAULT_TURN_CAP),
        engine_version=header.get("engine_version", ""), manifest_digest=header.get("manifest_digest", ""),
    )


def _check_versions(records, source=""):
    digest = registry.manifest_digest()
    for rec in records:
        if rec.engine_version != __version__:
            warnings.warn(f"{source or 'records'}: trial {rec.seed} was written by version "
                          f"{rec.engine_version}, this is {__version__}", RecordMismatchWarning, stacklevel=3)
        if rec.manifest_digest != digest:
            warnings.warn(f"{source or 'records'}: trial {rec.seed} used a different strategy registry "
                          f"({rec.manifest_digest[:12]} vs {digest[:12]})", RecordMismatchWarning, stacklevel=3)


def record_to_json(rec: TrialRecord) -> dict:
    data = rec.header()
    data["results"] = {p: [dict(zip(COLUMNS, (getattr(r, c) for c in COLUMNS))) for r in rec.results[p]]
                       for p in PROTOCOLS}
    return data


def record_from_json(data: dict) -> TrialRecord:
    results = {p: [ResultRow(**row) for row in data["results"][p]] for p in PROTOCOLS}
    return _record_from(data, results)


def persist_records(records: Iterable[TrialRecord], path: Union[str, Path], append: bool = False) -> Path:
    """Write records as delimited text, or JSON lines when the suffix is ``.jsonl``."""
    path = Path(path)
    if path.suffix == ".jsonl":
        text = "".join(json.dumps(record_to_json(r), ensure_ascii=False) + "\n" for r in records)
    else:
        text = dumps_records(records)
    with open(path, "a" if append else "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def load_records(path: Union[str, Path]) -> list[TrialRecord]:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix != ".jsonl":
        return loads_records(text, str(path))
    records = []
    for line_no, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            records.append(record_from_json(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise RecordParseError(line_no, f"malformed record ({exc})", str(path)) from None
    _check_versions(records, str(path))
    return records


def load_directory(path: Union[str, Path]) -> list[TrialRecord]:
    """All trial records under ``path`` (a batch directory, a trials folder or a single file), by seed."""
    path = Path(path)
    if path.is_file():
        return load_records(path)
    folder = path / "trials" if (path / "trials").is_dir() else path
    files = sorted(list(folder.glob("*.csv")) + list(folder.glob("*.jsonl")))
    records = [rec for f in files for rec in load_records(f)]
    records.sort(key=lambda r: (r.master_seed, r.seed))
    return records


def tournament_results(records: Iterable[TrialRecord], protocol: str):
    """TournamentResult views of one protocol across records."""
    from .tournament import TournamentResult

    return [TournamentResult(rec.params(protocol), rec.results[protocol]) for rec in records]


def hypergeometric_participation(pool_size: int, ranges: ParameterRanges, seeds: int) -> tuple:
    """Expected selection count and standard deviation of one pool member over ``seeds`` trials.

    N is uniform on the clamped range; given N, membership is Bernoulli(N / pool).
    """
    lo, hi = ranges.N[0], min(ranges.N[1], pool_size)
    sizes = range(lo, hi + 1)
    probs = [size / pool_size for size in sizes]
    mean_p = sum(probs) / len(probs)
    return seeds * mean_p, math.sqrt(seeds * mean_p * (1 - mean_p))
