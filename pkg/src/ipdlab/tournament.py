"""Round-robin tournaments and their per-strategy result summaries."""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from . import _rng
from .engine import C, D, DEFAULT_PAYOFFS, DEFAULT_TURN_CAP, MatchParams, MatchRecord, PayoffMatrix, play_match
from .strategies import registry

PROTOCOLS = ("standard", "noisy", "probend", "noisy_probend")

COLUMNS = (
    "name", "rank", "normalized_rank", "median_score", "cooperation_rating", "win", "initial_C",
    "rate_CC", "rate_CD", "rate_DC", "rate_DD", "CC_to_C", "CD_to_C", "DC_to_C", "DD_to_C",
)
STATE_NAMES = ("CC", "CD", "DC", "DD")
_STATE_INDEX = {(C, C): 0, (C, D): 1, (D, C): 2, (D, D): 3}


class ConfigError(ValueError):
    pass


class EmptySelection(LookupError):
    """No tournament matched the requested filter."""


@dataclass(frozen=True)
class TournamentConfig:
    """One tournament: who plays, under which protocol, and how often.

    Parameters that the protocol does not use are ignored, so the same
    sampled values can be shared across all four protocols of a trial.
    """

    roster: tuple
    protocol: str
    k: int = 1
    n: Optional[int] = None
    p_n: float = 0.0
    p_e: Optional[float] = None
    turn_cap: int = DEFAULT_TURN_CAP
    payoffs: PayoffMatrix = DEFAULT_PAYOFFS

    def __post_init__(self):
        object.__setattr__(self, "roster", tuple(self.roster))
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}; expected one of {PROTOCOLS}")
        if len(self.roster) < 3:
            raise ConfigError(f"a tournament needs at least 3 strategies, got {len(self.roster)}")
        if len(set(self.roster)) != len(self.roster):
            raise ConfigError("roster names must be distinct")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        try:
            self.match_params()
        except ValueError as exc:
            raise ConfigError(f"{self.protocol}: {exc}") from None

    @property
    def N(self) -> int:
        return len(self.roster)

    def match_params(self) -> MatchParams:
        noisy = self.protocol in ("noisy", "noisy_probend")
        p_n = self.p_n if noisy else 0.0
        if self.protocol in ("standard", "noisy"):
            if self.n is None:
                raise ValueError("n is required")
            return MatchParams(n=self.n, p_n=p_n, turn_cap=self.turn_cap)
        if self.p_e is None:
            raise ValueError("p_e is required")
        return MatchParams(p_n=p_n, p_e=self.p_e, turn_cap=self.turn_cap)


@dataclass(frozen=True)
class ResultRow:
    name: str
    rank: int
    normalized_rank: float
    median_score: float
    cooperation_rating: float
    win: float
    initial_C: float
    rate_CC: float
    rate_CD: float
    rate_DC: float
    rate_DD: float
    CC_to_C: Optional[float]
    CD_to_C: Optional[float]
    DC_to_C: Optional[float]
    DD_to_C: Optional[float]

    @property
    def state_rates(self) -> tuple:
        return (self.rate_CC, self.rate_CD, self.rate_DC, self.rate_DD)

    @property
    def cond_coop(self) -> tuple:
        return (self.CC_to_C, self.CD_to_C, self.DC_to_C, self.DD_to_C)

    def to_fields(self) -> list[str]:
        return [_format(getattr(self, c)) for c in COLUMNS]

    @classmethod
    def from_fields(cls, fields: Sequence[str]) -> "ResultRow":
        if len(fields) != len(COLUMNS):
            raise ValueError(f"expected {len(COLUMNS)} fields, got {len(fields)}")
        name, rank, *rest = fields
        values = [float(v) if v != "" else None for v in rest]
        for col, v in zip(COLUMNS[2:11], values):
            if v is None:
                raise ValueError(f"{col} may not be empty")
        return cls(name, int(rank), *values)


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class BehaviorSummary:
    cooperation_rating: float
    initial_C: float
    state_rates: tuple
    cond_coop: tuple
    win: float


@dataclass
class _Tally:
    """Running counts for one strategy over all of its matches."""

    k: int
    rep_scores: list = field(default_factory=list)
    rep_wins: list = field(default_factory=list)
    turns: int = 0
    coops: int = 0
    openings: int = 0
    opening_coops: int = 0
    states: list = field(default_factory=lambda: [0, 0, 0, 0])
    moves_after: list = field(default_factory=lambda: [0, 0, 0, 0])
    coops_after: list = field(default_factory=lambda: [0, 0, 0, 0])

    def __post_init__(self):
        self.rep_scores = [[] for _ in range(self.k)]
        self.rep_wins = [0] * self.k

    def add(self, rep: int, own: Sequence, opp: Sequence, own_total: float, opp_total: float, length: int):
        self.rep_scores[rep].append(own_total / length)
        if own_total > opp_total:
            self.rep_wins[rep] += 1
        self.turns += length
        self.openings += 1
        self.opening_coops += own[0] is C
        states, moves_after, coops_after = self.states, self.moves_after, self.coops_after
        prev = None
        coops = 0
        for a, b in zip(own, opp):
            s = _STATE_INDEX[a, b]
            states[s] += 1
            if a is C:
                coops += 1
            if prev is not None:
                moves_after[prev] += 1
                if a is C:
                    coops_after[prev] += 1
            prev = s
        self.coops += coops

    def median_score(self) -> float:
        # fsum keeps the result independent of opponent order
        return statistics.median(math.fsum(s) / len(s) for s in self.rep_scores)

    def summary(self) -> BehaviorSummary:
        turns = self.turns
        return BehaviorSummary(
            cooperation_rating=self.coops / turns,
            initial_C=self.opening_coops / self.openings,
            state_rates=tuple(s / turns for s in self.states),
            cond_coop=tuple(c / m if m else None for c, m in zip(self.coops_after, self.moves_after)),
            win=float(statistics.median(self.rep_wins)),
        )


def _tally_records(records_by_rep: Sequence[Sequence[MatchRecord]]) -> _Tally:
    tally = _Tally(len(records_by_rep))
    for rep, records in enumerate(records_by_rep):
        for rec in records:
            own_total, opp_total = rec.totals
            tally.add(rep, rec.actions_a, rec.actions_b, own_total, opp_total, rec.length)
    return tally


def score_strategy(records_by_rep: Sequence[Sequence[MatchRecord]]) -> float:
    """Median over repetitions of the mean per-turn score against each opponent.

    ``records_by_rep[i]`` holds repetition i's matches, each seen from the
    focal strategy's seat (player a).
    """
    if not records_by_rep or any(not recs for recs in records_by_rep):
        raise ValueError("every repetition needs at least one match")
    return _tally_records(records_by_rep).median_score()


def summarize_behavior(records_by_rep: Sequence[Sequence[MatchRecord]]) -> BehaviorSummary:
    """Cooperation, state and win statistics for one strategy (focal seat = a)."""
    if not records_by_rep or any(not recs for recs in records_by_rep):
        raise ValueError("every repetition needs at least one match")
    return _tally_records(records_by_rep).summary()


def normalized_rank(rank: int, size: int) -> float:
    if size < 2:
        raise ValueError(f"normalized rank needs N >= 2, got {size}")
    if not 0 <= rank <= size - 1:
        raise ValueError(f"rank must lie in [0, {size - 1}], got {rank}")
    return rank / (size - 1)


def pairings(size: int) -> list[tuple]:
    """Roster index pairs in the fixed order used to key random streams."""
    return [(i, j) for i in range(size) for j in range(i + 1, size)]


def run_tournament(cfg: TournamentConfig, seed=0, keep_records: bool = False):
    """Play every pairing ``cfg.k`` times and return rows sorted by rank.

    ``seed`` is an int or a tuple of non-negative ints; the match between
    roster positions (i, j) in repetition r draws from the stream keyed by
    (*seed, protocol tag, pairing index, r). With ``keep_records`` the
    match records are returned too, as ``{(i, j, r): MatchRecord}``.
    """
    specs = [registry.get(name) for name in cfg.roster]
    prefix = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)
    tag = _rng.PROTOCOL_TAGS[cfg.protocol]
    params = cfg.match_params()
    tallies = [_Tally(cfg.k) for _ in specs]
    records = {}
    for rep in range(cfg.k):
        for index, (i, j) in enumerate(pairings(len(specs))):
            rng = _rng.substream(*prefix, tag, index, rep)
            rec = play_match(specs[i].make(), specs[j].make(), params, rng, cfg.payoffs)
            total_i, total_j = rec.totals
            tallies[i].add(rep, rec.actions_a, rec.actions_b, total_i, total_j, rec.length)
            tallies[j].add(rep, rec.actions_b, rec.actions_a, total_j, total_i, rec.length)
            if keep_records:
                records[i, j, rep] = rec
    rows = rank_rows([(spec.name, t.median_score(), t.summary()) for spec, t in zip(specs, tallies)])
    return (rows, records) if keep_records else rows


def rank_rows(entries: Iterable[tuple]) -> list[ResultRow]:
    """Turn (name, median_score, BehaviorSummary) triples into ranked rows.

    Order: higher median score first, then more wins, then name.
    """
    entries = sorted(entries, key=lambda e: (-e[1], -e[2].win, e[0]))
    size = len(entries)
    rows = []
    for rank, (name, score, b) in enumerate(entries):
        rows.append(ResultRow(name, rank, normalized_rank(rank, size), score, b.cooperation_rating, b.win,
                              b.initial_C, *b.state_rates, *b.cond_coop))
    return rows


# ---------------------------------------------------------------- rankings

@dataclass(frozen=True)
class TournamentResult:
    """Rows of one tournament together with the parameters it was run with."""

    params: dict
    rows: tuple


@dataclass(frozen=True)
class RankingEntry:
    name: str
    median_r: float
    participation: int


def median_rank_table(results: Iterable[TournamentResult],
                      predicate: Optional[Callable[[dict], bool]] = None) -> list[RankingEntry]:
    """Median normalized rank per strategy over the tournaments accepted by ``predicate``.

    Raises EmptySelection when no tournament is accepted.
    """
    by_name: dict[str, list] = {}
    selected = 0
    for res in results:
        if predicate is not None and not predicate(res.params):
            continue
        selected += 1
        for row in res.rows:
            by_name.setdefault(row.name, []).append(row.normalized_rank)
    if not selected:
        raise EmptySelection("no tournament matches the filter")
    table = [RankingEntry(name, float(statistics.median(rs)), len(rs)) for name, rs in by_name.items()]
    table.sort(key=lambda e: (e.median_r, e.name))
    return table


# ----------------------------------------------------------- serialization

def rows_to_csv(rows: Iterable[ResultRow], header: bool = True) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    if header:
        writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow(row.to_fields())
    return out.getvalue()


def rows_from_csv(text: str) -> list[ResultRow]:
    reader = csv.reader(io.StringIO(text))
    head = next(reader, None)
    if head is None or tuple(head) != COLUMNS:
        raise ValueError("missing or wrong header row")
    return [ResultRow.from_fields(r) for r in reader if r]
