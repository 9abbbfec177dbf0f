"""Single-match execution for the iterated prisoner's dilemma.

Four protocols are supported through :class:`MatchParams`: a fixed number of
turns, per-action noise, a per-turn ending probability, and noise combined
with a probabilistic ending.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

DEFAULT_TURN_CAP = 10_000


class Action(enum.Enum):
    C = "C"
    D = "D"

    # Members are singletons; identity hashing avoids Enum's Python-level __hash__.
    __hash__ = object.__hash__

    def flip(self) -> "Action":
        return _FLIP[self]

    def __str__(self) -> str:
        return self.value

    def __repr__(self) -> str:
        return self.value

    @classmethod
    def from_char(cls, char: str) -> "Action":
        try:
            return cls(char.upper())
        except ValueError:
            raise ValueError(f"not an action: {char!r}") from None


C, D = Action.C, Action.D
_FLIP = {C: D, D: C}


def actions_from_str(text: str) -> list[Action]:
    return [Action.from_char(ch) for ch in text]


def actions_to_str(actions: Sequence[Action]) -> str:
    return "".join(a.value for a in actions)


@dataclass(frozen=True)
class PayoffMatrix:
    """Per-turn payoffs. Defaults are the classic (R, S, T, P) = (3, 0, 5, 1)."""

    R: float = 3
    S: float = 0
    T: float = 5
    P: float = 1
    _table: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not (self.T > self.R > self.P > self.S):
            raise ValueError(f"payoffs must satisfy T > R > P > S, got {self.RSTP}")
        if not (2 * self.R > self.T + self.S):
            raise ValueError(f"payoffs must satisfy 2R > T + S, got {self.RSTP}")
        table = {
            (C, C): (self.R, self.R),
            (C, D): (self.S, self.T),
            (D, C): (self.T, self.S),
            (D, D): (self.P, self.P),
        }
        object.__setattr__(self, "_table", table)

    @property
    def RSTP(self) -> tuple:
        return (self.R, self.S, self.T, self.P)

    def scores(self, a_self: Action, a_other: Action) -> tuple:
        return self._table[a_self, a_other]


DEFAULT_PAYOFFS = PayoffMatrix()


def payoff(a_self: Action, a_other: Action, m: PayoffMatrix = DEFAULT_PAYOFFS) -> tuple:
    """Return ``(focal score, opponent score)`` for one turn."""
    return m.scores(a_self, a_other)


@dataclass(frozen=True)
class MatchParams:
    """How a match is played.

    ``n`` fixes the number of turns and is revealed to both players. ``p_e``
    ends the match after each turn with that probability; the length is then
    hidden from the players. When both are given ``n`` only acts as an extra
    hidden upper bound.
    """

    n: Optional[int] = None
    p_n: float = 0.0
    p_e: Optional[float] = None
    turn_cap: int = DEFAULT_TURN_CAP

    def __post_init__(self):
        if self.n is None and self.p_e is None:
            raise ValueError("a match needs a turn count n or an ending probability p_e")
        if self.n is not None and self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0.0 <= self.p_n <= 1.0:
            raise ValueError(f"p_n must lie in [0, 1], got {self.p_n}")
        if self.p_e is not None and not 0.0 < self.p_e <= 1.0:
            raise ValueError(f"p_e must lie in (0, 1], got {self.p_e}")
        if self.turn_cap < 1:
            raise ValueError(f"turn_cap must be >= 1, got {self.turn_cap}")

    @property
    def probabilistic_ending(self) -> bool:
        return self.p_e is not None


class MatchContext:
    """What a strategy may know about the match it is playing.

    ``turns_total`` is None when the length is unknown. ``current_turn`` is
    1-indexed: it is the turn about to be played.
    """

    __slots__ = ("turns_total", "payoffs", "current_turn")

    def __init__(self, turns_total: Optional[int] = None, payoffs: PayoffMatrix = DEFAULT_PAYOFFS,
                 current_turn: int = 1):
        self.turns_total = turns_total
        self.payoffs = payoffs
        self.current_turn = current_turn

    def __repr__(self):
        return (f"MatchContext(turns_total={self.turns_total}, current_turn={self.current_turn}, "
                f"payoffs={self.payoffs.RSTP})")


@dataclass(frozen=True)
class MatchRecord:
    actions_a: tuple
    actions_b: tuple
    intended_a: tuple
    intended_b: tuple
    payoffs_a: tuple
    payoffs_b: tuple
    length: int
    capped: bool = False

    def __post_init__(self):
        seqs = (self.actions_a, self.actions_b, self.intended_a, self.intended_b,
                self.payoffs_a, self.payoffs_b)
        if self.length < 1 or any(len(s) != self.length for s in seqs):
            raise ValueError("all match sequences must share the same length >= 1")

    @property
    def totals(self) -> tuple:
        return (sum(self.payoffs_a), sum(self.payoffs_b))

    def swapped(self) -> "MatchRecord":
        """The same match seen from player b's seat."""
        return MatchRecord(self.actions_b, self.actions_a, self.intended_b, self.intended_a,
                           self.payoffs_b, self.payoffs_a, self.length, self.capped)


class Seat:
    """One player's side of a running match."""

    __slots__ = ("player", "history", "intended")

    def __init__(self, player):
        self.player = player
        self.history: list = []
        self.intended: list = []


def play_turn(seat_a: Seat, seat_b: Seat, ctx: MatchContext, p_n: float, rng: random.Random) -> tuple:
    """Play one simultaneous turn and return the realized actions.

    Both strategies see histories up to the previous turn only. Each intended
    action is flipped independently with probability ``p_n``; the realized
    action is what both players observe afterwards.
    """
    if not 0.0 <= p_n <= 1.0:
        raise ValueError(f"p_n must lie in [0, 1], got {p_n}")
    hist_a, hist_b = seat_a.history, seat_b.history
    want_a = seat_a.player.strategy(hist_a, hist_b, ctx, rng)
    want_b = seat_b.player.strategy(hist_b, hist_a, ctx, rng)
    got_a, got_b = want_a, want_b
    if p_n >= 1.0:
        got_a, got_b = _FLIP[want_a], _FLIP[want_b]
    elif p_n > 0.0:
        if rng.random() < p_n:
            got_a = _FLIP[want_a]
        if rng.random() < p_n:
            got_b = _FLIP[want_b]
    seat_a.intended.append(want_a)
    seat_b.intended.append(want_b)
    hist_a.append(got_a)
    hist_b.append(got_b)
    return got_a, got_b


def play_match(player_a, player_b, params: MatchParams, rng: random.Random,
               payoffs: PayoffMatrix = DEFAULT_PAYOFFS) -> MatchRecord:
    """Play a full match between two freshly reset players."""
    player_a.reset()
    player_b.reset()
    seat_a, seat_b = Seat(player_a), Seat(player_b)
    p_n, p_e = params.p_n, params.p_e
    if p_e is None:
        limit, told = params.n, params.n
    else:
        limit = params.turn_cap if params.n is None else min(params.n, params.turn_cap)
        told = None
    ctx = MatchContext(told, payoffs, 1)
    capped = False
    turn = 0
    while True:
        turn += 1
        ctx.current_turn = turn
        play_turn(seat_a, seat_b, ctx, p_n, rng)
        if p_e is not None and (p_e >= 1.0 or rng.random() < p_e):
            break
        if turn >= limit:
            capped = p_e is not None and params.n is None
            break
    table = payoffs._table
    pays = [table[pair] for pair in zip(seat_a.history, seat_b.history)]
    return MatchRecord(
        actions_a=tuple(seat_a.history),
        actions_b=tuple(seat_b.history),
        intended_a=tuple(seat_a.intended),
        intended_b=tuple(seat_b.intended),
        payoffs_a=tuple(p[0] for p in pays),
        payoffs_b=tuple(p[1] for p in pays),
        length=turn,
        capped=capped,
    )


def play_match_fixed(player_a, player_b, n: int, p_n: float = 0.0, rng: Optional[random.Random] = None,
                     payoffs: PayoffMatrix = DEFAULT_PAYOFFS) -> MatchRecord:
    if n is None or n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return play_match(player_a, player_b, MatchParams(n=n, p_n=p_n), rng or random.Random(0), payoffs)


def play_match_probend(player_a, player_b, p_e: float, p_n: float = 0.0,
                       rng: Optional[random.Random] = None, payoffs: PayoffMatrix = DEFAULT_PAYOFFS,
                       turn_cap: int = DEFAULT_TURN_CAP) -> MatchRecord:
    if p_e is None or not 0.0 < p_e <= 1.0:
        raise ValueError(f"p_e must lie in (0, 1], got {p_e}")
    params = MatchParams(p_n=p_n, p_e=p_e, turn_cap=turn_cap)
    return play_match(player_a, player_b, params, rng or random.Random(0), payoffs)
