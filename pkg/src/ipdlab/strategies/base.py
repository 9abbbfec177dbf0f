"""Player interface and strategy metadata."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from ..engine import C, D, Action, MatchContext

INF = math.inf


@dataclass(frozen=True)
class StrategyMetadata:
    stochastic: bool = False
    makes_use_of_game: bool = False
    makes_use_of_length: bool = False
    memory_depth: float = INF

    def as_dict(self) -> dict:
        depth = self.memory_depth
        return {
            "stochastic": self.stochastic,
            "makes_use_of_game": self.makes_use_of_game,
            "makes_use_of_length": self.makes_use_of_length,
            "memory_depth": "inf" if depth == INF else int(depth),
        }


class Player:
    """Base class for every strategy.

    A player is created fresh (or ``reset``) for each match and then asked
    for one action per turn via :meth:`strategy`, always in turn order. The
    histories passed in are the realized (post-noise) actions, owned by the
    engine; players must not mutate them.
    """

    name = "Player"
    metadata = StrategyMetadata()

    def __init__(self):
        self.reset()

    def reset(self) -> None:
        """Clear per-match state."""

    def strategy(self, own: list, opp: list, ctx: MatchContext, rng: random.Random) -> Action:
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.name!r}>"


@dataclass(frozen=True)
class StrategySpec:
    """A registered strategy: how to build it, with what, and how it is classified."""

    name: str
    factory: Callable[[], Player] = field(compare=False, repr=False)
    kind: str
    params: dict
    metadata: StrategyMetadata
    description: str = ""
    alias_of: Optional[str] = None

    def make(self) -> Player:
        player = self.factory()
        player.name = self.name
        return player

    def manifest_entry(self) -> dict[str, Any]:
        entry = {
            "name": self.name,
            "kind": self.kind,
            "params": _jsonable(self.params),
            "metadata": self.metadata.as_dict(),
            "description": self.description,
        }
        if self.alias_of:
            entry["alias_of"] = self.alias_of
        return entry


def _jsonable(value):
    if isinstance(value, Action):
        return value.value
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return value


def random_choice(rng: random.Random, p_cooperate: float) -> Action:
    """C with probability ``p_cooperate``. Degenerate probabilities draw nothing."""
    if p_cooperate >= 1.0:
        return C
    if p_cooperate <= 0.0:
        return D
    return C if rng.random() < p_cooperate else D
