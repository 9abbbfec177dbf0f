"""Meta players: a team of strategies simulated privately, one of which is played.

Every team member sees the meta player's own realized history and the
opponent's realized history, exactly as if it had been seated in the match.
"""

from __future__ import annotations

from typing import Sequence

from ..engine import C, D
from .base import INF, Player, StrategyMetadata

RULES = ("winner", "majority", "minority")


class MetaPlayer(Player):
    """Plays the proposal selected from a team by ``rule``.

    ``winner`` follows the member with the highest hypothetical score, i.e.
    the sum over past turns of what its proposal would have earned against
    the opponent's realized move. Ties go to C if any leading member proposes
    C. ``majority`` plays D only if strictly more members propose D than C;
    ``minority`` plays C only if strictly more members propose D than C.

    With ``nice=True`` the meta player cooperates until the opponent's first
    defection, while its team keeps being simulated and scored.
    """

    def __init__(self, team: Sequence, rule: str = "winner", nice: bool = False):
        if not team:
            raise ValueError("a meta player needs a non-empty team")
        if rule not in RULES:
            raise ValueError(f"unknown meta rule {rule!r}; expected one of {RULES}")
        self.team_specs = tuple(team)
        self.rule = rule
        self.nice = nice
        super().__init__()

    def reset(self):
        self.team = [spec.make() for spec in self.team_specs]
        self.moves = [member.strategy for member in self.team]
        self.scores = [0.0] * len(self.team)
        self.proposals = None
        self.provoked = False

    def strategy(self, own, opp, ctx, rng):
        if opp:
            last = opp[-1]
            if last is D:
                self.provoked = True
            if self.rule == "winner" and self.proposals is not None:
                table = ctx.payoffs._table
                earned = {C: table[C, last][0], D: table[D, last][0]}
                self.scores = [s + earned[p] for s, p in zip(self.scores, self.proposals)]
        proposals = [play(own, opp, ctx, rng) for play in self.moves]
        self.proposals = proposals
        if self.nice and not self.provoked:
            return C
        return self.choose(proposals)

    def choose(self, proposals):
        if self.rule == "winner":
            best = max(self.scores)
            leaders = [p for p, s in zip(proposals, self.scores) if s == best]
            return C if C in leaders else D
        defections = proposals.count(D)
        more_d = defections > len(proposals) - defections
        if self.rule == "majority":
            return D if more_d else C
        return C if more_d else D


def team_metadata(team: Sequence) -> StrategyMetadata:
    """Meta players inherit randomness and length use from their team."""
    return StrategyMetadata(
        stochastic=any(spec.metadata.stochastic for spec in team),
        makes_use_of_game=True,
        makes_use_of_length=any(spec.metadata.makes_use_of_length for spec in team),
        memory_depth=INF,
    )
