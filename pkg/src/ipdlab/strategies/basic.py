"""Named strategies that are not instances of a generic archetype.

Behaviour follows the commonly used reference implementations; where those
leave room for interpretation the chosen rule is spelled out in the class
docstring and mirrored in the registry manifest.
"""

from __future__ import annotations

from ..engine import C, D
from .archetypes import MemoryOnePlayer, STATES
from .base import Player, random_choice


class Cooperator(Player):
    def strategy(self, own, opp, ctx, rng):
        return C


class Defector(Player):
    def strategy(self, own, opp, ctx, rng):
        return D


class RandomPlayer(Player):
    def __init__(self, p: float = 0.5):
        self.p = p
        super().__init__()

    def strategy(self, own, opp, ctx, rng):
        return random_choice(rng, self.p)


class Alternator(Player):
    """C first, then the opposite of its own last realized move."""

    def strategy(self, own, opp, ctx, rng):
        if not own:
            return C
        return D if own[-1] is C else C


# --------------------------------------------------------------- tit for tat

class TitForTat(Player):
    def strategy(self, own, opp, ctx, rng):
        return opp[-1] if opp else C


class TitFor2Tats(Player):
    def strategy(self, own, opp, ctx, rng):
        if len(opp) >= 2 and opp[-1] is D and opp[-2] is D:
            return D
        return C


class TwoTitsForTat(Player):
    def strategy(self, own, opp, ctx, rng):
        return D if D in opp[-2:] else C


class SuspiciousTitForTat(Player):
    def strategy(self, own, opp, ctx, rng):
        return opp[-1] if opp else D


class HardTitFor2Tats(Player):
    """Defects if two consecutive defections occur among the opponent's last three moves."""

    def strategy(self, own, opp, ctx, rng):
        last3 = opp[-3:]
        for a, b in zip(last3, last3[1:]):
            if a is D and b is D:
                return D
        return C


class SpitefulTitForTat(Player):
    """Tit for tat until the opponent defects twice in a row, then defects forever."""

    def reset(self):
        self.retaliating = False

    def strategy(self, own, opp, ctx, rng):
        if len(opp) >= 2 and opp[-1] is D and opp[-2] is D:
            self.retaliating = True
        if self.retaliating:
            return D
        return opp[-1] if opp else C


# ------------------------------------------------------------------ grudgers

class Grudger(Player):
    def reset(self):
        self.grudged = False

    def strategy(self, own, opp, ctx, rng):
        if opp and opp[-1] is D:
            self.grudged = True
        return D if self.grudged else C


class ForgetfulGrudger(Player):
    """Grudger that drops its grudge after ``memory`` consecutive defections."""

    def __init__(self, memory: int = 10):
        self.memory = memory
        super().__init__()

    def reset(self):
        self.grudged = False
        self.grudge_memory = 0

    def strategy(self, own, opp, ctx, rng):
        if self.grudged and self.grudge_memory >= self.memory:
            self.grudged = False
            self.grudge_memory = 0
        if opp and opp[-1] is D:
            self.grudged = True
        if self.grudged:
            self.grudge_memory += 1
            return D
        return C


class FoolMeOnce(Player):
    """Forgives one defection; a second one is never forgiven."""

    def reset(self):
        self.defections = 0

    def strategy(self, own, opp, ctx, rng):
        if opp and opp[-1] is D:
            self.defections += 1
        return D if self.defections > 1 else C


class ForgetfulFoolMeOnce(Player):
    """Fool Me Once whose defection count resets with a small probability each turn."""

    def __init__(self, forget_probability: float = 0.05):
        self.forget_probability = forget_probability
        super().__init__()

    def reset(self):
        self.defections = 0

    def strategy(self, own, opp, ctx, rng):
        r = rng.random()
        if not opp:
            return C
        if opp[-1] is D:
            self.defections += 1
        if r < self.forget_probability:
            self.defections = 0
        return D if self.defections > 1 else C


class EasyGo(Player):
    """Defects until the opponent defects, then cooperates for the rest of the match."""

    def reset(self):
        self.appeased = False

    def strategy(self, own, opp, ctx, rng):
        if opp and opp[-1] is D:
            self.appeased = True
        return C if self.appeased else D


class FoolMeForever(Player):
    # Same behaviour as EasyGo, written as a defection count on purpose.
    def reset(self):
        self.seen = 0
        self.defections = 0

    def strategy(self, own, opp, ctx, rng):
        for t in range(self.seen, len(opp)):
            self.defections += opp[t] is D
        self.seen = len(opp)
        return C if self.defections > 0 else D


# ---------------------------------------------------------- end-game cheaters

def _in_last_two_rounds(opp, ctx) -> bool:
    total = ctx.turns_total
    return total is not None and len(opp) > total - 3


class BackStabber(Player):
    """Forgives three defections, defects forever on the fourth, and defects on
    the last two rounds when the match length is known."""

    def reset(self):
        self.defections = 0

    def strategy(self, own, opp, ctx, rng):
        if opp and opp[-1] is D:
            self.defections += 1
        if _in_last_two_rounds(opp, ctx):
            return D
        return D if self.defections > 3 else C


class DoubleCrosser(BackStabber):
    """BackStabber with a softer middle game.

    If the opponent cooperated throughout the first six rounds, rounds 7 to
    180 are played as tit for two tats. The end-game defection on the last two
    known rounds always takes precedence.
    """

    def strategy(self, own, opp, ctx, rng):
        if opp and opp[-1] is D:
            self.defections += 1
        if _in_last_two_rounds(opp, ctx):
            return D
        if 6 <= len(opp) < 180 and D not in opp[:6]:
            return D if opp[-1] is D and opp[-2] is D else C
        return D if self.defections > 3 else C


# ---------------------------------------------------------------- retaliators

class Retaliate(Player):
    """Defects while the opponent's exploitations (my C, their D) exceed
    ``threshold`` times my exploitations of them (my D, their C)."""

    def __init__(self, threshold: float = 0.1):
        self.threshold = threshold
        super().__init__()

    def reset(self):
        self.tricked = 0
        self.tricks = 0

    def _count(self, own, opp):
        if own:
            a, b = own[-1], opp[-1]
            if a is C and b is D:
                self.tricked += 1
            elif a is D and b is C:
                self.tricks += 1

    def strategy(self, own, opp, ctx, rng):
        self._count(own, opp)
        return D if self.tricked > self.tricks * self.threshold else C


class LimitedRetaliate(Retaliate):
    """Retaliate that stops after ``limit`` consecutive retaliations."""

    def __init__(self, threshold: float = 0.1, limit: int = 20):
        self.limit = limit
        super().__init__(threshold)

    def reset(self):
        super().reset()
        self.retaliating = False
        self.retaliation_count = 0

    def strategy(self, own, opp, ctx, rng):
        self._count(own, opp)
        if self.tricked > self.tricks * self.threshold:
            self.retaliating = True
        else:
            self.retaliating = False
            self.retaliation_count = 0
        if self.retaliating:
            if self.retaliation_count >= self.limit:
                self.retaliating = False
                self.retaliation_count = 0
                return C
            self.retaliation_count += 1
            return D
        return C


# -------------------------------------------------------------------- hunters

class DefectorHunter(Player):
    def strategy(self, own, opp, ctx, rng):
        if len(own) >= 4 and C not in opp:
            return D
        return C


class CooperatorHunter(Player):
    def strategy(self, own, opp, ctx, rng):
        if len(own) >= 4 and D not in opp:
            return D
        return C


class AlternatorHunter(Player):
    """Defects for good once the opponent has strictly alternated for six or more moves."""

    def reset(self):
        self.seen = 0
        self.alternating = True
        self.hunting = False

    def strategy(self, own, opp, ctx, rng):
        for t in range(max(self.seen, 1), len(opp)):
            if opp[t] is opp[t - 1]:
                self.alternating = False
        self.seen = len(opp)
        if not self.hunting and len(opp) >= 6 and self.alternating:
            self.hunting = True
        return D if self.hunting else C


class CycleHunter(Player):
    """Defects for good once the opponent's whole history is a repeated cycle.

    Cycle periods from 3 to 12 are checked, a period only counting once it
    has repeated at least twice. Constant histories are not treated as cycles.
    """

    min_period = 3
    max_period = 12

    def reset(self):
        self.seen = 0
        self.consistent = {p: True for p in range(self.min_period, self.max_period + 1)}
        self.mixed = False
        self.hunting = False

    def strategy(self, own, opp, ctx, rng):
        if self.hunting:
            return D
        for t in range(self.seen, len(opp)):
            if t and opp[t] is not opp[0]:
                self.mixed = True
            for p, ok in self.consistent.items():
                if ok and t >= p and opp[t] is not opp[t - p]:
                    self.consistent[p] = False
        self.seen = len(opp)
        if self.mixed:
            for p, ok in self.consistent.items():
                if ok and len(opp) >= 2 * p:
                    self.hunting = True
                    return D
        return C


class RandomHunter(Player):
    """Defects when the opponent's replies look like coin flips.

    After ten turns, the rates at which the opponent cooperated right after
    my C and right after my D are estimated (each only once I have played
    that action more than five times). If every available rate lies within
    0.25 of one half, defect.
    """

    def reset(self):
        self.after_c = 0
        self.after_d = 0

    def strategy(self, own, opp, ctx, rng):
        if len(own) > 1 and opp[-1] is C:
            if own[-2] is C:
                self.after_c += 1
            else:
                self.after_d += 1
        if len(own) > 10:
            coops = own.count(C)
            defections = len(own) - coops
            rates = []
            if coops > 5:
                rates.append(self.after_c / coops)
            if defections > 5:
                rates.append(self.after_d / defections)
            if rates and all(abs(r - 0.5) < 0.25 for r in rates):
                return D
        return C


# ------------------------------------------------------------------- grumpy

class Grumpy(Player):
    """Turns grumpy when opponent defections exceed cooperations by more than
    ``grumpy_threshold`` and nice again below ``nice_threshold``."""

    def __init__(self, grumpy_threshold: int = 10, nice_threshold: int = -10):
        self.grumpy_threshold = grumpy_threshold
        self.nice_threshold = nice_threshold
        super().__init__()

    def reset(self):
        self.nice = True
        self.grumpiness = 0

    def strategy(self, own, opp, ctx, rng):
        if opp:
            self.grumpiness += 1 if opp[-1] is D else -1
        if self.nice:
            if self.grumpiness > self.grumpy_threshold:
                self.nice = False
                return D
            return C
        if self.grumpiness < self.nice_threshold:
            self.nice = True
            return C
        return D


# ----------------------------------------------------------- defector-leaning

class Bully(Player):
    """Reverse tit for tat: D first, then the opposite of the opponent's last move."""

    def strategy(self, own, opp, ctx, rng):
        if not opp:
            return D
        return C if opp[-1] is D else D


class BetterAndBetter(Player):
    """Cooperates with probability turn/1000, so it defects less as the match goes on."""

    def strategy(self, own, opp, ctx, rng):
        return random_choice(rng, (len(own) + 1) / 1000)


class TrickyDefector(Player):
    """Defects, except it cooperates after three straight opponent defections
    provided the opponent has cooperated at some point."""

    def reset(self):
        self.opp_cooperated = False

    def strategy(self, own, opp, ctx, rng):
        if opp and opp[-1] is C:
            self.opp_cooperated = True
        if self.opp_cooperated and len(opp) >= 3 and opp[-1] is D and opp[-2] is D and opp[-3] is D:
            return C
        return D


class Aggravater(Grudger):
    """Grudger that opens with three defections."""

    def strategy(self, own, opp, ctx, rng):
        if opp and opp[-1] is D:
            self.grudged = True
        if len(opp) < 3:
            return D
        return D if self.grudged else C


class GradualKiller(Player):
    """Opens DDDDDCC, then defects forever if the opponent defected on moves
    6 and 7, otherwise cooperates forever."""

    def strategy(self, own, opp, ctx, rng):
        turn = len(own)
        if turn < 5:
            return D
        if turn < 7:
            return C
        return D if opp[5] is D and opp[6] is D else C


class HardProber(Player):
    """Opens DDCC; defects forever if the opponent cooperated on moves 2 and 3,
    otherwise plays tit for tat."""

    def strategy(self, own, opp, ctx, rng):
        turn = len(own)
        if turn < 2:
            return D
        if turn < 4:
            return C
        if opp[1] is C and opp[2] is C:
            return D
        return opp[-1]


# ------------------------------------------------------ game-aware memory one

class GTFT(MemoryOnePlayer):
    """Generous tit for tat, forgiving with the largest probability that still
    makes defection unprofitable: min(1 - (T-R)/(R-S), (R-P)/(T-P))."""

    def __init__(self):
        self._game = None
        super().__init__((1.0, 1.0, 1.0, 1.0), C)

    @staticmethod
    def generosity(payoffs) -> float:
        R, S, T, P = payoffs.R, payoffs.S, payoffs.T, payoffs.P
        return min(1 - (T - R) / (R - S), (R - P) / (T - P))

    def strategy(self, own, opp, ctx, rng):
        if ctx.payoffs is not self._game:
            self._game = ctx.payoffs
            p = self.generosity(ctx.payoffs)
            self.four_vector = (1.0, p, 1.0, p)
            self._probs = dict(zip(STATES, self.four_vector))
        return super().strategy(own, opp, ctx, rng)
