"""The concrete strategy registry and the operations defined over it.

Lookups accept the display name or any spelling that matches it once case,
spaces, hyphens and underscores are ignored ("TitForTat", "tit_for_tat").
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from pathlib import Path
from typing import Iterable, Optional, Union

from ..engine import DEFAULT_PAYOFFS, Action, MatchContext, actions_from_str
from . import basic
from .archetypes import ZeroDeterminantPlayer, load_archetype
from .base import StrategyMetadata, StrategySpec
from .meta import MetaPlayer, team_metadata

REGISTRY_VERSION = "1"
DATA_DIR = Path(__file__).parent / "data"
MANIFEST_PATH = DATA_DIR / "registry_manifest.json"


class UnknownStrategyError(KeyError, LookupError):
    def __init__(self, name):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"unknown strategy {self.name!r}"


def _named(name, cls, params=None, description="", alias_of=None, **meta) -> StrategySpec:
    params = dict(params or {})
    return StrategySpec(name, lambda: cls(**params), "named", params, StrategyMetadata(**meta),
                        description, alias_of)


def _memory_one(name, vector, description):
    return load_archetype("memory_one", {"four_vector": vector}, name, description)


def _zd(name, phi, s, l, description):
    params = {"phi": phi, "s": s, "l": l}
    meta = StrategyMetadata(stochastic=True, makes_use_of_game=True, memory_depth=1)
    return StrategySpec(name, lambda: ZeroDeterminantPlayer(phi, s, l), "zero_determinant",
                        params, meta, description)


def _base_specs() -> list[StrategySpec]:
    cycle = lambda c: load_archetype("cycler", {"cycle": c}, f"Cycler {c}", f"Repeats {c} forever.")
    specs = [
        _named("Cooperator", basic.Cooperator, description="Always C.", memory_depth=0),
        _named("Defector", basic.Defector, description="Always D.", memory_depth=0),
        _named("Random: 0.5", basic.RandomPlayer, {"p": 0.5}, "C with probability p each turn.",
               stochastic=True, memory_depth=0),
        _named("Alternator", basic.Alternator, description="C first, then the opposite of its own last move.",
               memory_depth=1),
        cycle("CCD"), cycle("DC"), cycle("DDC"), cycle("CCCCCD"),

        _named("Tit For Tat", basic.TitForTat, description="C first, then copies the opponent's last move.",
               memory_depth=1),
        _named("Tit For 2 Tats", basic.TitFor2Tats,
               description="D only after two consecutive opponent defections.", memory_depth=2),
        _named("Two Tits For Tat", basic.TwoTitsForTat,
               description="D if the opponent defected in either of the last two turns.", memory_depth=2),
        _named("Suspicious Tit For Tat", basic.SuspiciousTitForTat,
               description="D first, then copies the opponent's last move.", memory_depth=1),
        _named("Hard Tit For 2 Tats", basic.HardTitFor2Tats,
               description="D if two consecutive defections appear in the opponent's last three moves.",
               memory_depth=3),
        _named("Spiteful Tit For Tat", basic.SpitefulTitForTat,
               description="Tit for tat until the opponent defects twice in a row, then D forever."),

        _named("Grudger", basic.Grudger, description="C until the opponent defects, then D forever."),
        _named("Forgetful Grudger", basic.ForgetfulGrudger, {"memory": 10},
               "Grudger that forgives after `memory` turns of grudge."),
        _named("Fool Me Once", basic.FoolMeOnce, description="Forgives the first defection, never the second."),
        _named("Forgetful Fool Me Once", basic.ForgetfulFoolMeOnce, {"forget_probability": 0.05},
               "Fool Me Once whose defection count resets with `forget_probability` each turn.",
               stochastic=True),
        _named("EasyGo", basic.EasyGo, description="D until the opponent defects, then C forever."),
        _named("Fool Me Forever", basic.FoolMeForever, description="Same rule as EasyGo, counted differently.",
               alias_of="EasyGo"),

        _named("BackStabber", basic.BackStabber,
               description="Forgives three defections, then D forever; D on the last two known turns.",
               makes_use_of_length=True),
        _named("DoubleCrosser", basic.DoubleCrosser,
               description=("BackStabber, but plays tit for two tats on turns 7 to 180 if the opponent "
                            "cooperated on turns 1 to 6; D on the last two known turns."),
               makes_use_of_length=True),

        _memory_one("Win-Stay Lose-Shift", (1, 0, 0, 1), "Repeats its move after R or T, switches after S or P."),
        StrategySpec("GTFT", basic.GTFT, "named", {"generosity": "min(1 - (T-R)/(R-S), (R-P)/(T-P))"},
                     StrategyMetadata(stochastic=True, makes_use_of_game=True, memory_depth=1),
                     "Tit for tat that forgives a defection with the largest safe probability."),
        _memory_one("Stochastic Cooperator", (0.935, 0.229, 0.266, 0.42),
                    "Memory-one player with vector (0.935, 0.229, 0.266, 0.42)."),
        _zd("ZD-Extort-2", 1 / 9, 0.5, "P", "Zero-determinant extortioner with extortion factor 2."),
        _zd("ZD-Extort-4", 4 / 17, 0.25, "P", "Zero-determinant extortioner with extortion factor 4."),
        _zd("ZD-GTFT-2", 0.25, 0.5, "R", "Generous zero-determinant player with slope 0.5."),
        _zd("ZD-SET-2", 0.25, 0.0, 2, "Zero-determinant equaliser setting the opponent's score to 2."),
    ]
    for suffix, threshold in (("", 0.1), (" 2", 0.08), (" 3", 0.05)):
        specs.append(_named(f"Retaliate{suffix}", basic.Retaliate, {"threshold": threshold},
                            "D while the opponent's exploitations exceed `threshold` times mine."))
    for suffix, threshold, limit in (("", 0.1, 20), (" 2", 0.08, 15), (" 3", 0.05, 20)):
        specs.append(_named(f"Limited Retaliate{suffix}", basic.LimitedRetaliate,
                            {"threshold": threshold, "limit": limit},
                            "Retaliate that stops after `limit` consecutive retaliations."))
    specs += [
        _named("Defector Hunter", basic.DefectorHunter,
               description="C, but D once the opponent has defected on every one of at least 4 turns."),
        _named("Cooperator Hunter", basic.CooperatorHunter,
               description="C, but D once the opponent has cooperated on every one of at least 4 turns."),
        _named("Alternator Hunter", basic.AlternatorHunter,
               description="D forever once the opponent has strictly alternated for 6 or more turns."),
        _named("Cycle Hunter", basic.CycleHunter, {},
               "D forever once the opponent's history is a non-constant cycle of period 3 to 12 seen twice."),
        _named("Random Hunter", basic.RandomHunter,
               description="D when the opponent's replies to my C and to my D both look like coin flips."),

        _named("Grumpy", basic.Grumpy, {"grumpy_threshold": 10, "nice_threshold": -10},
               "Turns grumpy (D) when opponent D minus C exceeds grumpy_threshold, nice again below nice_threshold."),
        load_archetype("threshold_ratio", {"window": 10, "margin": 3, "warmup": 10, "fallback": "tft"},
                       "ShortMem", "C for 10 turns, then majority of the opponent's last 10 moves by a margin "
                       "of 3, tit for tat otherwise."),
        load_archetype("math_constant", {"constant": math.e}, "e",
                       "C first, D until the opponent defects, then D while total C/D exceeds e."),
        load_archetype("math_constant", {"constant": math.pi}, "Pi",
                       "C first, D until the opponent defects, then D while total C/D exceeds pi."),
        load_archetype("math_constant", {"constant": (1 + math.sqrt(5)) / 2}, "Phi",
                       "C first, D until the opponent defects, then D while total C/D exceeds the golden ratio."),

        _named("Bully", basic.Bully, description="D first, then the opposite of the opponent's last move.",
               memory_depth=1),
        _named("Better and Better", basic.BetterAndBetter, {},
               "C with probability t/1000 on turn t.", stochastic=True),
        _named("Tricky Defector", basic.TrickyDefector,
               description="D, except C after three opponent defections if the opponent ever cooperated."),
        _named("Aggravater", basic.Aggravater, description="Grudger that opens with three defections."),
        _named("Gradual Killer", basic.GradualKiller,
               description="Opens DDDDDCC, then D forever if the opponent defected on turns 6 and 7, else C."),
        _named("Hard Prober", basic.HardProber,
               description="Opens DDCC, then D forever if the opponent cooperated on turns 2 and 3, else tit for tat."),

        load_archetype("fsm", {"file": DATA_DIR / "fortress3.csv"}, "Fortress3",
                       "Three-state machine that defects until a defection handshake is returned."),
        load_archetype("fsm", {"file": DATA_DIR / "fortress4.csv"}, "Fortress4",
                       "Four-state machine that defects until a longer defection handshake is returned."),
    ]
    return specs


META_VARIANTS = (
    ("Meta Winner", "winner", False),
    ("Meta Majority", "majority", False),
    ("Meta Minority", "minority", False),
    ("Nice Meta Winner", "winner", True),
)


def make_meta(rule: str, team: Iterable, nice: bool = False, name: Optional[str] = None) -> StrategySpec:
    """A meta strategy over ``team`` (names or specs)."""
    team = tuple(get(m) if isinstance(m, str) else m for m in team)
    if not team:
        raise ValueError("a meta player needs a non-empty team")
    if name is None:
        name = f"{'Nice ' if nice else ''}Meta {rule.title()}"
    params = {"rule": rule, "nice": nice, "team": [m.name for m in team]}
    return StrategySpec(name, lambda: MetaPlayer(team, rule, nice), "meta", params, team_metadata(team),
                        f"Plays the {rule} of its team" + (", cooperating until first provoked." if nice else "."))


def _build() -> dict[str, StrategySpec]:
    base = _base_specs()
    specs = base + [make_meta(rule, base, nice, name) for name, rule, nice in META_VARIANTS]
    registry = {}
    for spec in specs:
        if spec.name in registry:
            raise RuntimeError(f"duplicate strategy name {spec.name}")
        registry[spec.name] = spec
    return registry


def _key(name: str) -> str:
    return "".join(ch for ch in name.lower() if ch not in " -_:.")


REGISTRY: dict[str, StrategySpec] = _build()

ALIASES = {
    "Slow Tit For Two Tats": "Tit For 2 Tats",
    "Tit For Two Tats": "Tit For 2 Tats",
    "WSLS": "Win-Stay Lose-Shift",
    "Random": "Random: 0.5",
    "π": "Pi",
    "φ": "Phi",
}

_LOOKUP = {_key(n): n for n in REGISTRY}
_LOOKUP.update({_key(a): n for a, n in ALIASES.items()})


def resolve(name: str) -> str:
    """Canonical registry name for ``name``."""
    if name in REGISTRY:
        return name
    try:
        return _LOOKUP[_key(name)]
    except (KeyError, AttributeError):
        raise UnknownStrategyError(name) from None


def get(name: str) -> StrategySpec:
    return REGISTRY[resolve(name)]


def names(include_meta: bool = True) -> list[str]:
    return [n for n, s in REGISTRY.items() if include_meta or s.kind != "meta"]


def classify(spec: Union[str, StrategySpec]) -> StrategyMetadata:
    if isinstance(spec, str):
        return get(spec).metadata
    return spec.metadata


def _history(h) -> list:
    if isinstance(h, str):
        return actions_from_str(h)
    return list(h)


def next_action(spec: Union[str, StrategySpec], own_hist, opp_hist, ctx: Optional[MatchContext] = None,
                rng: Optional[random.Random] = None) -> Action:
    """The action ``spec`` takes after the given realized histories.

    A fresh player is replayed through every prefix so stateful strategies
    end up in the state they would have reached in a real match.
    """
    if isinstance(spec, str):
        spec = get(spec)
    own, opp = _history(own_hist), _history(opp_hist)
    if len(own) != len(opp):
        raise ValueError(f"histories differ in length: {len(own)} vs {len(opp)}")
    if ctx is None:
        ctx = MatchContext(None, DEFAULT_PAYOFFS, len(own) + 1)
    rng = rng or random.Random(0)
    player = spec.make()
    seen_own, seen_opp = [], []
    step = MatchContext(ctx.turns_total, ctx.payoffs, 1)
    for a, b in zip(own, opp):
        player.strategy(seen_own, seen_opp, step, rng)
        seen_own.append(a)
        seen_opp.append(b)
        step.current_turn += 1
    return player.strategy(seen_own, seen_opp, step, rng)


def team_play(meta_spec: Union[str, StrategySpec], own_hist, opp_hist, ctx: Optional[MatchContext] = None,
              rng: Optional[random.Random] = None) -> Action:
    if isinstance(meta_spec, str):
        meta_spec = get(meta_spec)
    if meta_spec.kind != "meta":
        raise ValueError(f"{meta_spec.name} is not a meta strategy")
    return next_action(meta_spec, own_hist, opp_hist, ctx, rng)


def retaliate_rule(x: float, limit: Optional[int], own_hist, opp_hist) -> Action:
    """Retaliation decision after the given histories (limited when ``limit`` is set)."""
    if not 0.0 < x < 1.0:
        raise ValueError(f"threshold fraction must lie in (0, 1), got {x}")
    if limit is None:
        spec = StrategySpec("Retaliate", lambda: basic.Retaliate(x), "named", {"threshold": x},
                            StrategyMetadata())
    else:
        spec = StrategySpec("Limited Retaliate", lambda: basic.LimitedRetaliate(x, limit), "named",
                            {"threshold": x, "limit": limit}, StrategyMetadata())
    return next_action(spec, own_hist, opp_hist)


# ------------------------------------------------------------------ manifest

MANIFEST_NOTES = {
    "math_constant": ("Cooperates on turn 1 and defects until the opponent has defected once; afterwards "
                      "defects when (cooperations by both players) / (defections by both players) exceeds "
                      "the constant, otherwise cooperates."),
    "meta": ("Team members see the meta player's own realized history. Hypothetical scores use the "
             "opponent's realized actions. Winner ties go to C if any leading member proposes C. "
             "Majority plays D only on a strict D majority; minority plays C only on a strict D majority. "
             "Nice variants cooperate until the opponent's first defection."),
    "fsm": "Transition tables are stored as CSV: state,opponent_action,next_state,action with "
           "'# initial_state:' and '# initial_action:' header lines.",
    "memory_depth": "'inf' marks strategies whose action can depend on arbitrarily old turns.",
}


def registry_manifest(registry: Optional[dict] = None) -> dict:
    registry = REGISTRY if registry is None else registry
    return {
        "format": "ipdlab-registry",
        "version": REGISTRY_VERSION,
        "strategies": [spec.manifest_entry() for spec in registry.values()],
        "aliases": dict(sorted(ALIASES.items())),
        "notes": MANIFEST_NOTES,
    }


def manifest_digest(registry: Optional[dict] = None) -> str:
    """sha256 of the canonical JSON encoding of the manifest."""
    blob = json.dumps(registry_manifest(registry), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def render_manifest(registry: Optional[dict] = None) -> str:
    return json.dumps(registry_manifest(registry), indent=2, ensure_ascii=False) + "\n"


def write_manifest(path: Union[str, Path] = MANIFEST_PATH) -> Path:
    path = Path(path)
    path.write_text(render_manifest(), encoding="utf-8")
    return path
