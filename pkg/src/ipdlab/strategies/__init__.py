"""Strategy interface, archetypes and the named registry."""

from .archetypes import ARCHETYPES, ArchetypeError, load_archetype
from .base import INF, Player, StrategyMetadata, StrategySpec
from .meta import MetaPlayer
from .registry import (
    REGISTRY,
    UnknownStrategyError,
    classify,
    get,
    make_meta,
    manifest_digest,
    names,
    next_action,
    resolve,
    retaliate_rule,
    team_play,
)
