"""Parameterised strategy families.

Each archetype is a :class:`Player` subclass plus a validating constructor
reachable through :func:`load_archetype`. FSM and lookup-table parameters can
also be read from small CSV files (see :func:`read_fsm_csv`).
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from ..engine import C, D, Action, MatchContext, PayoffMatrix, actions_to_str
from .base import INF, Player, StrategyMetadata, StrategySpec, random_choice


class ArchetypeError(ValueError):
    """Invalid archetype parameters. ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _action(value, field: str) -> Action:
    if isinstance(value, Action):
        return value
    if isinstance(value, str) and value.upper() in ("C", "D"):
        return Action(value.upper())
    raise ArchetypeError(field, f"expected 'C' or 'D', got {value!r}")


def _probability(value, field: str) -> float:
    try:
        p = float(value)
    except (TypeError, ValueError):
        raise ArchetypeError(field, f"expected a probability, got {value!r}") from None
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ArchetypeError(field, f"probability must lie in [0, 1], got {value!r}")
    return p


# ---------------------------------------------------------------- memory one

STATES = ((C, C), (C, D), (D, C), (D, D))


class MemoryOnePlayer(Player):
    """Cooperates with a probability set by the previous (own, opponent) pair."""

    def __init__(self, four_vector: Sequence[float], initial: Action = C):
        self.four_vector = tuple(four_vector)
        self.initial = initial
        self._probs = dict(zip(STATES, self.four_vector))
        super().__init__()

    def strategy(self, own, opp, ctx, rng):
        if not own:
            return self.initial
        return random_choice(rng, self._probs[own[-1], opp[-1]])


def memory_one_metadata(four_vector) -> StrategyMetadata:
    stochastic = any(0.0 < p < 1.0 for p in four_vector)
    return StrategyMetadata(stochastic=stochastic, memory_depth=1)


def zd_four_vector(phi: float, s: float, l: float, payoffs: PayoffMatrix) -> tuple:
    """Memory-one vector of a zero-determinant player.

    Parameterised as in the usual (phi, s, l) form: ``s`` is the slope of
    the enforced payoff line (``1/s`` is the extortion factor for
    ``l = P``), ``l`` its baseline and ``phi`` a scale factor.
    """
    R, S, T, P = payoffs.R, payoffs.S, payoffs.T, payoffs.P
    return (
        1 - phi * (1 - s) * (R - l),
        1 - phi * (s * (l - S) + (T - l)),
        phi * (s * (T - l) + (l - S)),
        phi * (1 - s) * (l - P),
    )


class ZeroDeterminantPlayer(MemoryOnePlayer):
    """Memory-one player whose vector is derived from the match's payoffs."""

    def __init__(self, phi: float, s: float, l: Union[float, str]):
        self.phi, self.s, self.l = phi, s, l
        self._game = None
        super().__init__((1.0, 1.0, 1.0, 1.0), C)

    def _baseline(self, payoffs):
        if isinstance(self.l, str):
            return getattr(payoffs, self.l)
        return self.l

    def strategy(self, own, opp, ctx, rng):
        if ctx.payoffs is not self._game:
            self._game = ctx.payoffs
            self.four_vector = zd_four_vector(self.phi, self.s, self._baseline(ctx.payoffs), ctx.payoffs)
            self._probs = dict(zip(STATES, self.four_vector))
        return super().strategy(own, opp, ctx, rng)


# ----------------------------------------------------------------------- FSM

class FSMPlayer(Player):
    """Finite state machine driven by the opponent's last action.

    ``transitions`` maps ``(state, opponent_last)`` to ``(next_state, action)``.
    The first move is ``initial_action`` and leaves the machine in
    ``initial_state``.
    """

    def __init__(self, transitions: Mapping, initial_state, initial_action: Action):
        self.transitions = dict(transitions)
        self.initial_state = initial_state
        self.initial_action = initial_action
        super().__init__()

    def reset(self):
        self.state = self.initial_state

    def strategy(self, own, opp, ctx, rng):
        if not opp:
            return self.initial_action
        self.state, action = self.transitions[self.state, opp[-1]]
        return action


def _fsm_table(rows, field="transitions") -> dict:
    table = {}
    for i, row in enumerate(rows):
        if len(row) != 4:
            raise ArchetypeError(f"{field}[{i}]", "expected (state, opponent_action, next_state, action)")
        state, opp_action, next_state, action = row
        key = (state, _action(opp_action, f"{field}[{i}].opponent_action"))
        if key in table:
            raise ArchetypeError(f"{field}[{i}]", f"duplicate transition for {key}")
        table[key] = (next_state, _action(action, f"{field}[{i}].action"))
    if not table:
        raise ArchetypeError(field, "empty transition table")
    states = {s for s, _ in table}
    for i, (state, _, nxt, _) in enumerate(rows):
        if nxt not in states:
            raise ArchetypeError(f"{field}[{i}].next_state", f"state {nxt!r} has no outgoing transitions")
    for state in sorted(states, key=str):
        for a in (C, D):
            if (state, a) not in table:
                raise ArchetypeError(field, f"missing transition for state {state!r} on {a}")
    return table


def read_fsm_csv(path: Union[str, Path]) -> dict:
    return parse_fsm_csv(Path(path).read_text())


def parse_fsm_csv(text: str) -> dict:
    """Parse the FSM parameter format.

    Format::

        # initial_state: 1
        # initial_action: D
        state,opponent_action,next_state,action
        1,C,1,D
        ...

    States are read as integers when every state parses as one.
    """
    header = {}
    body = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            key, sep, value = stripped[1:].partition(":")
            if sep:
                header[key.strip()] = value.strip()
            continue
        body.append(line)
    rows = list(csv.reader(io.StringIO("\n".join(body))))
    if not rows or [c.strip() for c in rows[0]] != ["state", "opponent_action", "next_state", "action"]:
        raise ArchetypeError("header", "expected columns state,opponent_action,next_state,action")
    rows = [[c.strip() for c in r] for r in rows[1:]]
    for i, r in enumerate(rows):
        if len(r) != 4:
            raise ArchetypeError(f"transitions[{i}]", f"expected 4 columns, got {len(r)}")
    all_states = [r[0] for r in rows] + [r[2] for r in rows] + [header.get("initial_state", "")]
    as_int = all(s.lstrip("-").isdigit() for s in all_states)
    conv = int if as_int else str
    for field in ("initial_state", "initial_action"):
        if field not in header:
            raise ArchetypeError(field, "missing from FSM file header")
    return {
        "transitions": [[conv(r[0]), r[1], conv(r[2]), r[3]] for r in rows],
        "initial_state": conv(header["initial_state"]),
        "initial_action": header["initial_action"],
    }


def write_fsm_csv(params: dict) -> str:
    out = io.StringIO()
    out.write(f"# initial_state: {params['initial_state']}\n")
    out.write(f"# initial_action: {_action(params['initial_action'], 'initial_action').value}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["state", "opponent_action", "next_state", "action"])
    for state, opp_action, nxt, action in params["transitions"]:
        writer.writerow([state, _action(opp_action, "").value, nxt, _action(action, "").value])
    return out.getvalue()


# -------------------------------------------------------------- lookup table

class LookupTablePlayer(Player):
    """Plays the action looked up from the last few own and opponent moves."""

    def __init__(self, own_depth: int, opp_depth: int, table: Mapping[tuple, Action], initial: Sequence[Action]):
        self.own_depth = own_depth
        self.opp_depth = opp_depth
        self.table = dict(table)
        self.initial = tuple(initial)
        super().__init__()

    def strategy(self, own, opp, ctx, rng):
        turn = len(own)
        if turn < len(self.initial):
            return self.initial[turn]
        own_key = actions_to_str(own[len(own) - self.own_depth:]) if self.own_depth else ""
        opp_key = actions_to_str(opp[len(opp) - self.opp_depth:]) if self.opp_depth else ""
        return self.table[own_key, opp_key]


def _lookup_table(params) -> tuple:
    try:
        own_depth = int(params["own_depth"])
        opp_depth = int(params["opp_depth"])
    except KeyError as exc:
        raise ArchetypeError(exc.args[0], "required") from None
    if own_depth < 0 or opp_depth < 0 or own_depth + opp_depth == 0:
        raise ArchetypeError("own_depth", "depths must be non-negative and not both zero")
    raw = params.get("table")
    if not isinstance(raw, Mapping):
        raise ArchetypeError("table", "expected a mapping 'OWN|OPP' -> action")
    table = {}
    for key, value in raw.items():
        own_key, sep, opp_key = key.partition("|")
        if not sep or len(own_key) != own_depth or len(opp_key) != opp_depth or set(own_key + opp_key) - {"C", "D"}:
            raise ArchetypeError(f"table[{key!r}]", f"key must be OWN|OPP with {own_depth} and {opp_depth} actions")
        table[own_key, opp_key] = _action(value, f"table[{key!r}]")
    for own_t in itertools.product("CD", repeat=own_depth):
        for opp_t in itertools.product("CD", repeat=opp_depth):
            if ("".join(own_t), "".join(opp_t)) not in table:
                raise ArchetypeError("table", f"missing entry {''.join(own_t)}|{''.join(opp_t)}")
    depth = max(own_depth, opp_depth)
    initial = params.get("initial", "C" * depth)
    if len(initial) != depth:
        raise ArchetypeError("initial", f"expected {depth} opening actions")
    return own_depth, opp_depth, table, [_action(a, "initial") for a in initial]


def read_lookup_csv(source: Union[str, Path]) -> dict:
    """Parse a lookup-table file: ``# initial: CC`` then columns own,opp,action."""
    text = Path(source).read_text()
    header, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            header[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    rows = list(csv.DictReader(io.StringIO("\n".join(body))))
    if not rows:
        raise ArchetypeError("table", "no rows")
    table = {f"{r['own']}|{r['opp']}": r["action"] for r in rows}
    params = {"own_depth": len(rows[0]["own"]), "opp_depth": len(rows[0]["opp"]), "table": table}
    if header.get("initial"):
        params["initial"] = header["initial"]
    return params


# ------------------------------------------------------------------- cyclers

class CyclerPlayer(Player):
    def __init__(self, cycle: str):
        self.cycle = tuple(Action(ch) for ch in cycle)
        super().__init__()

    def strategy(self, own, opp, ctx, rng):
        return self.cycle[len(own) % len(self.cycle)]


# ------------------------------------------------------------ math constants

class MathConstantPlayer(Player):
    """Defects while total cooperations per defection exceed a constant.

    Counts are over both players' realized moves. Opens with C, then defects
    until the opponent has defected at least once.
    """

    def __init__(self, constant: float):
        self.constant = constant
        super().__init__()

    def reset(self):
        self._seen = 0
        self._coops = 0
        self._opp_defections = 0

    def strategy(self, own, opp, ctx, rng):
        for t in range(self._seen, len(own)):
            self._coops += (own[t] is C) + (opp[t] is C)
            self._opp_defections += opp[t] is D
        self._seen = len(own)
        if not opp:
            return C
        if not self._opp_defections:
            return D
        defections = 2 * len(own) - self._coops
        return D if self._coops / defections > self.constant else C


# ----------------------------------------------------------- threshold ratio

class ThresholdRatioPlayer(Player):
    """Go-by-majority over a window with a margin and a fallback rule.

    Over the opponent's last ``window`` moves (all moves if None), with
    ``diff = #C - #D``: cooperate if ``diff >= margin``, defect if
    ``-diff >= margin``, otherwise apply ``fallback`` ("tft", "C" or "D").
    The first ``warmup`` turns are played as C.
    """

    def __init__(self, window: Optional[int], margin: int, warmup: int = 0, fallback: str = "tft"):
        self.window = window
        self.margin = margin
        self.warmup = warmup
        self.fallback = fallback
        super().__init__()

    def strategy(self, own, opp, ctx, rng):
        if len(opp) <= self.warmup or not opp:
            return C
        recent = opp if self.window is None else opp[len(opp) - self.window:]
        coops = recent.count(C)
        diff = 2 * coops - len(recent)
        if diff >= self.margin:
            return C
        if -diff >= self.margin:
            return D
        if self.fallback == "tft":
            return opp[-1]
        return Action(self.fallback)


# ------------------------------------------------------------------- loading

ARCHETYPES = ("memory_one", "fsm", "lookup_table", "cycler", "math_constant", "threshold_ratio")


def load_archetype(kind: str, params: Mapping, name: Optional[str] = None,
                   description: str = "") -> StrategySpec:
    """Validate ``params`` for ``kind`` and return a registrable StrategySpec."""
    params = dict(params)
    if kind == "memory_one":
        if "four_vector" in params:
            vec = params["four_vector"]
            if not isinstance(vec, (list, tuple)) or len(vec) != 4:
                raise ArchetypeError("four_vector", "expected 4 probabilities (p_CC, p_CD, p_DC, p_DD)")
            probs = tuple(_probability(p, f"four_vector[{i}]") for i, p in enumerate(vec))
        else:
            probs = tuple(_probability(params.get(k), k) for k in ("p_CC", "p_CD", "p_DC", "p_DD"))
        initial = _action(params.get("initial", "C"), "initial")
        clean = {"initial": initial.value, "four_vector": list(probs)}
        return StrategySpec(name or f"MemoryOne{probs}", lambda: MemoryOnePlayer(probs, initial),
                            kind, clean, memory_one_metadata(probs), description)

    if kind == "fsm":
        if "file" in params:
            params = {**read_fsm_csv(params["file"]), **{k: v for k, v in params.items() if k != "file"}}
        for key in ("transitions", "initial_state", "initial_action"):
            if key not in params:
                raise ArchetypeError(key, "required")
        rows = [list(r) for r in params["transitions"]]
        table = _fsm_table(rows)
        initial_action = _action(params["initial_action"], "initial_action")
        initial_state = params["initial_state"]
        if (initial_state, C) not in table:
            raise ArchetypeError("initial_state", f"unknown state {initial_state!r}")
        depth = params.get("memory_depth", INF)
        clean = {"initial_state": initial_state, "initial_action": initial_action.value,
                 "transitions": [[r[0], _action(r[1], "").value, r[2], _action(r[3], "").value] for r in rows]}
        meta = StrategyMetadata(memory_depth=depth)
        return StrategySpec(name or "FSM", lambda: FSMPlayer(table, initial_state, initial_action),
                            kind, clean, meta, description)

    if kind == "lookup_table":
        if "file" in params:
            params = {**read_lookup_csv(params["file"]), **{k: v for k, v in params.items() if k != "file"}}
        own_depth, opp_depth, table, initial = _lookup_table(params)
        clean = {"own_depth": own_depth, "opp_depth": opp_depth, "initial": actions_to_str(initial),
                 "table": {f"{o}|{p}": a.value for (o, p), a in sorted(table.items())}}
        meta = StrategyMetadata(memory_depth=max(own_depth, opp_depth))
        return StrategySpec(name or "LookerUp", lambda: LookupTablePlayer(own_depth, opp_depth, table, initial),
                            kind, clean, meta, description)

    if kind == "cycler":
        cycle = params.get("cycle")
        if not isinstance(cycle, str) or not cycle or set(cycle.upper()) - {"C", "D"}:
            raise ArchetypeError("cycle", f"expected a non-empty string over {{C, D}}, got {cycle!r}")
        cycle = cycle.upper()
        meta = StrategyMetadata(memory_depth=len(cycle) - 1)
        return StrategySpec(name or f"Cycler {cycle}", lambda: CyclerPlayer(cycle), kind,
                            {"cycle": cycle}, meta, description)

    if kind == "math_constant":
        try:
            constant = float(params["constant"])
        except KeyError:
            raise ArchetypeError("constant", "required") from None
        except (TypeError, ValueError):
            raise ArchetypeError("constant", f"expected a number, got {params['constant']!r}") from None
        if not constant > 0:
            raise ArchetypeError("constant", "must be positive")
        return StrategySpec(name or f"Constant {constant}", lambda: MathConstantPlayer(constant), kind,
                            {"constant": constant}, StrategyMetadata(), description)

    if kind == "threshold_ratio":
        window = params.get("window")
        if window is not None and (not isinstance(window, int) or window < 1):
            raise ArchetypeError("window", "expected a positive integer or null")
        margin = params.get("margin", 1)
        if not isinstance(margin, int) or margin < 1:
            raise ArchetypeError("margin", "expected a positive integer")
        warmup = params.get("warmup", 0)
        if not isinstance(warmup, int) or warmup < 0:
            raise ArchetypeError("warmup", "expected a non-negative integer")
        fallback = params.get("fallback", "tft")
        if fallback not in ("tft", "C", "D"):
            raise ArchetypeError("fallback", "expected 'tft', 'C' or 'D'")
        clean = {"window": window, "margin": margin, "warmup": warmup, "fallback": fallback}
        meta = StrategyMetadata(memory_depth=INF if window is None else window)
        return StrategySpec(name or "ThresholdRatio", lambda: ThresholdRatioPlayer(window, margin, warmup, fallback),
                            kind, clean, meta, description)

    raise ArchetypeError("kind", f"unknown archetype {kind!r}; expected one of {', '.join(ARCHETYPES)}")
