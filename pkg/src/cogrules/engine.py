"""Perceive-plan-act production cycle: precondition matching against a
world state and softmax conflict resolution over rule utilities, split
into independent longitudinal and lateral decision slots.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field

from .knowledge import PASS, KnowledgeBase, ProductionRule, Value

LONGITUDINAL = "longitudinal"
LATERAL = "lateral"
SLOTS = (LONGITUDINAL, LATERAL)


@dataclass(frozen=True)
class WorldState:
    features: tuple[tuple[str, Value], ...]
    t: int = 0

    @classmethod
    def make(cls, features: dict[str, Value], t: int = 0) -> "WorldState":
        return cls(tuple(sorted(features.items())), t)

    def as_dict(self) -> dict[str, Value]:
        return dict(self.features)

    def key(self) -> str:
        return json.dumps(self.features, sort_keys=True)

    def validate(self, kb: KnowledgeBase) -> None:
        for name, value in self.features:
            dom = kb.features.get(name)
            if dom is None:
                raise ValueError(f"state feature {name!r} not in knowledge base")
            if not dom.contains(value):
                raise ValueError(f"state value {value!r} out of domain for {name!r}")


@dataclass
class Decision:
    longitudinal: str | None = None
    lateral: str | None = None
    fired: list[tuple[str, int]] = field(default_factory=list)  # (rule name, step)

    def slot(self, name: str) -> str | None:
        return self.longitudinal if name == LONGITUDINAL else self.lateral


@dataclass
class TraceEntry:
    t: int
    slot: str  # the slot this resolution step was run for
    conflict: list[str]
    probabilities: list[float]
    chosen: str
    decision_so_far: dict
    filled: list[str] = field(default_factory=list)  # slots this firing set


@dataclass
class ReasoningTrace:
    entries: list[TraceEntry] = field(default_factory=list)

    def to_json(self) -> list[dict]:
        return [{"t": e.t, "slot": e.slot, "conflict": e.conflict,
                 "probabilities": e.probabilities, "chosen": e.chosen,
                 "decision": e.decision_so_far} for e in self.entries]


def _holds(precondition, state: dict[str, Value]) -> bool:
    feature, cmp, value = precondition
    if feature not in state:
        return False
    return state[feature] == value if cmp == "=" else state[feature] != value


def match(state: WorldState, rules: list[ProductionRule]) -> list[ProductionRule]:
    """Conflict set: rules whose every precondition holds, name-ordered."""
    feats = state.as_dict()
    hits = [r for r in rules if all(_holds(p, feats) for p in r.preconditions)]
    hits.sort(key=lambda r: r.name)
    return hits


def selection_probabilities(utilities: list[float], sigma: float) -> list[float]:
    """Softmax over the conflict set with log-sum-exp stabilization."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    scaled = [u / sigma for u in utilities]
    m = max(scaled)
    exps = [math.exp(s - m) for s in scaled]
    z = sum(exps)
    return [e / z for e in exps]


def select(conflict: list[ProductionRule], sigma: float,
           rng: random.Random) -> tuple[ProductionRule, list[float]]:
    if not conflict:
        raise ValueError("conflict set must be nonempty")
    probs = selection_probabilities([r.utility for r in conflict], sigma)
    x = rng.random()
    acc = 0.0
    for rule, p in zip(conflict, probs):
        acc += p
        if x < acc:
            return rule, probs
    return conflict[-1], probs


def decide(state: WorldState, rules: list[ProductionRule], sigma: float,
           rng: random.Random) -> tuple[Decision, ReasoningTrace]:
    """Up to two resolution steps per cycle, longitudinal first. A winning
    rule applies all its non-pass effects, so a rule carrying both effects
    fills both slots in one firing."""
    matched = match(state, rules)
    decision = Decision()
    trace = ReasoningTrace()
    for slot in SLOTS:
        if decision.slot(slot) is not None:
            continue
        candidates = [r for r in matched
                      if (r.effects.longitudinal if slot == LONGITUDINAL else r.effects.lateral) != PASS]
        if not candidates:
            continue
        chosen, probs = select(candidates, sigma, rng)
        filled = []
        if chosen.effects.longitudinal != PASS and decision.longitudinal is None:
            decision.longitudinal = chosen.effects.longitudinal
            filled.append(LONGITUDINAL)
        if chosen.effects.lateral != PASS and decision.lateral is None:
            decision.lateral = chosen.effects.lateral
            filled.append(LATERAL)
        decision.fired.append((chosen.name, state.t))
        trace.entries.append(TraceEntry(
            t=state.t, slot=slot, conflict=[r.name for r in candidates],
            probabilities=probs, chosen=chosen.name,
            decision_so_far={"longitudinal": decision.longitudinal,
                             "lateral": decision.lateral},
            filled=filled))
    return decision, trace
