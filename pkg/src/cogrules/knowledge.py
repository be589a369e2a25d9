"""Knowledge base (feature/action vocabularies plus atom groundings) and
the grounded production-rule type shared by the compiler, engine and
trainer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

PASS = "pass"

Value = bool | int | str


@dataclass(frozen=True)
class FeatureDomain:
    kind: str  # bool | enum | int
    values: tuple[str, ...] = ()       # enum only
    low: int = 0                       # int only
    high: int = 0

    def __post_init__(self):
        if self.kind not in ("bool", "enum", "int"):
            raise ValueError(f"bad feature kind {self.kind!r}")
        if self.kind == "enum" and not self.values:
            raise ValueError("enum domain needs values")
        if self.kind == "int" and self.low > self.high:
            raise ValueError("empty int domain")

    def contains(self, v: Value) -> bool:
        if self.kind == "bool":
            return isinstance(v, bool)
        if self.kind == "enum":
            return v in self.values
        return isinstance(v, int) and not isinstance(v, bool) and self.low <= v <= self.high


@dataclass(frozen=True)
class Grounding:
    feature: str
    comparator: str  # '=' or '!='
    value: Value

    def __post_init__(self):
        if self.comparator not in ("=", "!="):
            raise ValueError(f"bad comparator {self.comparator!r}")


@dataclass
class KnowledgeBase:
    features: dict[str, FeatureDomain]
    longitudinal_actions: tuple[str, ...]
    lateral_actions: tuple[str, ...]
    groundings: dict[str, Grounding] = field(default_factory=dict)

    def __post_init__(self):
        if not self.longitudinal_actions or not self.lateral_actions:
            raise ValueError("action vocabularies must be nonempty")
        if set(self.longitudinal_actions) & set(self.lateral_actions):
            raise ValueError("action vocabularies must be disjoint")
        for atom, g in self.groundings.items():
            dom = self.features.get(g.feature)
            if dom is None:
                raise ValueError(f"grounding {atom!r} targets unknown feature {g.feature!r}")
            if not dom.contains(g.value):
                raise ValueError(f"grounding {atom!r} value {g.value!r} out of domain")

    @property
    def atom_vocabulary(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.groundings)
                            | set(self.longitudinal_actions)
                            | set(self.lateral_actions)))

    def to_json(self) -> dict:
        feats = {}
        for name, dom in self.features.items():
            d: dict = {"kind": dom.kind}
            if dom.kind == "enum":
                d["values"] = list(dom.values)
            if dom.kind == "int":
                d["low"], d["high"] = dom.low, dom.high
            feats[name] = d
        return {
            "features": feats,
            "longitudinal_actions": list(self.longitudinal_actions),
            "lateral_actions": list(self.lateral_actions),
            "groundings": {a: {"feature": g.feature, "comparator": g.comparator,
                               "value": g.value}
                           for a, g in self.groundings.items()},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "KnowledgeBase":
        features = {}
        for name, d in obj["features"].items():
            features[name] = FeatureDomain(kind=d["kind"],
                                           values=tuple(d.get("values", ())),
                                           low=d.get("low", 0), high=d.get("high", 0))
        groundings = {a: Grounding(g["feature"], g["comparator"], g["value"])
                      for a, g in obj.get("groundings", {}).items()}
        return cls(features=features,
                   longitudinal_actions=tuple(obj["longitudinal_actions"]),
                   lateral_actions=tuple(obj["lateral_actions"]),
                   groundings=groundings)

    @classmethod
    def load(cls, path: str | Path) -> "KnowledgeBase":
        return cls.from_json(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True))


Precondition = tuple[str, str, Value]  # (feature, comparator, value)


@dataclass
class Effects:
    longitudinal: str = PASS
    lateral: str = PASS


@dataclass
class ProductionRule:
    name: str
    preconditions: tuple[Precondition, ...]
    effects: Effects
    utility: float = 0.0
    provenance: dict = field(default_factory=dict)

    def body_key(self) -> tuple:
        return (tuple(sorted(self.preconditions)),
                self.effects.longitudinal, self.effects.lateral)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "preconditions": [list(p) for p in self.preconditions],
            "effects": {"longitudinal": self.effects.longitudinal,
                        "lateral": self.effects.lateral},
            "utility": self.utility,
            "provenance": self.provenance,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ProductionRule":
        return cls(name=obj["name"],
                   preconditions=tuple(tuple(p) for p in obj["preconditions"]),
                   effects=Effects(**obj["effects"]),
                   utility=obj.get("utility", 0.0),
                   provenance=obj.get("provenance", {}))


class RuleValidationError(ValueError):
    """The rule cannot be loaded by the inference engine."""


def validate_rule(rule: ProductionRule, kb: KnowledgeBase) -> None:
    """Dry-run load: the checks the engine applies before accepting a rule."""
    if not rule.preconditions:
        raise RuleValidationError("rule has no preconditions")
    asserted: dict[str, Value] = {}
    denied: dict[str, set] = {}
    for feature, cmp, value in rule.preconditions:
        dom = kb.features.get(feature)
        if dom is None:
            raise RuleValidationError(f"unknown feature {feature!r}")
        if cmp not in ("=", "!="):
            raise RuleValidationError(f"bad comparator {cmp!r}")
        if not dom.contains(value):
            raise RuleValidationError(f"value {value!r} out of domain for {feature!r}")
        if cmp == "=":
            if feature in asserted and asserted[feature] != value:
                raise RuleValidationError(f"contradictory assertions on {feature!r}")
            if value in denied.get(feature, set()):
                raise RuleValidationError(f"contradictory assertions on {feature!r}")
            asserted[feature] = value
        else:
            if asserted.get(feature) == value:
                raise RuleValidationError(f"contradictory assertions on {feature!r}")
            denied.setdefault(feature, set()).add(value)
    if rule.effects.longitudinal == PASS and rule.effects.lateral == PASS:
        raise RuleValidationError("rule has no effect")
    if rule.effects.longitudinal != PASS and rule.effects.longitudinal not in kb.longitudinal_actions:
        raise RuleValidationError(f"unknown longitudinal action {rule.effects.longitudinal!r}")
    if rule.effects.lateral != PASS and rule.effects.lateral not in kb.lateral_actions:
        raise RuleValidationError(f"unknown lateral action {rule.effects.lateral!r}")
