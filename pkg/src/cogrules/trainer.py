"""Cognitive reinforcement learning: per-slot rewards are decomposed
along the reasoning trace with a linear time decay and drive exponential
moving-average utility updates toward the reference behavior.
"""

from __future__ import annotations

import copy
import csv
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from .engine import LATERAL, LONGITUDINAL, SLOTS, ReasoningTrace, WorldState, decide
from .knowledge import KnowledgeBase, ProductionRule


@dataclass
class TrainConfig:
    learning_rate: float = 2e-4
    decay: float = 0.01
    sigma: float = math.sqrt(2)
    initial_utility: float = 0.0
    reward_positive: float = 10.0
    reward_negative: float = 0.0
    epochs: int = 1
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.learning_rate <= 1):
            raise ValueError("learning rate must be in (0, 1]")
        if self.decay < 0:
            raise ValueError("decay must be >= 0")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")


@dataclass(frozen=True)
class ReferenceAction:
    longitudinal: str | None = None
    lateral: str | None = None

    def slot(self, name: str) -> str | None:
        return self.longitudinal if name == LONGITUDINAL else self.lateral


@dataclass
class Episode:
    steps: list[tuple[WorldState, ReferenceAction]]
    scenario_id: str = ""
    subject_id: str = ""

    def __post_init__(self):
        if not self.steps:
            raise ValueError("episode must be nonempty")


class EpisodeSchemaError(ValueError):
    pass


def validate_episodes(episodes: list[Episode], kb: KnowledgeBase) -> None:
    for ep in episodes:
        for state, ref in ep.steps:
            try:
                state.validate(kb)
            except ValueError as e:
                raise EpisodeSchemaError(str(e)) from e
            for slot, vocab in ((ref.longitudinal, kb.longitudinal_actions),
                                (ref.lateral, kb.lateral_actions)):
                if slot is not None and slot not in vocab:
                    raise EpisodeSchemaError(f"reference action {slot!r} not in vocabulary")


def episodes_to_jsonl(episodes: list[Episode], path: str | Path) -> None:
    with Path(path).open("w") as fh:
        for i, ep in enumerate(episodes):
            for state, ref in ep.steps:
                rec = {"episode": i, "scenario": ep.scenario_id, "subject": ep.subject_id,
                       "t": state.t, "state": state.as_dict(),
                       "reference": {"longitudinal": ref.longitudinal,
                                     "lateral": ref.lateral}}
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def episodes_from_jsonl(path: str | Path) -> list[Episode]:
    groups: dict[int, Episode] = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        idx = rec.get("episode", 0)
        step = (WorldState.make(rec["state"], rec["t"]),
                ReferenceAction(rec["reference"].get("longitudinal"),
                                rec["reference"].get("lateral")))
        if idx not in groups:
            groups[idx] = Episode(steps=[step], scenario_id=rec.get("scenario", ""),
                                  subject_id=rec.get("subject", ""))
        else:
            groups[idx].steps.append(step)
    return [groups[i] for i in sorted(groups)]


def reward_decompose(reward: float, trace: ReasoningTrace, reward_step: int,
                     decay: float) -> list[tuple[str, float]]:
    """Per-firing reward shares: r_i = R - decay * (reward_step - firing step)."""
    shares = []
    for entry in trace.entries:
        if entry.t > reward_step:
            raise ValueError("firing after reward step")
        shares.append((entry.chosen, reward - decay * (reward_step - entry.t)))
    return shares


def utility_update(u_prev: float, r: float, alpha: float) -> float:
    return u_prev + alpha * (r - u_prev)


@dataclass
class CurvePoint:
    epoch: int
    agreement: float
    mean_utility: float


def curve_to_csv(curve: list[CurvePoint], path: str | Path,
                 extra: dict[int, float] | None = None) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["epoch", "agreement", "mean_utility"]
        if extra is not None:
            header.append("mean_js")
        writer.writerow(header)
        for pt in curve:
            row = [pt.epoch, f"{pt.agreement:.6f}", f"{pt.mean_utility:.10f}"]
            if extra is not None:
                row.append(f"{extra.get(pt.epoch, float('nan')):.6f}")
            writer.writerow(row)


def _train_one_epoch(rules: list[ProductionRule], episodes: list[Episode],
                     cfg: TrainConfig, rng: random.Random) -> float:
    """One pass over the episodes; returns the per-slot agreement rate."""
    by_name = {r.name: r for r in rules}
    agreed = compared = 0
    order = list(range(len(episodes)))
    rng.shuffle(order)
    for idx in order:
        episode = episodes[idx]
        pending: dict[str, list[tuple[str, int]]] = {s: [] for s in SLOTS}
        for state, ref in episode.steps:
            decision, trace = decide(state, rules, cfg.sigma, rng)
            for entry in trace.entries:
                for slot in entry.filled:
                    pending[slot].append((entry.chosen, entry.t))
            for slot in SLOTS:
                ref_action = ref.slot(slot)
                if ref_action is None:
                    continue
                produced = decision.slot(slot)
                hit = produced == ref_action
                compared += 1
                agreed += hit
                reward = cfg.reward_positive if hit else cfg.reward_negative
                for name, fired_at in pending[slot]:
                    r_i = reward - cfg.decay * (state.t - fired_at)
                    rule = by_name[name]
                    rule.utility = utility_update(rule.utility, r_i, cfg.learning_rate)
                pending[slot] = []
    return agreed / compared if compared else 0.0


def train(rules: list[ProductionRule], episodes: list[Episode],
          cfg: TrainConfig, kb: KnowledgeBase | None = None,
          in_place: bool = False, reset: bool = True,
          ) -> tuple[list[ProductionRule], list[CurvePoint]]:
    """Returns trained copies of the rules (unless in_place) and the
    per-epoch learning curve. reset=False resumes from current utilities."""
    if kb is not None:
        validate_episodes(episodes, kb)
    if not in_place:
        rules = copy.deepcopy(rules)
    if reset:
        for rule in rules:
            rule.utility = cfg.initial_utility
    rng = random.Random(cfg.seed)
    curve: list[CurvePoint] = []
    for epoch in range(cfg.epochs):
        agreement = _train_one_epoch(rules, episodes, cfg, rng)
        mean_u = sum(r.utility for r in rules) / len(rules) if rules else 0.0
        curve.append(CurvePoint(epoch=epoch, agreement=agreement, mean_utility=mean_u))
    return rules, curve


def evaluate_agreement(rules: list[ProductionRule], episodes: list[Episode],
                       sigma: float, seed: int, n_runs: int = 1) -> dict[str, float]:
    """Frozen-utility agreement rate per slot, averaged over seeded runs."""
    rng = random.Random(seed)
    agreed = {s: 0 for s in SLOTS}
    compared = {s: 0 for s in SLOTS}
    for _ in range(n_runs):
        for episode in episodes:
            for state, ref in episode.steps:
                decision, _ = decide(state, rules, sigma, rng)
                for slot in SLOTS:
                    ref_action = ref.slot(slot)
                    if ref_action is None:
                        continue
                    compared[slot] += 1
                    agreed[slot] += decision.slot(slot) == ref_action
    return {s: (agreed[s] / compared[s] if compared[s] else 0.0) for s in SLOTS}
