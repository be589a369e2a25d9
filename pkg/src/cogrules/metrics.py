"""Evaluation math: exact-match accuracy and smoothed BLEU-4 for the
NL-to-LTL stage, Jensen-Shannon divergence, decision-distribution
extraction over the most frequent states, and the reasoning success rate.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass

from . import ltl
from .engine import ReasoningTrace, WorldState, decide
from .knowledge import ProductionRule
from .trainer import Episode


def ltl_match_accuracy(predictions: list[str], references: list[str]) -> float:
    """Fraction of pairs with structurally equal canonical ASTs;
    unparseable predictions count as mismatches."""
    if len(predictions) != len(references):
        raise ValueError("prediction/reference length mismatch")
    if not predictions:
        return 0.0
    hits = 0
    for pred, ref in zip(predictions, references):
        try:
            p = ltl.canonicalize(ltl.parse(pred))
        except ltl.ParseError:
            continue
        r = ltl.canonicalize(ltl.parse(ref))
        hits += p == r
    return hits / len(predictions)


def ltl_tokens(text: str) -> list[str]:
    return [lexeme for _, lexeme, _ in ltl.tokenize(text)]


def ltl_bleu(prediction: list[str], reference: list[str], max_n: int = 4) -> float:
    """Sentence BLEU with brevity penalty; add-one smoothing on n >= 2."""
    if not prediction:
        return 0.0
    log_precision_sum = 0.0
    for n in range(1, max_n + 1):
        pred_ngrams = Counter(tuple(prediction[i:i + n])
                              for i in range(len(prediction) - n + 1))
        ref_ngrams = Counter(tuple(reference[i:i + n])
                             for i in range(len(reference) - n + 1))
        overlap = sum(min(c, ref_ngrams[g]) for g, c in pred_ngrams.items())
        total = max(0, len(prediction) - n + 1)
        if n == 1:
            if overlap == 0:
                return 0.0
            precision = overlap / total
        else:
            precision = (overlap + 1) / (total + 1)
        log_precision_sum += math.log(precision)
    bleu = math.exp(log_precision_sum / max_n)
    if len(prediction) < len(reference):
        bleu *= math.exp(1 - len(reference) / len(prediction))
    return bleu


@dataclass
class DecisionDistribution:
    state_key: str
    probabilities: dict[str, float]  # action-pair key -> probability
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("sample count must be >= 1")
        total = sum(self.probabilities.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}")


def js_divergence(p: dict[str, float], q: dict[str, float]) -> float:
    """Jensen-Shannon divergence with base-2 logs; bounded by 1."""
    support = set(p) | set(q)
    js = 0.0
    for key in support:
        pi = p.get(key, 0.0)
        qi = q.get(key, 0.0)
        mi = (pi + qi) / 2
        if pi > 0:
            js += 0.5 * pi * math.log2(pi / mi)
        if qi > 0:
            js += 0.5 * qi * math.log2(qi / mi)
    return js


def js_between(p: DecisionDistribution, q: DecisionDistribution) -> float:
    return js_divergence(p.probabilities, q.probabilities)


def action_pair_key(longitudinal: str | None, lateral: str | None) -> str:
    return f"{longitudinal or 'none'}/{lateral or 'none'}"


def reference_distributions(episodes: list[Episode],
                            top_k: int = 10) -> list[tuple[WorldState, DecisionDistribution]]:
    """Group reference samples by state; keep the top_k most frequent
    states (ties broken by state key)."""
    by_state: dict[str, tuple[WorldState, Counter]] = {}
    for episode in episodes:
        for state, ref in episode.steps:
            key = state.key()
            if key not in by_state:
                by_state[key] = (state, Counter())
            by_state[key][1][action_pair_key(ref.longitudinal, ref.lateral)] += 1
    ranked = sorted(by_state.items(), key=lambda kv: (-sum(kv[1][1].values()), kv[0]))
    out = []
    for key, (state, counts) in ranked[:top_k]:
        n = sum(counts.values())
        out.append((state, DecisionDistribution(
            state_key=key,
            probabilities={a: c / n for a, c in counts.items()}, n=n)))
    return out


def decision_distributions(rules: list[ProductionRule], episodes: list[Episode],
                           sigma: float, seed: int, top_k: int = 10,
                           n_override: int | None = None,
                           ) -> list[tuple[DecisionDistribution, DecisionDistribution]]:
    """(model, reference) distribution pairs for the top_k most sampled
    states; the model is executed n times per state (its reference sample
    count unless overridden)."""
    if not episodes:
        raise ValueError("episodes must be nonempty")
    refs = reference_distributions(episodes, top_k)
    rng = random.Random(seed)
    pairs = []
    for state, ref_dist in refs:
        n = n_override if n_override is not None else ref_dist.n
        counts: Counter = Counter()
        for _ in range(n):
            decision, _ = decide(state, rules, sigma, rng)
            counts[action_pair_key(decision.longitudinal, decision.lateral)] += 1
        model = DecisionDistribution(
            state_key=ref_dist.state_key,
            probabilities={a: c / n for a, c in counts.items()}, n=n)
        pairs.append((model, ref_dist))
    return pairs


def mean_js(rules: list[ProductionRule], episodes: list[Episode], sigma: float,
            seed: int, top_k: int = 10, n_override: int | None = None) -> float:
    pairs = decision_distributions(rules, episodes, sigma, seed, top_k, n_override)
    return sum(js_between(m, r) for m, r in pairs) / len(pairs)


def rsr(traces: list[ReasoningTrace]) -> float:
    """Reasoning success rate: fraction of cycles where at least one slot
    had a nonempty conflict set."""
    if not traces:
        return 0.0
    return sum(bool(t.entries) for t in traces) / len(traces)
