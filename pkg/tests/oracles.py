"""Independent reference implementations used to cross-check the package:
brute-force cosine dedup, direct-summation JS divergence, and a
Fraction-based smoothed BLEU. Deliberately written against the textbook
definitions, not the package code paths."""

import math
from fractions import Fraction


def bleu_oracle(prediction, reference, max_n=4):
    """Smoothed BLEU: exact geometric mean of modified n-gram precisions
    (add-one smoothing for n >= 2) times the brevity penalty."""
    if not prediction:
        return 0.0
    precisions = []
    for n in range(1, max_n + 1):
        counts = {}
        for i in range(len(prediction) - n + 1):
            g = tuple(prediction[i:i + n])
            counts[g] = counts.get(g, 0) + 1
        ref_counts = {}
        for i in range(len(reference) - n + 1):
            g = tuple(reference[i:i + n])
            ref_counts[g] = ref_counts.get(g, 0) + 1
        clipped = sum(min(c, ref_counts.get(g, 0)) for g, c in counts.items())
        total = max(0, len(prediction) - n + 1)
        if n == 1:
            if clipped == 0:
                return 0.0
            precisions.append(Fraction(clipped, total))
        else:
            precisions.append(Fraction(clipped + 1, total + 1))
    geo = math.exp(sum(math.log(float(p)) for p in precisions) / max_n)
    bp = 1.0
    if len(prediction) < len(reference):
        bp = math.exp(1 - len(reference) / len(prediction))
    return geo * bp


def kl_base2(p, q, support):
    total = 0.0
    for key in support:
        pi = p.get(key, 0.0)
        if pi == 0.0:
            continue
        total += pi * math.log2(pi / q[key])
    return total


def js_oracle(p, q):
    support = sorted(set(p) | set(q))
    m = {k: (p.get(k, 0.0) + q.get(k, 0.0)) / 2 for k in support}
    return 0.5 * kl_base2(p, m, support) + 0.5 * kl_base2(q, m, support)


def cosine(u, v):
    num = sum(a * b for a, b in zip(u, v))
    du = math.sqrt(sum(a * a for a in u))
    dv = math.sqrt(sum(b * b for b in v))
    if du == 0 or dv == 0:
        return 0.0
    return num / (du * dv)


def dedup_oracle(candidate_name, candidate_body, store, embed, threshold, top_k=5):
    """True means duplicate. store: list of (name, body) pairs."""
    for name, body in store:
        if body == candidate_body:
            return True
    if not store:
        return False
    cand = embed(candidate_name)
    sims = sorted(((cosine(cand, embed(name)), name) for name, _ in store),
                  key=lambda s: (-s[0], s[1]))
    return any(sim >= threshold for sim, _ in sims[:top_k])
