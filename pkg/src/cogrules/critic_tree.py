"""Bounded-depth revision tree: a revisor model rewrites a candidate
temporal-logic formula, critic models judge each node, and every
disapproval spawns a revised child until all critics approve or the
depth budget runs out (fallback: the root revision).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import ltl
from .gateway import (Backend, BackendSpec, ChatMessage, CriticEnsembleSpec,
                      CriticSampler, make_backend)

DEFAULT_TEMPLATES = {
    # minimal-knowledge prompt variant
    "revisor_system": (
        "You translate natural-language decision descriptions into linear "
        "temporal logic using operators G, F, X, U, !, &, |, ->. Reply with "
        "the formula only."),
    "revisor_initial": (
        "Text: {text}\nCandidate formula: {initial}\n"
        "Revise the candidate so it captures the text exactly. Reply with "
        "the formula only."),
    "critic_system": (
        "You judge whether a temporal logic formula matches a text, both "
        "logically and against the allowed vocabulary: {atoms}. Reply "
        "exactly 'APPROVED' or 'REVISE: <feedback>'."),
    "critic_user": "Text: {text}\nFormula: {formula}",
    "feedback": "A critic rejected the formula: {feedback}\nRevise it. Reply with the formula only.",
}


@dataclass
class CriticVerdict:
    approved: bool
    feedback: str = ""

    def __post_init__(self):
        if not self.approved and not self.feedback:
            raise ValueError("disapproval requires feedback")


@dataclass
class TreeNode:
    node_id: int
    formula_text: str
    context: list[ChatMessage]
    depth: int
    parent: int | None = None
    children: list[int] = field(default_factory=list)
    parse_ok: bool = True
    verdicts: list[CriticVerdict] = field(default_factory=list)


@dataclass
class CriticTreeConfig:
    num_critics: int
    max_depth: int
    revisor: BackendSpec
    critics: CriticEnsembleSpec
    templates: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_TEMPLATES))
    kb_atoms: tuple[str, ...] = ()
    return_best_node: bool = False  # default-off alternative to root fallback

    def __post_init__(self):
        if self.num_critics < 1:
            raise ValueError("num_critics must be >= 1")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")


@dataclass
class TreeTrace:
    nodes: list[TreeNode]
    returned: str = ""
    returned_node: int | None = None
    fallback: bool = False
    revisor_calls: int = 0
    critic_calls: int = 0
    events: list[dict] = field(default_factory=list)  # sequence-numbered audit log

    def to_json(self) -> dict:
        return {
            "returned": self.returned,
            "returned_node": self.returned_node,
            "fallback": self.fallback,
            "revisor_calls": self.revisor_calls,
            "critic_calls": self.critic_calls,
            "nodes": [
                {
                    "id": n.node_id,
                    "formula": n.formula_text,
                    "depth": n.depth,
                    "parent": n.parent,
                    "children": list(n.children),
                    "parse_ok": n.parse_ok,
                    "verdicts": [{"approved": v.approved, "feedback": v.feedback}
                                 for v in n.verdicts],
                }
                for n in self.nodes
            ],
            "events": self.events,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def parse_verdict(reply: str) -> CriticVerdict:
    """Protocol: 'APPROVED' or 'REVISE: <feedback>'. Anything else is a
    disapproval carrying the raw reply."""
    text = reply.strip()
    if text == "APPROVED":
        return CriticVerdict(approved=True)
    if text.startswith("REVISE:"):
        feedback = text[len("REVISE:"):].strip()
        return CriticVerdict(approved=False, feedback=feedback or text)
    return CriticVerdict(approved=False, feedback=reply)


class CriticTree:
    def __init__(self, cfg: CriticTreeConfig):
        self.cfg = cfg
        self.revisor: Backend = make_backend(cfg.revisor)
        self.sampler = CriticSampler(cfg.critics)
        self._seq = 0

    def _event(self, trace: TreeTrace, kind: str, **info) -> None:
        trace.events.append({"seq": self._seq, "kind": kind, **info})
        self._seq += 1

    def _revise(self, context: list[ChatMessage], trace: TreeTrace) -> tuple[str, list[ChatMessage]]:
        reply = self.revisor.complete(context)
        trace.revisor_calls += 1
        return reply.content.strip(), context + [reply]

    def _new_node(self, trace: TreeTrace, formula_text: str, context: list[ChatMessage],
                  depth: int, parent: int | None) -> TreeNode:
        ok = True
        try:
            ltl.parse(formula_text)
        except ltl.ParseError:
            ok = False
        node = TreeNode(node_id=len(trace.nodes), formula_text=formula_text,
                        context=context, depth=depth, parent=parent, parse_ok=ok)
        trace.nodes.append(node)
        if parent is not None:
            trace.nodes[parent].children.append(node.node_id)
        self._event(trace, "node", id=node.node_id, formula=formula_text,
                    depth=depth, parse_ok=ok)
        return node

    def judge(self, node: TreeNode, text: str, trace: TreeTrace) -> list[CriticVerdict]:
        t = self.cfg.templates
        atoms = ", ".join(self.cfg.kb_atoms) if self.cfg.kb_atoms else "(unrestricted)"
        messages = [
            ChatMessage("system", t["critic_system"].format(atoms=atoms)),
            ChatMessage("user", t["critic_user"].format(text=text, formula=node.formula_text)),
        ]
        verdicts = []
        for _ in range(self.cfg.num_critics):
            critic = self.sampler.sample()
            reply = critic.complete(messages)
            trace.critic_calls += 1
            verdict = parse_verdict(reply.content)
            verdicts.append(verdict)
            self._event(trace, "verdict", node=node.node_id,
                        approved=verdict.approved, feedback=verdict.feedback)
        node.verdicts = verdicts
        return verdicts

    def run(self, text: str, initial: str) -> tuple[str, TreeTrace]:
        if not text:
            raise ValueError("text must be nonempty")
        trace = TreeTrace(nodes=[])
        t = self.cfg.templates
        root_context = [
            ChatMessage("system", t["revisor_system"]),
            ChatMessage("user", t["revisor_initial"].format(text=text, initial=initial)),
        ]
        root_formula, root_context = self._revise(root_context, trace)
        root = self._new_node(trace, root_formula, root_context, depth=0, parent=None)

        level = [root]
        for depth in range(self.cfg.max_depth + 1):
            next_level: list[TreeNode] = []
            for node in level:  # creation order
                if node.children:
                    continue
                verdicts = self.judge(node, text, trace)
                if all(v.approved for v in verdicts):
                    trace.returned = node.formula_text
                    trace.returned_node = node.node_id
                    self._event(trace, "return", node=node.node_id, reason="approved")
                    return node.formula_text, trace
                for verdict in verdicts:
                    if verdict.approved:
                        continue
                    child_context = node.context + [
                        ChatMessage("user", t["feedback"].format(feedback=verdict.feedback))
                    ]
                    formula, child_context = self._revise(child_context, trace)
                    child = self._new_node(trace, formula, child_context,
                                           depth=node.depth + 1, parent=node.node_id)
                    next_level.append(child)
            level = next_level

        # depth budget exhausted without full approval
        chosen = root
        if self.cfg.return_best_node:
            approved_counts = [(sum(v.approved for v in n.verdicts), -n.node_id, n)
                               for n in trace.nodes if n.verdicts]
            if approved_counts:
                chosen = max(approved_counts)[2]
        trace.returned = chosen.formula_text
        trace.returned_node = chosen.node_id
        trace.fallback = True
        self._event(trace, "return", node=chosen.node_id, reason="fallback")
        return chosen.formula_text, trace


def run(text: str, initial: str, cfg: CriticTreeConfig) -> tuple[str, TreeTrace]:
    return CriticTree(cfg).run(text, initial)
