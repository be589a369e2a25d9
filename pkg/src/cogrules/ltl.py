"""Linear temporal logic ASTs: parsing, printing, canonicalization and
classification into the production-rule-convertible fragment.

Core grammar: true | atom | phi & phi | ! phi | X phi | phi U phi.
G, F, ->, | are carried as first-class derived nodes so that round-tripping
preserves the surface form the user wrote.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


class Ltl:
    """Base class for all formula nodes. Instances are immutable."""

    __slots__ = ()

    def to_string(self) -> str:
        return to_string(self)

    def __str__(self) -> str:
        return to_string(self)


@dataclass(frozen=True, slots=True)
class TrueConst(Ltl):
    pass


@dataclass(frozen=True, slots=True)
class Atom(Ltl):
    name: str

    def __post_init__(self):
        if not (self.name.isascii() and self.name.isidentifier()):
            raise ValueError(f"invalid atom name: {self.name!r}")


@dataclass(frozen=True, slots=True)
class Not(Ltl):
    operand: Ltl


@dataclass(frozen=True, slots=True)
class And(Ltl):
    left: Ltl
    right: Ltl


@dataclass(frozen=True, slots=True)
class Or(Ltl):
    left: Ltl
    right: Ltl


@dataclass(frozen=True, slots=True)
class Implies(Ltl):
    left: Ltl
    right: Ltl


@dataclass(frozen=True, slots=True)
class Next(Ltl):
    operand: Ltl


@dataclass(frozen=True, slots=True)
class Until(Ltl):
    left: Ltl
    right: Ltl


@dataclass(frozen=True, slots=True)
class Finally(Ltl):
    operand: Ltl


@dataclass(frozen=True, slots=True)
class Globally(Ltl):
    operand: Ltl


TRUE = TrueConst()


class ParseError(ValueError):
    """Raised on malformed input; carries the offset and expected tokens."""

    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        super().__init__(f"{message} at offset {offset}"
                         + (f" (expected one of: {', '.join(expected)})" if expected else ""))
        self.offset = offset
        self.expected = expected


_FIXED_KINDS = {
    "->": "arrow", "(": "lparen", ")": "rparen", "!": "not", "&": "and",
    "|": "or", "true": "true", "false": "false",
    "G": "G", "F": "F", "X": "X", "U": "U",
}


def tokenize(text: str, with_offsets: bool = True) -> list[tuple[str, str, int | None]]:
    """Lex into (kind, lexeme, offset) triples. Kind is one of
    arrow/lparen/rparen/not/and/or/atom or the keyword itself. The parser
    skips offset bookkeeping on the happy path (with_offsets=False) and
    re-lexes with offsets when it needs to report an error position."""
    padded = (text.replace("->", " -> ").replace("(", " ( ")
              .replace(")", " ) ").replace("!", " ! ")
              .replace("&", " & ").replace("|", " | "))
    tokens: list[tuple[str, str, int | None]] = []
    fixed = _FIXED_KINDS
    pos = 0
    for lexeme in padded.split():
        offset = text.find(lexeme, pos) if with_offsets else None
        if offset is not None:
            pos = offset + len(lexeme)
        kind = fixed.get(lexeme)
        if kind is None:
            if lexeme.isidentifier() and lexeme.isascii():
                kind = "atom"  # keyword-shaped atoms were claimed above
            elif offset is None:
                return tokenize(text)  # re-lex to pinpoint the error
            else:
                raise ParseError(f"unexpected character {lexeme[0]!r}",
                                 max(offset, 0),
                                 ("operator", "atom", "parenthesis"))
        tokens.append((kind, lexeme, offset))
    return tokens


# (precedence, right-associative, constructor); higher binds tighter
_BINARY_TOKENS = {
    "arrow": (1, True, Implies),
    "or": (2, False, Or),
    "and": (3, False, And),
    "U": (4, True, Until),
}

_UNARY_TOKENS = {"not": Not, "G": Globally, "F": Finally, "X": Next}


class _Parser:
    """Precedence climbing, low to high: -> | & U unary."""

    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text, with_offsets=False)
        self.n = len(self.tokens)
        self.i = 0

    def peek(self) -> str | None:
        return self.tokens[self.i][0] if self.i < self.n else None

    def offset(self) -> int:
        if self.i < self.n:
            self.tokens = tokenize(self.text)  # error path: recover offsets
            return self.tokens[self.i][2]
        return len(self.text)

    def parse(self) -> Ltl:
        f = self.expression(1)
        if self.i < self.n:
            raise ParseError("trailing input", self.offset(), ("end of input",))
        return f

    def expression(self, min_prec: int) -> Ltl:
        tokens = self.tokens
        n = self.n
        left = self.unary()
        while self.i < n:
            info = _BINARY_TOKENS.get(tokens[self.i][0])
            if info is None or info[0] < min_prec:
                break
            prec, right_assoc, ctor = info
            self.i += 1
            right = self.expression(prec if right_assoc else prec + 1)
            left = ctor(left, right)
        return left

    def unary(self) -> Ltl:
        i = self.i
        if i >= self.n:
            raise ParseError("unexpected end of input", self.offset(),
                             ("atom", "true", "(", "!", "G", "F", "X"))
        tokens = self.tokens
        kind = tokens[i][0]
        op = _UNARY_TOKENS.get(kind)
        if op is not None:
            self.i = i + 1
            return op(self.unary())
        if kind == "atom":
            self.i = i + 1
            return Atom(tokens[i][1])
        if kind == "lparen":
            self.i = i + 1
            f = self.expression(1)
            i = self.i
            if i >= self.n or tokens[i][0] != "rparen":
                raise ParseError("unbalanced parenthesis", self.offset(), (")",))
            self.i = i + 1
            return f
        if kind == "true":
            self.i = i + 1
            return TRUE
        if kind == "false":
            self.i = i + 1
            return Not(TRUE)
        raise ParseError(f"unexpected token", self.offset(),
                         ("atom", "true", "(", "!", "G", "F", "X"))


def parse(text: str) -> Ltl:
    if not text or not text.strip():
        raise ParseError("empty input", 0, ("formula",))
    return _Parser(text).parse()


def to_string(f: Ltl) -> str:
    """Deterministic rendering; parse(to_string(f)) == f structurally."""
    match f:
        case TrueConst():
            return "true"
        case Atom(name):
            return name
        case Not(g):
            return f"! ({to_string(g)})"
        case Next(g):
            return f"X ({to_string(g)})"
        case Finally(g):
            return f"F ({to_string(g)})"
        case Globally(g):
            return f"G ({to_string(g)})"
        case And(l, r):
            return f"({to_string(l)} & {to_string(r)})"
        case Or(l, r):
            return f"({to_string(l)} | {to_string(r)})"
        case Implies(l, r):
            return f"({to_string(l)} -> {to_string(r)})"
        case Until(l, r):
            return f"({to_string(l)} U {to_string(r)})"
    raise TypeError(f"not a formula: {f!r}")


def _flatten_and(f: Ltl, out: list[Ltl]) -> None:
    if isinstance(f, And):
        _flatten_and(f.left, out)
        _flatten_and(f.right, out)
    elif not isinstance(f, TrueConst):
        out.append(f)


_Pair = tuple[Ltl, str]  # (canonical node, its printed form)


def _negate(node: Ltl, key: str) -> _Pair:
    if type(node) is Not:  # double negation; key format is "! (<inner>)"
        return node.operand, key[3:-1]
    return Not(node), f"! ({key})"


def _split_and(node: Ltl, key: str, out: list[_Pair]) -> None:
    """Split an already-canonical right-nested conjunction chain into its
    conjunct pairs, slicing the rendered key at parenthesis depth zero."""
    while type(node) is And:
        inner = key[1:-1]
        depth = 0
        for i, ch in enumerate(inner):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "&" and depth == 0:
                break
        out.append((node.left, inner[:i - 1]))
        node, key = node.right, inner[i + 2:]
    out.append((node, key))


def _fold_and(flat: list[_Pair]) -> _Pair:
    if not flat:
        return TRUE, "true"
    flat.sort(key=_pair_key)
    node, key = flat[-1]
    for p, kp in reversed(flat[:-1]):
        node = And(p, node)
        key = f"({kp} & {key})"
    return node, key


def _pair_key(pair: _Pair) -> str:
    return pair[1]


def _collect(pair: _Pair, out: list[_Pair]) -> None:
    node, key = pair
    cls = type(node)
    if cls is TrueConst:
        return
    if cls is And:  # canonicalization exposed a nested conjunction
        _split_and(node, key, out)
    else:
        out.append(pair)


def _conjuncts(f: Ltl, out: list[_Pair]) -> None:
    if type(f) is And:
        _conjuncts(f.left, out)
        _conjuncts(f.right, out)
    else:
        _collect(_canon(f), out)


def _canon(f: Ltl) -> _Pair:
    """Rewrite to normal form, carrying each node's printed form bottom-up
    so conjunction sorting never re-renders subtrees."""
    cls = type(f)
    if cls is Atom:
        return f, f.name
    if cls is TrueConst:
        return f, "true"
    if cls is Not:
        return _negate(*_canon(f.operand))
    if cls is And:
        flat: list[_Pair] = []
        _conjuncts(f, flat)
        return _fold_and(flat)
    if cls is Or:
        flat = []
        _collect(_negate(*_canon(f.left)), flat)
        _collect(_negate(*_canon(f.right)), flat)
        return _negate(*_fold_and(flat))
    if cls is Implies:
        flat = []
        _collect(_canon(f.left), flat)
        _collect(_negate(*_canon(f.right)), flat)
        return _negate(*_fold_and(flat))
    if cls is Next:
        c, k = _canon(f.operand)
        return Next(c), f"X ({k})"
    if cls is Until:
        cl, kl = _canon(f.left)
        cr, kr = _canon(f.right)
        return Until(cl, cr), f"({kl} U {kr})"
    if cls is Finally:
        c, k = _canon(f.operand)
        return Until(TRUE, c), f"(true U {k})"
    if cls is Globally:
        n, kn = _negate(*_canon(f.operand))
        u = Until(TRUE, n)
        return Not(u), f"! ((true U {kn}))"
    raise TypeError(f"not a formula: {f!r}")


def _literal_conjunction(lits: tuple["Literal", ...]) -> Ltl:
    nodes: list[Ltl] = [Atom(n) if pol else Not(Atom(n)) for n, pol in lits]
    result = nodes[-1]
    for p in reversed(nodes[:-1]):
        result = And(p, result)
    return result


def canonicalize(f: Ltl) -> Ltl:
    """Idempotent normal form. Convertible formulas normalize to
    G(sorted-literal-conjunction -> sorted-literal-conjunction) so the
    verdict survives canonicalization; everything else gets Or/Implies
    eliminated, F and G rewritten via U, conjunctions flattened and
    sorted, double negations and true units removed."""
    verdict = classify(f)
    if isinstance(verdict, Convertible):
        return Globally(Implies(_literal_conjunction(verdict.antecedent),
                                _literal_conjunction(verdict.consequent)))
    return _canon(f)[0]


Literal = tuple[str, bool]  # (atom name, polarity: True = positive)


@dataclass(frozen=True)
class Convertible:
    antecedent: tuple[Literal, ...]
    consequent: tuple[Literal, ...]


@dataclass(frozen=True)
class InferenceError:
    reason: str


ConvertibilityVerdict = Convertible | InferenceError


def _literals(f: Ltl) -> list[Literal] | None:
    """Flatten a conjunction of possibly-negated atoms; None if any
    conjunct is not a literal. Double negations are tolerated."""
    if isinstance(f, And):
        left = _literals(f.left)
        right = _literals(f.right)
        if left is None or right is None:
            return None
        return left + right
    g, polarity = f, True
    while isinstance(g, Not):
        g = g.operand
        polarity = not polarity
    if isinstance(g, Atom):
        return [(g.name, polarity)]
    return None


def _first_temporal(f: Ltl) -> str | None:
    match f:
        case Finally(_):
            return "Finally"
        case Until(_, _):
            return "Until"
        case Next(_):
            return "Next"
        case Globally(g):
            return "Globally" if (inner := _first_temporal(g)) is None else inner
        case Not(g):
            return _first_temporal(g)
        case And(l, r) | Or(l, r) | Implies(l, r):
            return _first_temporal(l) or _first_temporal(r)
    return None


def classify(f: Ltl) -> ConvertibilityVerdict:
    """Convertible iff the formula is G(conjunction -> conjunction) over
    possibly-negated atoms; everything else is an inference error naming
    the offending operator or shape."""
    if not isinstance(f, Globally):
        op = _first_temporal(f)
        if op is not None and op != "Globally":
            return InferenceError(op)
        return InferenceError("not a globally-guarded implication")
    body = f.operand
    if not isinstance(body, Implies):
        op = _first_temporal(body)
        if op is not None:
            return InferenceError(op)
        return InferenceError("body is not an implication")
    op = _first_temporal(body)
    if op is not None:
        return InferenceError(op)
    antecedent = _literals(body.left)
    consequent = _literals(body.right)
    if antecedent is None or consequent is None:
        return InferenceError("non-conjunctive body")

    def dedupe(lits: list[Literal]) -> tuple[Literal, ...] | None:
        seen: dict[str, bool] = {}
        for name, pol in lits:
            if name in seen and seen[name] != pol:
                return None  # contradictory literal pair
            seen[name] = pol
        return tuple(sorted(seen.items()))

    ant = dedupe(antecedent)
    con = dedupe(consequent)
    if ant is None or con is None:
        return InferenceError("contradictory literals")
    return Convertible(ant, con)


_OP_NAMES = {
    TrueConst: "true", Atom: "atom", Not: "not", And: "and", Or: "or",
    Implies: "implies", Next: "next", Until: "until",
    Finally: "finally", Globally: "globally",
}


def to_json(f: Ltl) -> dict:
    match f:
        case TrueConst():
            return {"op": "true", "args": []}
        case Atom(name):
            return {"op": "atom", "args": [name]}
        case Not(g) | Next(g) | Finally(g) | Globally(g):
            return {"op": _OP_NAMES[type(f)], "args": [to_json(g)]}
        case And(l, r) | Or(l, r) | Implies(l, r) | Until(l, r):
            return {"op": _OP_NAMES[type(f)], "args": [to_json(l), to_json(r)]}
    raise TypeError(f"not a formula: {f!r}")


_UNARY = {"not": Not, "next": Next, "finally": Finally, "globally": Globally}
_BINARY = {"and": And, "or": Or, "implies": Implies, "until": Until}


def from_json(obj: dict) -> Ltl:
    op = obj["op"]
    args = obj["args"]
    if op == "true":
        return TRUE
    if op == "atom":
        return Atom(args[0])
    if op in _UNARY:
        return _UNARY[op](from_json(args[0]))
    if op in _BINARY:
        return _BINARY[op](from_json(args[0]), from_json(args[1]))
    raise ValueError(f"unknown op {op!r}")


def dumps(f: Ltl) -> str:
    return json.dumps(to_json(f), separators=(",", ":"))


def loads(s: str) -> Ltl:
    return from_json(json.loads(s))
