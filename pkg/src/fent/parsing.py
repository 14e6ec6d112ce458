"""Parsers for the KB and query file formats.

KB files are line oriented with ``tbox:`` and ``abox:`` section headers.
Concepts use prefix keywords (``not``, ``some``, ``only``, ``atleast n``,
``atmost n``) with infix ``and``/``or``; ``and`` binds tighter than ``or``.
Identifiers starting with ``not_`` denote complementary concept names and
map to the internal "~" spelling.  Comments start with ``#``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .concepts import (
    And,
    AtLeast,
    AtMost,
    Atom,
    BOTTOM,
    Concept,
    ConceptAssertion,
    ConceptInclusion,
    Exists,
    ForAll,
    KnowledgeBase,
    Nominal,
    Or,
    Role,
    RoleAssertion,
    TOP,
)
from .queries import ConceptAtom, CqPlus, EqAtom, Ind, RoleAtom, TransAtom, UcqPlus, Var


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


_TOKEN = re.compile(r"\s*(<=|=|[(),{}]|[A-Za-z_~][A-Za-z0-9_:~]*|\d+)")


def _tokenize(text: str, lineno: int) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", lineno, pos + 1)
        tokens.append((m.group(1), pos + 1))
        pos = m.end()
    return tokens


def _concept_name(token: str) -> str:
    if token.startswith("not_"):
        return "~" + token[len("not_"):]
    return token


def render_concept_name(name: str) -> str:
    if name.startswith("~"):
        return "not_" + name[1:]
    return name


_KEYWORDS = {"not", "and", "or", "some", "only", "atleast", "atmost",
             "top", "bottom", "inv", "star"}


class _ConceptParser:
    def __init__(self, tokens: list[tuple[str, int]], lineno: int):
        self.tokens = tokens
        self.lineno = lineno
        self.i = 0

    def peek(self) -> str | None:
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def next(self) -> str:
        if self.i >= len(self.tokens):
            raise ParseError("unexpected end of line", self.lineno)
        tok, _ = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.next()
        if got != tok:
            raise ParseError(f"expected {tok!r}, got {got!r}", self.lineno,
                             self.tokens[self.i - 1][1])

    def parse_concept(self) -> Concept:
        c = self.parse_and()
        while self.peek() == "or":
            self.next()
            c = Or(c, self.parse_and())
        return c

    def parse_and(self) -> Concept:
        c = self.parse_unary()
        while self.peek() == "and":
            self.next()
            d = self.parse_unary()
            c = And((c, d))
        return c

    def parse_unary(self) -> Concept:
        tok = self.peek()
        if tok is None:
            raise ParseError("expected a concept", self.lineno)
        if tok == "not":
            self.next()
            from .concepts import Not
            return Not(self.parse_unary())
        if tok == "some":
            self.next()
            role, closed = self.parse_role(allow_inverse=True)
            return Exists(role, closed, self.parse_unary())
        if tok == "only":
            self.next()
            role, closed = self.parse_role(allow_inverse=True)
            return ForAll(role, closed, self.parse_unary())
        if tok in ("atleast", "atmost"):
            self.next()
            n_tok = self.next()
            if not n_tok.isdigit():
                raise ParseError(f"expected a number after {tok!r}", self.lineno)
            n = int(n_tok)
            role, closed = self.parse_role(allow_inverse=False)
            arg = self.parse_unary()
            if tok == "atleast":
                return AtLeast(n, role.base, closed, arg)
            return AtMost(n, role.base, closed, arg)
        if tok == "top":
            self.next()
            return TOP
        if tok == "bottom":
            self.next()
            return BOTTOM
        if tok == "(":
            self.next()
            c = self.parse_concept()
            self.expect(")")
            return c
        if tok == "{":
            self.next()
            name = self.next()
            self.expect("}")
            return Nominal(name)
        name = self.next()
        if name in _KEYWORDS or not re.fullmatch(r"[A-Za-z_~][A-Za-z0-9_:~]*", name):
            raise ParseError(f"expected a concept name, got {name!r}", self.lineno)
        return Atom(_concept_name(name))

    def parse_role(self, allow_inverse: bool) -> tuple[Role, bool]:
        tok = self.next()
        if tok == "star":
            self.expect("(")
            role = self._inner_role(allow_inverse)
            self.expect(")")
            return role, True
        if tok == "inv":
            if not allow_inverse:
                raise ParseError("inverse role in counting restriction", self.lineno)
            self.expect("(")
            base = self.next()
            self.expect(")")
            return Role(base, True), False
        return Role(tok), False

    def _inner_role(self, allow_inverse: bool) -> Role:
        tok = self.next()
        if tok == "inv":
            if not allow_inverse:
                raise ParseError("inverse role in counting restriction", self.lineno)
            self.expect("(")
            base = self.next()
            self.expect(")")
            return Role(base, True)
        return Role(tok)

    def done(self) -> bool:
        return self.i >= len(self.tokens)


def parse_concept(text: str, lineno: int = 1) -> Concept:
    parser = _ConceptParser(_tokenize(text, lineno), lineno)
    c = parser.parse_concept()
    if not parser.done():
        raise ParseError("trailing tokens after concept", lineno)
    return c


def parse_kb(text: str) -> KnowledgeBase:
    tbox: list[ConceptInclusion] = []
    abox: list[ConceptAssertion | RoleAssertion] = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "tbox:":
            section = "tbox"
            continue
        if line == "abox:":
            section = "abox"
            continue
        if section == "tbox":
            if "<=" not in line:
                raise ParseError("expected a concept inclusion 'C <= D'", lineno)
            lhs_text, rhs_text = line.split("<=", 1)
            tbox.append(ConceptInclusion(parse_concept(lhs_text, lineno),
                                         parse_concept(rhs_text, lineno)))
        elif section == "abox":
            abox.append(_parse_assertion(line, lineno))
        else:
            raise ParseError("content before a 'tbox:' or 'abox:' header", lineno)
    if not abox:
        raise ParseError("ABox must be non-empty", len(text.splitlines()) or 1)
    return KnowledgeBase(tuple(tbox), tuple(abox))


_ASSERTION = re.compile(
    r"([A-Za-z_~][A-Za-z0-9_:~]*)\(\s*([A-Za-z_][A-Za-z0-9_]*)\s*"
    r"(?:,\s*([A-Za-z_][A-Za-z0-9_]*)\s*)?\)$")


def _parse_assertion(line: str, lineno: int):
    m = _ASSERTION.match(line.strip())
    if not m:
        raise ParseError("expected an assertion A(a), r(a,b) or rstar(a,b)", lineno)
    head, first, second = m.groups()
    if second is None:
        return ConceptAssertion(_concept_name(head), first)
    if head.endswith("star"):
        return RoleAssertion(head[:-4], first, second, closed=True)
    return RoleAssertion(head, first, second, closed=False)


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------

_QATOM = re.compile(
    r"(?:([A-Za-z_~][A-Za-z0-9_:~]*)\(\s*([A-Za-z_][A-Za-z0-9_]*)\s*"
    r"(?:,\s*([A-Za-z_][A-Za-z0-9_]*)\s*)?\)"
    r"|([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([A-Za-z_][A-Za-z0-9_]*))$")


def parse_query(text: str, individuals: frozenset[str] = frozenset()) -> UcqPlus:
    """One named disjunct per line: ``name: atom, atom, ...``."""
    disjuncts = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" in line:
            _, line = line.split(":", 1)
        atoms = []
        for part in line.split(","):
            part = part.strip()
            if not part:
                continue
            # a binary atom was split at its inner comma; stitch it back
            if atoms and isinstance(atoms[-1], str):
                part = atoms.pop() + "," + part
            if part.count("(") > part.count(")"):
                atoms.append(part)
                continue
            atoms.append(_parse_query_atom(part, individuals, lineno))
        if any(isinstance(a, str) for a in atoms):
            raise ParseError("unbalanced parentheses in atom", lineno)
        if not atoms:
            raise ParseError("empty disjunct", lineno)
        disjuncts.append(CqPlus(frozenset(atoms)))
    return UcqPlus.of(*disjuncts)


def _term(name: str, individuals: frozenset[str]):
    return Ind(name) if name in individuals else Var(name)


def _parse_query_atom(text: str, individuals: frozenset[str], lineno: int):
    m = _QATOM.match(text)
    if not m:
        raise ParseError(f"cannot parse atom {text!r}", lineno)
    head, first, second, eq_l, eq_r = m.groups()
    if eq_l is not None:
        return EqAtom(_term(eq_l, individuals), _term(eq_r, individuals))
    if second is None:
        return ConceptAtom(_concept_name(head), _term(first, individuals))
    if head.endswith("star"):
        return TransAtom(head[:-4], _term(first, individuals),
                         _term(second, individuals))
    return RoleAtom(head, _term(first, individuals), _term(second, individuals))


def render_query(query: UcqPlus) -> str:
    lines = []
    for i, q in enumerate(query.disjuncts):
        parts = []
        for a in q.sorted_atoms:
            if a.kind == "c":
                parts.append(f"{render_concept_name(a.pred)}({a.args[0]})")
            elif a.kind == "eq":
                parts.append(f"{a.args[0]} = {a.args[1]}")
            elif a.kind == "t":
                parts.append(f"{a.pred}star({a.args[0]},{a.args[1]})")
            else:
                parts.append(f"{a.pred}({a.args[0]},{a.args[1]})")
        lines.append(f"q{i}: " + ", ".join(parts))
    return "\n".join(lines) + "\n"
