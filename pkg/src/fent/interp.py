"""Finite interpretations and model checking.

Elements are dense naturals 0..n-1.  Individual names bind to the lowest
ids in name-sorted order when interpretations are built by the enumerator,
but any injective binding is accepted here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

from .concepts import (
    And,
    Assertion,
    Atom,
    AtMost,
    Concept,
    ConceptAssertion,
    ConceptInclusion,
    Exists,
    KnowledgeBase,
    Nominal,
    Not,
    Role,
    RoleAssertion,
    complement_name,
)


@dataclass(frozen=True)
class Interpretation:
    """A finite interpretation over an explicit element-id set.

    Stand-alone interpretations use dense ids 0..n-1; bags of a
    decomposition share ids with their neighbours and need not be dense.
    """

    elements: frozenset[int]
    concepts: tuple[tuple[str, frozenset[int]], ...]
    roles: tuple[tuple[str, frozenset[tuple[int, int]]], ...]
    names: tuple[tuple[str, int], ...]

    @staticmethod
    def make(size: int,
             concepts: dict[str, set[int] | frozenset[int]] | None = None,
             roles: dict[str, set[tuple[int, int]] | frozenset[tuple[int, int]]] | None = None,
             names: dict[str, int] | None = None) -> "Interpretation":
        return Interpretation.make_over(range(size), concepts, roles, names)

    @staticmethod
    def make_over(elements,
                  concepts: dict | None = None,
                  roles: dict | None = None,
                  names: dict[str, int] | None = None) -> "Interpretation":
        elements = frozenset(elements)
        concepts = concepts or {}
        roles = roles or {}
        names = names or {}
        if len(set(names.values())) != len(names):
            raise ValueError("individual names must bind injectively")
        if any(d not in elements for d in names.values()):
            raise ValueError("named element outside domain")
        for ext in concepts.values():
            if any(d not in elements for d in ext):
                raise ValueError("concept extension outside domain")
        for pairs in roles.values():
            if any(d not in elements or e not in elements for d, e in pairs):
                raise ValueError("role extension outside domain")
        return Interpretation(
            elements,
            tuple(sorted((n, frozenset(e)) for n, e in concepts.items() if e)),
            tuple(sorted((r, frozenset(p)) for r, p in roles.items() if p)),
            tuple(sorted(names.items())),
        )

    @property
    def size(self) -> int:
        return len(self.elements)

    def concept(self, name: str) -> frozenset[int]:
        for n, ext in self.concepts:
            if n == name:
                return ext
        return frozenset()

    def role(self, name: str) -> frozenset[tuple[int, int]]:
        for r, pairs in self.roles:
            if r == name:
                return pairs
        return frozenset()

    def element_of(self, individual: str) -> int | None:
        for n, d in self.names:
            if n == individual:
                return d
        return None

    def domain(self) -> tuple[int, ...]:
        return tuple(sorted(self.elements))

    def successors(self, role: Role, d: int) -> frozenset[int]:
        pairs = self.role(role.base)
        if role.inverted:
            return frozenset(x for x, y in pairs if y == d)
        return frozenset(y for x, y in pairs if x == d)

    def concept_map(self) -> dict[str, set[int]]:
        return {n: set(e) for n, e in self.concepts}

    def role_map(self) -> dict[str, set[tuple[int, int]]]:
        return {r: set(p) for r, p in self.roles}

    def restrict(self, subdomain) -> "Interpretation":
        sub = frozenset(subdomain) & self.elements
        return Interpretation.make_over(
            sub,
            {n: {d for d in e if d in sub} for n, e in self.concepts},
            {r: {(d, e) for d, e in p if d in sub and e in sub}
             for r, p in self.roles},
            {n: d for n, d in self.names if d in sub},
        )

    def to_json(self) -> str:
        return json.dumps({
            "domain": sorted(self.elements),
            "names": dict(self.names),
            "concepts": {n: sorted(e) for n, e in self.concepts},
            "roles": {r: sorted(map(list, p)) for r, p in self.roles},
        }, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "Interpretation":
        doc = json.loads(text)
        dom = doc["domain"]
        elements = range(dom) if isinstance(dom, int) else dom
        return Interpretation.make_over(
            elements,
            {n: set(e) for n, e in doc.get("concepts", {}).items()},
            {r: {tuple(p) for p in pairs} for r, pairs in doc.get("roles", {}).items()},
            dict(doc.get("names", {})),
        )


def union_interpretations(*parts: Interpretation) -> Interpretation:
    elements: set[int] = set()
    concepts: dict[str, set[int]] = {}
    roles: dict[str, set[tuple[int, int]]] = {}
    names: dict[str, int] = {}
    for p in parts:
        elements |= p.elements
        for n, e in p.concepts:
            concepts.setdefault(n, set()).update(e)
        for r, pr in p.roles:
            roles.setdefault(r, set()).update(pr)
        for n, d in p.names:
            if n in names and names[n] != d:
                raise ValueError(f"conflicting binding for {n}")
            names[n] = d
    return Interpretation.make_over(elements, concepts, roles, names)


@lru_cache(maxsize=200_000)
def reachable(interp: Interpretation, role: Role) -> dict[int, frozenset[int]]:
    """Reflexive-transitive closure, as a map element -> reachable set."""
    succ: dict[int, set[int]] = {d: {d} for d in interp.elements}
    adj: dict[int, list[int]] = {d: [] for d in interp.elements}
    pairs = interp.role(role.base)
    for x, y in pairs:
        if role.inverted:
            x, y = y, x
        adj[x].append(y)
    for start in interp.elements:
        seen = succ[start]
        stack = [start]
        while stack:
            cur = stack.pop()
            for nxt in adj[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
    return {d: frozenset(s) for d, s in succ.items()}


def eval_concept(interp: Interpretation, concept: Concept, d: int) -> bool:
    if d not in interp.elements:
        raise ValueError(f"element {d} outside domain")
    if isinstance(concept, Atom):
        return d in interp.concept(concept.name)
    if isinstance(concept, Nominal):
        return interp.element_of(concept.individual) == d
    if isinstance(concept, Not):
        return not eval_concept(interp, concept.arg, d)
    if isinstance(concept, And):
        return all(eval_concept(interp, a, d) for a in concept.args)
    if isinstance(concept, Exists):
        if concept.closed:
            targets = reachable(interp, concept.role)[d]
        else:
            targets = interp.successors(concept.role, d)
        return any(eval_concept(interp, concept.arg, e) for e in targets)
    if isinstance(concept, AtMost):
        role = Role(concept.role)
        if concept.closed:
            targets = reachable(interp, role)[d]
        else:
            targets = interp.successors(role, d)
        count = 0
        for e in targets:
            if eval_concept(interp, concept.arg, e):
                count += 1
                if count > concept.n:
                    return False
        return True
    raise TypeError(f"unknown concept node {concept!r}")


def check_assertion(interp: Interpretation, assertion: Assertion) -> bool:
    if isinstance(assertion, ConceptAssertion):
        d = interp.element_of(assertion.individual)
        return d is not None and d in interp.concept(assertion.name)
    d = interp.element_of(assertion.subject)
    e = interp.element_of(assertion.object)
    if d is None or e is None:
        return False
    if assertion.closed:
        return e in reachable(interp, Role(assertion.role))[d]
    return (d, e) in interp.role(assertion.role)


def ci_violations(interp: Interpretation, ci: ConceptInclusion) -> list[int]:
    return [d for d in interp.domain()
            if eval_concept(interp, ci.lhs, d)
            and not eval_concept(interp, ci.rhs, d)]


def is_model(interp: Interpretation, kb: KnowledgeBase) -> bool:
    for a in kb.individuals:
        if interp.element_of(a) is None:
            return False
    if not all(check_assertion(interp, a) for a in kb.abox):
        return False
    return all(not ci_violations(interp, ci) for ci in kb.tbox)


def unary_type_of(interp: Interpretation, kb: KnowledgeBase, d: int) -> frozenset[str]:
    return frozenset(n for n in kb.concept_names if d in interp.concept(n))


def realizes_only(interp: Interpretation, kb: KnowledgeBase,
                  allowed: frozenset[frozenset[str]]) -> bool:
    return all(unary_type_of(interp, kb, d) in allowed for d in interp.domain())


def all_types(kb: KnowledgeBase) -> frozenset[frozenset[str]]:
    """All unary types: one of A, ~A per concept name of the KB."""
    base = sorted(n for n in kb.concept_names if not n.startswith("~"))
    comps = {n: complement_name(n) for n in base}
    out: list[frozenset[str]] = [frozenset()]
    for n in base:
        out = [t | {pick} for t in out for pick in (n, comps[n])]
    return frozenset(frozenset(t) for t in out)


def name_consistent_types(kb: KnowledgeBase,
                          types: frozenset[frozenset[str]] | None = None
                          ) -> frozenset[frozenset[str]]:
    """Types that satisfy every concept-name-only CI of the KB.

    A CI is name-only if both sides evaluate on a type alone (no role or
    nominal content); such CIs prune the coloring space of every search.
    """
    if types is None:
        types = all_types(kb)
    name_cis = [ci for ci in kb.tbox
                if _type_local(ci.lhs) and _type_local(ci.rhs)]
    out = []
    for t in types:
        if all(not _eval_on_type(ci.lhs, t) or _eval_on_type(ci.rhs, t)
               for ci in name_cis):
            out.append(t)
    return frozenset(out)


def _type_local(c: Concept) -> bool:
    if isinstance(c, Atom):
        return True
    if isinstance(c, Not):
        return _type_local(c.arg)
    if isinstance(c, And):
        return all(_type_local(a) for a in c.args)
    return False


def _eval_on_type(c: Concept, t: frozenset[str]) -> bool:
    if isinstance(c, Atom):
        return c.name in t
    if isinstance(c, Not):
        return not _eval_on_type(c.arg, t)
    if isinstance(c, And):
        return all(_eval_on_type(a, t) for a in c.args)
    raise TypeError("not type-local")


def rel_successors(interp: Interpretation, kb: KnowledgeBase,
                   d: int, role: str) -> frozenset[int]:
    """Least set of relevant successors of d, closed under the step rule.

    A successor e of x is directly relevant when e carries a concept name
    that is relevant for x with respect to the role (some atmost-over-star
    CI with positive bound applies to x).
    """
    def relevant_names(x: int) -> set[str]:
        names = set()
        for ci in kb.tbox:
            c = ci.rhs
            if isinstance(c, AtMost) and c.closed and c.n > 0 \
                    and c.role == role and isinstance(c.arg, Atom) \
                    and eval_concept(interp, ci.lhs, x):
                names.add(c.arg.name)
        return names

    result: set[int] = set()
    frontier = [d]
    seen_sources = set()
    while frontier:
        x = frontier.pop()
        if x in seen_sources:
            continue
        seen_sources.add(x)
        names = relevant_names(x)
        if not names:
            continue
        for e in interp.successors(Role(role), x):
            if any(e in interp.concept(n) for n in names) and e not in result:
                result.add(e)
                frontier.append(e)
    return frozenset(result)
