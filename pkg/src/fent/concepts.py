"""Concept language, concept inclusions, and knowledge bases.

Concepts are built from concept names, nominals, negation, n-ary
conjunction, existential restrictions over roles or role closures, and
at-most restrictions over role names or their closures (inverse roles are
rejected inside counting restrictions).  The empty conjunction is top and
its negation is bottom; disjunction, universal restrictions and at-least
restrictions are derived constructors that expand on the spot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property


INTERNAL_PREFIX = "~"


def complement_name(name: str) -> str:
    """Complementary concept name; toggling is an involution."""
    if name.startswith(INTERNAL_PREFIX):
        return name[1:]
    return INTERNAL_PREFIX + name


def is_internal_name(name: str) -> bool:
    return name.startswith(INTERNAL_PREFIX) or ":" in name


@dataclass(frozen=True, order=True)
class Role:
    """A role name or its inverse."""

    base: str
    inverted: bool = False

    def inverse(self) -> "Role":
        return Role(self.base, not self.inverted)

    def __str__(self) -> str:
        return f"inv({self.base})" if self.inverted else self.base


class Concept:
    """Base class for concept ASTs.  Subclasses are frozen and hashable."""

    __slots__ = ()


@dataclass(frozen=True)
class Atom(Concept):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Nominal(Concept):
    individual: str

    def __str__(self) -> str:
        return "{%s}" % self.individual


@dataclass(frozen=True)
class Not(Concept):
    arg: Concept

    def __str__(self) -> str:
        return f"not {self.arg}"


@dataclass(frozen=True)
class And(Concept):
    args: tuple[Concept, ...]

    def __str__(self) -> str:
        if not self.args:
            return "top"
        return "(" + " and ".join(str(a) for a in self.args) + ")"


@dataclass(frozen=True)
class Exists(Concept):
    """``some s C`` where s is a role, an inverse role, or a closure."""

    role: Role
    closed: bool
    arg: Concept

    def __str__(self) -> str:
        s = f"star({self.role})" if self.closed else str(self.role)
        return f"some {s} {self.arg}"


@dataclass(frozen=True)
class AtMost(Concept):
    """``atmost n s C`` with s a role name or the closure of a role name."""

    n: int
    role: str
    closed: bool
    arg: Concept

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("counting restriction needs n >= 0")

    def __str__(self) -> str:
        s = f"star({self.role})" if self.closed else self.role
        return f"atmost {self.n} {s} {self.arg}"


TOP = And(())
BOTTOM = Not(TOP)


def Or(*args: Concept) -> Concept:
    if not args:
        return BOTTOM
    return Not(And(tuple(Not(a) for a in args)))


def ForAll(role: Role, closed: bool, arg: Concept) -> Concept:
    return Not(Exists(role, closed, Not(arg)))


def AtLeast(n: int, role: str, closed: bool, arg: Concept) -> Concept:
    if n < 0:
        raise ValueError("counting restriction needs n >= 0")
    if n == 0:
        return TOP
    return Not(AtMost(n - 1, role, closed, arg))


@dataclass(frozen=True)
class ConceptInclusion:
    lhs: Concept
    rhs: Concept

    def __str__(self) -> str:
        return f"{self.lhs} <= {self.rhs}"


@dataclass(frozen=True)
class ConceptAssertion:
    name: str
    individual: str

    def __str__(self) -> str:
        return f"{self.name}({self.individual})"


@dataclass(frozen=True)
class RoleAssertion:
    role: str
    subject: str
    object: str
    closed: bool = False

    def __str__(self) -> str:
        r = f"{self.role}star" if self.closed else self.role
        return f"{r}({self.subject},{self.object})"


Assertion = ConceptAssertion | RoleAssertion


@dataclass(frozen=True)
class Dialect:
    """Feature flags of the fragment a KB lives in."""

    inverses: bool = False
    counting: bool = False
    nominals: bool = False
    closures: bool = False

    def __str__(self) -> str:
        feats = [n for n in ("inverses", "counting", "nominals", "closures")
                 if getattr(self, n)]
        return "+".join(feats) if feats else "plain"


def _walk(concept: Concept):
    yield concept
    if isinstance(concept, Not):
        yield from _walk(concept.arg)
    elif isinstance(concept, And):
        for a in concept.args:
            yield from _walk(a)
    elif isinstance(concept, (Exists, AtMost)):
        yield from _walk(concept.arg)


@dataclass(frozen=True)
class KnowledgeBase:
    """TBox + ABox with derived signature data.

    The ABox must be non-empty, so ``ind`` is never empty and the counting
    threshold is well defined (one plus the greatest number used).
    """

    tbox: tuple[ConceptInclusion, ...]
    abox: tuple[Assertion, ...]

    def __post_init__(self) -> None:
        if not self.abox:
            raise ValueError("ABox must be non-empty")

    @cached_property
    def concept_names(self) -> frozenset[str]:
        names = set()
        for ci in self.tbox:
            for c in (*_walk(ci.lhs), *_walk(ci.rhs)):
                if isinstance(c, Atom):
                    names.add(c.name)
        for a in self.abox:
            if isinstance(a, ConceptAssertion):
                names.add(a.name)
        return frozenset(names)

    @cached_property
    def role_names(self) -> frozenset[str]:
        roles = set()
        for ci in self.tbox:
            for c in (*_walk(ci.lhs), *_walk(ci.rhs)):
                if isinstance(c, Exists):
                    roles.add(c.role.base)
                elif isinstance(c, AtMost):
                    roles.add(c.role)
        for a in self.abox:
            if isinstance(a, RoleAssertion):
                roles.add(a.role)
        return frozenset(roles)

    @cached_property
    def nominals(self) -> frozenset[str]:
        noms = set()
        for ci in self.tbox:
            for c in (*_walk(ci.lhs), *_walk(ci.rhs)):
                if isinstance(c, Nominal):
                    noms.add(c.individual)
        return frozenset(noms)

    @cached_property
    def individuals(self) -> frozenset[str]:
        inds = set(self.nominals)
        for a in self.abox:
            if isinstance(a, ConceptAssertion):
                inds.add(a.individual)
            else:
                inds.update((a.subject, a.object))
        return frozenset(inds)

    @cached_property
    def counting_threshold(self) -> int:
        greatest = 1
        for ci in self.tbox:
            for c in (*_walk(ci.lhs), *_walk(ci.rhs)):
                if isinstance(c, AtMost):
                    greatest = max(greatest, c.n)
        return greatest + 1

    @cached_property
    def relevant_concept_names(self) -> frozenset[str]:
        """Names B with some CI A <= atmost n star(r) B, n > 0."""
        out = set()
        for ci in self.tbox:
            c = ci.rhs
            if isinstance(c, AtMost) and c.closed and c.n > 0 \
                    and isinstance(c.arg, Atom):
                out.add(c.arg.name)
        return frozenset(out)

    @cached_property
    def dialect(self) -> Dialect:
        inverses = counting = nominals = closures = False
        for ci in self.tbox:
            for c in (*_walk(ci.lhs), *_walk(ci.rhs)):
                if isinstance(c, Exists):
                    inverses |= c.role.inverted
                    closures |= c.closed
                elif isinstance(c, AtMost):
                    closures |= c.closed
                    # atmost 0 encodes "only"; atleast 1 encodes "some";
                    # anything else is genuine counting.
                    if c.n >= 1:
                        counting = True
                elif isinstance(c, Nominal):
                    nominals = True
        for a in self.abox:
            if isinstance(a, RoleAssertion) and a.closed:
                closures = True
        nominals |= bool(self.nominals)
        return Dialect(inverses, counting, nominals, closures)

    def size(self) -> int:
        """Crude representation size, used only in bound assertions."""
        total = len(self.abox)
        for ci in self.tbox:
            total += sum(1 for _ in _walk(ci.lhs)) + sum(1 for _ in _walk(ci.rhs))
        return total
