"""Normal form transformation, complementary names, stickiness.

The transformation is a conservative extension: every fresh name is
definitional (axiomatized in both directions), so models of the input
expand uniquely to models of the output and models of the output restrict
to models of the input.  ``expand_model`` computes that expansion; the
conservativity tests rely on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .concepts import (
    And,
    AtLeast,
    AtMost,
    Atom,
    Concept,
    ConceptAssertion,
    ConceptInclusion,
    Dialect,
    Exists,
    ForAll,
    KnowledgeBase,
    Nominal,
    Not,
    Or,
    Role,
    complement_name,
)
from .interp import Interpretation, eval_concept, reachable

Operand = Concept  # an Atom or a Nominal


NAMES = "names"
ATMOST = "atmost"
ATLEAST = "atleast"
ATMOST_STAR = "atmost_star"
ATLEAST_STAR = "atleast_star"
FORALL_INV = "forall_inv"
EXISTS_INV = "exists_inv"
EXISTS_INV_STAR = "exists_inv_star"


@dataclass(frozen=True)
class NormalCI:
    kind: str
    lhs: tuple[Operand, ...]
    rhs: tuple[Operand, ...]
    n: int = 0
    role: str = ""

    def to_ci(self) -> ConceptInclusion:
        left = self.lhs[0] if len(self.lhs) == 1 else And(self.lhs)
        if self.kind == NAMES:
            return ConceptInclusion(left, Or(*self.rhs))
        arg = self.rhs[0]
        if self.kind == ATMOST:
            return ConceptInclusion(left, AtMost(self.n, self.role, False, arg))
        if self.kind == ATLEAST:
            return ConceptInclusion(left, AtLeast(self.n, self.role, False, arg))
        if self.kind == ATMOST_STAR:
            return ConceptInclusion(left, AtMost(self.n, self.role, True, arg))
        if self.kind == ATLEAST_STAR:
            return ConceptInclusion(left, AtLeast(self.n, self.role, True, arg))
        if self.kind == FORALL_INV:
            return ConceptInclusion(left, ForAll(Role(self.role, True), False, arg))
        if self.kind == EXISTS_INV:
            return ConceptInclusion(left, Exists(Role(self.role, True), False, arg))
        if self.kind == EXISTS_INV_STAR:
            return ConceptInclusion(left, Exists(Role(self.role, True), True, arg))
        raise ValueError(self.kind)

    def __str__(self) -> str:
        return str(self.to_ci())


@dataclass(frozen=True)
class NormalKB:
    """A knowledge base whose TBox consists of normal-shape CIs only.

    ``threshold`` and ``relevant`` are frozen at normalization time: the
    stickiness axioms mention the threshold itself and must not bump it.
    ``definitions`` records every fresh name with its defining concept
    over earlier names ("sticky" markers for the stickiness names), in
    dependency order, so models of the input can be expanded.
    """

    shapes: tuple[NormalCI, ...]
    abox: tuple
    threshold: int
    relevant: frozenset[str]
    dialect: Dialect
    definitions: tuple[tuple[str, object], ...]
    original_names: frozenset[str]

    @cached_property
    def kb(self) -> KnowledgeBase:
        return KnowledgeBase(tuple(s.to_ci() for s in self.shapes), self.abox)

    @cached_property
    def concept_names(self) -> frozenset[str]:
        return self.kb.concept_names

    @cached_property
    def role_names(self) -> frozenset[str]:
        return self.kb.role_names


def _operand(c: Concept) -> bool:
    return isinstance(c, (Atom, Nominal))


def _comp_operand(c: Operand, ctx: "_Normalizer") -> Operand:
    if isinstance(c, Atom):
        return Atom(complement_name(c.name))
    return ctx.operandize(Not(c))


class _Normalizer:
    def __init__(self, kb: KnowledgeBase):
        self.kb = kb
        self.shapes: list[NormalCI] = []
        self.definitions: list[tuple[str, object]] = []
        self.cache: dict[Concept, Operand] = {}
        self.counter = 0
        self.taken = set(kb.concept_names)

    def fresh(self, concept: Concept) -> Atom:
        while True:
            name = f"~c{self.counter}"
            self.counter += 1
            if name not in self.taken and complement_name(name) not in self.taken:
                break
        self.taken.add(name)
        self.definitions.append((name, concept))
        return Atom(name)

    def emit(self, kind: str, lhs, rhs, n: int = 0, role: str = "") -> None:
        self.shapes.append(NormalCI(kind, tuple(lhs), tuple(rhs), n, role))

    def operandize(self, c: Concept) -> Operand:
        if _operand(c):
            return c
        if c in self.cache:
            return self.cache[c]
        out = self._operandize(c)
        self.cache[c] = out
        return out

    def _operandize(self, c: Concept) -> Operand:
        if isinstance(c, Not):
            inner = c.arg
            if isinstance(inner, Atom):
                return Atom(complement_name(inner.name))
            if isinstance(inner, Nominal):
                x = self.fresh(c)
                self.emit(NAMES, [x, inner], [])
                self.emit(NAMES, [], [x, inner])
                return x
            if isinstance(inner, Not):
                return self.operandize(inner.arg)
            # complement of a defined operand
            return _comp_operand(self.operandize(inner), self)
        if isinstance(c, And):
            if not c.args:  # top
                x = self.fresh(c)
                self.emit(NAMES, [], [x])
                return x
            if len(c.args) == 1:
                return self.operandize(c.args[0])
            ops = [self.operandize(a) for a in c.args]
            x = self.fresh(c)
            for op in ops:
                self.emit(NAMES, [x], [op])
            self.emit(NAMES, ops, [x])
            return x
        if isinstance(c, (Exists, AtMost)):
            x = self.fresh(c)
            self.emit_quantifier(x, c)
            self.emit_quantifier_converse(x, c)
            return x
        raise TypeError(f"cannot normalize {c!r}")

    def emit_quantifier(self, lhs: Operand, c: Concept) -> None:
        """lhs <= (the quantifier shape), inner concept operandized."""
        if isinstance(c, Exists):
            inner = self.operandize(c.arg)
            if not c.role.inverted:
                self.emit(ATLEAST_STAR if c.closed else ATLEAST,
                          [lhs], [inner], 1, c.role.base)
            elif c.closed:
                self.emit(EXISTS_INV_STAR, [lhs], [inner], 0, c.role.base)
            else:
                self.emit(EXISTS_INV, [lhs], [inner], 0, c.role.base)
            return
        assert isinstance(c, AtMost)
        inner = self.operandize(c.arg)
        self.emit(ATMOST_STAR if c.closed else ATMOST,
                  [lhs], [inner], c.n, c.role)

    def emit_quantifier_converse(self, x: Operand, c: Concept) -> None:
        """comp(x) <= (negation of the quantifier shape)."""
        xbar = _comp_operand(x, self)
        if isinstance(c, Exists):
            inner = self.operandize(c.arg)
            inner_bar = _comp_operand(inner, self)
            if not c.role.inverted:
                # not (some s C)  ==  atmost 0 s C
                self.emit(ATMOST_STAR if c.closed else ATMOST,
                          [xbar], [inner], 0, c.role.base)
            elif not c.closed:
                self.emit(FORALL_INV, [xbar], [inner_bar], 0, c.role.base)
            else:
                # no forall shape over closures of inverse roles: propagate
                self.emit(NAMES, [xbar], [inner_bar])
                self.emit(FORALL_INV, [xbar], [xbar], 0, c.role.base)
            return
        assert isinstance(c, AtMost)
        inner = self.operandize(c.arg)
        self.emit(ATLEAST_STAR if c.closed else ATLEAST,
                  [xbar], [inner], c.n + 1, c.role)

    # -- concept inclusion decomposition ---------------------------------

    def union_parts(self, c: Concept) -> list[Concept]:
        if isinstance(c, Not):
            if isinstance(c.arg, Not):
                return self.union_parts(c.arg.arg)
            if isinstance(c.arg, And):
                out = []
                for a in c.arg.args:
                    out.extend(self.union_parts(Not(a)))
                return out
        return [c]

    def conj_parts(self, c: Concept) -> list[Concept]:
        if isinstance(c, And):
            out = []
            for a in c.args:
                out.extend(self.conj_parts(a))
            return out
        if isinstance(c, Not) and isinstance(c.arg, Not):
            return self.conj_parts(c.arg.arg)
        return [c]

    def add_ci(self, ci: ConceptInclusion) -> None:
        for lhs_part in self.union_parts(ci.lhs):
            conj = self.conj_parts(lhs_part)
            rhs_parts = self.union_parts(ci.rhs)
            # a conjunction on the right splits into separate CIs
            if len(rhs_parts) == 1 and isinstance(rhs_parts[0], And) \
                    and rhs_parts[0].args:
                for a in rhs_parts[0].args:
                    self.add_ci(ConceptInclusion(lhs_part, a))
                continue
            self._add_flat_ci(conj, rhs_parts)

    def _add_flat_ci(self, conj: list[Concept], disj: list[Concept]) -> None:
        # direct quantifier shape when possible: single operand lhs,
        # single quantifier rhs
        if len(disj) == 1 and isinstance(disj[0], (Exists, AtMost)):
            if len(conj) == 1 and _operand(conj[0]):
                self.emit_quantifier(conj[0], disj[0])
                return
            lhs_ops = [self._lhs_operand(p) for p in conj]
            x = self.fresh(And(tuple(conj)))
            self.emit(NAMES, lhs_ops, [x])
            self.emit_quantifier(x, disj[0])
            return
        if len(disj) == 1 and isinstance(disj[0], Not) \
                and isinstance(disj[0].arg, (Exists, AtMost)):
            q = disj[0].arg
            direct = self._negated_quantifier_direct(conj, q)
            if direct:
                return
        lhs_ops = [self._lhs_operand(p) for p in conj]
        rhs_ops = [self._rhs_operand(p) for p in disj]
        self.emit(NAMES, lhs_ops, rhs_ops)

    def _lhs_operand(self, c: Concept) -> Operand:
        if _operand(c):
            return c
        if isinstance(c, Not) and isinstance(c.arg, Atom):
            return Atom(complement_name(c.arg.name))
        return self.operandize(c)

    _rhs_operand = _lhs_operand

    def _single_lhs(self, conj: list[Concept]) -> Operand:
        if len(conj) == 1:
            return self._lhs_operand(conj[0])
        lhs_ops = [self._lhs_operand(p) for p in conj]
        x = self.fresh(And(tuple(conj)))
        self.emit(NAMES, lhs_ops, [x])
        return x

    def _negated_quantifier_direct(self, conj: list[Concept], q: Concept) -> bool:
        """C <= not Q directly as the dual shape where one exists."""
        if isinstance(q, AtMost):
            lhs = self._single_lhs(conj)
            inner = self.operandize(q.arg)
            self.emit(ATLEAST_STAR if q.closed else ATLEAST,
                      [lhs], [inner], q.n + 1, q.role)
            return True
        assert isinstance(q, Exists)
        if not q.role.inverted:
            lhs = self._single_lhs(conj)
            inner = self.operandize(q.arg)
            self.emit(ATMOST_STAR if q.closed else ATMOST,
                      [lhs], [inner], 0, q.role.base)
            return True
        if not q.closed:
            lhs = self._single_lhs(conj)
            inner_bar = _comp_operand(self.operandize(q.arg), self)
            self.emit(FORALL_INV, [lhs], [inner_bar], 0, q.role.base)
            return True
        # universal over a closure of an inverse role needs the
        # definitional propagation name; fall back
        return False


def normalize(kb: KnowledgeBase, sticky: bool = False) -> NormalKB:
    dialect = kb.dialect
    threshold = kb.counting_threshold
    ctx = _Normalizer(kb)
    for ci in kb.tbox:
        ctx.add_ci(ci)

    relevant = frozenset(
        s.rhs[0].name for s in ctx.shapes
        if s.kind == ATMOST_STAR and s.n > 0 and isinstance(s.rhs[0], Atom))

    if sticky:
        for b in sorted(relevant):
            for r in sorted(kb.role_names):
                br = Atom(f"~s:{b}:{r}")
                ctx.taken.add(br.name)
                ctx.definitions.append((br.name, ("sticky", b, r, threshold)))
                br_bar = Atom(complement_name(br.name))
                ctx.emit(ATMOST, [br], [br_bar], 0, r)
                ctx.emit(ATMOST_STAR, [br], [Atom(b)], threshold, r)
                for s in list(ctx.shapes):
                    if s.kind == ATMOST_STAR and s.n > 0 and s.role == r \
                            and s.rhs == (Atom(b),) and s.lhs != (br,):
                        ctx.emit(NAMES, list(s.lhs), [br])

    # complementary axioms for every (positive) concept name in sight
    names = set()
    for s in ctx.shapes:
        for op in (*s.lhs, *s.rhs):
            if isinstance(op, Atom):
                names.add(op.name)
    for a in kb.abox:
        if isinstance(a, ConceptAssertion):
            names.add(a.name)
    names.update(n for n in kb.concept_names)
    positives = sorted({n if not n.startswith("~") else complement_name(n)
                        for n in names})
    defined = {name for name, _ in ctx.definitions}
    comp_defs = []
    for n in positives:
        nbar = Atom(complement_name(n))
        ctx.emit(NAMES, [], [Atom(n), nbar])
        ctx.emit(NAMES, [Atom(n), nbar], [])
        if nbar.name not in defined and n not in defined:
            comp_defs.append((nbar.name, Not(Atom(n))))

    return NormalKB(
        shapes=tuple(ctx.shapes),
        abox=kb.abox,
        threshold=threshold,
        relevant=relevant,
        dialect=dialect,
        definitions=tuple(ctx.definitions) + tuple(comp_defs),
        original_names=frozenset(n for n in kb.concept_names
                                 if not n.startswith("~")),
    )


def expand_model(interp: Interpretation, nkb: NormalKB) -> Interpretation:
    """Extend a model of the input KB to the normalized signature.

    Definitions only mention the original vocabulary, so they are
    evaluated directly on the input interpretation.
    """
    concepts = {n: set(e) for n, e in interp.concepts}
    domain = list(interp.domain())

    for name, definition in nkb.definitions:
        if isinstance(definition, tuple) and definition[0] == "sticky":
            _, b, r, threshold = definition
            reach = reachable(interp, Role(r))
            b_ext = interp.concept(b)
            ext = {d for d in domain
                   if len(reach[d] & b_ext) <= threshold}
        else:
            ext = {d for d in domain if eval_concept(interp, definition, d)}
        concepts[name] = ext
        concepts[complement_name(name)] = set(domain) - ext
    for n in nkb.original_names:
        concepts.setdefault(complement_name(n),
                            set(domain) - concepts.get(n, set()))
    return Interpretation.make(interp.size, concepts,
                               {r: set(p) for r, p in interp.roles},
                               dict(interp.names))
