"""Bounded exhaustive search for counter-models (the ground-truth oracle).

The search materializes elements lazily: edges are added only as witnesses
for unsatisfied at-least/existential obligations, which reaches every
edge-minimal model and therefore decides counter-model existence exactly
up to the size bound.  Pruning is monotone (a query match, a violated
at-most or inverse-universal constraint never goes away when edges are
added), and fresh elements are interchangeable, so creating one canonical
fresh element per type is a complete symmetry reduction.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache

from .concepts import Atom, ConceptAssertion, KnowledgeBase, Nominal, RoleAssertion
from .interp import Interpretation, is_model, realizes_only, unary_type_of
from .normalize import (
    ATLEAST,
    ATLEAST_STAR,
    ATMOST,
    ATMOST_STAR,
    EXISTS_INV,
    EXISTS_INV_STAR,
    FORALL_INV,
    NAMES,
    NormalKB,
    normalize,
)
from .queries import UcqPlus, satisfies


@dataclass(frozen=True)
class CounterModel:
    interpretation: Interpretation


@dataclass(frozen=True)
class NoCounterModelUpTo:
    bound: int


@dataclass(frozen=True)
class Timeout:
    bound: int
    elapsed: float


Verdict = CounterModel | NoCounterModelUpTo | Timeout


class _Budget:
    def __init__(self, seconds: float | None):
        self.deadline = None if seconds is None else time.monotonic() + seconds
        self.start = time.monotonic()

    def check(self) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise _TimeoutError

    def elapsed(self) -> float:
        return time.monotonic() - self.start


class _TimeoutError(Exception):
    pass


def _as_normal(kb) -> NormalKB:
    if isinstance(kb, NormalKB):
        return kb
    return normalize(kb, sticky=kb.dialect.counting)


class _Search:
    def __init__(self, nkb: NormalKB, query: UcqPlus,
                 theta: frozenset[frozenset[str]] | None,
                 n_max: int, budget: _Budget):
        self.nkb = nkb
        self.query = query
        self.n_max = n_max
        self.budget = budget
        self.positives = sorted({op.name
                                 for s in nkb.shapes for op in (*s.lhs, *s.rhs)
                                 if isinstance(op, Atom) and not op.name.startswith("~")}
                                | {a.name for a in nkb.abox
                                   if isinstance(a, ConceptAssertion)
                                   and not a.name.startswith("~")})
        self.names_cis = [s for s in nkb.shapes if s.kind == NAMES]
        self.local_cis = [s for s in self.names_cis
                          if all(isinstance(op, Atom) for op in (*s.lhs, *s.rhs))]
        self.nominal_cis = [s for s in self.names_cis if s not in self.local_cis]
        self.quant_cis = [s for s in nkb.shapes if s.kind != NAMES]
        self.individuals = sorted(nkb.kb.individuals)
        self.binding = {a: i for i, a in enumerate(self.individuals)}
        self.theta = theta
        self.types = self._allowed_types()
        self.roles = sorted(nkb.kb.role_names) or []

    # -- types ------------------------------------------------------------

    def _allowed_types(self) -> list[frozenset[str]]:
        out = []
        for mask in range(1 << len(self.positives)):
            t = set()
            for i, n in enumerate(self.positives):
                if mask >> i & 1:
                    t.add(n)
                else:
                    t.add("~" + n)
            t = frozenset(t)
            if self.theta is not None and t not in self.theta:
                continue
            if all(self._ci_holds_on_type(s, t) for s in self.local_cis):
                out.append(t)
        return sorted(out, key=sorted)

    @staticmethod
    def _name_in_type(name: str, t: frozenset[str]) -> bool:
        return name in t

    def _ci_holds_on_type(self, s, t) -> bool:
        if all(op.name in t for op in s.lhs):
            return any(op.name in t for op in s.rhs)
        return True

    def _ci_holds_on_element(self, s, d: int, types: dict[int, frozenset[str]]) -> bool:
        def op_true(op) -> bool:
            if isinstance(op, Nominal):
                return self.binding.get(op.individual) == d
            return op.name in types[d]
        if all(op_true(op) for op in s.lhs):
            return any(op_true(op) for op in s.rhs)
        return True

    def _op_ext_ok(self, op, d: int, types) -> bool:
        if isinstance(op, Nominal):
            return self.binding.get(op.individual) == d
        return op.name in types[d]

    # -- search state -----------------------------------------------------

    def run(self):
        """Yield verified counter-models; exhausts the bounded space."""
        asserted: dict[int, set[str]] = {i: set() for i in range(len(self.individuals))}
        for a in self.nkb.abox:
            if isinstance(a, ConceptAssertion):
                asserted[self.binding[a.individual]].add(a.name)
        edges: dict[str, set[tuple[int, int]]] = {r: set() for r in self.roles}
        star_goals = []
        for a in self.nkb.abox:
            if isinstance(a, RoleAssertion):
                d, e = self.binding[a.subject], self.binding[a.object]
                if a.closed:
                    star_goals.append((a.role, d, e))
                else:
                    edges.setdefault(a.role, set()).add((d, e))

        def seed_types(i: int, types: dict[int, frozenset[str]]):
            if i == len(self.individuals):
                yield dict(types)
                return
            for t in self.types:
                if asserted[i] <= t and self._nominal_cis_ok(i, {**types, i: t}):
                    types[i] = t
                    yield from seed_types(i + 1, types)
                    del types[i]

        for types in seed_types(0, {}):
            yield from self._extend(types, {r: set(p) for r, p in edges.items()},
                                    star_goals)

    def _nominal_cis_ok(self, d: int, types) -> bool:
        return all(self._ci_holds_on_element(s, d, types)
                   for s in self.nominal_cis)

    # obligations ----------------------------------------------------------

    def _reach(self, edges, role, start) -> set[int]:
        seen = {start}
        stack = [start]
        while stack:
            cur = stack.pop()
            for (u, v) in edges.get(role, ()):
                if u == cur and v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    def _back_reach(self, edges, role, start) -> set[int]:
        seen = {start}
        stack = [start]
        while stack:
            cur = stack.pop()
            for (u, v) in edges.get(role, ()):
                if v == cur and u not in seen:
                    seen.add(u)
                    stack.append(u)
        return seen

    def _violated(self, types, edges) -> bool:
        """Monotone violations: at-most, at-most-star, inverse universals."""
        for s in self.quant_cis:
            if s.kind not in (ATMOST, ATMOST_STAR, FORALL_INV):
                continue
            for d in types:
                if not self._op_ext_ok(s.lhs[0], d, types):
                    continue
                if s.kind == ATMOST:
                    succ = [e for (u, e) in edges.get(s.role, ()) if u == d]
                    hits = sum(1 for e in succ if self._op_ext_ok(s.rhs[0], e, types))
                    if hits > s.n:
                        return True
                elif s.kind == ATMOST_STAR:
                    hits = sum(1 for e in self._reach(edges, s.role, d)
                               if self._op_ext_ok(s.rhs[0], e, types))
                    if hits > s.n:
                        return True
                else:  # FORALL_INV: every r-predecessor in rhs
                    preds = [u for (u, e) in edges.get(s.role, ()) if e == d]
                    if any(not self._op_ext_ok(s.rhs[0], u, types) for u in preds):
                        return True
        for d in types:
            if not self._nominal_cis_ok(d, types):
                return True
        return False

    def _unsatisfied(self, types, edges, star_goals):
        """First unsatisfied positive obligation, or None."""
        for (role, d, e) in star_goals:
            if e not in self._reach(edges, role, d):
                return ("goal", role, d, e)
        for s in self.quant_cis:
            if s.kind not in (ATLEAST, ATLEAST_STAR, EXISTS_INV, EXISTS_INV_STAR):
                continue
            for d in sorted(types):
                if not self._op_ext_ok(s.lhs[0], d, types):
                    continue
                if s.kind == ATLEAST:
                    succ = [e for (u, e) in edges.get(s.role, ()) if u == d]
                    hits = sum(1 for e in succ if self._op_ext_ok(s.rhs[0], e, types))
                    if hits < s.n:
                        return ("atleast", s, d)
                elif s.kind == ATLEAST_STAR:
                    hits = sum(1 for e in self._reach(edges, s.role, d)
                               if self._op_ext_ok(s.rhs[0], e, types))
                    if hits < s.n:
                        return ("atleast_star", s, d)
                elif s.kind == EXISTS_INV:
                    preds = [u for (u, e) in edges.get(s.role, ()) if e == d]
                    if not any(self._op_ext_ok(s.rhs[0], u, types) for u in preds):
                        return ("exists_inv", s, d)
                else:
                    hits = any(self._op_ext_ok(s.rhs[0], u, types)
                               for u in self._back_reach(edges, s.role, d))
                    if not hits:
                        return ("exists_inv_star", s, d)
        return None

    def _interp(self, types, edges) -> Interpretation:
        concepts: dict[str, set[int]] = {}
        for d, t in types.items():
            for n in t:
                concepts.setdefault(n, set()).add(d)
        return Interpretation.make_over(
            sorted(types), concepts,
            {r: set(p) for r, p in edges.items() if p},
            {a: i for a, i in self.binding.items()})

    # -- the driver ---------------------------------------------------------

    def _extend(self, types, edges, star_goals):
        self.budget.check()
        if self._violated(types, edges):
            return
        interp = self._interp(types, edges)
        if satisfies(interp, self.query):
            return
        ob = self._unsatisfied(types, edges, star_goals)
        if ob is None:
            yield interp
            return
        role = ob[1] if ob[0] == "goal" else ob[1].role
        for (u, v, fresh_type) in self._candidates(ob, types, edges):
            if fresh_type is None:
                edge = (u, v)
                fresh = None
            else:
                fresh = max(types) + 1 if types else 0
                types[fresh] = fresh_type
                edge = (u if u is not None else fresh,
                        v if v is not None else fresh)
            edges.setdefault(role, set()).add(edge)
            yield from self._extend(types, edges, star_goals)
            edges[role].discard(edge)
            if fresh is not None:
                del types[fresh]

    def _candidates(self, ob, types, edges):
        """Edges (d, e, fresh_type) that can make progress on the obligation.

        fresh_type is None for edges between existing elements; otherwise
        exactly one endpoint is None and a fresh element with that type is
        created for it.
        """
        kind = ob[0]
        room = len(types) < self.n_max
        if kind == "goal":
            _, role, d, goal = ob
            reach = self._reach(edges, role, d)
            for u in sorted(reach):
                for v in sorted(types):
                    if v not in reach and (u, v) not in edges.get(role, set()):
                        yield (u, v, None)
                if room:
                    for t in self.types:
                        yield (u, None, t)
            return
        s = ob[1]
        if kind == "atleast":
            d = ob[2]
            for v in sorted(types):
                if self._op_ext_ok(s.rhs[0], v, types) \
                        and (d, v) not in edges.get(s.role, set()):
                    yield (d, v, None)
            if room and isinstance(s.rhs[0], Atom):
                for t in self.types:
                    if s.rhs[0].name in t:
                        yield (d, None, t)
        elif kind == "exists_inv":
            d = ob[2]
            for u in sorted(types):
                if self._op_ext_ok(s.rhs[0], u, types) \
                        and (u, d) not in edges.get(s.role, set()):
                    yield (u, d, None)
            if room and isinstance(s.rhs[0], Atom):
                for t in self.types:
                    if s.rhs[0].name in t:
                        yield (None, d, t)
        elif kind == "atleast_star":
            d = ob[2]
            reach = self._reach(edges, s.role, d)
            for u in sorted(reach):
                for v in sorted(types):
                    if v not in reach and (u, v) not in edges.get(s.role, set()):
                        yield (u, v, None)
                if room:
                    for t in self.types:
                        yield (u, None, t)
        else:  # exists_inv_star
            d = ob[2]
            back = self._back_reach(edges, s.role, d)
            for v in sorted(back):
                for u in sorted(types):
                    if u not in back and (u, v) not in edges.get(s.role, set()):
                        yield (u, v, None)
                if room:
                    for t in self.types:
                        yield (None, v, t)


def iterate_counter_models(kb, query: UcqPlus,
                           theta: frozenset[frozenset[str]] | None = None,
                           n_max: int = 6,
                           time_budget: float | None = 60.0):
    """Verified counter-models, lazily; exhausts the bounded space."""
    nkb = _as_normal(kb)
    if n_max < len(nkb.kb.individuals):
        raise ValueError("n_max must be at least the number of individuals")
    budget = _Budget(time_budget)
    search = _Search(nkb, query, theta, n_max, budget)
    for interp in search.run():
        assert is_model(interp, nkb.kb), "search produced a non-model"
        assert not satisfies(interp, query), "search produced a matching model"
        if theta is not None:
            assert realizes_only(interp, nkb.kb, theta)
        yield interp


def decide_bruteforce(kb, query: UcqPlus,
                      theta: frozenset[frozenset[str]] | None = None,
                      n_max: int = 6,
                      time_budget: float | None = 60.0) -> Verdict:
    """First counter-model up to n_max, or the exhausted bound."""
    nkb = _as_normal(kb)
    budget = _Budget(time_budget)
    try:
        for interp in iterate_counter_models(nkb, query, theta, n_max,
                                             None if time_budget is None
                                             else time_budget):
            return CounterModel(interp)
    except _TimeoutError:
        return Timeout(n_max, budget.elapsed())
    return NoCounterModelUpTo(n_max)
