"""Q-types with parameters: the compositional query-evaluation summaries.

A Q-type with parameters G collects pairs (fragment, partial map of the
fragment's variables into G) that extend to matches.  Composition glues
entries along shared parameters; projection forgets parameters.  Weak
Q-types use localizations instead of transitive atoms and coincide with
Q-types on well-connected interpretations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .concepts import Role
from .interp import Interpretation, reachable
from .queries import (
    CqPlus,
    Fragment,
    QueryAtom,
    Term,
    UcqPlus,
    Var,
    all_matches,
    canonical_form,
    fragments,
    hom_iter,
    localizations,
    saturate,
)

Entry = tuple[int, tuple[tuple[Term, int], ...]]


class QueryContext:
    """Fragment table and full-disjunct markers for a fixed query."""

    def __init__(self, query: UcqPlus):
        self.query = query
        self.fragments: tuple[Fragment, ...] = fragments(query)
        self.index: dict[tuple, int] = {
            f.canonical_id: i for i, f in enumerate(self.fragments)}
        full_ids = {canonical_form(q) for q in query.disjuncts}
        self.full_fragments: frozenset[int] = frozenset(
            i for i, f in enumerate(self.fragments) if f.canonical_id in full_ids)

    def fragment(self, i: int) -> CqPlus:
        return self.fragments[i].cq

    @lru_cache(maxsize=None)
    def fragment_localizations(self, i: int) -> tuple[CqPlus, ...]:
        return localizations(self.fragment(i))

    def __len__(self) -> int:
        return len(self.fragments)


@dataclass(frozen=True)
class QType:
    params: frozenset[int]
    entries: frozenset[Entry]

    def has_full_disjunct(self, ctx: QueryContext) -> bool:
        return any(i in ctx.full_fragments for i, _ in self.entries)

    def restricted_to_fragment(self, i: int) -> frozenset[Entry]:
        return frozenset(e for e in self.entries if e[0] == i)

    def __le__(self, other: "QType") -> bool:
        return self.entries <= other.entries


def empty_qtype(params) -> QType:
    return QType(frozenset(params), frozenset())


def _entry_maps(match: dict[Term, int], variables, params: frozenset[int]):
    """All partial maps into params that the match extends."""
    gpart = [(v, match[v]) for v in sorted(variables) if match[v] in params]
    for r in range(len(gpart) + 1):
        for combo in itertools.combinations(gpart, r):
            yield combo


@lru_cache(maxsize=200_000)
def qtype(interp: Interpretation, ctx: QueryContext,
          params: frozenset[int], weak: bool = False) -> QType:
    """The (weak) Q-type of an interpretation with the given parameters."""
    if not params <= interp.elements:
        raise ValueError("parameters must lie inside the domain")
    entries: set[Entry] = set()
    for i, frag in enumerate(ctx.fragments):
        targets = ctx.fragment_localizations(i) if weak else (frag.cq,)
        variables = frag.cq.variables
        seen_maps: set[tuple] = set()
        for target in targets:
            for match in all_matches(interp, target):
                key = tuple(sorted((v, match[v]) for v in variables))
                if key in seen_maps:
                    continue
                seen_maps.add(key)
                for eta in _entry_maps(match, variables, params):
                    entries.add((i, eta))
    return QType(frozenset(params), frozenset(entries))


def project(tau: QType, params) -> QType:
    params = frozenset(params)
    if not params <= tau.params:
        raise ValueError("projection target must be a subset of the parameters")
    entries = frozenset(
        (i, tuple((v, e) for v, e in eta if e in params))
        for i, eta in tau.entries)
    return QType(params, entries)


def _param_term(e: int) -> Term:
    return Term(f"@{e}", False)


def glue_entries(ctx: QueryContext, entries) -> frozenset[QueryAtom]:
    """Canonical instance of the entries, renamed apart, parameters shared."""
    atoms: set[QueryAtom] = set()
    for k, (i, eta) in enumerate(sorted(entries)):
        frag = ctx.fragment(i)
        sub = {v: _param_term(e) for v, e in eta}
        for v in frag.variables:
            sub.setdefault(v, Var(f"_g{k}_{v.name}"))
        for a in frag.atoms:
            atoms.add(QueryAtom(a.kind, a.pred,
                                tuple(sub.get(t, t) for t in a.terms())))
    return frozenset(atoms)


def compose(tau1: QType, tau2: QType, ctx: QueryContext) -> QType:
    """Composition: entries derivable by gluing pieces of both types.

    A homomorphism never needs two disjoint copies of the same piece, so
    gluing all entries at once (renamed apart) is equivalent to searching
    over entry subsets with disjoint free variables.
    """
    params = tau1.params | tau2.params
    glued = glue_entries(ctx, set(tau1.entries) | set(tau2.entries))
    target = saturate(CqPlus(glued)).atoms
    param_terms = {_param_term(e): e for e in params}
    entries: set[Entry] = set()
    for i, frag in enumerate(ctx.fragments):
        variables = frag.cq.variables
        for hom in hom_iter(frag.cq, target):
            match_params = {}
            for v in variables:
                img = hom[v]
                if img in param_terms:
                    match_params[v] = param_terms[img]
            gpart = sorted(match_params.items())
            for r in range(len(gpart) + 1):
                for combo in itertools.combinations(gpart, r):
                    entries.add((i, tuple(combo)))
    return QType(frozenset(params), frozenset(entries))


def compose_many(taus, ctx: QueryContext) -> QType:
    taus = list(taus)
    if not taus:
        return empty_qtype(frozenset())
    params = frozenset().union(*(t.params for t in taus))
    glued = glue_entries(ctx, set().union(*(t.entries for t in taus)))
    target = saturate(CqPlus(glued)).atoms
    param_terms = {_param_term(e): e for e in params}
    entries: set[Entry] = set()
    for i, frag in enumerate(ctx.fragments):
        variables = frag.cq.variables
        for hom in hom_iter(frag.cq, target):
            match_params = {v: param_terms[hom[v]] for v in variables
                            if hom[v] in param_terms}
            gpart = sorted(match_params.items())
            for r in range(len(gpart) + 1):
                for combo in itertools.combinations(gpart, r):
                    entries.add((i, tuple(combo)))
    return QType(params, frozenset(entries))


def is_well_connected(interp: Interpretation) -> bool:
    """d reaches e iff d = e, or d is not a sink and e is not a source."""
    roles = [r for r, pairs in interp.roles if pairs]
    if len(roles) > 1:
        raise ValueError("well-connectedness is a single-role notion")
    role = Role(roles[0]) if roles else Role("r")
    reach = reachable(interp, role)
    pairs = interp.role(role.base)
    sinks = {d for d in interp.elements
             if not any(x == d for x, _ in pairs)}
    sources = {d for d in interp.elements
               if not any(y == d for _, y in pairs)}
    for d in interp.elements:
        for e in interp.elements:
            connected = e in reach[d]
            expected = (d == e) or (d not in sinks and e not in sources)
            if connected != expected:
                return False
    return True
