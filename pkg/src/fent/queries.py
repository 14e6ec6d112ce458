"""Conjunctive queries with transitive atoms, matching, and rewritings."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache

from .concepts import Role
from .interp import Interpretation, reachable


@dataclass(frozen=True, order=True)
class Term:
    name: str
    is_var: bool = True

    def __str__(self) -> str:
        return self.name


def Var(name: str) -> Term:
    return Term(name, True)


def Ind(name: str) -> Term:
    return Term(name, False)


@dataclass(frozen=True, order=True)
class QueryAtom:
    """kind is one of 'c' (concept), 'eq', 'r' (role), 't' (transitive)."""

    kind: str
    pred: str
    args: tuple[Term, ...]

    def __str__(self) -> str:
        if self.kind == "c":
            return f"{self.pred}({self.args[0]})"
        if self.kind == "eq":
            return f"{self.args[0]} = {self.args[1]}"
        star = "star" if self.kind == "t" else ""
        return f"{self.pred}{star}({self.args[0]},{self.args[1]})"

    def terms(self) -> tuple[Term, ...]:
        return self.args


def ConceptAtom(name: str, t: Term) -> QueryAtom:
    return QueryAtom("c", name, (t,))


def EqAtom(s: Term, t: Term) -> QueryAtom:
    return QueryAtom("eq", "", (s, t))


def RoleAtom(role: str, s: Term, t: Term) -> QueryAtom:
    return QueryAtom("r", role, (s, t))


def TransAtom(role: str, s: Term, t: Term) -> QueryAtom:
    return QueryAtom("t", role, (s, t))


@dataclass(frozen=True)
class CqPlus:
    atoms: frozenset[QueryAtom]

    @staticmethod
    def of(*atoms: QueryAtom) -> "CqPlus":
        return CqPlus(frozenset(atoms))

    @cached_property
    def variables(self) -> frozenset[Term]:
        return frozenset(t for a in self.atoms for t in a.terms() if t.is_var)

    @cached_property
    def individuals(self) -> frozenset[Term]:
        return frozenset(t for a in self.atoms for t in a.terms() if not t.is_var)

    @cached_property
    def sorted_atoms(self) -> tuple[QueryAtom, ...]:
        return tuple(sorted(self.atoms))

    def is_connected(self) -> bool:
        return len(connected_components(self.atoms)) <= 1

    def __str__(self) -> str:
        return ", ".join(str(a) for a in self.sorted_atoms)

    def __len__(self) -> int:
        return len(self.atoms)


@dataclass(frozen=True)
class UcqPlus:
    disjuncts: tuple[CqPlus, ...]

    @staticmethod
    def of(*disjuncts: CqPlus) -> "UcqPlus":
        seen: dict[CqPlus, None] = {}
        for q in disjuncts:
            seen.setdefault(q)
        return UcqPlus(tuple(seen))

    def max_disjunct_size(self) -> int:
        return max((len(q) for q in self.disjuncts), default=0)

    def has_transitive_atoms(self) -> bool:
        return any(a.kind == "t" for q in self.disjuncts for a in q.atoms)

    def __str__(self) -> str:
        return " | ".join(f"{{{q}}}" for q in self.disjuncts)


def connected_components(atoms: frozenset[QueryAtom]) -> list[frozenset[QueryAtom]]:
    """Partition by the atom-sharing graph (atoms sharing any term)."""
    remaining = set(atoms)
    components = []
    while remaining:
        seed = remaining.pop()
        comp = {seed}
        terms = set(seed.terms())
        changed = True
        while changed:
            changed = False
            for a in list(remaining):
                if any(t in terms for t in a.terms()):
                    comp.add(a)
                    terms.update(a.terms())
                    remaining.discard(a)
                    changed = True
        components.append(frozenset(comp))
    return components


# ---------------------------------------------------------------------------
# Saturation and homomorphisms between queries
# ---------------------------------------------------------------------------

def saturate(q: CqPlus) -> CqPlus:
    """Least fixpoint of the saturation rules.

    Besides the four composition rules, every term gets a reflexive
    closure atom for each role mentioned in q, so that r(x,y) saturates
    to r*(x,y); without these the closure atoms of paths of length one
    would be missing.
    """
    atoms = set(q.atoms)
    roles = {a.pred for a in atoms if a.kind in ("r", "t")}
    terms = {t for a in atoms for t in a.terms()}
    for r in roles:
        for t in terms:
            atoms.add(TransAtom(r, t, t))
    changed = True
    while changed:
        changed = False
        eqs = [a for a in atoms if a.kind == "eq"]
        bins = [a for a in atoms if a.kind in ("r", "t")]
        new: set[QueryAtom] = set()
        for a in eqs:
            for b in eqs:
                if a.args[1] == b.args[0]:
                    new.add(EqAtom(a.args[0], b.args[1]))
        for a in bins:
            for b in eqs:
                if a.args[1] == b.args[0]:
                    new.add(QueryAtom(a.kind, a.pred, (a.args[0], b.args[1])))
                if a.args[0] == b.args[0]:
                    new.add(QueryAtom(a.kind, a.pred, (b.args[1], a.args[1])))
        for a in bins:
            for b in bins:
                if a.pred == b.pred and a.args[1] == b.args[0]:
                    new.add(TransAtom(a.pred, a.args[0], b.args[1]))
        if not new <= atoms:
            atoms |= new
            changed = True
    return CqPlus(frozenset(atoms))


def hom_iter(p: CqPlus, target_atoms: frozenset[QueryAtom],
             extending: dict[Term, Term] | None = None):
    """All maps of p's variables into target terms with eta(p) in the target.

    Equality and closure atoms with identical images hold everywhere and
    are not looked up.  Candidates for each variable are narrowed through
    an index of the target atoms.
    """
    assignment: dict[Term, Term] = dict(extending or {})
    target_terms = sorted({t for a in target_atoms for t in a.terms()} |
                          set(p.individuals))
    index: dict[tuple[str, str], list[tuple[Term, ...]]] = {}
    for a in target_atoms:
        index.setdefault((a.kind, a.pred), []).append(a.args)

    def image(t: Term) -> Term | None:
        if not t.is_var:
            return t
        return assignment.get(t)

    def atom_ok(a: QueryAtom) -> bool:
        imgs = tuple(image(t) for t in a.terms())
        if any(i is None for i in imgs):
            return True  # not yet determined
        if a.kind in ("eq", "t") and imgs[0] == imgs[1]:
            return True  # x = x and r*(x, x) hold everywhere
        return QueryAtom(a.kind, a.pred, imgs) in target_atoms

    def candidates(v: Term) -> list[Term]:
        best: set[Term] | None = None
        for a in p.atoms:
            if v not in a.terms() or a.kind == "eq":
                continue
            hits = index.get((a.kind, a.pred), [])
            pos = [i for i, t in enumerate(a.terms()) if t == v]
            cands = set()
            for args in hits:
                ok = True
                for i, t in enumerate(a.terms()):
                    img = image(t)
                    if img is not None and t != v and args[i] != img:
                        ok = False
                        break
                if ok:
                    cands.update(args[i] for i in pos)
            if a.kind == "t":
                # the reflexive reading adds every already-known image
                for t in a.terms():
                    img = image(t)
                    if img is not None:
                        cands.add(img)
                if all(image(t) is None or t == v for t in a.terms()):
                    cands.update(target_terms)
            best = cands if best is None else best & cands
        if best is None:
            return list(target_terms)
        return sorted(best)

    order = _variable_order(p, set(assignment))

    def backtrack(i: int):
        if i == len(order):
            yield dict(assignment)
            return
        v = order[i]
        for cand in candidates(v):
            assignment[v] = cand
            if all(atom_ok(a) for a in p.atoms if v in a.terms()):
                yield from backtrack(i + 1)
            del assignment[v]

    if all(atom_ok(a) for a in p.atoms):
        yield from backtrack(0)


def _hom_search(p: CqPlus, target_atoms: frozenset[QueryAtom],
                extending: dict[Term, Term] | None = None) -> dict[Term, Term] | None:
    return next(hom_iter(p, target_atoms, extending), None)


def _variable_order(p: CqPlus, already: set[Term]) -> list[Term]:
    """Connectivity-first ordering so atom checks fire early."""
    remaining = set(p.variables) - already
    placed = set(already) | {t for t in p.individuals}
    order = []
    while remaining:
        best = None
        for v in sorted(remaining):
            linked = sum(1 for a in p.atoms
                         if v in a.terms() and any(t in placed for t in a.terms()))
            if best is None or linked > best[0]:
                best = (linked, v)
        order.append(best[1])
        placed.add(best[1])
        remaining.discard(best[1])
    return order


def has_homomorphism(p: CqPlus, q: CqPlus) -> dict[Term, Term] | None:
    """Some eta with eta(p) contained in saturate(q); individuals fixed."""
    return _hom_search(p, saturate(q).atoms)


# ---------------------------------------------------------------------------
# Matching in interpretations
# ---------------------------------------------------------------------------

class _UnsatisfiableDisjunct(Exception):
    pass


def _merge_equalities(q: CqPlus, interp: Interpretation
                      ) -> tuple[list[QueryAtom], dict[Term, Term], dict[Term, int]]:
    """Union-find merge of equality atoms.

    Returns the non-equality atoms over representatives, the representative
    map, and pre-pinned representatives (classes containing an individual).
    """
    parent: dict[Term, Term] = {}

    def find(t: Term) -> Term:
        parent.setdefault(t, t)
        while parent[t] != t:
            parent[t] = parent[parent[t]]
            t = parent[t]
        return t

    def union(s: Term, t: Term) -> None:
        rs, rt = find(s), find(t)
        if rs == rt:
            return
        # prefer individuals as representatives
        if rs.is_var:
            rs, rt = rt, rs
        if not rs.is_var and not rt.is_var and rs != rt:
            raise _UnsatisfiableDisjunct
        parent[rt] = rs

    for a in q.atoms:
        for t in a.terms():
            find(t)
    for a in q.atoms:
        if a.kind == "eq":
            union(*a.args)
    rep = {t: find(t) for t in parent}
    pinned: dict[Term, int] = {}
    for t, r in rep.items():
        if not r.is_var:
            d = interp.element_of(r.name)
            if d is None:
                raise _UnsatisfiableDisjunct
            pinned[r] = d
    atoms = [QueryAtom(a.kind, a.pred, tuple(rep[t] for t in a.terms()))
             for a in q.atoms if a.kind != "eq"]
    return atoms, rep, pinned


def all_matches(interp: Interpretation, q: CqPlus,
                pin: dict[Term, int] | None = None):
    """All matches for q in interp, as maps over the original variables."""
    try:
        atoms, rep, assignment = _merge_equalities(q, interp)
    except _UnsatisfiableDisjunct:
        return
    for t, d in (pin or {}).items():
        r = rep.get(t, t)
        if not r.is_var:
            if interp.element_of(r.name) != d:
                return
            continue
        if r in assignment and assignment[r] != d:
            return
        assignment[r] = d

    def atom_ok(a: QueryAtom) -> bool:
        imgs = [assignment.get(t) if t.is_var else interp.element_of(t.name)
                for t in a.terms()]
        if any(i is None for i in imgs):
            return True
        if a.kind == "c":
            return imgs[0] in interp.concept(a.pred)
        if a.kind == "r":
            return (imgs[0], imgs[1]) in interp.role(a.pred)
        return imgs[1] in reachable(interp, Role(a.pred))[imgs[0]]

    if not all(atom_ok(a) for a in atoms):
        return
    # every variable class needs a value, even ones with no atoms left
    # after equality merging
    variables = sorted({r for r in rep.values()
                        if r.is_var and r not in assignment})
    order = _match_order(atoms, variables, set(assignment))

    def expand() -> dict[Term, int]:
        full = {}
        for t, r in rep.items():
            if t.is_var:
                full[t] = assignment[r] if r.is_var else interp.element_of(r.name)
        for t, d in (pin or {}).items():
            full.setdefault(t, d)
        return full

    def backtrack(i: int):
        if i == len(order):
            yield expand()
            return
        v = order[i]
        for d in interp.domain():
            assignment[v] = d
            if all(atom_ok(a) for a in atoms if v in a.terms()):
                yield from backtrack(i + 1)
            del assignment[v]

    yield from backtrack(0)


def match_disjunct(interp: Interpretation, q: CqPlus,
                   pin: dict[Term, int] | None = None) -> dict[Term, int] | None:
    """A match for q in interp, or None; pin fixes variables up front."""
    return next(all_matches(interp, q, pin), None)


def _match_order(atoms: list[QueryAtom], variables: list[Term],
                 placed: set[Term]) -> list[Term]:
    order = []
    remaining = set(variables)
    placed = set(placed)
    while remaining:
        best = None
        for v in sorted(remaining):
            linked = sum(1 for a in atoms
                         if v in a.terms() and any(t in placed or not t.is_var
                                                   for t in a.terms() if t != v))
            if best is None or linked > best[0]:
                best = (linked, v)
        order.append(best[1])
        placed.add(best[1])
        remaining.discard(best[1])
    return order


def find_match(interp: Interpretation, query: UcqPlus
               ) -> tuple[int, dict[Term, int]] | None:
    for i, q in enumerate(query.disjuncts):
        m = match_disjunct(interp, q)
        if m is not None:
            return i, m
    return None


def satisfies(interp: Interpretation, query: UcqPlus) -> bool:
    return find_match(interp, query) is not None


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def _fresh_var(taken: set[str], stem: str) -> Term:
    i = 0
    while f"{stem}{i}" in taken:
        i += 1
    taken.add(f"{stem}{i}")
    return Var(f"{stem}{i}")


def linking_variables(q: CqPlus) -> frozenset[Term]:
    """Variables whose only atoms are r*(x, y), r*(y, z) for one role."""
    out = set()
    for y in q.variables:
        using = [a for a in q.atoms if y in a.terms()]
        if len(using) != 2:
            continue
        a, b = using
        if a.kind != "t" or b.kind != "t" or a.pred != b.pred:
            continue
        if a.args[1] == y and a.args[0] != y and b.args[0] == y and b.args[1] != y:
            out.add(y)
        elif b.args[1] == y and b.args[0] != y and a.args[0] == y and a.args[1] != y:
            out.add(y)
    return frozenset(out)


def normalize_disjunct(q: CqPlus) -> CqPlus:
    atoms = set(q.atoms)
    taken = {t.name for a in atoms for t in a.terms()}
    # eliminate linking variables
    while True:
        cq = CqPlus(frozenset(atoms))
        links = linking_variables(cq)
        if not links:
            break
        y = sorted(links)[0]
        a, b = [a for a in atoms if y in a.terms()]
        if a.args[0] == y:
            a, b = b, a
        atoms.discard(a)
        atoms.discard(b)
        atoms.add(TransAtom(a.pred, a.args[0], b.args[1]))
    # subdivide every transitive atom with two fresh linking variables
    for a in sorted(a for a in atoms if a.kind == "t"):
        atoms.discard(a)
        u = _fresh_var(taken, "_u")
        v = _fresh_var(taken, "_u")
        atoms.add(TransAtom(a.pred, a.args[0], u))
        atoms.add(TransAtom(a.pred, u, v))
        atoms.add(TransAtom(a.pred, v, a.args[1]))
    return CqPlus(frozenset(atoms))


def normalize_query(query: UcqPlus) -> UcqPlus:
    return UcqPlus.of(*(normalize_disjunct(q) for q in query.disjuncts))


# ---------------------------------------------------------------------------
# Fragments
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def canonical_form(q: CqPlus) -> tuple:
    """Minimal atom tuple over bijective renamings of variables to v0..vk."""
    variables = sorted(q.variables)
    best = None
    for perm in itertools.permutations(range(len(variables))):
        ren = {v: Var(f"v{i}") for v, i in zip(variables, perm)}
        atoms = tuple(sorted(
            QueryAtom(a.kind, a.pred, tuple(ren.get(t, t) for t in a.terms()))
            for a in q.atoms))
        if best is None or atoms < best:
            best = atoms
    return best


@dataclass(frozen=True)
class Fragment:
    """A connected sub-CQ of some disjunct, with its original variables."""

    source: int
    cq: CqPlus

    @cached_property
    def canonical_id(self) -> tuple:
        return canonical_form(self.cq)


def fragments(query: UcqPlus) -> tuple[Fragment, ...]:
    """All connected atom subsets, deduplicated by canonical id."""
    seen: dict[tuple, Fragment] = {}
    for i, q in enumerate(query.disjuncts):
        atoms = sorted(q.atoms)
        for size in range(1, len(atoms) + 1):
            for combo in itertools.combinations(atoms, size):
                sub = frozenset(combo)
                if len(connected_components(sub)) == 1:
                    frag = Fragment(i, CqPlus(sub))
                    seen.setdefault(frag.canonical_id, frag)
    return tuple(seen.values())


def fragment_count(query: UcqPlus) -> int:
    return len(fragments(query))


# ---------------------------------------------------------------------------
# Localizations and the bounded rewriting
# ---------------------------------------------------------------------------

def localizations(q: CqPlus) -> tuple[CqPlus, ...]:
    """All 2^t rewritings of the t transitive atoms."""
    taken = {t.name for a in q.atoms for t in a.terms()}
    trans = sorted(a for a in q.atoms if a.kind == "t")
    rest = [a for a in q.atoms if a.kind != "t"]
    options: list[list[tuple[QueryAtom, ...]]] = []
    for a in trans:
        x, y = a.args
        xp = _fresh_var(taken, "_p")
        yp = _fresh_var(taken, "_p")
        options.append([
            (EqAtom(x, y),),
            (RoleAtom(a.pred, x, yp), RoleAtom(a.pred, xp, y)),
        ])
    out = []
    for choice in itertools.product(*options):
        atoms = set(rest)
        for group in choice:
            atoms.update(group)
        out.append(CqPlus(frozenset(atoms)))
    return tuple(out)


def eliminate_equalities(q: CqPlus) -> CqPlus | None:
    """Merge variables along equality atoms; None if two individuals clash."""
    parent: dict[Term, Term] = {}

    def find(t: Term) -> Term:
        parent.setdefault(t, t)
        while parent[t] != t:
            parent[t] = parent[parent[t]]
            t = parent[t]
        return t

    for a in q.atoms:
        if a.kind == "eq":
            rs, rt = find(a.args[0]), find(a.args[1])
            if rs == rt:
                continue
            if rs.is_var:
                rs, rt = rt, rs
            if not rs.is_var and not rt.is_var:
                return None
            parent[rt] = rs
    atoms = frozenset(
        QueryAtom(a.kind, a.pred, tuple(find(t) for t in a.terms()))
        for a in q.atoms if a.kind != "eq")
    return CqPlus(atoms)


def bounded_rewrite(query: UcqPlus, bound: int) -> UcqPlus:
    """Replace r*(x,y) by paths of length up to the bound; result is a UCQ."""
    if bound < 1:
        raise ValueError("path bound must be >= 1")
    out: list[CqPlus] = []
    for q in query.disjuncts:
        taken = {t.name for a in q.atoms for t in a.terms()}
        trans = sorted(a for a in q.atoms if a.kind == "t")
        rest = [a for a in q.atoms if a.kind != "t"]
        options: list[list[tuple[QueryAtom, ...]]] = []
        for a in trans:
            x, y = a.args
            alts: list[tuple[QueryAtom, ...]] = [(EqAtom(x, y),), (RoleAtom(a.pred, x, y),)]
            for length in range(2, bound + 1):
                mids = [_fresh_var(taken, "_z") for _ in range(length - 1)]
                chain = [RoleAtom(a.pred, x, mids[0])]
                for u, v in zip(mids, mids[1:]):
                    chain.append(RoleAtom(a.pred, u, v))
                chain.append(RoleAtom(a.pred, mids[-1], y))
                alts.append(tuple(chain))
            options.append(alts)
        for choice in itertools.product(*options):
            atoms = set(rest)
            for group in choice:
                atoms.update(group)
            merged = eliminate_equalities(CqPlus(frozenset(atoms)))
            if merged is not None:
                out.append(merged)
    return UcqPlus.of(*out)
