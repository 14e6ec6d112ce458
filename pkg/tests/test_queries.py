"""Saturation, homomorphisms, matching, normalization, rewritings."""

import itertools
import random

from fent.interp import Interpretation
from fent.queries import (
    ConceptAtom,
    CqPlus,
    EqAtom,
    RoleAtom,
    TransAtom,
    UcqPlus,
    Var,
    bounded_rewrite,
    find_match,
    fragment_count,
    fragments,
    has_homomorphism,
    linking_variables,
    localizations,
    normalize_query,
    satisfies,
    saturate,
)

x, y, z, u, w = Var("x"), Var("y"), Var("z"), Var("u"), Var("w")


def test_saturate_role_then_star():
    q = CqPlus.of(RoleAtom("r", x, y), TransAtom("r", y, z))
    assert TransAtom("r", x, z) in saturate(q).atoms


def test_saturate_equality_transitivity():
    q = CqPlus.of(EqAtom(x, y), EqAtom(y, z))
    assert EqAtom(x, z) in saturate(q).atoms


def test_saturate_idempotent_and_monotone():
    rng = random.Random(3)
    terms = [x, y, z, u]
    for _ in range(60):
        atoms = set()
        for _ in range(rng.randint(1, 5)):
            kind = rng.randrange(3)
            s, t = rng.choice(terms), rng.choice(terms)
            if kind == 0:
                atoms.add(RoleAtom("r", s, t))
            elif kind == 1:
                atoms.add(TransAtom("r", s, t))
            else:
                atoms.add(EqAtom(s, t))
        q = CqPlus(frozenset(atoms))
        sq = saturate(q)
        assert saturate(sq) == sq
        smaller = CqPlus(frozenset(list(atoms)[:max(1, len(atoms) - 1)]))
        assert saturate(smaller).atoms <= sq.atoms


def test_homomorphism_star_covers_role():
    p = CqPlus.of(TransAtom("r", x, y))
    q = CqPlus.of(RoleAtom("r", x, y))
    assert has_homomorphism(p, q) is not None


def test_homomorphism_role_into_star_fails():
    p = CqPlus.of(RoleAtom("r", x, y))
    q = CqPlus.of(TransAtom("r", x, y))
    assert has_homomorphism(p, q) is None


def test_homomorphism_reflexive():
    q = CqPlus.of(ConceptAtom("A", x), RoleAtom("r", x, y))
    assert has_homomorphism(q, q) is not None


def test_homomorphism_soundness_on_random_interpretations():
    # if p -> q and q matches, then p matches
    rng = random.Random(11)
    pool = [
        CqPlus.of(RoleAtom("r", x, y)),
        CqPlus.of(TransAtom("r", x, y)),
        CqPlus.of(ConceptAtom("A", x), RoleAtom("r", x, y)),
        CqPlus.of(ConceptAtom("A", x), TransAtom("r", x, y)),
        CqPlus.of(RoleAtom("r", x, y), RoleAtom("r", y, z)),
        CqPlus.of(TransAtom("r", x, z)),
        CqPlus.of(RoleAtom("r", x, x)),
    ]
    for _ in range(300):
        p, q = rng.choice(pool), rng.choice(pool)
        eta = has_homomorphism(p, q)
        if eta is None:
            continue
        n = rng.randint(1, 4)
        interp = Interpretation.make(
            n,
            {"A": {d for d in range(n) if rng.random() < 0.5}},
            {"r": {(rng.randrange(n), rng.randrange(n))
                   for _ in range(rng.randint(0, 6))}})
        if satisfies(interp, UcqPlus.of(q)):
            assert satisfies(interp, UcqPlus.of(p)), (p, q, interp.to_json())


def test_find_match_unary():
    interp = Interpretation.make(2, {"A": {1}}, {})
    assert find_match(interp, UcqPlus.of(CqPlus.of(ConceptAtom("A", x)))) is not None


def test_find_match_star_reflexive_on_chain():
    interp = Interpretation.make(3, {}, {"r": {(0, 1), (1, 2)}})
    got = find_match(interp, UcqPlus.of(CqPlus.of(TransAtom("r", x, x))))
    assert got is not None


def test_find_match_cycle_vs_chain():
    q = UcqPlus.of(CqPlus.of(ConceptAtom("A", x), RoleAtom("r", x, y),
                             TransAtom("r", y, x)))
    cycle = Interpretation.make(2, {"A": {0}}, {"r": {(0, 1), (1, 0)}})
    chain = Interpretation.make(2, {"A": {0}}, {"r": {(0, 1)}})
    assert find_match(cycle, q) is not None
    assert find_match(chain, q) is None


def test_find_match_equality_merging():
    interp = Interpretation.make(2, {"A": {0}, "B": {0}}, {})
    q = UcqPlus.of(CqPlus.of(ConceptAtom("A", x), ConceptAtom("B", y), EqAtom(x, y)))
    m = find_match(interp, q)
    assert m is not None
    _, assignment = m
    assert assignment[x] == assignment[y] == 0


def test_normalize_query_subdivides_transitive_atoms():
    q = CqPlus.of(ConceptAtom("A", x), TransAtom("r", x, z), ConceptAtom("B", z))
    nq = normalize_query(UcqPlus.of(q)).disjuncts[0]
    trans = [a for a in nq.atoms if a.kind == "t"]
    assert len(trans) == 3
    assert len(linking_variables(nq)) == 2


def test_normalize_query_eliminates_linking_then_resubdivides():
    q = CqPlus.of(ConceptAtom("A", x), TransAtom("r", x, y), TransAtom("r", y, z),
                  ConceptAtom("B", z))
    nq = normalize_query(UcqPlus.of(q)).disjuncts[0]
    assert y not in nq.variables
    assert len([a for a in nq.atoms if a.kind == "t"]) == 3


def test_normalize_query_preserves_matches_exhaustively():
    queries = [
        UcqPlus.of(CqPlus.of(ConceptAtom("A", x), TransAtom("r", x, z),
                             ConceptAtom("B", z))),
        UcqPlus.of(CqPlus.of(TransAtom("r", x, y), TransAtom("r", y, z))),
        UcqPlus.of(CqPlus.of(ConceptAtom("A", x), RoleAtom("r", x, y),
                             TransAtom("r", y, x))),
        UcqPlus.of(CqPlus.of(TransAtom("r", x, x))),
    ]
    for query in queries:
        nq = normalize_query(query)
        for size in (1, 2, 3):
            pairs = [(d, e) for d in range(size) for e in range(size)]
            for redges in _edge_sets(pairs):
                for a_ext in _subsets(range(size)):
                    interp = Interpretation.make(
                        size, {"A": set(a_ext), "B": set(a_ext)},
                        {"r": set(redges)})
                    assert satisfies(interp, query) == satisfies(interp, nq)


def _subsets(items):
    items = list(items)
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def _edge_sets(pairs):
    # keep the loop tractable: at most 2^6 edge sets per size
    if len(pairs) > 6:
        rng = random.Random(5)
        seen = {frozenset(rng.sample(pairs, rng.randint(0, len(pairs))))
                for _ in range(40)}
        yield from seen
    else:
        for r in range(len(pairs) + 1):
            yield from map(frozenset, itertools.combinations(pairs, r))


def test_fragments_single_atom():
    q = UcqPlus.of(CqPlus.of(ConceptAtom("A", x)))
    assert fragment_count(q) == 1


def test_fragments_two_edges():
    q = UcqPlus.of(CqPlus.of(RoleAtom("r", x, y), RoleAtom("r", y, z)))
    # {r(x,y)}, {r(y,z)} collapse to one canonical fragment; plus the pair
    frags = fragments(q)
    sizes = sorted(len(f.cq) for f in frags)
    assert sizes == [1, 2]


def test_fragments_union_over_disjuncts():
    q1 = CqPlus.of(ConceptAtom("A", x))
    q2 = CqPlus.of(ConceptAtom("A", x), ConceptAtom("B", x))
    both = fragments(UcqPlus.of(q1, q2))
    only2 = fragments(UcqPlus.of(q2))
    assert {f.canonical_id for f in both} == {f.canonical_id for f in only2} | \
        {f.canonical_id for f in fragments(UcqPlus.of(q1))}


def test_localizations_of_single_transitive_atom():
    q = CqPlus.of(TransAtom("r", x, y))
    locs = localizations(q)
    assert len(locs) == 2
    shapes = {tuple(sorted(a.kind for a in loc.atoms)) for loc in locs}
    assert ("eq",) in shapes
    assert ("r", "r") in shapes


def test_localizations_count_is_two_to_the_t():
    q = CqPlus.of(TransAtom("r", x, y), TransAtom("r", y, z))
    assert len(localizations(q)) == 4
    q0 = CqPlus.of(RoleAtom("r", x, y))
    assert localizations(q0) == (q0,)


def test_bounded_rewrite_shapes():
    q = UcqPlus.of(CqPlus.of(TransAtom("r", x, y)))
    rw = bounded_rewrite(q, 2)
    assert not rw.has_transitive_atoms()
    # x=y, r(x,y), and the 2-step path
    assert len(rw.disjuncts) == 3
    rw1 = bounded_rewrite(q, 1)
    assert len(rw1.disjuncts) == 2


def test_bounded_rewrite_coincides_on_short_path_interpretations():
    query = UcqPlus.of(
        CqPlus.of(ConceptAtom("A", x), TransAtom("r", x, y), ConceptAtom("B", y)))
    rw = bounded_rewrite(query, 3)
    rng = random.Random(9)
    for _ in range(400):
        n = rng.randint(1, 4)
        edges = set()
        # build edges keeping simple directed paths of length <= 3
        for _ in range(rng.randint(0, 5)):
            d, e = rng.randrange(n), rng.randrange(n)
            edges.add((d, e))
        if _longest_simple_path(n, edges) > 3:
            continue
        interp = Interpretation.make(
            n, {"A": {d for d in range(n) if rng.random() < 0.6},
                "B": {d for d in range(n) if rng.random() < 0.6}},
            {"r": edges})
        assert satisfies(interp, query) == satisfies(interp, rw)


def _longest_simple_path(n, edges):
    best = 0

    def walk(node, visited, length):
        nonlocal best
        best = max(best, length)
        for (d, e) in edges:
            if d == node and e not in visited:
                walk(e, visited | {e}, length + 1)

    for start in range(n):
        walk(start, {start}, 0)
    return best
