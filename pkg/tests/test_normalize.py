"""Normal forms, complementary names, stickiness, conservativity."""

import itertools
import random

import pytest

from fent.concepts import (
    And,
    AtLeast,
    AtMost,
    Atom,
    ConceptAssertion,
    ConceptInclusion,
    Exists,
    ForAll,
    KnowledgeBase,
    Not,
    Or,
    Role,
    complement_name,
)
from fent.interp import Interpretation, is_model, unary_type_of
from fent.normalize import (
    ATMOST,
    ATMOST_STAR,
    NAMES,
    NormalKB,
    expand_model,
    normalize,
)
from fent.parsing import parse_kb


def enumerate_interpretations(size, concept_names, role_names, names):
    """Every interpretation of the exact size over the given signature."""
    domain = list(range(size))
    concept_exts = itertools.product(
        *[[frozenset(c) for r in range(size + 1)
           for c in itertools.combinations(domain, r)]
          for _ in concept_names])
    pairs = [(d, e) for d in domain for e in domain]
    name_binding = {n: i for i, n in enumerate(sorted(names))}
    if len(names) > size:
        return
    for cexts in concept_exts:
        for redges in itertools.product(
                *[[frozenset(c) for r in range(len(pairs) + 1)
                   for c in itertools.combinations(pairs, r)]
                  for _ in role_names]):
            yield Interpretation.make(
                size,
                dict(zip(concept_names, map(set, cexts))),
                dict(zip(role_names, map(set, redges))),
                name_binding)


def small_interpretations(kb, max_size):
    for size in range(max(1, len(kb.individuals)), max_size + 1):
        yield from enumerate_interpretations(
            size, sorted(kb.concept_names), sorted(kb.role_names),
            kb.individuals)


def test_forall_becomes_atmost_zero_of_complement():
    kb = parse_kb("tbox:\nA <= only r B\nabox:\nA(a)\n")
    nkb = normalize(kb)
    shapes = {(s.kind, s.lhs, s.rhs, s.n, s.role) for s in nkb.shapes}
    # brute-force equi-entailment on interpretations of size <= 3:
    # the normalized KB must hold exactly on expansions of models
    for interp in small_interpretations(kb, 3):
        assert is_model(interp, kb) == is_model(expand_model(interp, nkb), nkb.kb)
    # and an atmost-0 shape over r with rhs ~B must be present
    assert any(k == ATMOST and n == 0 and role == "r" and rhs == (Atom("~B"),)
               for (k, lhs, rhs, n, role) in shapes)


def test_negation_becomes_bottom_shape():
    kb = parse_kb("tbox:\nA <= not B\nabox:\nA(a)\n")
    nkb = normalize(kb)
    # A <= ~B as a names shape
    assert any(s.kind == NAMES and s.lhs == (Atom("A"),) and s.rhs == (Atom("~B"),)
               for s in nkb.shapes)


def test_complementary_names_axiomatized_for_every_name():
    kb = parse_kb("tbox:\nA <= some r B\nabox:\nC(a)\n")
    nkb = normalize(kb)
    for name in ("A", "B", "C"):
        bar = Atom(complement_name(name))
        assert any(s.kind == NAMES and s.lhs == () and set(s.rhs) == {Atom(name), bar}
                   for s in nkb.shapes)
        assert any(s.kind == NAMES and set(s.lhs) == {Atom(name), bar} and s.rhs == ()
                   for s in nkb.shapes)


def test_stickiness_axioms():
    kb = parse_kb("tbox:\nA <= atmost 1 star(r) B\nabox:\nA(a)\n")
    nkb = normalize(kb, sticky=True)
    n = nkb.threshold
    assert n == 2
    br = next(name for name, d in nkb.definitions
              if isinstance(d, tuple) and d[0] == "sticky")
    br_bar = complement_name(br)
    shapes = list(nkb.shapes)
    assert any(s.kind == ATMOST and s.lhs == (Atom(br),) and s.rhs == (Atom(br_bar),)
               and s.n == 0 and s.role == "r" for s in shapes)
    assert any(s.kind == ATMOST_STAR and s.lhs == (Atom(br),) and s.rhs == (Atom("B"),)
               and s.n == n and s.role == "r" for s in shapes)
    assert any(s.kind == NAMES and s.lhs == (Atom("A"),) and s.rhs == (Atom(br),)
               for s in shapes)
    # complement pair for the sticky name
    assert any(s.kind == NAMES and s.lhs == () and
               set(s.rhs) == {Atom(br), Atom(br_bar)} for s in shapes)


def test_types_complete_after_normalize():
    kb = parse_kb("tbox:\nA <= some r B\nabox:\nA(a)\n")
    nkb = normalize(kb)
    interp = Interpretation.make(2, {"A": {0}, "B": {1}}, {"r": {(0, 1)}}, {"a": 0})
    expanded = expand_model(interp, nkb)
    for d in (0, 1):
        t = unary_type_of(expanded, nkb.kb, d)
        for name in nkb.kb.concept_names:
            if name.startswith("~"):
                continue
            assert (name in t) != (complement_name(name) in t)


def _random_concept(rng, names, roles, depth):
    if depth == 0 or rng.random() < 0.4:
        return Atom(rng.choice(names))
    kind = rng.randrange(5)
    if kind == 0:
        return Not(_random_concept(rng, names, roles, depth - 1))
    if kind == 1:
        return And((_random_concept(rng, names, roles, depth - 1),
                    _random_concept(rng, names, roles, depth - 1)))
    if kind == 2:
        return Or(_random_concept(rng, names, roles, depth - 1),
                  _random_concept(rng, names, roles, depth - 1))
    role = Role(rng.choice(roles))
    closed = rng.random() < 0.3
    if kind == 3:
        return Exists(role, closed, _random_concept(rng, names, roles, depth - 1))
    return ForAll(role, closed, _random_concept(rng, names, roles, depth - 1))


def random_kb(rng, with_counting=False):
    names = ["A", "B", "C"][:rng.randint(2, 3)]
    roles = ["r", "s"][:rng.randint(1, 2)]
    tbox = []
    for _ in range(rng.randint(1, 3)):
        lhs = _random_concept(rng, names, roles, 1)
        rhs = _random_concept(rng, names, roles, 2)
        if with_counting and rng.random() < 0.5:
            rhs = AtMost(rng.randint(1, 2), rng.choice(roles),
                         rng.random() < 0.5, Atom(rng.choice(names)))
        tbox.append(ConceptInclusion(lhs, rhs))
    abox = (ConceptAssertion(rng.choice(names), "a"),)
    return KnowledgeBase(tuple(tbox), abox)


def test_normalize_conservativity_random_kbs():
    """Original-signature models correspond exactly across normalization.

    The full 200-KB criterion runs in the acceptance suite on top of the
    finite oracle; this unit test walks the correspondence pointwise on
    exhaustively enumerated small interpretations.
    """
    rng = random.Random(20240811)
    checked = 0
    for i in range(40):
        kb = random_kb(rng, with_counting=(i % 3 == 0))
        max_size = 1 if len(kb.role_names) > 1 else 2
        nkb = normalize(kb, sticky=True)
        for interp in small_interpretations(kb, max_size):
            expanded = expand_model(interp, nkb)
            assert is_model(interp, kb) == is_model(expanded, nkb.kb), (
                f"kb #{i}: {[str(c) for c in kb.tbox]} on {interp.to_json()}")
            checked += 1
    assert checked > 2000


def test_restriction_of_normalized_model_is_model():
    # models of the normalized KB restrict to models of the original
    kb = parse_kb("tbox:\nA <= some r (B and not C)\nabox:\nA(a)\n")
    nkb = normalize(kb)
    for interp in small_interpretations(nkb.kb, 2):
        if is_model(interp, nkb.kb):
            assert is_model(interp, kb)


def test_threshold_frozen_under_stickiness():
    kb = parse_kb("tbox:\nA <= atmost 2 star(r) B\nabox:\nA(a)\n")
    nkb = normalize(kb, sticky=True)
    assert nkb.threshold == 3
    assert nkb.relevant == frozenset({"B"})
