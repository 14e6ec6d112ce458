"""The bounded counter-model search (ground-truth oracle)."""

import time

from fent.bruteforce import (
    CounterModel,
    NoCounterModelUpTo,
    decide_bruteforce,
    iterate_counter_models,
)
from fent.interp import is_model, realizes_only, unary_type_of
from fent.normalize import normalize
from fent.parsing import parse_kb, parse_query
from fent.queries import UcqPlus, satisfies


def _q(text, individuals=frozenset()):
    return parse_query(text, individuals)


def test_no_axiom_forces_nothing():
    kb = parse_kb("abox:\nA(a)\n")
    verdict = decide_bruteforce(kb, _q("q: B(x)"), n_max=1)
    assert isinstance(verdict, CounterModel)
    interp = verdict.interpretation
    assert interp.size == 1
    assert 0 in interp.concept("A")
    assert not interp.concept("B")


def test_finite_controllability_instance_exhausts():
    kb = parse_kb("tbox:\nA <= some r A\nabox:\nA(a)\n")
    query = _q("q: A(x), r(x,y), rstar(y,x)")
    start = time.monotonic()
    verdict = decide_bruteforce(kb, query, n_max=6)
    assert verdict == NoCounterModelUpTo(6)
    assert time.monotonic() - start < 30


def test_inconsistent_kb_has_no_counter_models():
    kb = parse_kb("tbox:\ntop <= bottom\nabox:\nA(a)\n")
    for n in (1, 2, 3):
        assert decide_bruteforce(kb, _q("q: B(x)"), n_max=n) == NoCounterModelUpTo(n)


def test_counter_model_is_verified_model():
    kb = parse_kb("tbox:\nA <= some r B\nB <= C or D\nabox:\nA(a)\n")
    nkb = normalize(kb)
    query = _q("q: D(x)")
    verdict = decide_bruteforce(nkb, query, n_max=4)
    assert isinstance(verdict, CounterModel)
    interp = verdict.interpretation
    assert is_model(interp, nkb.kb)
    assert not satisfies(interp, query)


def test_entailed_instance_found_entailed():
    # every model must place a B next to the individual
    kb = parse_kb("tbox:\nA <= some r B\nabox:\nA(a)\n")
    assert decide_bruteforce(kb, _q("q: B(x)"), n_max=4) == NoCounterModelUpTo(4)
    # while A alone is satisfiable without C
    assert isinstance(decide_bruteforce(kb, _q("q: C(x)"), n_max=4), CounterModel)


def test_anti_monotone_in_bound():
    kb = parse_kb("tbox:\nA <= some r A\nabox:\nA(a)\n")
    query = _q("q: A(x), r(x,y), rstar(y,x)")
    for n in (1, 2, 4):
        assert decide_bruteforce(kb, query, n_max=n) == NoCounterModelUpTo(n)


def test_theta_restriction_filters_models():
    kb = parse_kb("tbox:\nA <= B or C\nabox:\nA(a)\n")
    nkb = normalize(kb)
    # only allow types containing C: counter-models for "B(x)" must use C
    theta = frozenset(
        t for t in _all_types(nkb) if "C" in t)
    verdict = decide_bruteforce(nkb, _q("q: B(x)"), theta=theta, n_max=2)
    assert isinstance(verdict, CounterModel)
    assert realizes_only(verdict.interpretation, nkb.kb, theta)


def _all_types(nkb):
    from fent.interp import all_types
    return all_types(nkb.kb)


def test_iterate_yields_distinct_models():
    kb = parse_kb("tbox:\nA <= some r B\nabox:\nA(a)\n")
    models = []
    for interp in iterate_counter_models(kb, UcqPlus.of(), n_max=3):
        models.append(interp)
        if len(models) >= 5:
            break
    assert len(models) == 5
    assert len(set(models)) == 5


def test_closed_abox_assertion_needs_path():
    kb = parse_kb("tbox:\nB <= bottom\nabox:\nrstar(a,b)\nA(b)\n")
    verdict = decide_bruteforce(kb, _q("q: B(x)"), n_max=3)
    assert isinstance(verdict, CounterModel)
    interp = verdict.interpretation
    a, b = interp.element_of("a"), interp.element_of("b")
    from fent.interp import reachable
    from fent.concepts import Role
    assert b in reachable(interp, Role("r"))[a]


def test_counting_constraints_respected():
    kb = parse_kb("tbox:\nA <= atleast 2 r B\nA <= atmost 2 r B\nabox:\nA(a)\n")
    verdict = decide_bruteforce(kb, _q("q: C(x)"), n_max=4)
    assert isinstance(verdict, CounterModel)
    interp = verdict.interpretation
    a = interp.element_of("a")
    succ = [e for (d, e) in interp.role("r") if d == a and e in interp.concept("B")]
    assert len(succ) == 2


def test_inverse_obligations():
    kb = parse_kb("tbox:\nA <= some inv(r) B\nabox:\nA(a)\n")
    verdict = decide_bruteforce(kb, _q("q: C(x)"), n_max=3)
    assert isinstance(verdict, CounterModel)
    interp = verdict.interpretation
    a = interp.element_of("a")
    preds = [d for (d, e) in interp.role("r") if e == a]
    assert any(d in interp.concept("B") for d in preds)


def test_atmost_star_counter_model():
    # with at most 1 reachable B, two at-least demands must share a witness
    kb = parse_kb(
        "tbox:\n"
        "A <= atmost 1 star(r) B\n"
        "A <= some star(r) B\n"
        "abox:\nA(a)\n")
    verdict = decide_bruteforce(kb, _q("q: C(x)"), n_max=4)
    assert isinstance(verdict, CounterModel)
    interp = verdict.interpretation
    from fent.interp import reachable
    from fent.concepts import Role
    a = interp.element_of("a")
    hits = [e for e in reachable(interp, Role("r"))[a] if e in interp.concept("B")]
    assert len(hits) == 1
