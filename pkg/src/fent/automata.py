"""Büchi tree automata with oracle step relations and fixpoint emptiness.

The step relation is a callback deciding whether a state can be the root
of a one-node partial run whose children carry states from a given set.
Emptiness iterates the greatest fixpoint of H(X) = step*(X ∩ F) from the
full state set and tests intersection with the initial states; step* is
the least fixpoint of G(Y) = Y ∪ step(Y), the states that root finite
partial runs with leaves in the argument set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Hashable

State = Hashable


class OracleAutomaton:
    """States with an oracle-backed step relation.

    The step callback receives the candidate child-state set as a tuple
    sorted by internal state index (canonical) plus the state; results are
    memoized per automaton, so repeated emptiness runs issue no new calls.
    """

    def __init__(self, states, initial, accepting,
                 step: Callable[[tuple, State], bool]):
        self.states = tuple(states)
        self.initial = frozenset(initial)
        self.accepting = frozenset(accepting)
        if not self.initial <= set(self.states) or \
                not self.accepting <= set(self.states):
            raise ValueError("initial and accepting must be subsets of states")
        self._step = step
        self._order = {q: i for i, q in enumerate(self.states)}
        self._memo: dict[tuple[frozenset, State], bool] = {}
        self.oracle_calls = 0
        self.memo_hits = 0

    def canonical(self, pset) -> tuple:
        return tuple(sorted(pset, key=self._order.__getitem__))

    def step(self, pset: frozenset, q: State) -> bool:
        key = (frozenset(pset), q)
        if key in self._memo:
            self.memo_hits += 1
            return self._memo[key]
        self.oracle_calls += 1
        result = bool(self._step(self.canonical(key[0]), q))
        self._memo[key] = result
        return result


@dataclass(frozen=True)
class Transition:
    state: State
    label: Hashable
    children: tuple[tuple[Hashable, State], ...]  # (edge label, child state)


@dataclass
class FiniteAutomaton:
    """Explicit alphabets and transition list; compiles to an oracle."""

    node_alphabet: tuple
    edge_alphabet: tuple
    states: tuple
    initial: frozenset
    accepting: frozenset
    transitions: tuple[Transition, ...]

    def compile(self) -> OracleAutomaton:
        by_state: dict[State, list[Transition]] = {}
        for t in self.transitions:
            by_state.setdefault(t.state, []).append(t)

        def step(pset: tuple, q: State) -> bool:
            allowed = set(pset)
            return any(all(child in allowed for _, child in t.children)
                       for t in by_state.get(q, ()))

        return OracleAutomaton(self.states, self.initial, self.accepting, step)


@dataclass
class EmptinessTrace:
    rounds: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({"rounds": self.rounds}, sort_keys=True)


def step_closure(automaton: OracleAutomaton, pset,
                 trace: EmptinessTrace | None = None) -> frozenset:
    """Least fixpoint of G(Y) = Y | step(Y): roots of finite partial runs
    with leaves in pset."""
    closed = set(pset)
    if not closed <= set(automaton.states):
        raise ValueError("pset must be a subset of the states")
    changed = True
    decided = []
    while changed:
        changed = False
        frontier = frozenset(closed)
        for q in automaton.states:
            if q in closed:
                continue
            if automaton.step(frontier, q):
                closed.add(q)
                changed = True
                decided.append([len(frontier), automaton._order[q]])
    if trace is not None:
        trace.rounds.append({"closure_decided": decided})
    return frozenset(closed)


def _progress_closure(automaton: OracleAutomaton, base: frozenset,
                      trace: EmptinessTrace | None = None) -> frozenset:
    """States with a decomposition into base-or-derived states.

    Unlike step_closure, base states are only leaf material, not members:
    a state (accepting or not) must itself admit a step.  This is what
    makes the Büchi iteration sound; with the reflexive closure an
    accepting state with no decomposition would self-justify.
    """
    derived: set = set()
    changed = True
    decided = []
    while changed:
        changed = False
        avail = frozenset(base | derived)
        for q in automaton.states:
            if q in derived:
                continue
            if automaton.step(avail, q):
                derived.add(q)
                changed = True
                decided.append(automaton._order[q])
    if trace is not None:
        trace.rounds.append({"progress_decided": decided})
    return frozenset(derived)


def live_states(automaton: OracleAutomaton,
                trace: EmptinessTrace | None = None) -> frozenset:
    """Greatest fixpoint: states rooting runs whose every infinite branch
    visits accepting states infinitely often (finite branches end at
    states with an empty decomposition)."""
    current = frozenset(automaton.states)
    while True:
        if trace is not None:
            trace.rounds.append({"X_size": len(current)})
        nxt = _progress_closure(automaton, current & automaton.accepting, trace)
        if nxt == current:
            return current
        current = nxt


def emptiness(automaton: OracleAutomaton,
              trace: EmptinessTrace | None = None) -> bool:
    """True iff the automaton accepts some tree."""
    return bool(automaton.initial & live_states(automaton, trace))


@dataclass(frozen=True)
class RegularWitness:
    """Finite cyclic description of an accepted tree: one chosen child
    multiset per reachable live state."""

    root: State
    children: tuple[tuple[State, tuple[State, ...]], ...]

    def to_json(self) -> str:
        return json.dumps({
            "root": repr(self.root),
            "children": {repr(q): [repr(c) for c in cs]
                         for q, cs in self.children},
        }, sort_keys=True)


def regular_witness(automaton: OracleAutomaton) -> RegularWitness | None:
    live = live_states(automaton)
    roots = [q for q in automaton.states
             if q in automaton.initial and q in live]
    if not roots:
        return None
    root = roots[0]
    chosen: dict[State, tuple[State, ...]] = {}
    queue = [root]
    while queue:
        q = queue.pop()
        if q in chosen:
            continue
        support = [p for p in automaton.canonical(live)]
        # greedily shrink the support set to a minimal choice
        kept = list(support)
        for p in support:
            trial = [s for s in kept if s != p]
            if automaton.step(frozenset(trial), q):
                kept = trial
        chosen[q] = tuple(kept)
        queue.extend(p for p in kept if p not in chosen)
    return RegularWitness(root, tuple(sorted(chosen.items(),
                                             key=lambda kv: repr(kv[0]))))
