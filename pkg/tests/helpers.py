"""Shared builders and independent brute-force oracles for the test suite.

The oracles here deliberately re-derive everything from first definitions
(dict-based, no arrays, no shared code paths with the library internals), so
they can vouch for the optimized implementations.
"""

from __future__ import annotations

import itertools
import random
from collections import defaultdict

from wlkit.core import RelationalStructure, TupleColoring, Vocabulary

Partition = frozenset[frozenset[tuple[int, ...]]]


# ---------------------------------------------------------------------------
# builders


def graph(n: int, edges) -> RelationalStructure:
    sym = frozenset((u, v) for u, v in edges) | frozenset((v, u) for u, v in edges)
    return RelationalStructure(Vocabulary((("E", 2),)), n, (sym,))


def path_graph(n: int) -> RelationalStructure:
    return graph(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> RelationalStructure:
    return graph(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> RelationalStructure:
    return graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def two_triangles() -> RelationalStructure:
    return graph(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])


def edgeless(n: int) -> RelationalStructure:
    return RelationalStructure(Vocabulary((("E", 2),)), n, (frozenset(),))


def random_structure(rng: random.Random, n: int, max_arity: int = 3) -> RelationalStructure:
    n_rels = rng.randint(1, 3)
    rels, tuples = [], []
    for i in range(n_rels):
        arity = rng.randint(1, max_arity)
        rels.append((f"R{i}", arity))
        density = rng.uniform(0.1, 0.5)
        chosen = frozenset(
            t for t in itertools.product(range(n), repeat=arity) if rng.random() < density
        )
        tuples.append(chosen)
    return RelationalStructure(Vocabulary(tuple(rels)), n, tuple(tuples))


def random_xor_system(rng: random.Random, n_vars: int, n_constraints: int, max_arity: int = 3):
    from wlkit.xorcsp import XorSystem

    names = tuple(f"x{i}" for i in range(n_vars))
    constraints = []
    for _ in range(n_constraints):
        size = rng.randint(1, min(max_arity, n_vars))
        support = rng.sample(range(n_vars), size)
        constraints.append((support, rng.randint(0, 1)))
    return XorSystem.make(names, constraints)


# ---------------------------------------------------------------------------
# partitions


def coloring_partition(chi: TupleColoring) -> Partition:
    groups = defaultdict(set)
    n, k = chi.universe_size, chi.k
    for idx, tup in enumerate(itertools.product(range(n), repeat=k)):
        groups[int(chi.colors[idx])].add(tup)
    return frozenset(frozenset(g) for g in groups.values())


def dict_partition(colors: dict[tuple[int, ...], object]) -> Partition:
    groups = defaultdict(set)
    for tup, c in colors.items():
        groups[c].add(tup)
    return frozenset(frozenset(g) for g in groups.values())


# ---------------------------------------------------------------------------
# brute-force oracles


def naive_ordered_iso(
    a: RelationalStructure, u: tuple[int, ...], b: RelationalStructure, v: tuple[int, ...]
) -> bool:
    """Is u_i -> v_i an isomorphism of the induced ordered substructures?"""
    if len(u) != len(v):
        return False
    mapping: dict[int, int] = {}
    for x, y in zip(u, v):
        if mapping.get(x, y) != y:
            return False
        mapping[x] = y
    if len(set(mapping.values())) != len(mapping):
        return False
    for rel_a, rel_b, (_, arity) in zip(a.tuples, b.tuples, a.vocabulary.relations):
        for t in itertools.product(sorted(mapping), repeat=arity):
            if (t in rel_a) != (tuple(mapping[x] for x in t) in rel_b):
                return False
    return True


def naive_pair_profile(a: RelationalStructure, v: int, w: int) -> tuple:
    """Everything a single refinement step may know about the ordered pair."""
    profile: list[object] = [v == w]
    for (_, arity), rel in zip(a.vocabulary.relations, a.tuples):
        for p in itertools.product((v, w), repeat=arity):
            profile.append(p in rel)
    return tuple(profile)


def naive_initial_colors(a: RelationalStructure, k: int) -> dict[tuple[int, ...], object]:
    """Group k-tuples by brute-force ordered-substructure isomorphism."""
    reps: list[tuple[int, ...]] = []
    colors: dict[tuple[int, ...], object] = {}
    for tup in itertools.product(range(a.universe_size), repeat=k):
        for i, rep in enumerate(reps):
            if naive_ordered_iso(a, tup, a, rep):
                colors[tup] = i
                break
        else:
            colors[tup] = len(reps)
            reps.append(tup)
    return colors


def naive_refine(
    colors: dict[tuple[int, ...], object],
    a: RelationalStructure | None,
    n: int,
    k: int,
) -> dict[tuple[int, ...], object]:
    """One refinement round, straight from the definition.

    k >= 2: new color = (old color, multiset over w of the vector of colors
    of the k single-entry substitutions).  k = 1: the substitution vector is
    enriched with the profile of the ordered pair (v, w), which is the
    classic neighbourhood refinement in disguise.
    """
    sig: dict[tuple[int, ...], object] = {}
    if k == 1:
        assert a is not None
        for v in range(n):
            items = sorted(
                (colors[(w,)], naive_pair_profile(a, v, w)) for w in range(n)
            )
            sig[(v,)] = (colors[(v,)], tuple(items))
    else:
        for tup in itertools.product(range(n), repeat=k):
            rows = sorted(
                tuple(colors[tup[:i] + (w,) + tup[i + 1 :]] for i in range(k))
                for w in range(n)
            )
            sig[tup] = (colors[tup], tuple(rows))
    # renaming colors never changes later rounds (the rule only ever compares
    # colors for equality), so keep the values small
    dense = {s: i for i, s in enumerate(sorted(set(sig.values()), key=repr))}
    return {tup: dense[s] for tup, s in sig.items()}


def naive_stable_partitions(
    a: RelationalStructure, k: int, max_rounds: int | None = None
) -> list[Partition]:
    """All per-round partitions of a full naive run (initial included)."""
    n = a.universe_size
    colors: dict[tuple[int, ...], object] = naive_initial_colors(a, k)
    parts = [dict_partition(colors)]
    rounds = max_rounds if max_rounds is not None else n**k
    for _ in range(rounds):
        colors = naive_refine(colors, a, n, k)
        part = dict_partition(colors)
        if part == parts[-1]:
            break
        parts.append(part)
    return parts


def naive_minimax_rounds(system, beta0: dict[int, int], k: int, r_max: int):
    """Least r <= r_max such that Falsifier forces a violation, by plain
    exhaustive game-tree search; None if there is none."""
    from wlkit.xorcsp import violates

    def violated(assignment):
        return any(violates(assignment, c) for c in system.constraints)

    def wins(assignment: dict[int, int], depth: int) -> bool:
        if violated(assignment):
            return True
        if depth == 0:
            return False
        dom = sorted(assignment)
        for x in range(system.num_variables):
            if x in assignment:
                continue
            for size in range(min(len(dom), k - 1) + 1):
                for keep in itertools.combinations(dom, size):
                    if all(
                        wins({**{v: assignment[v] for v in keep}, x: b}, depth - 1)
                        for b in (0, 1)
                    ):
                        return True
        return False

    for r in range(r_max + 1):
        if wins(dict(beta0), r):
            return r
    return None
