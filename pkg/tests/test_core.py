import itertools
import random

import numpy as np
import pytest

from helpers import (
    coloring_partition,
    complete_graph,
    cycle_graph,
    dict_partition,
    edgeless,
    graph,
    naive_initial_colors,
    naive_ordered_iso,
    naive_refine,
    naive_stable_partitions,
    path_graph,
    random_structure,
    two_triangles,
)
from wlkit.core import (
    RelationalStructure,
    TupleColoring,
    Vocabulary,
    atomic_type,
    atomic_type_key,
    coloring_refines,
    colorings_equivalent,
    initial_coloring,
    is_equality_compatible,
    is_k_stable,
    is_shufflable,
    joint_distinguish,
    permute_structure,
    refine_step,
    refinement_round_bound,
    stabilize,
    structure_from_text,
    structure_to_text,
)
from wlkit.errors import FormatError


def random_coloring(rng, n, k, num):
    raw = [rng.randrange(num) for _ in range(n**k)]
    dense = {c: i for i, c in enumerate(sorted(set(raw)))}
    colors = np.array([dense[c] for c in raw], dtype=np.int64)
    return TupleColoring(k, n, colors, len(dense))


# ---------------------------------------------------------------------------
# atomic types


def test_triangle_edge_pair_type():
    k3 = complete_graph(3)
    t = atomic_type(k3, (0, 1))
    assert t.equality_pattern == (0, 1)
    assert t.membership[0] == frozenset({(0, 1), (1, 0)})


def test_constant_tuple_has_single_equality_block():
    s = random_structure(random.Random(0), 4)
    t = atomic_type(s, (2, 2, 2))
    assert t.equality_pattern == (0, 0, 0)


def test_atomic_type_out_of_range():
    with pytest.raises(ValueError):
        atomic_type(complete_graph(3), (0, 5))


def test_atomic_type_matches_bruteforce_iso():
    rng = random.Random(1)
    for _ in range(50):
        n = rng.randint(2, 5)
        k = rng.randint(1, 3)
        s = random_structure(rng, n)
        tuples = [
            tuple(rng.randrange(n) for _ in range(k)) for _ in range(12)
        ]
        for u, v in itertools.combinations(tuples, 2):
            expected = naive_ordered_iso(s, u, s, v)
            assert (atomic_type(s, u) == atomic_type(s, v)) == expected
            assert (atomic_type_key(s, u) == atomic_type_key(s, v)) == expected


# ---------------------------------------------------------------------------
# initial coloring


def test_complete_graph_initial_two_classes():
    chi = initial_coloring(complete_graph(3), 2)
    assert chi.num_colors == 2


def test_edgeless_initial_two_classes():
    chi = initial_coloring(edgeless(4), 2)
    assert chi.num_colors == 2


def test_initial_matches_naive_grouping():
    rng = random.Random(2)
    for _ in range(20):
        n = rng.randint(1, 5)
        k = rng.randint(1, 3)
        s = random_structure(rng, n)
        chi = initial_coloring(s, k)
        assert coloring_partition(chi) == dict_partition(naive_initial_colors(s, k))


# ---------------------------------------------------------------------------
# refinement step


def test_path_k1_uniform_splits_ends_from_middle():
    p4 = path_graph(4)
    uniform = TupleColoring(1, 4, np.zeros(4, dtype=np.int64), 1)
    refined = refine_step(uniform, p4)
    assert coloring_partition(refined) == frozenset(
        {frozenset({(0,), (3,)}), frozenset({(1,), (2,)})}
    )


def test_k1_refine_requires_structure():
    uniform = TupleColoring(1, 4, np.zeros(4, dtype=np.int64), 1)
    with pytest.raises(ValueError):
        refine_step(uniform)


def test_complete_graph_pairs_are_fixpoint():
    for n in (3, 4, 5):
        chi = initial_coloring(complete_graph(n), 2)
        assert colorings_equivalent(refine_step(chi), chi)


def test_refine_matches_naive_on_random_colorings():
    rng = random.Random(3)
    for _ in range(100):
        n = rng.randint(1, 5)
        k = rng.randint(1, 3)
        s = random_structure(rng, n)
        chi = random_coloring(rng, n, k, rng.randint(1, 4))
        colors = {
            tup: int(chi.colors[i])
            for i, tup in enumerate(itertools.product(range(n), repeat=k))
        }
        expected = dict_partition(naive_refine(colors, s, n, k))
        assert coloring_partition(refine_step(chi, s)) == expected


def test_refine_always_refines():
    rng = random.Random(4)
    for _ in range(100):
        n = rng.randint(1, 5)
        k = rng.randint(1, 3)
        s = random_structure(rng, n)
        chi = random_coloring(rng, n, k, rng.randint(1, 5))
        assert coloring_refines(refine_step(chi, s), chi)


# ---------------------------------------------------------------------------
# stabilization


def test_complete_graphs_stabilize_immediately():
    for n in (3, 4, 5):
        assert stabilize(complete_graph(n), 2).r_infinity == 0


def test_paths_one_dimensional_round_counts():
    assert stabilize(path_graph(4), 1).r_infinity == 1
    assert stabilize(path_graph(6), 1).r_infinity == 2


def test_full_run_matches_naive_round_by_round():
    rng = random.Random(5)
    for _ in range(15):
        n = rng.randint(1, 5)
        k = rng.randint(1, 3)
        s = random_structure(rng, n)
        trace = stabilize(s, k)
        expected = naive_stable_partitions(s, k)
        got = [coloring_partition(c) for c in trace.colorings]
        assert got == expected


def test_round_cap_flags_partial_trace():
    trace = stabilize(path_graph(6), 1, max_rounds=1)
    assert not trace.stabilized
    assert trace.r_infinity is None


def test_trace_is_monotone_and_counts_increase():
    trace = stabilize(path_graph(6), 2)
    for earlier, later in zip(trace.colorings, trace.colorings[1:]):
        assert coloring_refines(later, earlier)
        assert later.num_colors > earlier.num_colors


def test_round_bounds_hold_on_battery():
    rng = random.Random(6)
    structures = [path_graph(5), cycle_graph(6), complete_graph(4)]
    structures += [random_structure(rng, rng.randint(1, 5)) for _ in range(10)]
    for s in structures:
        for k in (1, 2, 3):
            trace = stabilize(s, k)
            assert trace.r_infinity <= max(s.universe_size**k - 1, 0)
            if k >= 2:
                assert trace.r_infinity <= refinement_round_bound(s.universe_size, k)


# ---------------------------------------------------------------------------
# joint distinguishing


def test_six_cycle_vs_triangles_one_dimensional_blind():
    assert joint_distinguish(cycle_graph(6), two_triangles(), 1).round is None


def test_six_cycle_vs_triangles_two_dimensional_round_one():
    result = joint_distinguish(cycle_graph(6), two_triangles(), 2)
    assert result.round == 1
    # the separating statistic: ordered non-adjacent distinct pairs by common
    # neighbour count, 12/6 on the cycle versus 18/0 on the triangles
    c6, cc3 = cycle_graph(6), two_triangles()

    def common_counts(g):
        adj = {v: set() for v in range(6)}
        for u, v in g.tuples[0]:
            adj[u].add(v)
        counts = {}
        for u in range(6):
            for v in range(6):
                if u != v and v not in adj[u]:
                    c = len(adj[u] & adj[v])
                    counts[c] = counts.get(c, 0) + 1
        return counts

    assert common_counts(c6) == {1: 12, 0: 6}
    assert common_counts(cc3) == {0: 18}


def test_isomorphic_copies_never_distinguished():
    rng = random.Random(7)
    for _ in range(10):
        n = rng.randint(2, 5)
        s = random_structure(rng, n)
        perm = list(range(n))
        rng.shuffle(perm)
        other = permute_structure(s, perm)
        for k in (1, 2, 3):
            assert joint_distinguish(s, other, k).round is None


def test_vocabulary_mismatch_rejected():
    a = complete_graph(3)
    b = RelationalStructure(Vocabulary((("F", 2),)), 3, (frozenset(),))
    with pytest.raises(ValueError):
        joint_distinguish(a, b, 2)


def test_different_sizes_distinguished_at_round_zero():
    assert joint_distinguish(complete_graph(3), complete_graph(4), 2).round == 0


# ---------------------------------------------------------------------------
# refinement order predicates


def test_refines_reflexive_and_discrete():
    chi = initial_coloring(path_graph(4), 2)
    assert coloring_refines(chi, chi)
    assert colorings_equivalent(chi, chi)
    n = 4
    discrete = TupleColoring(2, n, np.arange(n * n, dtype=np.int64), n * n)
    assert coloring_refines(discrete, chi)


def test_stability_checkers():
    for s in (path_graph(5), cycle_graph(5)):
        trace = stabilize(s, 2)
        assert is_k_stable(trace.final)
        assert not is_k_stable(trace.colorings[0]) or trace.r_infinity == 0


def test_initial_colorings_shufflable_and_equality_compatible():
    # exhaustive over all graphs on four labelled vertices
    pairs = list(itertools.combinations(range(4), 2))
    for mask in range(2 ** len(pairs)):
        edges = [e for i, e in enumerate(pairs) if mask >> i & 1]
        chi = initial_coloring(graph(4, edges), 2)
        assert is_shufflable(chi)
        assert is_equality_compatible(chi)


def test_splitting_one_pair_breaks_shufflability():
    # separate the ordered pair (0, 1) of the triangle from its class
    chi = initial_coloring(complete_graph(3), 2)
    colors = chi.colors.copy()
    idx = 0 * 3 + 1
    colors[idx] = chi.num_colors
    split = TupleColoring(2, 3, colors, chi.num_colors + 1)
    assert not is_shufflable(split)


# ---------------------------------------------------------------------------
# determinism and invariance


def test_repeated_runs_bit_identical():
    s = random_structure(random.Random(8), 5)
    t1 = stabilize(s, 2)
    t2 = stabilize(s, 2)
    assert len(t1.colorings) == len(t2.colorings)
    for c1, c2 in zip(t1.colorings, t2.colorings):
        assert np.array_equal(c1.colors, c2.colors)


def test_isomorphism_invariance_of_class_histograms():
    rng = random.Random(9)
    for _ in range(10):
        n = rng.randint(2, 5)
        s = random_structure(rng, n)
        perm = list(range(n))
        rng.shuffle(perm)
        other = permute_structure(s, perm)
        ta, tb = stabilize(s, 2), stabilize(other, 2)
        assert len(ta.colorings) == len(tb.colorings)
        for ca, cb in zip(ta.colorings, tb.colorings):
            assert sorted(ca.class_sizes()) == sorted(cb.class_sizes())


# ---------------------------------------------------------------------------
# text format


def test_text_round_trip_is_canonical():
    s = random_structure(random.Random(10), 4)
    text = structure_to_text(s, "sample")
    name, parsed = structure_from_text(text)
    assert name == "sample"
    assert parsed == s
    assert structure_to_text(parsed, "sample") == text


def test_text_comments_and_blanks_ignored():
    text = structure_to_text(path_graph(3), "p3")
    noisy = "# a comment\n\n" + text.replace("universe 3", "universe 3  # size")
    _, parsed = structure_from_text(noisy)
    assert parsed == path_graph(3)


def test_text_errors():
    with pytest.raises(FormatError):
        structure_from_text("universe 3\nend\n")
    with pytest.raises(FormatError):
        structure_from_text("structure s\nuniverse x\nend\n")
    with pytest.raises(FormatError):
        structure_from_text("structure s\nuniverse 2\nrelation E 2\n0 5\nend\n")
