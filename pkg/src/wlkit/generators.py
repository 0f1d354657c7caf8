"""Instance generators: random right-regular bipartite graphs, expansion
checking, layered expanders, the unsatisfiable layered XOR recipe,
bounded-intersection set families and chains of stable colorings.

Randomness comes from numpy's Philox counter-based bit generator.  The only
consumer is a partial Fisher-Yates selection (documented below), so a seed
pins every emitted instance bit-for-bit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import TupleColoring, flat_index
from .errors import BudgetExceededError
from .xorcsp import XorConstraint, XorSystem, attractor

__all__ = [
    "BipartiteGraph",
    "LayeredGraph",
    "ExpansionVerdict",
    "SetFamily",
    "FamilyColoring",
    "HardInstance",
    "random_right_regular",
    "neighbor_sets",
    "check_expansion",
    "build_layered",
    "constraints_from_graph",
    "layered_ground_system",
    "hard_instance",
    "dummy_pad",
    "polynomial_set_family",
    "greedy_set_family",
    "family_coloring",
    "stable_chain",
]


# ---------------------------------------------------------------------------
# graphs


@dataclass(frozen=True)
class BipartiteGraph:
    """Bipartite graph (V, W, E) stored as sorted neighbor lists per w in W."""

    left_size: int
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for nb in self.adjacency:
            if list(nb) != sorted(set(nb)):
                raise ValueError("neighbor lists must be sorted and duplicate-free")
            if nb and (nb[0] < 0 or nb[-1] >= self.left_size):
                raise ValueError("neighbor out of range")

    @property
    def right_size(self) -> int:
        return len(self.adjacency)

    def right_degree(self, w: int) -> int:
        return len(self.adjacency[w])


@dataclass(frozen=True)
class LayeredGraph:
    """ell stacked bipartite layers of width m.

    Left vertices come in layers V_0 .. V_ell (vertex (i, j) has index
    i*m + j); right vertices in layers W_1 .. W_ell (vertex (i, j) has index
    (i-1)*m + j).  Every W_i sends its edges into V_{i-1} and V_i, and the
    V_i side of layer i is a perfect matching w_{i,j} ~ v_{i,j}.
    """

    ell: int
    m: int
    adjacency: tuple[tuple[int, ...], ...]  # per W vertex, sorted V indices

    def __post_init__(self):
        if self.ell < 1 or self.m < 1:
            raise ValueError("need ell >= 1 and m >= 1")
        if len(self.adjacency) != self.ell * self.m:
            raise ValueError("wrong number of right vertices")
        self.validate()

    @property
    def left_size(self) -> int:
        return (self.ell + 1) * self.m

    @property
    def right_size(self) -> int:
        return self.ell * self.m

    @property
    def max_degree(self) -> int:
        return max(len(nb) for nb in self.adjacency)

    def w_layer(self, w: int) -> int:
        return w // self.m + 1

    def v_layer(self, v: int) -> int:
        return v // self.m

    def validate(self) -> None:
        m = self.m
        for w, nb in enumerate(self.adjacency):
            if list(nb) != sorted(set(nb)):
                raise ValueError("neighbor lists must be sorted and duplicate-free")
            i = self.w_layer(w)
            lo, hi = (i - 1) * m, (i + 1) * m
            if nb and (nb[0] < lo or nb[-1] >= hi):
                raise ValueError(f"w{w} has neighbors outside layers {i-1},{i}")
            matched = [v for v in nb if v // m == i]
            if matched != [i * m + (w % m)]:
                raise ValueError(f"layer {i} side of w{w} is not the matching edge")
        # the matching is a bijection by construction (one partner per index)

    def variable_names(self) -> tuple[str, ...]:
        return tuple(
            f"v{i}_{j}" for i in range(self.ell + 1) for j in range(self.m)
        )


def _seed_seq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def random_right_regular(n: int, r: int, seed) -> BipartiteGraph:
    """Random bipartite graph on n + n vertices, each right vertex adjacent
    to r distinct uniformly chosen left vertices.

    Sampling: a Philox-seeded partial Fisher-Yates shuffle per right vertex
    (swap position t with a uniform position in [t, n) for t < r, take the
    first r entries).  Identical seeds give identical graphs.
    """
    if r > n:
        raise ValueError("right-degree r cannot exceed n")
    if n < 0 or r < 0:
        raise ValueError("n and r must be nonnegative")
    rng = np.random.Generator(np.random.Philox(_seed_seq(seed)))
    adjacency = []
    for _ in range(n):
        pool = list(range(n))
        for t in range(r):
            u = int(rng.integers(t, n))
            pool[t], pool[u] = pool[u], pool[t]
        adjacency.append(tuple(sorted(pool[:r])))
    return BipartiteGraph(n, tuple(adjacency))


def neighbor_sets(
    graph: BipartiteGraph | LayeredGraph, ys: Iterable[int]
) -> tuple[set[int], set[int]]:
    """(N(Y), N*(Y)): all left neighbors of Y, and those adjacent to exactly
    one member of Y."""
    counts: dict[int, int] = {}
    for w in ys:
        for v in graph.adjacency[w]:
            counts[v] = counts.get(v, 0) + 1
    full = set(counts)
    single = {v for v, c in counts.items() if c == 1}
    return full, single


@dataclass(frozen=True)
class ExpansionVerdict:
    """Outcome of an expansion check over right-subsets up to the size cap."""

    alpha: Fraction
    gamma: Fraction
    cap: int  # largest subset size covered by the guarantee
    mode: str  # "exhaustive" or "sampled"
    plain_holds: bool
    single_holds: bool
    vacuous: bool
    sets_checked: int
    plain_witness: tuple[int, ...] | None
    single_witness: tuple[int, ...] | None

    @property
    def definition_applies(self) -> bool:
        return self.alpha > 1 and 0 < self.gamma < 1

    def as_dict(self) -> dict:
        return {
            "alpha": str(self.alpha),
            "gamma": str(self.gamma),
            "cap": self.cap,
            "mode": self.mode,
            "plain_holds": self.plain_holds,
            "single_holds": self.single_holds,
            "vacuous": self.vacuous,
            "sets_checked": self.sets_checked,
            "plain_witness": self.plain_witness,
            "single_witness": self.single_witness,
            "definition_applies": self.definition_applies,
        }


def _neighbor_masks(graph: BipartiteGraph | LayeredGraph) -> list[int]:
    masks = []
    for nb in graph.adjacency:
        m = 0
        for v in nb:
            m |= 1 << v
        masks.append(m)
    return masks


def check_expansion(
    graph: BipartiteGraph | LayeredGraph,
    alpha: Fraction | int,
    gamma: Fraction | int,
    mode: str = "exhaustive",
    budget: int = 10**7,
    seed=0,
    samples: int = 2000,
) -> ExpansionVerdict:
    """Check |N(Y)| >= alpha|Y| and |N*(Y)| >= alpha|Y| for nonempty right
    subsets Y up to the relevant size cap.

    The cap is floor(gamma * |W|) for a plain bipartite graph and
    floor(gamma * m) for a layered graph (the guarantee there is relative to
    one layer's width).  A cap of 0 makes both properties vacuously true and
    the verdict is flagged as such.  Comparisons are exact (Fractions).
    """
    if isinstance(alpha, float) or isinstance(gamma, float):
        raise TypeError("alpha and gamma must be exact (int or Fraction)")
    alpha, gamma = Fraction(alpha), Fraction(gamma)
    width = graph.m if isinstance(graph, LayeredGraph) else graph.right_size
    cap = int(gamma * width)
    nw = graph.right_size
    cap = min(cap, nw)
    if cap == 0:
        return ExpansionVerdict(alpha, gamma, 0, mode, True, True, True, 0, None, None)
    masks = _neighbor_masks(graph)

    def subsets():
        if mode == "exhaustive":
            total = sum(comb(nw, s) for s in range(1, cap + 1))
            if total > budget:
                raise BudgetExceededError(
                    f"{total} subsets exceed the budget {budget}"
                )
            for s in range(1, cap + 1):
                yield from itertools.combinations(range(nw), s)
        elif mode == "sampled":
            rng = np.random.Generator(np.random.Philox(_seed_seq(seed)))
            for _ in range(samples):
                s = int(rng.integers(1, cap + 1))
                yield tuple(sorted(int(x) for x in rng.choice(nw, size=s, replace=False)))
        else:
            raise ValueError(f"unknown mode {mode!r}")

    plain_holds = single_holds = True
    plain_witness = single_witness = None
    checked = 0
    for ys in subsets():
        checked += 1
        hit_once = hit_multi = 0
        for w in ys:
            hit_multi |= hit_once & masks[w]
            hit_once |= masks[w]
        n_full = hit_once.bit_count()
        n_single = (hit_once & ~hit_multi).bit_count()
        need = alpha * len(ys)
        if plain_holds and n_full < need:
            plain_holds, plain_witness = False, tuple(ys)
        if single_holds and n_single < need:
            single_holds, single_witness = False, tuple(ys)
        if not plain_holds and not single_holds:
            break
    return ExpansionVerdict(
        alpha, gamma, cap, mode, plain_holds, single_holds, False, checked,
        plain_witness, single_witness,
    )


def build_layered(base: BipartiteGraph, ell: int) -> LayeredGraph:
    """Stack `ell` copies of a square bipartite graph: W_i keeps the base
    edges into V_{i-1} and adds the matching edge into V_i.  Every right
    vertex gains degree base_right_degree + 1."""
    m = base.left_size
    if base.right_size != m:
        raise ValueError("base graph must be square")
    adjacency = []
    for i in range(1, ell + 1):
        for j in range(m):
            down = [(i - 1) * m + v for v in base.adjacency[j]]
            adjacency.append(tuple(sorted(down + [i * m + j])))
    return LayeredGraph(ell, m, tuple(adjacency))


def constraints_from_graph(graph: BipartiteGraph | LayeredGraph) -> XorSystem:
    """One even-parity constraint per right vertex, over its neighborhood."""
    if isinstance(graph, LayeredGraph):
        names = graph.variable_names()
    else:
        names = tuple(f"v{j}" for j in range(graph.left_size))
    return XorSystem.make(names, [(nb, 0) for nb in graph.adjacency])


def layered_ground_system(layered: LayeredGraph) -> XorSystem:
    """Layer constraints plus the zero anchors on the bottom layer V_0."""
    base = constraints_from_graph(layered)
    anchors = [XorConstraint((v,), 0) for v in range(layered.m)]
    return base.with_constraints(anchors)


@dataclass(frozen=True)
class HardInstance:
    """An unsatisfiable layered system with its generation provenance."""

    system: XorSystem
    x_ell: int  # variable index of the 1-anchored top vertex
    graph: LayeredGraph
    provenance: dict


def hard_instance(
    d: int,
    ell: int,
    m: int,
    seed,
    alpha: Fraction | int | None = None,
    gamma: Fraction | int | None = None,
    max_attempts: int = 20,
    expansion_budget: int = 10**6,
    samples: int = 2000,
) -> HardInstance:
    """The layered recipe: layer constraints, zero anchors on V_0, and a
    single one-anchor on the first vertex of V_ell.  Unsatisfiable by the
    telescoping rank argument (every layer forces the next to zero).

    d is the right-degree of the stacked expander, so constraints have
    arity at most d + 1 and m >= 4d is required.  Expanders are redrawn (new
    Philox substream per attempt) until the single-neighbor expansion check
    passes at (alpha, gamma); the verdict, attempt count and parameters are
    recorded in provenance, and failure to verify within the attempt cap
    still emits the instance flagged "unverified".  Checks run exhaustively
    when the subset space fits `expansion_budget`, sampled otherwise.
    """
    if m < 4 * d:
        raise ValueError("need m >= 4d")
    alpha = Fraction(d, 4) - 1 if alpha is None else Fraction(alpha)
    gamma = Fraction(1, 20 * d) if gamma is None else Fraction(gamma)
    seeds = _seed_seq(seed).spawn(max_attempts)
    cap = int(gamma * m)
    exhaustive_cost = sum(comb(ell * m, s) for s in range(1, cap + 1))
    mode = "exhaustive" if exhaustive_cost <= expansion_budget else "sampled"
    graph = verdict = None
    attempts = 0
    for attempt in range(max_attempts):
        attempts += 1
        base = random_right_regular(m, d, seeds[attempt])
        candidate = build_layered(base, ell)
        v = check_expansion(
            candidate, alpha, gamma, mode=mode, budget=expansion_budget,
            seed=seeds[attempt], samples=samples,
        )
        graph, verdict = candidate, v
        if v.single_holds:
            break
    verified = bool(verdict.single_holds)
    names = graph.variable_names()
    x_ell = ell * m  # first vertex of the top layer, lexicographically least
    system = layered_ground_system(graph).with_constraints(
        [XorConstraint((x_ell,), 1)]
    )
    if verdict.vacuous:
        flag = "vacuous expansion"
    elif not verified:
        flag = "unverified expansion"
    else:
        flag = None
    provenance = {
        "d": d,
        "ell": ell,
        "m": m,
        "seed": seed,
        "attempts": attempts,
        "expansion": verdict.as_dict(),
        "expansion_verified": verified and not verdict.vacuous,
        "flag": flag,
        "x_ell": names[x_ell],
        "arity": system.arity,
    }
    return HardInstance(system, x_ell, graph, provenance)


def dummy_pad(system: XorSystem, target_n: int, prefix: str = "pad") -> XorSystem:
    """Append unconstrained variables until the system has target_n of them.

    Padding variables appear in no constraint, so satisfiability and all
    game values are unchanged.
    """
    if target_n < system.num_variables:
        raise ValueError("target_n must not shrink the variable set")
    extra = []
    i = 0
    existing = set(system.variables)
    while len(system.variables) + len(extra) < target_n:
        name = f"{prefix}{i}"
        if name not in existing:
            extra.append(name)
        i += 1
    return XorSystem(system.variables + tuple(extra), system.constraints)


# ---------------------------------------------------------------------------
# set families and stable coloring chains


@dataclass(frozen=True)
class SetFamily:
    """A k-uniform family of subsets of a finite universe."""

    universe: tuple
    members: tuple[frozenset, ...]

    def __post_init__(self):
        pts = set(self.universe)
        if len(pts) != len(self.universe):
            raise ValueError("universe points must be distinct")
        for s in self.members:
            if not s <= pts:
                raise ValueError("member outside the universe")

    @property
    def n(self) -> int:
        return len(self.universe)

    @property
    def k(self) -> int:
        return len(self.members[0]) if self.members else 0

    def is_uniform(self, k: int) -> bool:
        return all(len(s) == k for s in self.members)

    def max_pairwise_intersection(self) -> int:
        best = 0
        for s1, s2 in itertools.combinations(self.members, 2):
            best = max(best, len(s1 & s2))
        return best


def polynomial_set_family(q: int, k: int) -> SetFamily:
    """Graphs of low-degree polynomials over the prime field F_q.

    Universe {1..k} x F_q (n = k*q points); one member per polynomial p of
    degree <= k-2: {(i, p(i-1)) : i in 1..k}.  Distinct polynomials of degree
    <= k-2 agree on at most k-2 of the k fixed arguments, so pairwise
    intersections stay <= k-2, and the family has exactly q^(k-1) members.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if q < k:
        raise ValueError("need q >= k distinct field points")
    if q < 2 or any(q % p == 0 for p in range(2, int(q**0.5) + 1)):
        raise ValueError(f"q = {q} is not prime")
    universe = tuple((i, c) for i in range(1, k + 1) for c in range(q))
    members = []
    for coeffs in itertools.product(range(q), repeat=k - 1):
        member = []
        for i in range(1, k + 1):
            x = i - 1
            value = 0
            for a in reversed(coeffs):  # coeffs[j] multiplies x^j
                value = (value * x + a) % q
            member.append((i, value))
        members.append(frozenset(member))
    return SetFamily(universe, tuple(members))


def greedy_set_family(n: int, k: int, max_members: int | None = None) -> SetFamily:
    """First-fit family over {0..n-1}: scan k-subsets in lexicographic order
    and keep those meeting every kept set in at most k-2 points."""
    if k < 2 or n < k:
        raise ValueError("need n >= k >= 2")
    chosen: list[frozenset] = []
    for combo in itertools.combinations(range(n), k):
        s = frozenset(combo)
        if all(len(s & t) <= k - 2 for t in chosen):
            chosen.append(s)
            if max_members is not None and len(chosen) >= max_members:
                break
    return SetFamily(tuple(range(n)), tuple(chosen))


@dataclass(frozen=True)
class FamilyColoring:
    """A coloring of (U x {0,1})^k driven by a set-family prefix."""

    family: SetFamily
    k: int
    coloring: TupleColoring


def family_coloring(family: SetFamily, k: int) -> FamilyColoring:
    """Color k-tuples over U x {0,1} (point u with bit a is element 2u + a,
    in universe order): two tuples match iff they carry the same base points
    in the same order, the same entry-equality pattern, and, when the base
    set is a family member, the same bit-sum parity."""
    n = family.n
    point_index = {p: i for i, p in enumerate(family.universe)}
    member_sets = {frozenset(point_index[p] for p in s) for s in family.members}
    size = 2 * n
    keys = []
    for tup in itertools.product(range(size), repeat=k):
        base = tuple(v // 2 for v in tup)
        bits = tuple(v % 2 for v in tup)
        pattern = tuple(min(j for j in range(i + 1) if tup[j] == tup[i]) for i in range(k))
        base_set = frozenset(base)
        parity = sum(bits) % 2 if len(base_set) == k and base_set in member_sets else -1
        keys.append((base, pattern, parity))
    order = {key: i for i, key in enumerate(sorted(set(keys)))}
    colors = np.array([order[key] for key in keys], dtype=np.int64)
    chi = TupleColoring(k, size, colors, len(order))
    return FamilyColoring(family, k, chi)


def stable_chain(family: SetFamily, k: int) -> list[FamilyColoring]:
    """Colorings of the member prefixes {}, {E_1}, {E_1, E_2}, ...; each one
    strictly finer than the one before."""
    out = []
    for t in range(len(family.members) + 1):
        prefix = SetFamily(family.universe, family.members[:t])
        out.append(family_coloring(prefix, k))
    return out
