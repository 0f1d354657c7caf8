"""Relational structures and the k-dimensional color refinement engine.

Colorings of k-tuples are flat integer arrays indexed by the row-major
mixed-radix encoding of the tuple, so a tuple lookup is O(1).  After every
round the signatures are serialized canonically (sorted multisets) and dense
color ids are assigned in sorted signature order.  This makes two runs on
equal inputs bit-identical, and lets two structures refined together share a
single id space so their per-color histograms are directly comparable.

The refinement step for dimension k >= 2 replaces the color of a tuple by
the pair (old color, multiset over all vertices w of the vector of colors of
the k one-entry substitutions).  For k = 1 that rule is blind (the multiset
is the same for every vertex), so the step additionally tags each w with the
atomic type of the ordered pair (v, w); this is round-for-round equivalent
to the classic neighbourhood refinement and requires the structure itself,
not just the coloring.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import FormatError

__all__ = [
    "Vocabulary",
    "RelationalStructure",
    "AtomicType",
    "TupleColoring",
    "RefinementTrace",
    "DistinguishResult",
    "atomic_type",
    "initial_coloring",
    "refine_step",
    "stabilize",
    "joint_distinguish",
    "coloring_refines",
    "colorings_equivalent",
    "is_k_stable",
    "is_shufflable",
    "is_equality_compatible",
    "permute_structure",
    "refinement_round_bound",
    "structure_to_text",
    "structure_from_text",
]


# ---------------------------------------------------------------------------
# structures


@dataclass(frozen=True)
class Vocabulary:
    """A finite list of relation symbols with fixed arities."""

    relations: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [name for name, _ in self.relations]
        if len(set(names)) != len(names):
            raise ValueError("relation names must be unique")
        for name, arity in self.relations:
            if arity < 1:
                raise ValueError(f"relation {name!r} has arity {arity} < 1")
            if not name or any(ch.isspace() for ch in name):
                raise ValueError(f"relation name {name!r} must be a single token")

    @property
    def max_arity(self) -> int:
        return max((a for _, a in self.relations), default=1)

    def index(self, name: str) -> int:
        for i, (rname, _) in enumerate(self.relations):
            if rname == name:
                return i
        raise KeyError(name)


@dataclass(frozen=True)
class RelationalStructure:
    """A finite universe {0, ..., n-1} with one tuple set per relation symbol."""

    vocabulary: Vocabulary
    universe_size: int
    tuples: tuple[frozenset[tuple[int, ...]], ...]

    def __post_init__(self):
        if self.universe_size < 0:
            raise ValueError("universe_size must be nonnegative")
        if len(self.tuples) != len(self.vocabulary.relations):
            raise ValueError("one tuple set per relation symbol required")
        for (name, arity), rel in zip(self.vocabulary.relations, self.tuples):
            for t in rel:
                if len(t) != arity:
                    raise ValueError(f"tuple {t} has wrong length for {name!r}")
                if any(not (0 <= x < self.universe_size) for x in t):
                    raise ValueError(f"tuple {t} out of range for {name!r}")

    @property
    def n(self) -> int:
        return self.universe_size

    def relation(self, name: str) -> frozenset[tuple[int, ...]]:
        return self.tuples[self.vocabulary.index(name)]

    def dense_relation(self, rel_index: int) -> np.ndarray:
        """0/1 array of shape (n,)*arity for relation number `rel_index`."""
        arity = self.vocabulary.relations[rel_index][1]
        arr = np.zeros((self.universe_size,) * arity, dtype=bool)
        for t in self.tuples[rel_index]:
            arr[t] = True
        return arr


def permute_structure(a: RelationalStructure, perm: Sequence[int]) -> RelationalStructure:
    """Relabel the universe by `perm` (vertex v becomes perm[v])."""
    if sorted(perm) != list(range(a.universe_size)):
        raise ValueError("perm must be a permutation of the universe")
    rels = tuple(
        frozenset(tuple(perm[x] for x in t) for t in rel) for rel in a.tuples
    )
    return RelationalStructure(a.vocabulary, a.universe_size, rels)


# ---------------------------------------------------------------------------
# atomic types

def _position_maps(j: int, k: int) -> list[tuple[int, ...]]:
    """All maps [j] -> [k], as index tuples, in lexicographic order."""
    return list(itertools.product(range(k), repeat=j))


@dataclass(frozen=True)
class AtomicType:
    """Isomorphism type of the ordered substructure induced by a k-tuple.

    `equality_pattern[i]` is the first position holding the same entry as
    position i.  `membership[r]` holds every position map p: [arity_r] -> [k]
    whose image tuple lies in relation r.  Within one vocabulary, dataclass
    equality is exactly type equality; atomic_type_key gives the sortable
    serialization used for dense id assignment.
    """

    k: int
    equality_pattern: tuple[int, ...]
    membership: tuple[frozenset[tuple[int, ...]], ...]


def atomic_type(a: RelationalStructure, v: Sequence[int]) -> AtomicType:
    """Atomic type of the tuple `v` in structure `a`.

    Two tuples receive equal types exactly when the entry-wise map between
    them is an isomorphism of the induced ordered substructures.  Any k >= 1
    is accepted; relations of arity above k contribute through non-injective
    position maps.
    """
    k = len(v)
    if k < 1:
        raise ValueError("tuples must have at least one entry")
    for x in v:
        if not (0 <= x < a.universe_size):
            raise ValueError(f"index {x} outside universe of size {a.universe_size}")
    pattern = tuple(min(j for j in range(i + 1) if v[j] == v[i]) for i in range(k))
    membership = []
    for rel_index, (_, arity) in enumerate(a.vocabulary.relations):
        rel = a.tuples[rel_index]
        members = frozenset(
            p for p in _position_maps(arity, k) if tuple(v[i] for i in p) in rel
        )
        membership.append(members)
    return AtomicType(k, pattern, tuple(membership))


def atomic_type_key(a: RelationalStructure, v: Sequence[int]) -> tuple:
    """Canonical encoding of atomic_type(a, v).

    Layout matches the vectorized encoding behind initial_coloring: pairwise
    equality bits over positions i < j, then per relation one membership bit
    per position map in lexicographic map order.
    """
    t = atomic_type(a, v)
    eq_bits = tuple(
        int(t.equality_pattern[j] == t.equality_pattern[i])
        for i in range(t.k)
        for j in range(i + 1, t.k)
    )
    mem_bits = []
    for (_, arity), mem in zip(a.vocabulary.relations, t.membership):
        mem_bits.append(tuple(int(p in mem) for p in _position_maps(arity, t.k)))
    return (t.k, eq_bits, tuple(mem_bits))


# ---------------------------------------------------------------------------
# colorings


@dataclass(frozen=True, eq=False)
class TupleColoring:
    """A total coloring of V^k by dense ids 0 .. num_colors-1.

    `colors[i]` is the color of the tuple whose row-major mixed-radix index
    is i (first position most significant).
    """

    k: int
    universe_size: int
    colors: np.ndarray
    num_colors: int

    def __post_init__(self):
        expected = self.universe_size**self.k
        if self.colors.shape != (expected,):
            raise ValueError(f"expected {expected} colors, got {self.colors.shape}")
        self.colors.setflags(write=False)

    @property
    def n(self) -> int:
        return self.universe_size

    def color_of(self, v: Sequence[int]) -> int:
        return int(self.colors[flat_index(v, self.universe_size)])

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.colors, minlength=self.num_colors)

    def classes(self) -> list[list[tuple[int, ...]]]:
        """Color classes as explicit tuple lists (small inputs only)."""
        out: list[list[tuple[int, ...]]] = [[] for _ in range(self.num_colors)]
        n, k = self.universe_size, self.k
        for idx, c in enumerate(self.colors):
            out[int(c)].append(unflat_index(idx, n, k))
        return out


def flat_index(v: Sequence[int], n: int) -> int:
    idx = 0
    for x in v:
        idx = idx * n + x
    return idx


def unflat_index(idx: int, n: int, k: int) -> tuple[int, ...]:
    out = []
    for _ in range(k):
        out.append(idx % n)
        idx //= n
    return tuple(reversed(out))


def _tuple_array(n: int, k: int) -> np.ndarray:
    """(n^k, k) array listing all tuples in row-major order."""
    idx = np.arange(n**k, dtype=np.int64)
    cols = [(idx // n ** (k - 1 - i)) % n for i in range(k)]
    return np.stack(cols, axis=1) if cols else idx.reshape(0, 0)


def _from_ids(k: int, n: int, ids: np.ndarray, num: int) -> TupleColoring:
    return TupleColoring(k, n, ids.astype(np.int64), num)


# ---------------------------------------------------------------------------
# initial coloring (vectorized atomic typing)

def _type_feature_matrix(structures: Sequence[RelationalStructure], k: int) -> list[np.ndarray]:
    """Per structure, the (n^k, F) boolean canonical-type encoding of every tuple.

    Column layout (shared across structures, which must share a vocabulary):
    pairwise equality bits for positions i < j, then per relation (vocabulary
    order) one membership bit per position map in lexicographic order.
    """
    vocab = structures[0].vocabulary
    for s in structures[1:]:
        if s.vocabulary != vocab:
            raise ValueError("structures must share a vocabulary")
    out = []
    for s in structures:
        n = s.universe_size
        t = _tuple_array(n, k)
        cols: list[np.ndarray] = []
        for i in range(k):
            for j in range(i + 1, k):
                cols.append(t[:, i] == t[:, j])
        for rel_index, (_, arity) in enumerate(vocab.relations):
            dense = s.dense_relation(rel_index)
            for p in _position_maps(arity, k):
                cols.append(dense[tuple(t[:, pi] for pi in p)])
        if cols:
            out.append(np.stack(cols, axis=1))
        else:
            out.append(np.zeros((n**k, 0), dtype=bool))
    return out


def _initial_multi(structures: Sequence[RelationalStructure], k: int) -> tuple[list[np.ndarray], int]:
    """Initial colorings with one shared id space, ids in sorted encoding order."""
    feats = _type_feature_matrix(structures, k)
    stacked = np.concatenate(feats, axis=0)
    if stacked.shape[0] == 0:
        return [np.zeros(0, dtype=np.int64) for _ in structures], 0
    uniq, inverse = np.unique(stacked, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    ids, offset = [], 0
    for f in feats:
        ids.append(inverse[offset : offset + f.shape[0]].astype(np.int64))
        offset += f.shape[0]
    return ids, len(uniq)


def initial_coloring(a: RelationalStructure, k: int) -> TupleColoring:
    """Color V^k by atomic type; dense ids in sorted canonical-encoding order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ids, num = _initial_multi([a], k)
    return _from_ids(k, a.universe_size, ids[0], num)


# ---------------------------------------------------------------------------
# refinement

def _pair_type_ids(structures: Sequence[RelationalStructure]) -> tuple[list[np.ndarray], int]:
    """Shared atomic-type ids of all ordered pairs; used by the k = 1 step."""
    ids, num = _initial_multi(structures, 2)
    return [arr.reshape(s.universe_size, s.universe_size) for arr, s in zip(ids, structures)], num


def _signatures_k1(colors: np.ndarray, num_colors: int, pair_types: np.ndarray, num_pair: int) -> np.ndarray:
    n = colors.shape[0]
    enc = colors[None, :].astype(np.int64) * num_pair + pair_types  # enc[v, w]
    enc = np.sort(enc, axis=1)
    return np.concatenate([colors[:, None], enc], axis=1)


def _signatures(colors: np.ndarray, num_colors: int, k: int, n: int) -> np.ndarray:
    """(n^k, 1 + n) signature matrix: own color, then the sorted multiset of
    base-num_colors encodings of the k-vectors of substituted colors."""
    if n == 0:
        return colors.reshape(0, 1)
    base = max(num_colors, 1)
    if k * (base.bit_length()) > 62:
        raise NotImplementedError("color space too large for int64 signature encoding")
    cube = colors.reshape((n,) * k)
    full = (n,) * k + (n,)
    enc = np.zeros(full, dtype=np.int64)
    for i in range(k):
        moved = np.moveaxis(cube, i, -1)
        sub = np.broadcast_to(np.expand_dims(moved, i), full)
        enc = enc * base + sub
    enc = enc.reshape(n**k, n)
    enc.sort(axis=1)
    return np.concatenate([colors[:, None], enc], axis=1)


def _refine_multi(
    colorings: Sequence[np.ndarray],
    num_colors: int,
    k: int,
    sizes: Sequence[int],
    pair_types: Sequence[np.ndarray] | None = None,
    num_pair: int = 0,
) -> tuple[list[np.ndarray], int]:
    """One refinement round over structures sharing an id space."""
    sigs = []
    for which, colors in enumerate(colorings):
        n = sizes[which]
        if k == 1:
            sigs.append(_signatures_k1(colors, num_colors, pair_types[which], num_pair))
        else:
            sigs.append(_signatures(colors, num_colors, k, n))
    widths = {s.shape[1] for s in sigs}
    if len(widths) > 1:
        # different universe sizes: pad the multiset part with a sentinel
        wmax = max(widths)
        sigs = [
            np.concatenate([s, np.full((s.shape[0], wmax - s.shape[1]), -1, dtype=np.int64)], axis=1)
            for s in sigs
        ]
    stacked = np.concatenate(sigs, axis=0)
    if stacked.shape[0] == 0:
        return [c.copy() for c in colorings], num_colors
    _, inverse = np.unique(stacked, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1).astype(np.int64)
    out, offset = [], 0
    for s in sigs:
        out.append(inverse[offset : offset + s.shape[0]])
        offset += s.shape[0]
    return out, int(inverse.max()) + 1 if inverse.size else 0


def refine_step(chi: TupleColoring, structure: RelationalStructure | None = None) -> TupleColoring:
    """One refinement round.  The result refines `chi` and its dense ids are
    assigned in sorted signature order, so equal inputs give equal outputs.

    For k = 1 a structure is required (see module docstring); for k >= 2 the
    structure is ignored because the colors alone determine the round.
    """
    if chi.k == 1:
        if structure is None:
            raise ValueError("k = 1 refinement needs the structure")
        if structure.universe_size != chi.universe_size:
            raise ValueError("structure size does not match the coloring")
        pts, num_pair = _pair_type_ids([structure])
        ids, num = _refine_multi([chi.colors], chi.num_colors, 1, [chi.universe_size], pts, num_pair)
    else:
        ids, num = _refine_multi([chi.colors], chi.num_colors, chi.k, [chi.universe_size])
    return _from_ids(chi.k, chi.universe_size, ids[0], num)


def coloring_refines(chi1: TupleColoring, chi2: TupleColoring) -> bool:
    """True iff equal chi1-colors imply equal chi2-colors (chi1 is finer)."""
    if (chi1.k, chi1.universe_size) != (chi2.k, chi2.universe_size):
        raise ValueError("colorings live on different tuple spaces")
    return _refines_arrays(chi1.colors, chi2.colors)


def _refines_arrays(c1: np.ndarray, c2: np.ndarray) -> bool:
    if c1.size == 0:
        return True
    base = int(c2.max()) + 1
    combined = c1.astype(np.int64) * base + c2
    return len(np.unique(combined)) == len(np.unique(c1))


def colorings_equivalent(chi1: TupleColoring, chi2: TupleColoring) -> bool:
    return coloring_refines(chi1, chi2) and coloring_refines(chi2, chi1)


def is_k_stable(chi: TupleColoring, structure: RelationalStructure | None = None) -> bool:
    """True iff one refinement round does not split any class."""
    return refine_step(chi, structure).num_colors == chi.num_colors


def is_shufflable(chi: TupleColoring) -> bool:
    """Check closure of the partition under all k^k position re-indexings:
    equal colors of v, w must give equal colors of (v∘pi), (w∘pi)."""
    n, k = chi.universe_size, chi.k
    if n == 0:
        return True
    t = _tuple_array(n, k)
    radix = np.array([n ** (k - 1 - i) for i in range(k)], dtype=np.int64)
    for pi in itertools.product(range(k), repeat=k):
        idx = t[:, list(pi)] @ radix
        shuffled = chi.colors[idx]
        if not _refines_arrays(chi.colors, shuffled):
            return False
    return True


def is_equality_compatible(chi: TupleColoring) -> bool:
    """True iff every color class has a constant entry-equality pattern."""
    n, k = chi.universe_size, chi.k
    if n == 0:
        return True
    t = _tuple_array(n, k)
    pattern = np.zeros(n**k, dtype=np.int64)
    for i in range(k):
        eq = t[:, : i + 1] == t[:, i : i + 1]
        first = np.argmax(eq, axis=1)
        pattern = pattern * k + first
    return _refines_arrays(chi.colors, pattern)


# ---------------------------------------------------------------------------
# stabilization and distinguishing

def ceil_log2(x: int) -> int:
    """Smallest c with 2^c >= x (0 for x <= 1); exact integer arithmetic."""
    return 0 if x <= 1 else (x - 1).bit_length()


def refinement_round_bound(n: int, k: int) -> int:
    """2 * n^(k-1) * (ceil(k*log2(n)) + 1): an upper bound on the number of
    strictly refining rounds for dimension k >= 2 on an n-element universe."""
    if k < 2:
        raise ValueError("the round bound applies to k >= 2")
    return 2 * n ** (k - 1) * (ceil_log2(n**k) + 1)


@dataclass(frozen=True)
class RefinementTrace:
    """Per-round colorings chi_0, ..., chi_{r_infinity} of one run.

    When the run hit a user-supplied round cap before stabilizing,
    `stabilized` is False and `r_infinity` is None.
    """

    k: int
    universe_size: int
    colorings: tuple[TupleColoring, ...]
    stabilized: bool
    r_infinity: int | None

    @property
    def class_counts(self) -> list[int]:
        return [c.num_colors for c in self.colorings]

    @property
    def final(self) -> TupleColoring:
        return self.colorings[-1]

    def check_bounds(self) -> None:
        """Hard check of the round bounds; raises on violation."""
        if not self.stabilized:
            return
        n, k = self.universe_size, self.k
        trivial = max(n**k - 1, 0)
        if self.r_infinity > trivial:
            raise RuntimeError(
                f"stabilization took {self.r_infinity} rounds, above the trivial bound {trivial}"
            )
        if k >= 2 and self.r_infinity > refinement_round_bound(n, k):
            raise RuntimeError(
                f"stabilization took {self.r_infinity} rounds, above the bound "
                f"{refinement_round_bound(n, k)} for k={k}, n={n}"
            )


def stabilize(a: RelationalStructure, k: int, max_rounds: int | None = None) -> RefinementTrace:
    """Run refinement from the atomic-type coloring until it stops splitting.

    `max_rounds` caps the number of refinement rounds; the default n^k always
    suffices.  A smaller cap can yield a partial trace (`stabilized=False`).
    Every stabilized trace is checked against the round bounds.
    """
    n = a.universe_size
    cap = n**k if max_rounds is None else max_rounds
    chi = initial_coloring(a, k)
    colorings = [chi]
    if n**k == 0:
        trace = RefinementTrace(k, n, tuple(colorings), True, 0)
        trace.check_bounds()
        return trace
    stabilized = False
    for _ in range(cap):
        nxt = refine_step(chi, a)
        if nxt.num_colors == chi.num_colors:
            stabilized = True
            break
        colorings.append(nxt)
        chi = nxt
    if not stabilized and chi.num_colors == n**k:
        stabilized = True  # discrete colorings cannot split further
    trace = RefinementTrace(
        k, n, tuple(colorings), stabilized, len(colorings) - 1 if stabilized else None
    )
    trace.check_bounds()
    return trace


@dataclass(frozen=True)
class DistinguishResult:
    """Outcome of refining two structures against one shared color table."""

    round: int | None
    rounds_run: int
    complete: bool  # both runs reached their fixpoints (or a round differed)
    colorings_a: tuple[TupleColoring, ...]
    colorings_b: tuple[TupleColoring, ...]

    @property
    def distinguished(self) -> bool:
        return self.round is not None


def _histograms_differ(ca: np.ndarray, cb: np.ndarray, num: int) -> bool:
    ha = np.bincount(ca, minlength=num)
    hb = np.bincount(cb, minlength=num)
    return not np.array_equal(ha, hb)


def joint_distinguish(
    a: RelationalStructure,
    b: RelationalStructure,
    k: int,
    max_rounds: int | None = None,
) -> DistinguishResult:
    """Least round whose per-color histograms differ, or None when both runs
    are stable with equal histograms.

    Refinement runs on each structure separately, but initial colors are keyed
    by the canonical atomic-type encoding and per-round signatures are
    interned in one table, so "same color" means the same thing on both sides.
    """
    if a.vocabulary != b.vocabulary:
        raise ValueError("structures must share a vocabulary")
    sizes = [a.universe_size, b.universe_size]
    cap = max(sizes) ** k if max_rounds is None else max_rounds
    cols, num = _initial_multi([a, b], k)
    cols_a, cols_b = [cols[0]], [cols[1]]
    if _histograms_differ(cols[0], cols[1], num):
        return DistinguishResult(0, 0, True, (_from_ids(k, sizes[0], cols[0], num),), (_from_ids(k, sizes[1], cols[1], num),))
    pair_types = num_pair = None
    if k == 1:
        pts, num_pair = _pair_type_ids([a, b])
        pair_types = pts
    counts = [len(np.unique(c)) for c in cols]
    r = 0
    complete = False
    while r < cap:
        cols, num = _refine_multi(cols, num, k, sizes, pair_types, num_pair or 0)
        r += 1
        cols_a.append(cols[0])
        cols_b.append(cols[1])
        if _histograms_differ(cols[0], cols[1], num):
            return DistinguishResult(
                r,
                r,
                True,
                tuple(_from_ids(k, sizes[0], c, num) for c in cols_a),
                tuple(_from_ids(k, sizes[1], c, num) for c in cols_b),
            )
        new_counts = [len(np.unique(c)) for c in cols]
        if new_counts == counts:
            complete = True
            break
        counts = new_counts
    return DistinguishResult(
        None,
        r,
        complete,
        tuple(_from_ids(k, sizes[0], c, num) for c in cols_a),
        tuple(_from_ids(k, sizes[1], c, num) for c in cols_b),
    )


# ---------------------------------------------------------------------------
# text format
#
#   structure <name>
#   universe <n>
#   relation <name> <arity>
#   <i1> <i2> ... (one tuple per line, 0-based)
#   ...
#   end
#
# Blank lines and '#' comments are ignored.  The printer is canonical
# (relations in vocabulary order, tuples sorted), so parse/print round-trips
# are byte-identical modulo comments.


def structure_to_text(a: RelationalStructure, name: str = "structure") -> str:
    if not name or any(ch.isspace() for ch in name):
        raise ValueError("structure name must be a single token")
    lines = [f"structure {name}", f"universe {a.universe_size}"]
    for (rname, arity), rel in zip(a.vocabulary.relations, a.tuples):
        lines.append(f"relation {rname} {arity}")
        for t in sorted(rel):
            lines.append(" ".join(str(x) for x in t))
    lines.append("end")
    return "\n".join(lines) + "\n"


def structure_from_text(text: str) -> tuple[str, RelationalStructure]:
    lines = []
    for raw in text.splitlines():
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            lines.append(stripped)
    pos = 0

    def take() -> str:
        nonlocal pos
        if pos >= len(lines):
            raise FormatError("unexpected end of input")
        line = lines[pos]
        pos += 1
        return line

    header = take().split()
    if len(header) != 2 or header[0] != "structure":
        raise FormatError("expected 'structure <name>'")
    name = header[1]
    uline = take().split()
    if len(uline) != 2 or uline[0] != "universe":
        raise FormatError("expected 'universe <n>'")
    try:
        n = int(uline[1])
    except ValueError as exc:
        raise FormatError("universe size must be an integer") from exc
    relations: list[tuple[str, int]] = []
    tuple_sets: list[set[tuple[int, ...]]] = []
    while True:
        line = take()
        if line == "end":
            break
        parts = line.split()
        if parts[0] == "relation":
            if len(parts) != 3:
                raise FormatError("expected 'relation <name> <arity>'")
            try:
                arity = int(parts[2])
            except ValueError as exc:
                raise FormatError("relation arity must be an integer") from exc
            relations.append((parts[1], arity))
            tuple_sets.append(set())
        else:
            if not relations:
                raise FormatError(f"tuple line {line!r} before any relation")
            try:
                t = tuple(int(x) for x in parts)
            except ValueError as exc:
                raise FormatError(f"bad tuple line {line!r}") from exc
            tuple_sets[-1].add(t)
    if pos != len(lines):
        raise FormatError("trailing content after 'end'")
    try:
        return name, RelationalStructure(
            Vocabulary(tuple(relations)), n, tuple(frozenset(s) for s in tuple_sets)
        )
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
