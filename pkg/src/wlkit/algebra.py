"""The tuple-space tensor algebra behind refinement round bounds.

Value maps on V^k (k >= 2) multiply by contracting the last coordinate of
the left factor against the second-to-last of the right factor:

    (a * b)(v_1..v_k) = sum_v a(v_1..v_{k-1}, v) * b(v_1..v_{k-2}, v, v_k).

This is associative, has the "last two entries equal" indicator as unit, and
embeds into n^(k-1) x n^(k-1) matrices (rows and columns indexed by
(k-1)-tuples, nonzero only when the first k-2 coordinates agree).  The star
operation swaps the last two coordinates.

Everything here is exact: entries are Fractions, spans are reduced by
rational Gaussian elimination, and no floating point appears anywhere in
this module.  Partition indicators have 0/1 entries, so conjugation is the
identity and rational arithmetic carries every in-scope computation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import RelationalStructure, TupleColoring, Vocabulary, stabilize, unflat_index
from .errors import BudgetExceededError

__all__ = [
    "KTensor",
    "SpanBasis",
    "tensor_mul",
    "unit_tensor",
    "star",
    "all_ones_tensor",
    "matrix_embed",
    "mat_mul",
    "partition_vectors",
    "partition_structure",
    "algebra_dim",
    "wl_algebra_chain",
    "AlgebraChainRow",
    "distinguishing_monomial",
]

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class KTensor:
    """An exact-rational value map on V^k, stored densely in row-major order."""

    k: int
    n: int
    values: tuple[Fraction, ...]

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("tensors need k >= 2 (the product contracts two slots)")
        if len(self.values) != self.n**self.k:
            raise ValueError("wrong number of entries")

    def get(self, v: Sequence[int]) -> Fraction:
        idx = 0
        for x in v:
            idx = idx * self.n + x
        return self.values[idx]

    def __add__(self, other: "KTensor") -> "KTensor":
        self._check(other)
        return KTensor(self.k, self.n, tuple(a + b for a, b in zip(self.values, other.values)))

    def scale(self, c: Fraction | int) -> "KTensor":
        c = Fraction(c)
        return KTensor(self.k, self.n, tuple(c * a for a in self.values))

    def _check(self, other: "KTensor") -> None:
        if (self.k, self.n) != (other.k, other.n):
            raise ValueError("tensor shapes do not match")


def tensor_mul(a: KTensor, b: KTensor) -> KTensor:
    a._check(b)
    n, k = a.n, a.k
    out = [ZERO] * (n**k)
    av, bv = a.values, b.values
    for prefix in range(n ** (k - 2)):  # v_1..v_{k-2}
        pa = prefix * n
        for vk1 in range(n):  # v_{k-1}
            row = (pa + vk1) * n
            for vk in range(n):  # v_k
                acc = ZERO
                for v in range(n):
                    acc += av[row + v] * bv[(pa + v) * n + vk]
                out[row + vk] = acc
    return KTensor(k, n, tuple(out))


def unit_tensor(n: int, k: int) -> KTensor:
    """Indicator of v_{k-1} = v_k; the two-sided unit of the product."""
    vals = [ZERO] * (n**k)
    for prefix in range(n ** (k - 2)):
        for v in range(n):
            vals[(prefix * n + v) * n + v] = ONE
    return KTensor(k, n, tuple(vals))


def all_ones_tensor(n: int, k: int) -> KTensor:
    return KTensor(k, n, (ONE,) * (n**k))


def star(a: KTensor) -> KTensor:
    """Swap the last two coordinates (conjugation is trivial on rationals)."""
    n, k = a.n, a.k
    vals = [ZERO] * (n**k)
    for prefix in range(n ** (k - 2)):
        base = prefix * n * n
        for x in range(n):
            for y in range(n):
                vals[base + x * n + y] = a.values[base + y * n + x]
    return KTensor(k, n, tuple(vals))


def matrix_embed(a: KTensor) -> list[list[Fraction]]:
    """The n^(k-1) x n^(k-1) matrix with rows and columns indexed by
    (k-1)-tuples in row-major order; entry ((v_1..v_{k-1}), (w_1..w_{k-1}))
    is a(v_1..v_{k-1}, w_{k-1}) when v_i = w_i for i <= k-2, else 0."""
    n, k = a.n, a.k
    d = n ** (k - 1)
    mat = [[ZERO] * d for _ in range(d)]
    for prefix in range(n ** (k - 2)):
        for vk1 in range(n):
            row = prefix * n + vk1
            for wk1 in range(n):
                col = prefix * n + wk1
                mat[row][col] = a.values[(prefix * n + vk1) * n + wk1]
    return mat


def mat_mul(a: list[list[Fraction]], b: list[list[Fraction]]) -> list[list[Fraction]]:
    d = len(a)
    bt = list(zip(*b))
    return [[sum((x * y for x, y in zip(row, col)), ZERO) for col in bt] for row in a]


# ---------------------------------------------------------------------------
# spans


class SpanBasis:
    """A growing basis in reduced row echelon form over the rationals."""

    def __init__(self, length: int):
        self.length = length
        self.rows: list[list[Fraction]] = []
        self.pivots: list[int] = []

    @property
    def rank(self) -> int:
        return len(self.rows)

    def _reduce(self, vec: Sequence[Fraction]) -> list[Fraction]:
        v = list(vec)
        for row, piv in zip(self.rows, self.pivots):
            c = v[piv]
            if c:
                for i in range(self.length):
                    v[i] -= c * row[i]
        return v

    def contains(self, vec: Sequence[Fraction]) -> bool:
        return not any(self._reduce(vec))

    def add(self, vec: Sequence[Fraction]) -> bool:
        """Insert if independent; True when the rank grew."""
        v = self._reduce(vec)
        piv = next((i for i, c in enumerate(v) if c), None)
        if piv is None:
            return False
        inv = ONE / v[piv]
        v = [c * inv for c in v]
        for row in self.rows:
            c = row[piv]
            if c:
                for i in range(self.length):
                    row[i] -= c * v[i]
        self.rows.append(v)
        self.pivots.append(piv)
        return True


# ---------------------------------------------------------------------------
# partition algebras


def partition_vectors(partition: TupleColoring) -> list[KTensor]:
    """One 0/1 indicator tensor per color class, in color-id order."""
    n, k = partition.universe_size, partition.k
    vals = [[ZERO] * (n**k) for _ in range(partition.num_colors)]
    for idx, c in enumerate(partition.colors):
        vals[int(c)][idx] = ONE
    return [KTensor(k, n, tuple(v)) for v in vals]


def partition_structure(partition: TupleColoring) -> RelationalStructure:
    """The relational structure with one k-ary relation per color class."""
    n, k = partition.universe_size, partition.k
    classes: list[set[tuple[int, ...]]] = [set() for _ in range(partition.num_colors)]
    for idx, c in enumerate(partition.colors):
        classes[int(c)].add(unflat_index(idx, n, k))
    vocab = Vocabulary(tuple((f"C{c}", k) for c in range(partition.num_colors)))
    return RelationalStructure(vocab, n, tuple(frozenset(s) for s in classes))


def algebra_dim(partition: TupleColoring, budget: int = 200_000) -> tuple[int, bool]:
    """Dimension of the span of the class indicators closed under the tensor
    product, by pair-product saturation.

    Returns (rank, saturated); when more than `budget` products were needed
    the rank is only a lower bound and saturated is False.
    """
    gens = partition_vectors(partition)
    if not gens:
        return 0, True
    n, k = gens[0].n, gens[0].k
    basis = SpanBasis(n**k)
    elements: list[KTensor] = []
    for g in gens:
        if basis.add(g.values):
            elements.append(g)
    pending = deque(
        (i, j) for i in range(len(elements)) for j in range(len(elements))
    )
    products = 0
    while pending:
        i, j = pending.popleft()
        products += 1
        if products > budget:
            return basis.rank, False
        prod = tensor_mul(elements[i], elements[j])
        if basis.add(prod.values):
            new = len(elements)
            elements.append(prod)
            for t in range(len(elements)):
                pending.append((new, t))
                if t != new:
                    pending.append((t, new))
    return basis.rank, True


@dataclass(frozen=True)
class AlgebraChainRow:
    round: int
    classes: int
    dim: int
    saturated: bool
    strict_increase: bool


def wl_algebra_chain(
    a: RelationalStructure, k: int, budget: int = 200_000
) -> list[AlgebraChainRow]:
    """Per refinement round: class count, generated-algebra dimension, and
    whether the dimension strictly grew.

    The dimension sequence is weakly increasing, and when every round
    saturated the number of strict increases is at most 2 * n^(k-1); both
    facts are asserted here as hard checks.
    """
    trace = stabilize(a, k)
    rows: list[AlgebraChainRow] = []
    prev_dim = None
    for r, coloring in enumerate(trace.colorings):
        dim, saturated = algebra_dim(coloring, budget=budget)
        strict = prev_dim is not None and dim > prev_dim
        if prev_dim is not None and dim < prev_dim:
            raise RuntimeError("algebra dimensions must be weakly increasing")
        rows.append(AlgebraChainRow(r, coloring.num_colors, dim, saturated, strict))
        prev_dim = dim
    if all(row.saturated for row in rows):
        strict_count = sum(row.strict_increase for row in rows)
        limit = 2 * a.universe_size ** (k - 1)
        if strict_count > limit:
            raise RuntimeError(
                f"{strict_count} strict dimension increases exceed the bound {limit}"
            )
    return rows


def distinguishing_monomial(
    partition: TupleColoring,
    v: Sequence[int],
    w: Sequence[int],
    s_max: int,
    budget: int = 50_000,
) -> list[int] | None:
    """Shortest product c_{i_1} * ... * c_{i_s} of class indicators (s <=
    s_max) taking different values on v and w; None when the search space is
    exhausted.  Products are deduplicated by value table, so the search is
    breadth-first over distinct tensors; raises past `budget` tensors."""
    gens = partition_vectors(partition)

    def value_pair(t: KTensor) -> tuple[Fraction, Fraction]:
        return t.get(v), t.get(w)

    seen: set[tuple[Fraction, ...]] = set()
    frontier: list[tuple[KTensor, list[int]]] = []
    created = 0
    for i, g in enumerate(gens):
        created += 1
        if g.values in seen:
            continue
        seen.add(g.values)
        a, b = value_pair(g)
        if a != b:
            return [i]
        frontier.append((g, [i]))
    for _ in range(2, s_max + 1):
        nxt: list[tuple[KTensor, list[int]]] = []
        for t, seq in frontier:
            for i, g in enumerate(gens):
                created += 1
                if created > budget:
                    raise BudgetExceededError(f"more than {budget} products explored")
                prod = tensor_mul(t, g)
                if prod.values in seen:
                    continue
                seen.add(prod.values)
                a, b = value_pair(prod)
                if a != b:
                    return seq + [i]
                nxt.append((prod, seq + [i]))
        frontier = nxt
        if not frontier:
            break
    return None
