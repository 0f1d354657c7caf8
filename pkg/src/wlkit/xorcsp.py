"""XOR constraint systems over named binary variables.

A constraint (C, a) asserts that the variables in C sum to a modulo 2; the
empty-support constraint ((), 0) is always satisfied and ((), 1) never is.
Systems are stored canonically (sorted supports, sorted deduplicated
constraint list) so closure iteration and printing are deterministic.

The structure translation turns a system into two relational structures on
universe V x {0,1} that are isomorphic exactly when the system is
satisfiable: one relation per constraint, holding the even-parity local
assignments on one side and the a-parity ones on the other.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Mapping, Sequence

from .core import RelationalStructure, Vocabulary
from .errors import BudgetExceededError, FormatError

__all__ = [
    "XorConstraint",
    "XorSystem",
    "violates",
    "satisfies_all",
    "to_structures",
    "attractor",
    "closure",
    "closure_bounded",
    "star_closure",
    "gauss_satisfiable",
    "system_to_text",
    "system_from_text",
]


@dataclass(frozen=True, order=True)
class XorConstraint:
    """A parity constraint: the variables in `support` sum to `parity` mod 2."""

    support: tuple[int, ...]
    parity: int

    def __post_init__(self):
        if list(self.support) != sorted(set(self.support)):
            raise ValueError("support must be sorted and duplicate-free")
        if self.parity not in (0, 1):
            raise ValueError("parity must be 0 or 1")

    @staticmethod
    def make(support: Iterable[int], parity: int) -> "XorConstraint":
        return XorConstraint(tuple(sorted(set(support))), parity)

    @property
    def mask(self) -> int:
        m = 0
        for x in self.support:
            m |= 1 << x
        return m


def _mask_to_support(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


@dataclass(frozen=True)
class XorSystem:
    """A set of XOR constraints over an ordered set of named variables."""

    variables: tuple[str, ...]
    constraints: tuple[XorConstraint, ...]

    def __post_init__(self):
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("variable names must be unique")
        for name in self.variables:
            if not name or any(ch.isspace() for ch in name) or "," in name:
                raise ValueError(f"bad variable name {name!r}")
        canonical = tuple(sorted(set(self.constraints)))
        object.__setattr__(self, "constraints", canonical)
        n = len(self.variables)
        for c in self.constraints:
            if c.support and (c.support[0] < 0 or c.support[-1] >= n):
                raise ValueError(f"constraint {c} references unknown variables")

    @staticmethod
    def make(
        variables: Sequence[str], constraints: Iterable[tuple[Iterable[int], int]]
    ) -> "XorSystem":
        return XorSystem(
            tuple(variables),
            tuple(XorConstraint.make(sup, par) for sup, par in constraints),
        )

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def arity(self) -> int:
        return max((len(c.support) for c in self.constraints), default=0)

    def index(self, name: str) -> int:
        return self.variables.index(name)

    def masks(self) -> list[tuple[int, int]]:
        return [(c.mask, c.parity) for c in self.constraints]

    def with_constraints(self, extra: Iterable[XorConstraint]) -> "XorSystem":
        return XorSystem(self.variables, self.constraints + tuple(extra))


def violates(assignment: Mapping[int, int], c: XorConstraint) -> bool:
    """True iff the assignment covers the support and gets the parity wrong."""
    if any(x not in assignment for x in c.support):
        return False
    return sum(assignment[x] for x in c.support) % 2 != c.parity


def satisfies_all(assignment: Mapping[int, int], system: XorSystem) -> bool:
    return not any(violates(assignment, c) for c in system.constraints)


# ---------------------------------------------------------------------------
# structure translation


def _relation_name(system: XorSystem, c: XorConstraint) -> str:
    names = ",".join(system.variables[i] for i in c.support)
    return f"R[{names}]={c.parity}"


def to_structures(system: XorSystem) -> tuple[RelationalStructure, RelationalStructure]:
    """Twin structures on V x {0,1}; variable (i, b) is element 2i + b.

    Each variable carries a unary marker relation over both of its elements.
    Each constraint (C, a) with C = {x_1 < ... < x_j} becomes a j-ary
    relation: on the first structure the local assignments of even parity,
    on the second those of parity a.  Empty supports are rejected (a nullary
    flag has no vertex encoding; closures, not source systems, create them).
    """
    for c in system.constraints:
        if not c.support:
            raise ValueError("empty-support constraints cannot be translated")
    n = system.num_variables
    rels: list[tuple[str, int]] = [(f"X_{name}", 1) for name in system.variables]
    tuples: list[frozenset[tuple[int, ...]]] = [
        frozenset({(2 * i,), (2 * i + 1,)}) for i in range(n)
    ]
    tuples_b = list(tuples)
    for c in system.constraints:
        j = len(c.support)
        rels.append((_relation_name(system, c), j))
        even, odd = set(), set()
        for bits in itertools.product((0, 1), repeat=j):
            t = tuple(2 * x + b for x, b in zip(c.support, bits))
            (even if sum(bits) % 2 == 0 else odd).add(t)
        tuples.append(frozenset(even))
        tuples_b.append(frozenset(even if c.parity == 0 else odd))
    vocab = Vocabulary(tuple(rels))
    return (
        RelationalStructure(vocab, 2 * n, tuple(tuples)),
        RelationalStructure(vocab, 2 * n, tuple(tuples_b)),
    )


# ---------------------------------------------------------------------------
# attractor and closures


def attractor(system: XorSystem, k: int) -> XorSystem:
    """Add every pairwise parity-sum whose support (symmetric difference of
    the two supports) has at most k variables.  Self-pairs contribute ((),0)
    whenever the system is nonempty."""
    masks = system.masks()
    derived: set[tuple[int, int]] = set()
    for i in range(len(masks)):
        m1, p1 = masks[i]
        for j in range(i, len(masks)):
            m2, p2 = masks[j]
            m = m1 ^ m2
            if m.bit_count() <= k:
                derived.add((m, (p1 + p2) % 2))
    extra = [
        XorConstraint(_mask_to_support(m), p)
        for m, p in derived
        if (m, p) not in {(c.mask, c.parity) for c in system.constraints}
    ]
    return system.with_constraints(extra)


def closure(system: XorSystem, k: int, max_steps: int | None = None) -> tuple[XorSystem, int]:
    """Iterate the attractor to its fixpoint; returns (closure, steps) where
    steps is the least r with the (r+1)-st iterate equal to the r-th."""
    current = system
    steps = 0
    while max_steps is None or steps < max_steps:
        nxt = attractor(current, k)
        if nxt.constraints == current.constraints:
            return current, steps
        current = nxt
        steps += 1
    return current, steps


def closure_bounded(system: XorSystem, k: int, rounds: int) -> XorSystem:
    """The r-fold attractor iterate (stops early at a fixpoint)."""
    current = system
    for _ in range(rounds):
        nxt = attractor(current, k)
        if nxt.constraints == current.constraints:
            return current
        current = nxt
    return current


def star_closure(
    graph_system: XorSystem,
    k: int,
    alpha: Fraction | int,
    budget: int = 10**7,
) -> XorSystem:
    """All parity-0 sums of at most k/alpha distinct constraints whose
    combined support keeps at most k variables; includes ((), 0).

    The subset-size cap floor(k/alpha) is taken in exact rational
    arithmetic.  Intended as a desk-scale test oracle: the enumeration
    refuses to run past `budget` subsets.
    """
    if isinstance(alpha, float):
        raise TypeError("alpha must be exact (int or Fraction)")
    if any(c.parity != 0 for c in graph_system.constraints):
        raise ValueError("star closure expects an all-parity-0 system")
    cap = int(Fraction(k) / Fraction(alpha)) if alpha > 0 else 0
    cap = min(cap, len(graph_system.constraints))
    total = sum(comb(len(graph_system.constraints), i) for i in range(cap + 1))
    if total > budget:
        raise BudgetExceededError(f"{total} subsets exceed the budget {budget}")
    masks = [c.mask for c in graph_system.constraints]
    found: set[int] = set()
    for size in range(cap + 1):
        for combo in itertools.combinations(masks, size):
            m = 0
            for x in combo:
                m ^= x
            if m.bit_count() <= k:
                found.add(m)
    return XorSystem(
        graph_system.variables,
        tuple(XorConstraint(_mask_to_support(m), 0) for m in found),
    )


# ---------------------------------------------------------------------------
# satisfiability


def gauss_satisfiable(system: XorSystem) -> dict[int, int] | None:
    """Eliminate over GF(2); a satisfying total assignment, or None.

    Free variables are set to 0, so the result is deterministic.
    """
    n = system.num_variables
    rows = [(c.mask, c.parity) for c in system.constraints]
    pivots: list[tuple[int, int, int]] = []  # (pivot var, mask, parity)
    for mask, parity in rows:
        for pv, pmask, pparity in pivots:
            if (mask >> pv) & 1:
                mask ^= pmask
                parity ^= pparity
        if mask == 0:
            if parity == 1:
                return None
            continue
        pivots.append((mask.bit_length() - 1, mask, parity))
    assignment = {i: 0 for i in range(n)}
    for pv, mask, parity in sorted(pivots, reverse=True):
        s = 0
        rest = mask & ~(1 << pv)
        while rest:
            low = rest & -rest
            s ^= assignment[low.bit_length() - 1]
            rest ^= low
        assignment[pv] = s ^ parity
    return assignment


# ---------------------------------------------------------------------------
# text format
#
#   vars x1 x2 x3
#   constraint 1 x1 x2
#
# '#' comments and blank lines are ignored; the printer is canonical.


def system_to_text(system: XorSystem) -> str:
    lines = ["vars " + " ".join(system.variables) if system.variables else "vars"]
    for c in system.constraints:
        names = [system.variables[i] for i in c.support]
        lines.append(" ".join(["constraint", str(c.parity), *names]))
    return "\n".join(lines) + "\n"


def system_from_text(text: str) -> XorSystem:
    lines = []
    for raw in text.splitlines():
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            lines.append(stripped)
    if not lines or lines[0].split()[0] != "vars":
        raise FormatError("expected a leading 'vars' line")
    variables = tuple(lines[0].split()[1:])
    index = {name: i for i, name in enumerate(variables)}
    constraints = []
    for line in lines[1:]:
        parts = line.split()
        if parts[0] != "constraint" or len(parts) < 2:
            raise FormatError(f"bad line {line!r}")
        try:
            parity = int(parts[1])
        except ValueError as exc:
            raise FormatError(f"bad parity in {line!r}") from exc
        try:
            support = [index[name] for name in parts[2:]]
        except KeyError as exc:
            raise FormatError(f"unknown variable {exc.args[0]!r}") from exc
        constraints.append((support, parity))
    try:
        return XorSystem.make(variables, constraints)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
