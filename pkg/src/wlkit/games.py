"""The bounded-round pebbled assignment game on an XOR system, solved exactly.

Positions are partial assignments of at most k variables, encoded as a pair
of bitmasks (domain, values).  One round: Falsifier keeps a sub-assignment
X' of the current domain and pebbles a fresh variable x with |X' + x| <= k;
Verifier answers with a bit.  Falsifier wins a play once the current
assignment violates a constraint.

`analyze_game` computes, for every position at once, the least round budget
that lets Falsifier force a win, by the monotone fixpoint
    W_0   = positions violating some constraint,
    W_t+1 = W_t + positions with a legal move whose both answers land in W_t.
The sweep uses seed pairs: a (sub-assignment, fresh variable) pair becomes a
seed once both of its one-bit extensions are winning, and a position is
winning one round later iff some restriction of it matches a seed on a
variable outside its domain.  Positions with fewer than k pebbles are
distinct from their extensions, because dropping pebbles is a legal part of
a move and the fixpoint must range over all of them.

`bounded_minimax` is an independent exact solver (plain game-tree search
with memoization).  It accepts a move hint so that instances far above the
position-enumeration budget can still be decided when a good strategy is
known; the result is exact either way, only the running time changes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Iterable, Mapping, Sequence

from . import generators
from .errors import BudgetExceededError
from .xorcsp import XorConstraint, XorSystem, closure_bounded, violates

__all__ = [
    "GameAnalysis",
    "analyze_game",
    "falsifier_wins",
    "min_falsifier_rounds",
    "verifier_survival_certificate",
    "bounded_minimax",
    "PlayMove",
    "PlayTranscript",
    "layered_descent_move",
    "layered_move_hint",
    "layered_falsifier_play",
    "strategy_wins_all_replies",
    "optimal_verifier",
    "fixpoint_transcript",
    "position_count",
]

Move = tuple[int, frozenset[int]]
MoveFn = Callable[[dict[int, int]], Move | None]
VerifierFn = Callable[[dict[int, int], int, frozenset[int]], int]


def position_count(num_variables: int, k: int) -> int:
    return sum(comb(num_variables, i) * 2**i for i in range(k + 1))


def _as_masks(assignment: Mapping[int, int]) -> tuple[int, int]:
    dm = vm = 0
    for x, b in assignment.items():
        dm |= 1 << x
        if b:
            vm |= 1 << x
    return dm, vm


def _mask_assignment(dm: int, vm: int) -> dict[int, int]:
    out = {}
    while dm:
        low = dm & -dm
        x = low.bit_length() - 1
        out[x] = (vm >> x) & 1
        dm ^= low
    return out


@dataclass
class GameAnalysis:
    """Result of the full fixpoint: winning rounds for every position."""

    num_variables: int
    k: int
    win_round: dict[tuple[int, int], int]
    rounds_computed: int
    saturated: bool

    def winning_round(self, assignment: Mapping[int, int]) -> int | None:
        return self.win_round.get(_as_masks(assignment))


def _violated_mask(dm: int, vm: int, constraints: Sequence[tuple[int, int]]) -> bool:
    for cm, cp in constraints:
        if cm & ~dm == 0 and ((vm & cm).bit_count() & 1) != cp:
            return True
    return False


def analyze_game(
    system: XorSystem,
    k: int,
    max_rounds: int | None = None,
    budget: int = 10**7,
) -> GameAnalysis:
    """Exact winning rounds for every position with at most k pebbles.

    Refuses when the position space exceeds `budget`.  Without `max_rounds`
    the fixpoint runs until saturation, so a missing entry means Falsifier
    never wins from that position.
    """
    n = system.num_variables
    total = position_count(n, k)
    if total > budget:
        raise BudgetExceededError(
            f"{total} game positions exceed the budget {budget}"
        )
    constraints = system.masks()
    positions: list[tuple[int, int]] = []
    for size in range(k + 1):
        for dom in itertools.combinations(range(n), size):
            dm = 0
            for x in dom:
                dm |= 1 << x
            vm = dm
            while True:
                positions.append((dm, vm))
                if vm == 0:
                    break
                vm = (vm - 1) & dm

    win: dict[tuple[int, int], int] = {}
    for pos in positions:
        if _violated_mask(*pos, constraints):
            win[pos] = 0

    partial: dict[tuple[int, int, int], int] = {}
    active: dict[tuple[int, int], int] = {}

    def absorb(new_positions: Iterable[tuple[int, int]]) -> None:
        for dm, vm in new_positions:
            rest = dm
            while rest:
                low = rest & -rest
                rest ^= low
                x = low.bit_length() - 1
                key = (dm ^ low, vm & ~low, x)
                seen = partial.get(key, 0) | (1 << ((vm >> x) & 1))
                partial[key] = seen
                if seen == 3:
                    gkey = (dm ^ low, vm & ~low)
                    active[gkey] = active.get(gkey, 0) | low

    absorb(win)
    pending = [p for p in positions if p not in win]
    rounds = 0
    saturated = not pending
    while pending and (max_rounds is None or rounds < max_rounds):
        new: list[tuple[int, int]] = []
        still: list[tuple[int, int]] = []
        for pos in pending:
            dm, vm = pos
            won = False
            g = dm
            while True:
                if g.bit_count() <= k - 1:
                    xm = active.get((g, vm & g))
                    if xm is not None and xm & ~dm:
                        won = True
                        break
                if g == 0:
                    break
                g = (g - 1) & dm
            (new if won else still).append(pos)
        if not new:
            saturated = True
            break
        rounds += 1
        for pos in new:
            win[pos] = rounds
        absorb(new)
        pending = still
        if not pending:
            saturated = True
    return GameAnalysis(n, k, win, rounds, saturated)


def falsifier_wins(
    system: XorSystem,
    beta0: Mapping[int, int],
    k: int,
    rounds: int | None = None,
    budget: int = 10**7,
) -> bool:
    """Exact: can Falsifier force a violation from `beta0` within `rounds`
    (unbounded when None)?"""
    if len(beta0) > k:
        raise ValueError("initial assignment uses more than k pebbles")
    analysis = analyze_game(system, k, max_rounds=rounds, budget=budget)
    wr = analysis.winning_round(beta0)
    if wr is None:
        return False
    return rounds is None or wr <= rounds


def min_falsifier_rounds(
    system: XorSystem,
    beta0: Mapping[int, int],
    k: int,
    r_max: int | None = None,
    budget: int = 10**7,
) -> int | None:
    """Least round budget that makes `beta0` a Falsifier win; None if there
    is none within r_max (or at all, when r_max is None)."""
    if len(beta0) > k:
        raise ValueError("initial assignment uses more than k pebbles")
    analysis = analyze_game(system, k, max_rounds=r_max, budget=budget)
    return analysis.winning_round(beta0)


def verifier_survival_certificate(
    system: XorSystem, beta: Mapping[int, int], k: int, rounds: int
) -> bool:
    """Sufficient certificate that Verifier survives `rounds` rounds from
    `beta`: the assignment violates nothing in the `rounds`-fold attractor
    iterate of the system.  False is inconclusive."""
    if len(beta) > k:
        raise ValueError("assignment uses more than k pebbles")
    closed = closure_bounded(system, k, rounds)
    return not any(violates(beta, c) for c in closed.constraints)


# ---------------------------------------------------------------------------
# independent bounded game-tree solver


def bounded_minimax(
    system: XorSystem,
    beta0: Mapping[int, int],
    k: int,
    rounds: int,
    move_hint: Callable[[int, int], Sequence[tuple[int, int]]] | None = None,
    node_budget: int = 10**6,
) -> bool:
    """Exact bounded-round result by direct game-tree search.

    `move_hint(dommask, valmask)` may propose (variable, keepmask) moves to
    try first; correctness never depends on it.  Raises when more than
    `node_budget` nodes get expanded.
    """
    if len(beta0) > k:
        raise ValueError("initial assignment uses more than k pebbles")
    constraints = system.masks()
    n = system.num_variables
    memo: dict[tuple[int, int, int], bool] = {}
    nodes = 0

    def moves(dm: int, vm: int):
        seen = set()
        if move_hint is not None:
            for x, keep in move_hint(dm, vm):
                if (dm >> x) & 1 or keep & ~dm or keep.bit_count() > k - 1:
                    continue
                seen.add((x, keep))
                yield x, keep
        for x in range(n):
            if (dm >> x) & 1:
                continue
            g = dm
            while True:
                if g.bit_count() <= k - 1 and (x, g) not in seen:
                    yield x, g
                if g == 0:
                    break
                g = (g - 1) & dm

    def rec(dm: int, vm: int, depth: int) -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > node_budget:
            raise BudgetExceededError(f"game tree exceeded {node_budget} nodes")
        if _violated_mask(dm, vm, constraints):
            return True
        if depth == 0:
            return False
        key = (dm, vm, depth)
        if key in memo:
            return memo[key]
        result = False
        for x, keep in moves(dm, vm):
            bit = 1 << x
            if all(
                rec(keep | bit, (vm & keep) | (bit if b else 0), depth - 1)
                for b in (0, 1)
            ):
                result = True
                break
        memo[key] = result
        return result

    dm, vm = _as_masks(beta0)
    return rec(dm, vm, rounds)


# ---------------------------------------------------------------------------
# the descent strategy on layered graphs


def layered_descent_move(
    layered: "generators.LayeredGraph", x_ell: int, assignment: Mapping[int, int]
) -> Move | None:
    """Falsifier's next move under the layer-descent strategy.

    Invariant: either nothing is pebbled yet (pebble the top variable), or
    some pebbled variable of value 1 sits in layer i >= 1; then its unique
    same-layer constraint is assembled one variable at a time, keeping only
    the variables of that constraint.  Once the constraint is complete it is
    either violated or hands the strategy a 1-valued variable one layer
    down.  Returns None when the current assignment already violates.
    """
    m = layered.m
    ones = [v for v, b in assignment.items() if b == 1]
    if not ones:
        if x_ell not in assignment:
            return (x_ell, frozenset())
        return None  # top variable pinned to 0: violation, nothing to do
    x = min(ones, key=lambda v: (v // m, v))
    layer = x // m
    if layer == 0:
        return None  # violates the layer-0 anchor constraint
    w = (layer - 1) * m + (x % m)
    target = set(layered.adjacency[w])
    missing = sorted(v for v in target if v not in assignment)
    if not missing:
        return None  # constraint complete: violated, or a deeper 1 exists
    keep = frozenset(v for v in assignment if v in target)
    return (missing[0], keep)


def layered_move_hint(
    layered: "generators.LayeredGraph", x_ell: int
) -> Callable[[int, int], list[tuple[int, int]]]:
    """Adapt the descent strategy to the bounded_minimax hint interface."""

    def hint(dm: int, vm: int) -> list[tuple[int, int]]:
        mv = layered_descent_move(layered, x_ell, _mask_assignment(dm, vm))
        if mv is None:
            return []
        x, keep = mv
        keepmask = 0
        for v in keep:
            keepmask |= 1 << v
        return [(x, keepmask)]

    return hint


@dataclass(frozen=True)
class PlayMove:
    pebbled: int
    kept: tuple[int, ...]
    reply: int
    position: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class PlayTranscript:
    """One full play: Falsifier's moves, Verifier's replies, the outcome."""

    initial: tuple[tuple[int, int], ...]
    moves: tuple[PlayMove, ...]
    violated: XorConstraint | None

    def validate(self, system: XorSystem, k: int) -> None:
        """Raise unless every move is legal and the outcome claim is right."""
        position = dict(self.initial)
        if len(position) > k:
            raise ValueError("initial position uses more than k pebbles")
        for mv in self.moves:
            if mv.pebbled in position:
                raise ValueError(f"variable {mv.pebbled} was already pebbled")
            if not set(mv.kept) <= set(position):
                raise ValueError("kept variables must come from the position")
            if len(mv.kept) + 1 > k:
                raise ValueError("move exceeds the pebble bound")
            position = {v: position[v] for v in mv.kept}
            position[mv.pebbled] = mv.reply
            if dict(mv.position) != position:
                raise ValueError("recorded position does not match the move")
        if self.violated is not None:
            if not violates(position, self.violated):
                raise ValueError("final position does not violate the claimed constraint")
            if self.violated not in system.constraints:
                raise ValueError("claimed constraint is not part of the system")

    def to_json(self, system: XorSystem) -> dict:
        names = system.variables

        def named(position):
            return [[names[v], b] for v, b in position]

        return {
            "initial": named(self.initial),
            "moves": [
                {
                    "pebble": names[mv.pebbled],
                    "keep": [names[v] for v in mv.kept],
                    "reply": mv.reply,
                    "position": named(mv.position),
                }
                for mv in self.moves
            ],
            "violated": None
            if self.violated is None
            else {
                "support": [names[v] for v in self.violated.support],
                "parity": self.violated.parity,
            },
        }


def _first_violated(assignment: Mapping[int, int], system: XorSystem) -> XorConstraint | None:
    for c in system.constraints:
        if violates(assignment, c):
            return c
    return None


def layered_falsifier_play(
    layered: "generators.LayeredGraph",
    x_ell: int,
    k: int,
    verifier: VerifierFn,
) -> PlayTranscript:
    """Play the descent strategy from {x_ell -> 1} against `verifier` on the
    layered system (layer constraints plus the layer-0 anchors).

    The strategy is adaptive: each move consumes the previous reply.  The
    returned transcript is legal and ends in a violated constraint after at
    most 1 + ell * max_degree Falsifier moves, whatever the verifier does.
    """
    max_deg = max(len(nb) for nb in layered.adjacency)
    if max_deg > k:
        raise ValueError(f"a constraint of size {max_deg} exceeds {k} pebbles")
    system = generators.layered_ground_system(layered)
    assignment = {x_ell: 1}
    moves: list[PlayMove] = []
    cap = 1 + layered.ell * max_deg
    for _ in range(cap + 1):
        hit = _first_violated(assignment, system)
        if hit is not None:
            transcript = PlayTranscript(
                ((x_ell, 1),), tuple(moves), hit
            )
            transcript.validate(system, k)
            return transcript
        mv = layered_descent_move(layered, x_ell, assignment)
        if mv is None:
            raise RuntimeError("descent strategy stalled without a violation")
        x, keep = mv
        reply = int(verifier(dict(assignment), x, keep))
        if reply not in (0, 1):
            raise ValueError("verifier must answer 0 or 1")
        assignment = {v: assignment[v] for v in keep}
        assignment[x] = reply
        moves.append(
            PlayMove(x, tuple(sorted(keep)), reply, tuple(sorted(assignment.items())))
        )
    raise RuntimeError(f"no violation within {cap} moves")


def strategy_wins_all_replies(
    system: XorSystem,
    k: int,
    initial: Mapping[int, int],
    move_fn: MoveFn,
    max_moves: int,
) -> bool:
    """Walk every Verifier reply string against a deterministic Falsifier
    strategy; True iff every branch reaches a violation within `max_moves`.

    A True result is an exact proof that Falsifier wins the `max_moves`-round
    game from `initial` (the strategy is exhibited and checked against every
    possible opponent).  False only says this strategy is insufficient.
    """

    def rec(assignment: dict[int, int], depth: int) -> bool:
        if _first_violated(assignment, system) is not None:
            return True
        if depth == 0:
            return False
        mv = move_fn(assignment)
        if mv is None:
            return False
        x, keep = mv
        if x in assignment or not keep <= assignment.keys() or len(keep) + 1 > k:
            raise ValueError("strategy proposed an illegal move")
        for b in (0, 1):
            nxt = {v: assignment[v] for v in keep}
            nxt[x] = b
            if not rec(nxt, depth - 1):
                return False
        return True

    return rec(dict(initial), max_moves)


def fixpoint_transcript(
    analysis: GameAnalysis, system: XorSystem, beta0: Mapping[int, int]
) -> PlayTranscript:
    """One winning play extracted from the fixpoint: Falsifier always moves
    so that both answers strictly decrease the winning round, Verifier
    delays as long as possible."""
    if not analysis.win_round:
        raise ValueError("no winning positions to extract a play from")
    k = analysis.k
    n = analysis.num_variables
    assignment = dict(beta0)
    wr = analysis.winning_round(assignment)
    if wr is None:
        raise ValueError("the initial position is not a Falsifier win")
    moves: list[PlayMove] = []
    initial = tuple(sorted(assignment.items()))
    while True:
        hit = _first_violated(assignment, system)
        if hit is not None:
            transcript = PlayTranscript(initial, tuple(moves), hit)
            transcript.validate(system, k)
            return transcript
        dm, vm = _as_masks(assignment)
        target = analysis.win_round[(dm, vm)]
        best = None
        for x in range(n):
            if (dm >> x) & 1:
                continue
            g = dm
            while True:
                if g.bit_count() <= k - 1:
                    bit = 1 << x
                    rounds = [
                        analysis.win_round.get((g | bit, (vm & g) | (bit if b else 0)))
                        for b in (0, 1)
                    ]
                    if all(r is not None and r < target for r in rounds):
                        best = (x, g, rounds)
                        break
                if g == 0:
                    break
                g = (g - 1) & dm
            if best is not None:
                break
        if best is None:
            raise RuntimeError("fixpoint inconsistency: no round-decreasing move")
        x, g, rounds = best
        reply = int(rounds[1] >= rounds[0])  # Verifier delays
        kept = tuple(v for v in sorted(assignment) if (g >> v) & 1)
        assignment = {v: assignment[v] for v in kept}
        assignment[x] = reply
        moves.append(PlayMove(x, kept, reply, tuple(sorted(assignment.items()))))


def optimal_verifier(analysis: GameAnalysis) -> VerifierFn:
    """A Verifier that maximally delays Falsifier, read off the fixpoint."""

    def verify(assignment: dict[int, int], x: int, keep: frozenset[int]) -> int:
        best_bit, best_score = 0, -1
        for b in (0, 1):
            child = {v: assignment[v] for v in keep}
            child[x] = b
            wr = analysis.winning_round(child)
            score = float("inf") if wr is None else wr
            if score > best_score:
                best_bit, best_score = b, score
        return best_bit

    return verify
