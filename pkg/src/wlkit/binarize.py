"""Translate an arity-(2l-1) structure into a binary structure on l-tuples.

The binary structure lives on V^l and carries one binary relation per
realized atomic type of 2l-tuples: the pair (s, t) of l-tuples belongs to
the relation of the type of their concatenation.  Those relations partition
(V^l)^2.  Dimension-2 refinement on the translation simulates dimension-k
refinement on the original (k = 2l - 1): pulling the stable 2-dimensional
coloring back through

    chi(v_1..v_k) = chi2((v_1..v_l), (v_{l+1}..v_k, v_k))

yields a k-stable coloring refining the atomic types, with the last entry
duplicated to fill the second l-tuple.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DistinguishResult,
    RelationalStructure,
    TupleColoring,
    Vocabulary,
    _type_feature_matrix,
    joint_distinguish,
    stabilize,
)

__all__ = [
    "BinStructure",
    "bin_structure",
    "bin_pair",
    "derived_coloring",
    "TradeoffReport",
    "tradeoff_report",
]


@dataclass(frozen=True)
class BinStructure:
    """A binary translation together with its provenance."""

    base: RelationalStructure
    ell: int
    structure: RelationalStructure
    type_keys: tuple[str, ...]


def _type_key(row: np.ndarray) -> str:
    bits = np.packbits(row.astype(np.uint8))
    return "T" + bits.tobytes().hex()


def _assemble(
    base: RelationalStructure,
    ell: int,
    feats: np.ndarray,
    extra_type_keys: tuple[str, ...],
) -> BinStructure:
    n = base.universe_size
    n_bin = n**ell
    if feats.shape[0] != n_bin * n_bin:
        raise ValueError("feature matrix does not cover all 2l-tuples")
    if feats.shape[0]:
        uniq, inverse = np.unique(feats, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        class_keys = [_type_key(row) for row in uniq]
    else:
        inverse, class_keys = np.zeros(0, dtype=np.int64), []
    all_keys = sorted(set(class_keys) | set(extra_type_keys))
    buckets: dict[str, set[tuple[int, int]]] = {key: set() for key in all_keys}
    for pair_index, cls in enumerate(inverse):
        buckets[class_keys[int(cls)]].add((pair_index // n_bin, pair_index % n_bin))
    vocab = Vocabulary(tuple((key, 2) for key in all_keys))
    structure = RelationalStructure(
        vocab, n_bin, tuple(frozenset(buckets[key]) for key in all_keys)
    )
    return BinStructure(base, ell, structure, tuple(all_keys))


def bin_structure(
    base: RelationalStructure, ell: int, extra_type_keys: tuple[str, ...] = ()
) -> BinStructure:
    """Binary translation of `base` on universe V^ell.

    Relation names are canonical serializations of 2l-tuple atomic types, so
    two structures over one vocabulary produce comparable translations
    whenever they realize the same types; `extra_type_keys` forces absent
    relations into the vocabulary (used for sharing, see bin_pair).
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    feats = _type_feature_matrix([base], 2 * ell)[0]
    return _assemble(base, ell, feats, extra_type_keys)


def bin_pair(
    a: RelationalStructure, b: RelationalStructure, ell: int
) -> tuple[BinStructure, BinStructure]:
    """Translate two structures over the union of their realized type keys,
    so the results share a vocabulary and their histograms are comparable."""
    feats = _type_feature_matrix([a, b], 2 * ell)
    keys_a = {_type_key(row) for row in np.unique(feats[0], axis=0)} if feats[0].shape[0] else set()
    keys_b = {_type_key(row) for row in np.unique(feats[1], axis=0)} if feats[1].shape[0] else set()
    union = tuple(sorted(keys_a | keys_b))
    return (
        _assemble(a, ell, feats[0], union),
        _assemble(b, ell, feats[1], union),
    )


def derived_coloring(a: RelationalStructure, k: int) -> TupleColoring:
    """The k-stable coloring pulled back from the stable 2-dimensional
    coloring of the binary translation (k odd, k = 2l - 1).

    Even dimensions have no direct pullback here; lift to k + 1 instead.
    """
    if k < 3:
        raise ValueError("k must be >= 3")
    if k % 2 == 0:
        raise ValueError("k must be odd (run with k + 1 for even dimensions)")
    ell = (k + 1) // 2
    translated = bin_structure(a, ell)
    chi2 = stabilize(translated.structure, 2).final
    n = a.universe_size
    n_bin = n**ell
    idx = np.arange(n**k, dtype=np.int64)
    digits = [(idx // n ** (k - 1 - i)) % n for i in range(k)]
    left = sum(digits[i] * n ** (ell - 1 - i) for i in range(ell))
    right_digits = digits[ell:] + [digits[k - 1]]
    right = sum(right_digits[i] * n ** (ell - 1 - i) for i in range(ell))
    colors = chi2.colors[left * n_bin + right]
    uniq, inverse = np.unique(colors, return_inverse=True)
    return TupleColoring(k, n, inverse.astype(np.int64), len(uniq))


@dataclass(frozen=True)
class TradeoffReport:
    """Round counts for distinguishing directly versus on the translation."""

    k: int
    k_used: int  # k, or k + 1 when k was even
    ell: int
    k_round: int | None
    bin_round: int | None
    bin_universe: int
    consistent: bool  # high-dimensional separation implies binary separation


def tradeoff_report(a: RelationalStructure, b: RelationalStructure, k: int) -> TradeoffReport:
    """Compare dimension-k distinguishing on (a, b) against dimension-2
    distinguishing on the binary translations."""
    if k < 2:
        raise ValueError("k must be >= 2")
    k_used = k if k % 2 == 1 else k + 1
    ell = (k_used + 1) // 2
    bin_a, bin_b = bin_pair(a, b, ell)
    direct = joint_distinguish(a, b, k_used)
    translated = joint_distinguish(bin_a.structure, bin_b.structure, 2)
    consistent = (direct.round is None) or (translated.round is not None)
    return TradeoffReport(
        k,
        k_used,
        ell,
        direct.round,
        translated.round,
        bin_a.structure.universe_size,
        consistent,
    )
