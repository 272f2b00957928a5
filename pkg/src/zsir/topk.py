"""Deterministic top-k selection shared by the index backends."""

from __future__ import annotations

import numpy as np


def id_ranks(doc_ids: list[str]) -> np.ndarray:
    """Position of each doc id in ascending string order (the tie-break key)."""
    order = sorted(range(len(doc_ids)), key=doc_ids.__getitem__)
    ranks = np.empty(len(doc_ids), dtype=np.int64)
    ranks[order] = np.arange(len(doc_ids))
    return ranks


def select(scores: np.ndarray, candidates: np.ndarray, tiekey: np.ndarray, k: int) -> np.ndarray:
    """Return up to ``k`` candidate ordinals ordered by score desc, tiekey asc.

    Exact under ties: everything scoring at least the k-th best value is kept
    before the final lexicographic sort.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if candidates.size == 0:
        return candidates
    cs = scores[candidates]
    if candidates.size > k:
        kth = np.partition(cs, cs.size - k)[cs.size - k]
        keep = cs >= kth
        candidates, cs = candidates[keep], cs[keep]
    order = np.lexsort((tiekey[candidates], -cs))
    return candidates[order[:k]]
