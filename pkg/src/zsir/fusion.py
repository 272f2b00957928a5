"""Ranking transforms: min-max normalization, two-system score averaging
and MaxP passage-to-document aggregation."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from zsir.data import Hit, Ranking
from zsir.errors import DataError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FusionConfig:
    depth: int = 1000
    missing_score: float = 0.0
    weights: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError(f"fusion weights must sum to 1, got {self.weights}")


def minmax_normalize(scores: Sequence[float]) -> list[float]:
    """Map scores onto [0, 1]; a constant list maps to all ones."""
    if not scores:
        raise ValueError("cannot normalize an empty score list")
    lo, hi = min(scores), max(scores)
    if hi == lo:
        return [1.0] * len(scores)
    span = hi - lo
    return [(s - lo) / span for s in scores]


def _normalized(hits: list[Hit], depth: int) -> dict[str, float]:
    hits = hits[:depth]
    if not hits:
        return {}
    return dict(zip((h.doc_id for h in hits), minmax_normalize([h.score for h in hits])))


def hybrid_average(run_a: Ranking, run_b: Ranking, cfg: FusionConfig = FusionConfig(),
                   tag: str = "hybrid") -> tuple[Ranking, list[str]]:
    """Fuse two runs by weighted average of per-query min-max normalized scores.

    Each list is truncated to ``cfg.depth`` before normalizing. A document
    missing from one side gets ``cfg.missing_score`` for that side. Returns the
    fused ranking and a list of warnings for queries present in only one run.
    """
    wa, wb = cfg.weights
    warnings = []
    fused = {}
    for qid in sorted(set(run_a.results) | set(run_b.results)):
        na = _normalized(run_a.results.get(qid, []), cfg.depth)
        nb = _normalized(run_b.results.get(qid, []), cfg.depth)
        if qid not in run_a.results or qid not in run_b.results:
            side = "a" if qid in run_a.results else "b"
            warnings.append(f"query {qid} only in run {side}")
        fused[qid] = {d: wa * na.get(d, cfg.missing_score) + wb * nb.get(d, cfg.missing_score)
                      for d in na.keys() | nb.keys()}
    for w in warnings:
        log.warning(w)
    return Ranking.from_scores(fused, tag), warnings


def split_passage_id(pid: str, sep: str = "#") -> tuple[str, int]:
    doc, found, idx = pid.rpartition(sep)
    if not found or not doc or not idx.isdigit():
        raise DataError(f"malformed passage id {pid!r} (expected <doc_id>{sep}<index>)")
    return doc, int(idx)


def maxp_aggregate(passage_run: Ranking, separator: str = "#", k: int | None = None) -> Ranking:
    """Score each document by its best passage."""
    docs = {}
    for qid, hits in passage_run.results.items():
        best: dict[str, float] = {}
        for h in hits:
            doc, _ = split_passage_id(h.doc_id, separator)
            if doc not in best or h.score > best[doc]:
                best[doc] = h.score
        docs[qid] = best
    return Ranking.from_scores(docs, passage_run.tag, k)
