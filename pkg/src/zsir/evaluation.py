"""trec_eval-compatible nDCG@k and recall@k, plus the benchmark macro-average.

Conventions follow ``trec_eval -m ndcg_cut.k`` / ``-m recall.k``:

* linear gain, DCG@k = sum_i rel_i / log2(i + 1), unjudged docs gain 0;
* the ideal DCG uses all judged grades sorted descending, cut at k;
* queries whose judgments are all 0 are not evaluated;
* ``complete_set`` (``-c``) scores qrels queries missing from the run as 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

from zsir.data import QrelSet, Ranking
from zsir.registry import DatasetSpec, registry as default_registry
from zsir.errors import DataError


@dataclass
class EvalReport:
    metric: str
    per_query: dict[str, float] = field(default_factory=dict)
    aggregate: float = 0.0
    num_queries_evaluated: int = 0

    def format(self, per_query: bool = False) -> str:
        """Text layout of trec_eval: ``metric<TAB>qid<TAB>value``."""
        lines = []
        if per_query:
            lines += [f"{self.metric:<22}\t{q}\t{v:.4f}" for q, v in self.per_query.items()]
        lines.append(f"{self.metric:<22}\tall\t{self.aggregate:.4f}")
        return "\n".join(lines)


def _dcg(gains) -> float:
    return sum(g / math.log2(i + 2) for i, g in enumerate(gains))


def _ndcg_one(doc_ids: list[str], judged: Mapping[str, int], k: int) -> float:
    idcg = _dcg(sorted((g for g in judged.values() if g > 0), reverse=True)[:k])
    if idcg == 0:
        return 0.0
    return _dcg(max(judged.get(d, 0), 0) for d in doc_ids[:k]) / idcg


def _recall_one(doc_ids: list[str], judged: Mapping[str, int], k: int) -> float:
    relevant = {d for d, g in judged.items() if g > 0}
    if not relevant:
        return 0.0
    return len(relevant.intersection(doc_ids[:k])) / len(relevant)


def _evaluate(name: str, fn: Callable, run: Ranking, qrels: Mapping[str, Mapping[str, int]],
              k: int, complete_set: bool) -> EvalReport:
    if k < 1:
        raise ValueError("k must be >= 1")
    per_query = {}
    for qid in sorted(qrels):
        judged = qrels[qid]
        if not any(g > 0 for g in judged.values()):
            continue
        if qid in run.results:
            per_query[qid] = fn([h.doc_id for h in run.results[qid]], judged, k)
        elif complete_set:
            per_query[qid] = 0.0
    agg = math.fsum(per_query.values()) / len(per_query) if per_query else 0.0
    return EvalReport(name, per_query, agg, len(per_query))


def ndcg_at(run: Ranking, qrels: Mapping[str, Mapping[str, int]], k: int = 10,
            complete_set: bool = True) -> EvalReport:
    return _evaluate(f"ndcg_cut_{k}", _ndcg_one, run, qrels, k, complete_set)


def recall_at(run: Ranking, qrels: Mapping[str, Mapping[str, int]], k: int = 100,
              complete_set: bool = True) -> EvalReport:
    return _evaluate(f"recall_{k}", _recall_one, run, qrels, k, complete_set)


METRICS = {"ndcg_cut": ndcg_at, "recall": recall_at}


def evaluate(run: Ranking, qrels: QrelSet, metric: str, complete_set: bool = True) -> EvalReport:
    """Evaluate by trec_eval-style name, e.g. ``ndcg_cut.10`` or ``recall.100``."""
    name, _, cutoff = metric.replace("_", ".").rpartition(".")
    name = {"ndcg.cut": "ndcg_cut"}.get(name, name)
    if name not in METRICS or not cutoff.isdigit():
        raise ValueError(f"unsupported metric {metric!r} (use ndcg_cut.K or recall.K)")
    return METRICS[name](run, qrels, int(cutoff), complete_set)


def macro_average(per_dataset: Mapping[str, float], registry: list[DatasetSpec] | None = None) -> float:
    """Unweighted mean over every registry dataset; keys may be names or slugs.

    Partial coverage is refused rather than averaged.
    """
    specs = registry if registry is not None else default_registry()
    values, missing = [], []
    for spec in specs:
        if spec.slug in per_dataset:
            values.append(per_dataset[spec.slug])
        elif spec.name in per_dataset:
            values.append(per_dataset[spec.name])
        else:
            missing.append(spec.name)
    if missing:
        raise DataError("macro average needs all datasets; missing: " + ", ".join(missing))
    return math.fsum(values) / len(values)
