"""Corpus, topic, qrels and TREC run file I/O.

Corpora and queries use the line-delimited JSON layout of the public
benchmark distribution (``_id``, ``title``, ``text``). Qrels are accepted
either as 3-column TSV (``query-id corpus-id score``, optional header) or
as the classic 4-column ``qid 0 docid rel`` layout. Runs are the six-column
TREC format ``qid Q0 docid rank score tag``.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple

from zsir.errors import DataError, ValidationError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    text: str


@dataclass(frozen=True)
class Query:
    id: str
    text: str


class QrelSet(dict):
    """``query_id -> {doc_id: grade}``.

    ``duplicates`` counts (qid, docid) pairs that appeared more than once in
    the source file; the last occurrence wins.
    """

    duplicates: int = 0

    def relevant(self, qid: str) -> set[str]:
        return {d for d, g in self.get(qid, {}).items() if g > 0}


class Hit(NamedTuple):
    doc_id: str
    score: float
    rank: int


@dataclass
class Ranking:
    """Per-query ordered result lists plus a run tag."""

    results: dict[str, list[Hit]] = field(default_factory=dict)
    tag: str = "zsir"

    @classmethod
    def from_scores(cls, scores: Mapping[str, Mapping[str, float] | Iterable[tuple[str, float]]],
                    tag: str = "zsir", k: int | None = None) -> "Ranking":
        """Sort each query's (doc_id, score) pairs by score desc, doc_id asc and assign ranks."""
        results = {}
        for qid, pairs in scores.items():
            items = pairs.items() if isinstance(pairs, Mapping) else pairs
            ordered = sorted(items, key=lambda p: (-p[1], p[0]))
            if k is not None:
                ordered = ordered[:k]
            results[qid] = [Hit(d, float(s), i + 1) for i, (d, s) in enumerate(ordered)]
        return cls(results, tag)

    def __getitem__(self, qid: str) -> list[Hit]:
        return self.results[qid]

    def __contains__(self, qid: object) -> bool:
        return qid in self.results

    def __len__(self) -> int:
        return len(self.results)

    def queries(self) -> list[str]:
        return list(self.results)

    def scores(self, qid: str) -> dict[str, float]:
        return {h.doc_id: h.score for h in self.results.get(qid, [])}

    def validate(self, check_scores: bool = True) -> None:
        bad = []
        for qid, hits in self.results.items():
            ids = [h.doc_id for h in hits]
            if [h.rank for h in hits] != list(range(1, len(hits) + 1)):
                bad.append(f"{qid}: ranks not 1..{len(hits)}")
            elif len(set(ids)) != len(ids):
                bad.append(f"{qid}: duplicate doc ids")
            elif check_scores and any(a.score < b.score for a, b in zip(hits, hits[1:])):
                bad.append(f"{qid}: scores increase with rank")
        if bad:
            raise ValidationError("invalid ranking: " + "; ".join(bad))


def _read_jsonl(path: str | os.PathLike) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}:{lineno}: malformed record ({e.msg})") from None
            if not isinstance(rec, dict):
                raise DataError(f"{path}:{lineno}: record is not an object")
            yield lineno, rec


def load_corpus(path: str | os.PathLike) -> Iterator[Document]:
    """Stream documents in file order. Only the id set is kept in memory."""
    seen: set[str] = set()
    for lineno, rec in _read_jsonl(path):
        doc_id = rec.get("_id", rec.get("id"))
        if doc_id is None or str(doc_id) == "":
            raise DataError(f"{path}:{lineno}: missing _id")
        doc_id = str(doc_id)
        if doc_id in seen:
            raise DataError(f"{path}:{lineno}: duplicate document id {doc_id!r}")
        seen.add(doc_id)
        yield Document(doc_id, rec.get("title") or "", rec.get("text") or "")


def load_queries(path: str | os.PathLike) -> list[Query]:
    """Read topics from ``.jsonl`` (``_id``/``text``) or ``.tsv`` (``qid<TAB>text``)."""
    out: list[Query] = []
    seen: set[str] = set()
    if str(path).endswith((".tsv", ".txt")):
        with open(path, encoding="utf-8") as f:
            rows = [(i, line.rstrip("\n").split("\t", 1)) for i, line in enumerate(f, 1) if line.strip()]
        recs = []
        for lineno, parts in rows:
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected qid<TAB>text")
            recs.append((lineno, {"_id": parts[0], "text": parts[1]}))
    else:
        recs = _read_jsonl(path)
    for lineno, rec in recs:
        qid = str(rec.get("_id", rec.get("id", "")))
        if not qid:
            raise DataError(f"{path}:{lineno}: missing query id")
        if qid in seen:
            raise DataError(f"{path}:{lineno}: duplicate query id {qid!r}")
        seen.add(qid)
        out.append(Query(qid, rec.get("text") or ""))
    return out


def parse_qrels(lines: Iterable[str], source: str = "<qrels>") -> QrelSet:
    qrels = QrelSet()
    dups = 0
    for lineno, line in enumerate(lines, 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) == 3:
            qid, docid, grade = parts
        elif len(parts) == 4:
            qid, _, docid, grade = parts
        else:
            raise DataError(f"{source}:{lineno}: expected 3 or 4 columns, got {len(parts)}")
        try:
            g = int(grade)
        except ValueError:
            if lineno == 1 and not qrels and qid.lower() in ("query-id", "query_id", "qid"):
                continue  # header
            raise DataError(f"{source}:{lineno}: non-integer grade {grade!r}") from None
        judged = qrels.setdefault(qid, {})
        if docid in judged:
            dups += 1
        judged[docid] = max(g, 0)
    qrels.duplicates = dups
    if dups:
        log.warning("%s: %d duplicate judgments overwritten", source, dups)
    return qrels


def load_qrels(path: str | os.PathLike) -> QrelSet:
    with open(path, encoding="utf-8") as f:
        return parse_qrels(f, str(path))


def parse_run(lines: Iterable[str], source: str = "<run>") -> Ranking:
    """Parse TREC six-column lines; hits are ordered by their rank column."""
    rows: dict[str, list[Hit]] = {}
    tag = None
    for lineno, line in enumerate(lines, 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 6:
            raise DataError(f"{source}:{lineno}: expected 6 columns, got {len(parts)}")
        qid, _, docid, rank, score, t = parts
        try:
            hit = Hit(docid, float(score), int(rank))
        except ValueError:
            raise DataError(f"{source}:{lineno}: bad rank or score") from None
        rows.setdefault(qid, []).append(hit)
        tag = tag or t
    bad = []
    for qid, hits in rows.items():
        hits.sort(key=lambda h: h.rank)
        if [h.rank for h in hits] != list(range(1, len(hits) + 1)):
            bad.append(f"{qid} (rank gap)")
        elif len({h.doc_id for h in hits}) != len(hits):
            bad.append(f"{qid} (duplicate docid)")
    if bad:
        raise ValidationError(f"{source}: invalid queries: " + ", ".join(bad))
    return Ranking(rows, tag or "zsir")


def read_run(path: str | os.PathLike) -> Ranking:
    with open(path, encoding="utf-8") as f:
        return parse_run(f, str(path))


def format_run(ranking: Ranking) -> Iterator[str]:
    for qid, hits in ranking.results.items():
        for h in hits:
            yield f"{qid} Q0 {h.doc_id} {h.rank} {h.score:.6g} {ranking.tag}\n"


def write_run(ranking: Ranking, path: str | os.PathLike, check_scores: bool = True) -> None:
    ranking.validate(check_scores)
    with open(path, "w", encoding="utf-8") as f:
        f.writelines(format_run(ranking))
