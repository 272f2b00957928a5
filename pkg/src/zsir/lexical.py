"""Inverted indexes: BM25 over analyzed text (flat or multi-field) and an
impact index over precomputed learned-sparse term weights."""

from __future__ import annotations

import hashlib
import json
import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Iterator, Literal, Mapping

import numpy as np

from zsir import topk
from zsir.analysis import Analyzer, AnalyzerConfig
from zsir.data import Document, Hit, Query, Ranking
from zsir.errors import DataError

INDEX_FORMAT_VERSION = 1

FieldMode = Literal["flat", "multifield"]


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 0.9
    b: float = 0.4

    def __post_init__(self):
        if self.k1 < 0 or not 0 <= self.b <= 1:
            raise ValueError(f"invalid BM25 parameters k1={self.k1} b={self.b}")


def bm25_idf(df: int, n: int) -> float:
    return math.log(1 + (n - df + 0.5) / (df + 0.5))


def bm25_term_score(tf: float, doc_len: float, avg_len: float, df: int, n: int,
                    params: Bm25Params = Bm25Params()) -> float:
    """Lucene-style BM25 contribution of one term to one document."""
    if not (n >= df >= 1 and tf >= 1 and avg_len > 0):
        raise ValueError(f"BM25 precondition violated: tf={tf} df={df} N={n} avg_len={avg_len}")
    norm = params.k1 * (1 - params.b + params.b * doc_len / avg_len)
    return bm25_idf(df, n) * tf / (tf + norm)


class Postings:
    """Frozen postings for one field: term -> (ordinals, values), CSR layout."""

    def __init__(self, terms: list[str], offsets: np.ndarray, ordinals: np.ndarray,
                 values: np.ndarray, doc_lengths: np.ndarray | None = None):
        self.terms = terms
        self.slot = {t: i for i, t in enumerate(terms)}
        self.offsets = offsets
        self.ordinals = ordinals
        self.values = values
        self.doc_lengths = doc_lengths
        n = 0 if doc_lengths is None else doc_lengths.size
        self.avg_length = float(doc_lengths.mean()) if n else 0.0

    @classmethod
    def freeze(cls, lists: Mapping[str, list[tuple[int, float]]], dtype,
               doc_lengths: np.ndarray | None = None) -> "Postings":
        terms = sorted(lists)
        sizes = np.array([len(lists[t]) for t in terms], dtype=np.int64)
        offsets = np.zeros(len(terms) + 1, dtype=np.int64)
        np.cumsum(sizes, out=offsets[1:])
        ordinals = np.empty(int(offsets[-1]), dtype=np.int32)
        values = np.empty(int(offsets[-1]), dtype=dtype)
        for i, t in enumerate(terms):
            plist = lists[t]
            a, b = offsets[i], offsets[i + 1]
            ordinals[a:b] = [p[0] for p in plist]
            values[a:b] = [p[1] for p in plist]
        return cls(terms, offsets, ordinals, values, doc_lengths)

    def get(self, term: str) -> tuple[np.ndarray, np.ndarray] | None:
        i = self.slot.get(term)
        if i is None:
            return None
        a, b = self.offsets[i], self.offsets[i + 1]
        return self.ordinals[a:b], self.values[a:b]

    def df(self, term: str) -> int:
        i = self.slot.get(term)
        return 0 if i is None else int(self.offsets[i + 1] - self.offsets[i])

    def digest(self, h) -> None:
        h.update("\0".join(self.terms).encode())
        for arr in (self.offsets, self.ordinals, self.values, self.doc_lengths):
            if arr is not None:
                h.update(np.ascontiguousarray(arr).tobytes())


class InvertedIndex:
    """Term-frequency postings per field with per-field length statistics."""

    def __init__(self, fields: dict[str, Postings], doc_ids: list[str], analyzer: Analyzer,
                 field_mode: FieldMode):
        self.fields = fields
        self.doc_ids = doc_ids
        self.analyzer = analyzer
        self.field_mode = field_mode
        self.doc_count = len(doc_ids)
        self._tiekey = topk.id_ranks(doc_ids)

    @property
    def analyzer_fingerprint(self) -> str:
        return self.analyzer.fingerprint

    @property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.field_mode}\0{self.analyzer.fingerprint}\0".encode())
        h.update("\0".join(self.doc_ids).encode())
        for name in sorted(self.fields):
            h.update(name.encode())
            self.fields[name].digest(h)
        return h.hexdigest()[:16]

    def default_weights(self) -> dict[str, float]:
        return {"contents": 1.0, "title": 1.0} if self.field_mode == "multifield" else {"contents": 1.0}

    def search(self, query: str, k: int = 1000, field_weights: Mapping[str, float] | None = None,
               params: Bm25Params = Bm25Params()) -> list[Hit]:
        return search_bm25(self, query, k, field_weights, params)

    # persistence -----------------------------------------------------------
    def save(self, path: str | os.PathLike) -> None:
        out = Path(path)
        out.mkdir(parents=True, exist_ok=True)
        arrays, terms = {}, {}
        for name, p in self.fields.items():
            terms[name] = p.terms
            arrays[f"{name}.offsets"] = p.offsets
            arrays[f"{name}.ordinals"] = p.ordinals
            arrays[f"{name}.values"] = p.values
            arrays[f"{name}.lengths"] = p.doc_lengths
        np.savez(out / "postings.npz", **arrays)
        _write_json(out / "terms.json", terms)
        _write_json(out / "docids.json", self.doc_ids)
        cfg = self.analyzer.config
        if cfg.mode == "wordpiece":
            (out / "vocab.txt").write_text("\n".join(cfg.vocab) + "\n", encoding="utf-8")
        _write_json(out / "manifest.json", {
            "format_version": INDEX_FORMAT_VERSION,
            "kind": "bm25",
            "field_mode": self.field_mode,
            "fields": sorted(self.fields),
            "analyzer": {"mode": cfg.mode, "unk": cfg.unk, "fingerprint": self.analyzer.fingerprint},
            "doc_count": self.doc_count,
            "fingerprint": self.fingerprint,
        })

    @classmethod
    def load(cls, path: str | os.PathLike) -> "InvertedIndex":
        root = Path(path)
        man = read_manifest(root, "bm25")
        a = man["analyzer"]
        vocab = None
        if a["mode"] == "wordpiece":
            vocab = tuple((root / "vocab.txt").read_text(encoding="utf-8").splitlines())
        analyzer = Analyzer(AnalyzerConfig(mode=a["mode"], vocab=vocab, unk=a.get("unk", "[UNK]")))
        if analyzer.fingerprint != a["fingerprint"]:
            raise DataError(f"{root}: analyzer fingerprint mismatch")
        terms = json.loads((root / "terms.json").read_text(encoding="utf-8"))
        doc_ids = json.loads((root / "docids.json").read_text(encoding="utf-8"))
        with np.load(root / "postings.npz") as z:
            fields = {name: Postings(terms[name], z[f"{name}.offsets"], z[f"{name}.ordinals"],
                                     z[f"{name}.values"], z[f"{name}.lengths"])
                      for name in man["fields"]}
        return cls(fields, doc_ids, analyzer, man["field_mode"])


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, ensure_ascii=False, indent=1), encoding="utf-8")


def read_manifest(root: Path, kind: str | None = None) -> dict:
    try:
        man = json.loads((Path(root) / "manifest.json").read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"{root}: not an index directory (no manifest.json)") from None
    if man.get("format_version") != INDEX_FORMAT_VERSION:
        raise DataError(f"{root}: unsupported index format {man.get('format_version')}")
    if kind and man.get("kind") != kind:
        raise DataError(f"{root}: expected a {kind} index, found {man.get('kind')}")
    return man


def build_lexical_index(corpus: Iterable[Document], analyzer: Analyzer | None = None,
                        field_mode: FieldMode = "flat") -> InvertedIndex:
    """Index ``title + " " + text`` as "contents" (flat), or title and text
    as separate "title" and "contents" fields (multifield)."""
    if field_mode not in ("flat", "multifield"):
        raise ValueError(f"unknown field mode {field_mode!r}")
    analyzer = analyzer or Analyzer()
    names = ["contents", "title"] if field_mode == "multifield" else ["contents"]
    lists: dict[str, dict[str, list]] = {n: {} for n in names}
    lengths: dict[str, list[int]] = {n: [] for n in names}
    doc_ids: list[str] = []
    seen: set[str] = set()
    for ordinal, doc in enumerate(corpus):
        if doc.id in seen:
            raise DataError(f"duplicate document id {doc.id!r}")
        seen.add(doc.id)
        doc_ids.append(doc.id)
        if field_mode == "flat":
            texts = {"contents": f"{doc.title} {doc.text}" if doc.title else doc.text}
        else:
            texts = {"contents": doc.text, "title": doc.title}
        for name, text in texts.items():
            terms = analyzer(text)
            lengths[name].append(len(terms))
            for term, tf in Counter(terms).items():
                lists[name].setdefault(term, []).append((ordinal, tf))
    fields = {n: Postings.freeze(lists[n], np.int32, np.asarray(lengths[n], dtype=np.int32))
              for n in names}
    return InvertedIndex(fields, doc_ids, analyzer, field_mode)


def search_bm25(index: InvertedIndex, query: str, k: int = 1000,
                field_weights: Mapping[str, float] | None = None,
                params: Bm25Params = Bm25Params()) -> list[Hit]:
    """Weighted sum of per-field BM25 scores; top-k with doc_id tie-break, zero scores dropped."""
    if k < 1:
        raise ValueError("k must be >= 1")
    weights = dict(field_weights) if field_weights else index.default_weights()
    for name in weights:
        if name not in index.fields:
            raise DataError(f"unknown field {name!r} (index has {sorted(index.fields)})")
    qterms = Counter(index.analyzer(query))
    if not qterms or index.doc_count == 0:
        return []
    n = index.doc_count
    scores = np.zeros(n, dtype=np.float64)
    touched = np.zeros(n, dtype=bool)
    for name, w in weights.items():
        field = index.fields[name]
        for term, qtf in qterms.items():
            hit = field.get(term)
            if hit is None:
                continue
            ords, tfs = hit
            tf = tfs.astype(np.float64)
            norm = params.k1 * (1 - params.b + params.b * field.doc_lengths[ords] / field.avg_length)
            idf = bm25_idf(ords.size, n)
            scores[ords] += w * qtf * (idf * tf / (tf + norm))
            touched[ords] = True
    cand = np.flatnonzero(touched & (scores > 0))
    chosen = topk.select(scores, cand, index._tiekey, k)
    return [Hit(index.doc_ids[o], float(scores[o]), r + 1) for r, o in enumerate(chosen)]


def batch_search(search_one, queries: Iterable[Query], threads: int = 1, tag: str = "zsir") -> Ranking:
    """Run ``search_one(query) -> list[Hit]`` over topics; output ordered by query id."""
    queries = sorted(queries, key=lambda q: q.id)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(search_one, queries))
    else:
        results = [search_one(q) for q in queries]
    return Ranking({q.id: hits for q, hits in zip(queries, results)}, tag)


# Impact index ------------------------------------------------------------------

@dataclass(frozen=True)
class Quantization:
    """Fixed-point quantization: stored = min(floor(w * scale + 0.5), cap)."""
    scale: float = 100.0
    cap: int = 255

    def __call__(self, w: float) -> int:
        return min(int(math.floor(w * self.scale + 0.5)), self.cap)


class ImpactIndex:
    def __init__(self, postings: Postings, doc_ids: list[str], quantization: Quantization | None):
        self.postings = postings
        self.doc_ids = doc_ids
        self.doc_count = len(doc_ids)
        self.quantization = quantization
        self._tiekey = topk.id_ranks(doc_ids)

    @property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps(asdict(self.quantization) if self.quantization else None).encode())
        h.update("\0".join(self.doc_ids).encode())
        self.postings.digest(h)
        return h.hexdigest()[:16]

    def search(self, query_vector: Mapping[str, float], k: int = 1000) -> list[Hit]:
        return search_impact(self, query_vector, k)

    def save(self, path: str | os.PathLike) -> None:
        out = Path(path)
        out.mkdir(parents=True, exist_ok=True)
        p = self.postings
        np.savez(out / "postings.npz", offsets=p.offsets, ordinals=p.ordinals, values=p.values)
        _write_json(out / "terms.json", p.terms)
        _write_json(out / "docids.json", self.doc_ids)
        _write_json(out / "manifest.json", {
            "format_version": INDEX_FORMAT_VERSION,
            "kind": "impact",
            "quantization": asdict(self.quantization) if self.quantization else None,
            "doc_count": self.doc_count,
            "fingerprint": self.fingerprint,
        })

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ImpactIndex":
        root = Path(path)
        man = read_manifest(root, "impact")
        terms = json.loads((root / "terms.json").read_text(encoding="utf-8"))
        doc_ids = json.loads((root / "docids.json").read_text(encoding="utf-8"))
        with np.load(root / "postings.npz") as z:
            postings = Postings(terms, z["offsets"], z["ordinals"], z["values"])
        q = man["quantization"]
        return cls(postings, doc_ids, Quantization(**q) if q else None)


def load_sparse_vectors(path: str | os.PathLike) -> Iterator[tuple[str, dict[str, float]]]:
    """Read ``{"id": ..., "vector": {term: weight}}`` records."""
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                vid, vec = str(rec["id"]), rec["vector"]
            except (json.JSONDecodeError, KeyError, TypeError):
                raise DataError(f"{path}:{lineno}: expected {{\"id\", \"vector\"}} record") from None
            if not isinstance(vec, dict):
                raise DataError(f"{path}:{lineno}: sparse vector must map term -> weight")
            try:
                yield vid, {str(t): float(w) for t, w in vec.items()}
            except (TypeError, ValueError):
                raise DataError(f"{path}:{lineno}: non-numeric weight") from None


def build_impact_index(vectors: Iterable[tuple[str, Mapping[str, float]]],
                       quantization: Quantization | None = Quantization()) -> ImpactIndex:
    lists: dict[str, list] = {}
    doc_ids: list[str] = []
    seen: set[str] = set()
    for ordinal, (vid, vec) in enumerate(vectors):
        if vid in seen:
            raise DataError(f"duplicate vector id {vid!r}")
        seen.add(vid)
        doc_ids.append(vid)
        for term, w in vec.items():
            if w < 0 or math.isnan(w):
                raise DataError(f"{vid}: negative weight {w} for term {term!r}")
            stored = quantization(w) if quantization else w
            if stored > 0:
                lists.setdefault(term, []).append((ordinal, stored))
    dtype = np.int32 if quantization else np.float64
    return ImpactIndex(Postings.freeze(lists, dtype), doc_ids, quantization)


def search_impact(index: ImpactIndex, query_vector: Mapping[str, float], k: int = 1000) -> list[Hit]:
    """Sparse dot product; integer arithmetic when the index is quantized."""
    if k < 1:
        raise ValueError("k must be >= 1")
    q = index.quantization
    dtype = np.int64 if q else np.float64
    scores = np.zeros(index.doc_count, dtype=dtype)
    for term, w in query_vector.items():
        qw = q(w) if q else w
        if qw == 0:
            continue
        hit = index.postings.get(term)
        if hit is None:
            continue
        ords, vals = hit
        scores[ords] += qw * vals.astype(dtype)
    cand = np.flatnonzero(scores > 0)
    chosen = topk.select(scores, cand, index._tiekey, k)
    return [Hit(index.doc_ids[o], float(scores[o]), r + 1) for r, o in enumerate(chosen)]
