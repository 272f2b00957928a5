"""Flat dense-vector store with exact inner-product top-k search.

Packed binary layout (``vectors.bin``, all little-endian)::

    magic   4 bytes  b"ZSDV"
    version u32      1
    dim     u32
    count   u64
    rows    count * dim float32, row-major
    ids     count * (u32 byte length + UTF-8 bytes)
"""

from __future__ import annotations

import json
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from zsir import topk
from zsir.data import Hit
from zsir.errors import DataError

MAGIC = b"ZSDV"
_HEADER = struct.Struct("<4sIIQ")
BLOCK_ROWS = 4096


class DenseVectorStore:
    def __init__(self, values: np.ndarray, doc_ids: list[str]):
        self.values = np.ascontiguousarray(values, dtype=np.float32)
        self.doc_ids = doc_ids
        self.count, self.dim = self.values.shape
        self._tiekey = topk.id_ranks(doc_ids)

    def search(self, query: Sequence[float], k: int = 1000, threads: int = 1) -> list[Hit]:
        return search_dense(self, query, k, threads)

    def save(self, path: str | os.PathLike) -> None:
        out = Path(path)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "vectors.bin", "wb") as f:
            f.write(_HEADER.pack(MAGIC, 1, self.dim, self.count))
            f.write(self.values.astype("<f4").tobytes())
            for d in self.doc_ids:
                b = d.encode("utf-8")
                f.write(struct.pack("<I", len(b)) + b)
        (out / "manifest.json").write_text(json.dumps(
            {"format_version": 1, "kind": "dense", "dim": self.dim, "doc_count": self.count}, indent=1))

    @classmethod
    def load(cls, path: str | os.PathLike) -> "DenseVectorStore":
        p = Path(path)
        if p.is_dir():
            p = p / "vectors.bin"
        buf = p.read_bytes()
        magic, version, dim, count = _HEADER.unpack_from(buf)
        if magic != MAGIC or version != 1:
            raise DataError(f"{p}: not a dense vector file")
        off = _HEADER.size
        values = np.frombuffer(buf, dtype="<f4", count=dim * count, offset=off).reshape(count, dim)
        off += 4 * dim * count
        ids = []
        for _ in range(count):
            (n,) = struct.unpack_from("<I", buf, off)
            ids.append(buf[off + 4:off + 4 + n].decode("utf-8"))
            off += 4 + n
        return cls(values.copy(), ids)


def load_dense_vectors(path: str | os.PathLike) -> Iterator[tuple[str, list[float]]]:
    """Read ``{"id": ..., "vector": [f0, f1, ...]}`` records."""
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                vid, vec = str(rec["id"]), rec["vector"]
            except (json.JSONDecodeError, KeyError, TypeError):
                raise DataError(f"{path}:{lineno}: expected {{\"id\", \"vector\"}} record") from None
            if not isinstance(vec, list):
                raise DataError(f"{path}:{lineno}: dense vector must be a list of floats")
            yield vid, vec


def build_dense_index(vectors: Iterable[tuple[str, Sequence[float]]]) -> DenseVectorStore:
    rows: list[np.ndarray] = []
    ids: list[str] = []
    seen: set[str] = set()
    dim = None
    for vid, vec in vectors:
        if vid in seen:
            raise DataError(f"duplicate vector id {vid!r}")
        seen.add(vid)
        try:
            row = np.asarray(vec, dtype=np.float64)
        except (TypeError, ValueError):
            raise DataError(f"{vid}: vector is not numeric") from None
        if row.ndim != 1:
            raise DataError(f"{vid}: vector must be one-dimensional")
        if dim is None:
            dim = row.size
        elif row.size != dim:
            raise DataError(f"{vid}: dimension {row.size} does not match {dim}")
        if not np.all(np.isfinite(row)) or not np.all(np.isfinite(row.astype(np.float32))):
            raise DataError(f"{vid}: non-finite value")
        rows.append(row.astype(np.float32))
        ids.append(vid)
    values = np.stack(rows) if rows else np.zeros((0, dim or 0), dtype=np.float32)
    return DenseVectorStore(values, ids)


def _scan(store: DenseVectorStore, q: np.ndarray, blocks: Sequence[int], k: int, rows: int):
    """Top-k (ordinals, scores) over the given row blocks."""
    best = np.empty(0, dtype=np.int64)
    best_scores = np.empty(0, dtype=np.float64)
    for blk in blocks:
        a = blk * rows
        b = min(a + rows, store.count)
        s = store.values[a:b].astype(np.float64) @ q
        cand = np.concatenate([best, np.arange(a, b)])
        scores = np.concatenate([best_scores, s])
        local = topk.select(scores, np.arange(cand.size), store._tiekey[cand], k)
        best, best_scores = cand[local], scores[local]
    return best, best_scores


def search_dense(store: DenseVectorStore, query: Sequence[float], k: int = 1000,
                 threads: int = 1, block_rows: int = BLOCK_ROWS) -> list[Hit]:
    """Exact inner-product top-k; ties broken by doc_id ascending.

    Rows are scored in fixed global blocks of ``block_rows``. With
    ``threads > 1`` whole blocks are dealt to workers and the partial top-k
    lists are merged under the same total order, so every row's score and the
    final ranking are bit-identical to the sequential scan.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if store.count == 0:
        return []
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (store.dim,):
        raise DataError(f"query dimension {q.size} does not match store dimension {store.dim}")
    nblocks = -(-store.count // block_rows)
    parts = max(1, min(threads, nblocks))
    if parts == 1:
        results = [_scan(store, q, range(nblocks), k, block_rows)]
    else:
        groups = [range(nblocks)[i::parts] for i in range(parts)]
        with ThreadPoolExecutor(parts) as ex:
            results = list(ex.map(lambda g: _scan(store, q, g, k, block_rows), groups))
    ords = np.concatenate([r[0] for r in results])
    scores = np.concatenate([r[1] for r in results])
    order = topk.select(scores, np.arange(ords.size), store._tiekey[ords], k)
    return [Hit(store.doc_ids[ords[i]], float(scores[i]), r + 1) for r, i in enumerate(order)]
