import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import top_k
from zsir.dense import DenseVectorStore, build_dense_index, load_dense_vectors, search_dense
from zsir.errors import DataError


def store_of(rows):
    return build_dense_index((f"d{i:04d}", r) for i, r in enumerate(rows))


def naive(rows, q, k):
    # plain python dot products in float64 over the float32-rounded rows
    scores = {}
    for i, r in enumerate(rows):
        r32 = [float(np.float32(x)) for x in r]
        scores[f"d{i:04d}"] = sum(a * b for a, b in zip(r32, q))
    return top_k(scores, k)


def test_basic_example():
    s = build_dense_index([("a", [1, 0]), ("b", [0.5, 0.5]), ("c", [0, 1])])
    hits = search_dense(s, [1, 0.2], k=2)
    assert [(h.doc_id, round(h.score, 6)) for h in hits] == [("a", 1.0), ("b", 0.6)]


def test_ties_break_on_doc_id():
    s = build_dense_index([("z", [1.0]), ("a", [1.0]), ("m", [1.0])])
    assert [h.doc_id for h in search_dense(s, [2.0])] == ["a", "m", "z"]


def test_dimension_mismatch():
    with pytest.raises(DataError, match="b"):
        build_dense_index([("a", [1, 2]), ("b", [1, 2, 3])])
    s = build_dense_index([("a", [1, 2])])
    with pytest.raises(DataError):
        search_dense(s, [1, 2, 3])


def test_non_finite_rejected():
    with pytest.raises(DataError, match="x"):
        build_dense_index([("x", [1.0, float("nan")])])


def test_empty_store():
    assert search_dense(build_dense_index([]), [1.0, 2.0]) == []


def test_exact_against_naive_scan_1000x64():
    rng = np.random.default_rng(0)
    rows = rng.standard_normal((1000, 64))
    q = rng.standard_normal(64)
    s = store_of(rows)
    t0 = time.perf_counter()
    seq = search_dense(s, q, k=10)
    par = search_dense(s, q, k=10, threads=4, block_rows=64)
    assert time.perf_counter() - t0 < 5
    want = naive(rows.tolist(), q.tolist(), 10)
    assert [h.doc_id for h in seq] == [d for d, _ in want]
    for h, (_, score) in zip(seq, want):
        assert h.score == pytest.approx(score, rel=1e-6)
    assert seq == par


@settings(max_examples=50)
@given(st.integers(1, 300), st.integers(1, 8), st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_block_and_thread_layout_does_not_matter(n, dim, k, seed):
    rng = np.random.default_rng(seed)
    # coarse values force plenty of exact ties
    rows = rng.integers(-3, 4, size=(n, dim)).astype(float)
    q = rng.integers(-3, 4, size=dim).astype(float)
    s = store_of(rows)
    ref = search_dense(s, q, k=k)
    assert [(h.doc_id, h.score) for h in ref] == naive(rows.tolist(), q.tolist(), k)
    for threads, block in [(1, 7), (3, 7), (4, 1), (2, 1000)]:
        assert search_dense(s, q, k=k, threads=threads, block_rows=block) == ref


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.5, 2.0, 4.0]))
def test_scale_equivariance(seed, c):
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((50, 8))
    q = rng.standard_normal(8)
    s = store_of(rows)
    base = search_dense(s, q, k=10)
    scaled = search_dense(s, q * c, k=10)
    assert [h.doc_id for h in base] == [h.doc_id for h in scaled]
    assert [h.score * c for h in base] == pytest.approx([h.score for h in scaled])


def test_binary_round_trip(tmp_path):
    s = build_dense_index([("α", [0.1, -2.5]), ("b#2", [3e-8, 7.0])])
    s.save(tmp_path / "dense")
    back = DenseVectorStore.load(tmp_path / "dense")
    assert back.doc_ids == s.doc_ids
    assert back.values.tobytes() == s.values.tobytes()
    raw = (tmp_path / "dense" / "vectors.bin").read_bytes()
    assert raw[:4] == b"ZSDV"


def test_load_dense_vectors_rejects_dict(tmp_path):
    p = tmp_path / "v.jsonl"
    p.write_text('{"id": "a", "vector": {"x": 1}}\n')
    with pytest.raises(DataError):
        list(load_dense_vectors(p))
