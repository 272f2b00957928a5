"""BM25-flat on the public SciFact test split.

Downloads the dataset unless --data points at an extracted copy holding
corpus.jsonl, queries.jsonl and qrels/test.tsv, then reports nDCG@10 next to
the published flat-BM25 value of 0.679.

    python scripts/reproduce_scifact.py --data ~/beir/scifact
"""

import argparse
import io
import sys
import time
import urllib.error
import urllib.request
import zipfile
from pathlib import Path

from zsir.data import load_corpus, load_qrels, load_queries, write_run
from zsir.evaluation import ndcg_at, recall_at
from zsir.lexical import batch_search, build_lexical_index

URL = "https://public.ukp.informatik.tu-darmstadt.de/thakur/BEIR/datasets/scifact.zip"
PUBLISHED = 0.679
TOLERANCE = 0.02


def fetch(dest: Path) -> Path:
    print(f"downloading {URL}", file=sys.stderr)
    with urllib.request.urlopen(URL, timeout=60) as r:
        zipfile.ZipFile(io.BytesIO(r.read())).extractall(dest)
    return dest / "scifact"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", type=Path, help="extracted SciFact directory")
    ap.add_argument("--cache", type=Path, default=Path("data"), help="download location")
    ap.add_argument("--run", type=Path, help="also write the run file here")
    ap.add_argument("--threads", type=int, default=4)
    args = ap.parse_args()

    root = args.data
    if root is None:
        root = args.cache / "scifact"
        if not (root / "corpus.jsonl").exists():
            try:
                root = fetch(args.cache)
            except urllib.error.URLError as e:
                print(f"cannot download SciFact ({e.reason}); pass --data to an extracted copy",
                      file=sys.stderr)
                return 2
    t0 = time.perf_counter()
    index = build_lexical_index(load_corpus(root / "corpus.jsonl"), field_mode="flat")
    qrels = load_qrels(root / "qrels" / "test.tsv")
    queries = [q for q in load_queries(root / "queries.jsonl") if q.id in qrels]
    run = batch_search(lambda q: index.search(q.text, 1000), queries, args.threads, "bm25-flat")
    ndcg = ndcg_at(run, qrels, 10).aggregate
    recall = recall_at(run, qrels, 100).aggregate
    elapsed = time.perf_counter() - t0
    if args.run:
        write_run(run, args.run)
    print(f"docs={index.doc_count} queries={len(queries)} time={elapsed:.1f}s")
    print(f"nDCG@10={ndcg:.4f} (published {PUBLISHED}, diff {ndcg - PUBLISHED:+.4f})  R@100={recall:.4f}")
    return 0 if abs(ndcg - PUBLISHED) <= TOLERANCE else 1


if __name__ == "__main__":
    sys.exit(main())
