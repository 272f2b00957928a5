"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from zsir.errors import DataError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("zsir")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _kv_weights(pairs: list[str] | None) -> dict[str, float] | None:
    if not pairs:
        return None
    out = {}
    for p in pairs:
        name, eq, val = p.partition("=")
        try:
            if not eq or not name:
                raise ValueError
            out[name] = float(val)
        except ValueError:
            raise UsageError(f"--fields expects name=weight, got {p!r}") from None
    return out


def _quantization(spec: str):
    from zsir.lexical import Quantization

    if spec == "none":
        return None
    scale, _, cap = spec.partition(":")
    try:
        return Quantization(float(scale), int(cap) if cap else 255)
    except ValueError:
        raise UsageError(f"--quantize expects none or SCALE[:CAP], got {spec!r}") from None


def cmd_index(args) -> int:
    from zsir.analysis import Analyzer
    from zsir.data import load_corpus
    from zsir.dense import build_dense_index, load_dense_vectors
    from zsir.lexical import build_impact_index, build_lexical_index, load_sparse_vectors

    if args.mode.startswith("bm25"):
        if args.analyzer == "wordpiece" and not args.vocab:
            raise UsageError("--analyzer wordpiece requires --vocab")
        try:
            analyzer = Analyzer.from_mode(args.analyzer, args.vocab)
        except ValueError as e:
            raise DataError(str(e)) from None
        index = build_lexical_index(load_corpus(args.corpus), analyzer, args.mode.split("-")[1])
        index.save(args.output)
        print(f"bm25 index: {index.doc_count} docs, fields={sorted(index.fields)}, "
              f"analyzer={analyzer.config.mode}, fingerprint={index.fingerprint} -> {args.output}")
    elif args.mode == "impact":
        index = build_impact_index(load_sparse_vectors(args.corpus), _quantization(args.quantize))
        index.save(args.output)
        print(f"impact index: {index.doc_count} docs, {len(index.postings.terms)} terms, "
              f"quantization={args.quantize}, fingerprint={index.fingerprint} -> {args.output}")
    else:
        store = build_dense_index(load_dense_vectors(args.corpus))
        store.save(args.output)
        print(f"dense index: {store.count} vectors, dim={store.dim} -> {args.output}")
    return EXIT_OK


def cmd_search(args) -> int:
    from zsir.data import Query, load_queries, write_run
    from zsir.dense import DenseVectorStore, load_dense_vectors
    from zsir.lexical import Bm25Params, ImpactIndex, InvertedIndex, batch_search, \
        load_sparse_vectors, read_manifest

    if args.hits < 1:
        raise UsageError("--hits must be >= 1")
    kind = read_manifest(Path(args.index))["kind"]
    if kind == "bm25":
        index = InvertedIndex.load(args.index)
        weights = _kv_weights(args.fields)
        params = Bm25Params(args.k1, args.b)
        queries = load_queries(args.topics)
        if weights:  # fail before searching
            index.search("", 1, weights)
        run = batch_search(lambda q: index.search(q.text, args.hits, weights, params),
                           queries, args.threads, args.tag)
    else:
        vectors = dict(load_sparse_vectors(args.topics) if kind == "impact" else load_dense_vectors(args.topics))
        queries = [Query(qid, "") for qid in vectors]
        if kind == "impact":
            index = ImpactIndex.load(args.index)
            run = batch_search(lambda q: index.search(vectors[q.id], args.hits), queries, args.threads, args.tag)
        else:
            store = DenseVectorStore.load(args.index)
            run = batch_search(lambda q: store.search(vectors[q.id], args.hits), queries, 1, args.tag)
    if args.maxp:
        from zsir.fusion import maxp_aggregate

        run = maxp_aggregate(run, args.separator, args.hits)
    write_run(run, args.output)
    n = sum(len(h) for h in run.results.values())
    print(f"wrote {n} results for {len(run)} queries -> {args.output}")
    return EXIT_OK


def cmd_segment(args) -> int:
    from zsir.analysis import Analyzer, WindowConfig, first_p, segment_document
    from zsir.data import load_corpus

    try:
        cfg = WindowConfig(args.window, args.stride)
    except ValueError as e:
        raise UsageError(str(e)) from None
    analyzer = Analyzer.from_mode(args.analyzer, args.vocab) if args.first_p else None
    n_docs = n_out = 0
    with open(args.output, "w", encoding="utf-8") as out:
        for doc in load_corpus(args.corpus):
            n_docs += 1
            if args.first_p:
                recs = [{"_id": doc.id, "title": doc.title, "text": first_p(doc.text, args.first_p, analyzer)}]
            else:
                recs = [{"_id": p.passage_id(args.separator), "title": doc.title, "text": p.text}
                        for p in segment_document(doc.id, doc.text, cfg)]
            for r in recs:
                out.write(json.dumps(r, ensure_ascii=False) + "\n")
            n_out += len(recs)
    print(f"{n_docs} documents -> {n_out} records -> {args.output}")
    return EXIT_OK


def cmd_maxp(args) -> int:
    from zsir.data import read_run, write_run
    from zsir.fusion import maxp_aggregate

    write_run(maxp_aggregate(read_run(args.run), args.separator, args.hits), args.output)
    return EXIT_OK


def cmd_fuse(args) -> int:
    from zsir.data import read_run, write_run
    from zsir.fusion import FusionConfig, hybrid_average

    try:
        cfg = FusionConfig(args.depth, args.missing_score, tuple(args.weights))
    except ValueError as e:
        raise UsageError(str(e)) from None
    fused, warnings = hybrid_average(read_run(args.run_a), read_run(args.run_b), cfg, args.tag)
    if args.hits:
        fused = type(fused)({q: h[:args.hits] for q, h in fused.results.items()}, fused.tag)
    write_run(fused, args.output)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args) -> int:
    from zsir.data import load_qrels, read_run
    from zsir.evaluation import evaluate

    qrels = load_qrels(args.qrels)
    run = read_run(args.run)
    for metric in args.metric or ["ndcg_cut.10"]:
        try:
            report = evaluate(run, qrels, metric, complete_set=args.complete)
        except ValueError as e:
            raise UsageError(str(e)) from None
        print(report.format(per_query=args.per_query))
    return EXIT_OK


def cmd_radar(args) -> int:
    from zsir.radar import load_metrics, render_radar, spec_from_metrics

    metrics = load_metrics(args.metrics, args.metric)
    spec = spec_from_metrics(metrics, args.baseline, args.models, radius=args.radius,
                             title=args.title or "", mode=args.mode)
    Path(args.output).write_text(render_radar(spec), encoding="utf-8")
    print(f"radar chart -> {args.output}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from zsir.leaderboard.service import ServiceConfig, serve

    cfg = ServiceConfig.load(args.config)
    if args.data_dir:
        cfg.data_dir = args.data_dir
    if args.port:
        cfg.port = args.port
    serve(cfg)
    return EXIT_OK


def cmd_submit(args) -> int:
    import httpx

    files = []
    for p in args.runs:
        path = Path(p)
        files.append(("files", (path.name, path.read_bytes(), "text/plain")))
    data = {"model_name": args.model_name, "visibility": args.visibility}
    headers = {"Authorization": f"Bearer {args.token}"}
    base = args.url.rstrip("/")
    try:
        with httpx.Client(timeout=args.timeout) as client:
            r = client.post(f"{base}/api/submissions", data=data, files=files, headers=headers)
            body = r.json()
            if r.status_code not in (200, 202):
                print(json.dumps(body, indent=1), file=sys.stderr)
                return EXIT_DATA
            sid = body["id"]
            print(f"submission {sid}: {body['status']}")
            deadline = time.monotonic() + args.wait
            while args.wait and body.get("status") == "pending" and time.monotonic() < deadline:
                time.sleep(0.5)
                body = client.get(f"{base}/api/submissions/{sid}").json()
            if args.wait:
                print(json.dumps(body, indent=1))
    except httpx.HTTPError as e:
        print(f"error: cannot reach leaderboard at {base}: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="zsir", description="Zero-shot retrieval benchmarking toolkit.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("index", help="build a BM25, impact or dense index")
    s.add_argument("--corpus", required=True, help="corpus .jsonl (bm25) or vector .jsonl (impact, dense)")
    s.add_argument("--output", required=True, help="index directory to create")
    s.add_argument("--mode", required=True, choices=["bm25-flat", "bm25-multifield", "impact", "dense"])
    s.add_argument("--analyzer", default="english", choices=["english", "wordpiece", "whitespace"],
                   help="text analyzer for bm25 modes (default: english)")
    s.add_argument("--vocab", help="wordpiece vocabulary file, one token per line")
    s.add_argument("--quantize", default="100:255",
                   help="impact weight quantization: none or SCALE[:CAP] (default: 100:255)")
    s.set_defaults(func=cmd_index)

    s = sub.add_parser("search", help="batch retrieval over a topic file, TREC run output")
    s.add_argument("--index", required=True, help="index directory")
    s.add_argument("--topics", required=True, help="queries .jsonl/.tsv (bm25) or query vectors .jsonl")
    s.add_argument("--output", required=True, help="run file to write")
    s.add_argument("--hits", type=int, default=1000, help="results per query (default: 1000)")
    s.add_argument("--fields", nargs="+", metavar="FIELD=W",
                   help="per-field weights, e.g. contents=1.0 title=1.0")
    s.add_argument("--bm25", action="store_true", help="BM25 ranking (the only lexical model; accepted for parity)")
    s.add_argument("--k1", type=float, default=0.9, help="BM25 k1 (default: 0.9)")
    s.add_argument("--b", type=float, default=0.4, help="BM25 b (default: 0.4)")
    s.add_argument("--threads", type=int, default=1, help="worker threads (default: 1)")
    s.add_argument("--tag", default="zsir", help="run tag (default: zsir)")
    s.add_argument("--maxp", action="store_true", help="aggregate passage hits to documents by max score")
    s.add_argument("--separator", default="#", help="passage id separator for --maxp (default: #)")
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("segment", help="split a corpus into sliding sentence windows or FirstP prefixes")
    s.add_argument("--corpus", required=True, help="corpus .jsonl")
    s.add_argument("--output", required=True, help="passage corpus .jsonl to write")
    s.add_argument("--window", type=int, default=10, help="sentences per window (default: 10)")
    s.add_argument("--stride", type=int, default=5, help="window stride in sentences (default: 5)")
    s.add_argument("--separator", default="#", help="passage id separator (default: #)")
    s.add_argument("--first-p", type=int, metavar="N", help="instead of windows, keep the first N tokens")
    s.add_argument("--analyzer", default="whitespace", choices=["english", "wordpiece", "whitespace"],
                   help="tokenizer counting --first-p tokens (default: whitespace)")
    s.add_argument("--vocab", help="wordpiece vocabulary for --analyzer wordpiece")
    s.set_defaults(func=cmd_segment)

    s = sub.add_parser("maxp", help="aggregate a passage run to documents (max passage score)")
    s.add_argument("--run", required=True, help="passage-level run file")
    s.add_argument("--output", required=True, help="document-level run file to write")
    s.add_argument("--separator", default="#", help="passage id separator (default: #)")
    s.add_argument("--hits", type=int, default=None, help="truncate each query to this many docs")
    s.set_defaults(func=cmd_maxp)

    s = sub.add_parser("fuse", help="min-max normalized score averaging of two runs")
    s.add_argument("--run-a", required=True, help="first run file (e.g. dense)")
    s.add_argument("--run-b", required=True, help="second run file (e.g. sparse)")
    s.add_argument("--output", required=True, help="fused run file to write")
    s.add_argument("--depth", type=int, default=1000, help="per-run truncation before fusion (default: 1000)")
    s.add_argument("--weights", type=float, nargs=2, default=[0.5, 0.5], metavar=("WA", "WB"),
                   help="convex weights (default: 0.5 0.5)")
    s.add_argument("--missing-score", type=float, default=0.0,
                   help="normalized score for a doc absent from one run (default: 0)")
    s.add_argument("--hits", type=int, default=None, help="truncate fused lists to this many docs")
    s.add_argument("--tag", default="hybrid", help="run tag (default: hybrid)")
    s.set_defaults(func=cmd_fuse)

    s = sub.add_parser("eval", help="trec_eval-style nDCG@k / recall@k")
    s.add_argument("-c", dest="complete", action="store_true",
                   help="average over all qrels queries; missing queries score 0")
    s.add_argument("-m", dest="metric", action="append", metavar="METRIC",
                   help="ndcg_cut.K or recall.K (repeatable; default ndcg_cut.10)")
    s.add_argument("-q", dest="per_query", action="store_true", help="also print per-query values")
    s.add_argument("qrels", help="qrels file (3-col TSV or 4-col TREC)")
    s.add_argument("run", help="TREC run file")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("radar", help="render an SVG radar chart from a metrics file")
    s.add_argument("--metrics", required=True, help="model/dataset/score .tsv or .jsonl")
    s.add_argument("--metric", help="metric to plot when the file holds several (e.g. ndcg_cut.10)")
    s.add_argument("--baseline", required=True, help="baseline model name (drawn at half radius)")
    s.add_argument("--models", nargs="*", help="models to plot (default: all others)")
    s.add_argument("--output", required=True, help="SVG file to write")
    s.add_argument("--mode", default="ratio", choices=["ratio", "additive"],
                   help="radial scaling relative to the baseline (default: ratio)")
    s.add_argument("--radius", type=float, default=200.0, help="chart radius in px (default: 200)")
    s.add_argument("--title", help="chart title")
    s.set_defaults(func=cmd_radar)

    s = sub.add_parser("serve", help="run the leaderboard HTTP service")
    s.add_argument("--config", help="JSON config file (ZSIR_* environment variables override)")
    s.add_argument("--data-dir", help="override data directory")
    s.add_argument("--port", type=int, help="override port")
    s.set_defaults(func=cmd_serve)

    s = sub.add_parser("submit", help="upload run files to a leaderboard service")
    s.add_argument("--url", default="http://127.0.0.1:8000", help="service base URL")
    s.add_argument("--token", required=True, help="bearer token")
    s.add_argument("--model-name", required=True, help="name shown on the board")
    s.add_argument("--visibility", default="public", choices=["public", "private"])
    s.add_argument("--wait", type=float, default=0, help="seconds to poll for the score (default: 0)")
    s.add_argument("--timeout", type=float, default=30, help="HTTP timeout in seconds (default: 30)")
    s.add_argument("runs", nargs="+", help="run files named <dataset-slug>.trec")
    s.set_defaults(func=cmd_submit)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"zsir: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError, json.JSONDecodeError, UnicodeDecodeError) as e:
        print(f"zsir: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"zsir: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
