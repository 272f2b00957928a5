"""Render the benchmark radar charts from the result tables in tests/data.

    python scripts/radar_figures.py --output figures/
"""

import argparse
from pathlib import Path

from zsir.radar import load_metrics, render_radar, spec_from_metrics

DATA = Path(__file__).resolve().parents[1] / "tests" / "data"

FIGURES = [
    # (file, metrics table, metric, baseline, models, title)
    ("ndcg_main.svg", "main_results.tsv", "ndcg_cut.10", "BM25",
     ["uniCOIL", "SPLADE", "TAS-B", "Contriever"], "nDCG@10 relative to BM25"),
    ("recall_main.svg", "main_results.tsv", "recall.100", "BM25",
     ["uniCOIL", "SPLADE", "TAS-B", "Contriever"], "Recall@100 relative to BM25"),
    ("ndcg_bm25_variants.svg", "variants.tsv", "ndcg_cut.10", "BM25 multifield",
     ["BM25 flat", "BM25 flat-wp"], "BM25 variants, nDCG@10"),
    ("ndcg_tasb_passages.svg", "variants.tsv", "ndcg_cut.10", "BM25 multifield",
     ["TAS-B FirstP", "TAS-B MaxP (10/5)", "TAS-B MaxP (8/4)"], "TAS-B long-document handling, nDCG@10"),
    ("ndcg_hybrid.svg", "variants.tsv", "ndcg_cut.10", "BM25 multifield",
     ["Contriever", "SPLADE", "Hybrid"], "Hybrid fusion, nDCG@10"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--output", default="figures", help="directory for the SVG files")
    ap.add_argument("--mode", default="ratio", choices=["ratio", "additive"])
    args = ap.parse_args()
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for name, table, metric, baseline, models, title in FIGURES:
        metrics = load_metrics(DATA / table, metric)
        spec = spec_from_metrics(metrics, baseline, models, title=title, mode=args.mode)
        (out / name).write_text(render_radar(spec), encoding="utf-8")
        print(out / name)


if __name__ == "__main__":
    main()
