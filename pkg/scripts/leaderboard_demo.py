"""Stand up a leaderboard over synthetic judgments and push two submissions
through it in-process: one ideal, one with shuffled rankings.

    python scripts/leaderboard_demo.py --data-dir /tmp/lb
"""

import argparse
import json
import random
import warnings
from pathlib import Path

warnings.filterwarnings("ignore", "Using `httpx` with `starlette.testclient`")

from fastapi.testclient import TestClient

from zsir.leaderboard.service import LeaderboardService, ServiceConfig, create_app
from zsir.registry import registry


def synthetic_qrels(qrels_dir: Path, n_queries: int, rng: random.Random) -> None:
    qrels_dir.mkdir(parents=True, exist_ok=True)
    for spec in registry():
        with open(qrels_dir / f"{spec.slug}.tsv", "w") as f:
            for q in range(n_queries):
                for j in range(rng.randint(1, 4)):
                    f.write(f"q{q}\t{spec.slug}-q{q}-d{j}\t{rng.randint(1, 2)}\n")


def run_text(slug: str, n_queries: int, shuffle: random.Random | None) -> str:
    lines = []
    for q in range(n_queries):
        docs = [f"{slug}-q{q}-d{j}" for j in range(4)] + [f"{slug}-other-{i}" for i in range(96)]
        if shuffle:
            shuffle.shuffle(docs)
        lines += [f"q{q} Q0 {d} {r} {100 - r} demo" for r, d in enumerate(docs, 1)]
    return "\n".join(lines) + "\n"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data-dir", type=Path, default=Path("leaderboard-demo"))
    ap.add_argument("--queries", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    synthetic_qrels(args.data_dir / "qrels", args.queries, rng)
    cfg = ServiceConfig(data_dir=str(args.data_dir / "state"), qrels_dir=str(args.data_dir / "qrels"),
                        tokens={"token-a": "alice", "token-b": "bob"})
    svc = LeaderboardService(cfg)
    with TestClient(create_app(cfg, svc)) as client:
        for token, name, shuffle in (("token-a", "ideal", None), ("token-b", "shuffled", rng)):
            files = [("files", (f"{s.slug}.trec", run_text(s.slug, args.queries, shuffle).encode(), "text/plain"))
                     for s in registry()]
            r = client.post("/api/submissions", headers={"Authorization": f"Bearer {token}"},
                            data={"model_name": name}, files=files)
            print(name, r.status_code, r.json()["status"])
        svc.drain(30)
        for row in client.get("/api/leaderboard").json():
            print(json.dumps({k: row[k] for k in ("position", "model_name", "macro_avg", "recall_macro_avg")}))


if __name__ == "__main__":
    main()
