import csv
import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from zsir.data import QrelSet
from zsir.registry import registry

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=300)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA = Path(__file__).parent / "data"


def read_table(name, metric=None):
    """model -> slug -> score from a tests/data TSV."""
    out = {}
    with open(DATA / name, encoding="utf-8") as f:
        for row in csv.DictReader(f, delimiter="\t"):
            if metric and row["metric"] != metric:
                continue
            out.setdefault(row["model"], {})[row["dataset"]] = float(row["score"])
    return out


@pytest.fixture
def tiny_docs():
    return {"d1": "cat sat", "d2": "cat cat dog", "d3": "dog"}


def make_board_qrels(n_queries=3, n_rel=3):
    """Small qrels for every registry dataset: q{i} has docs {slug}-q{i}-r{j} relevant."""
    store = {}
    for spec in registry():
        q = QrelSet()
        for i in range(n_queries):
            q[f"q{i}"] = {f"{spec.slug}-q{i}-r{j}": 2 - (j % 2) for j in range(n_rel)}
            q[f"q{i}"][f"{spec.slug}-q{i}-n"] = 0
        store[spec.slug] = q
    return store


def ideal_run_text(slug, qrels, depth=10, extra=None):
    """TREC text: relevant docs first (grade desc), padded with filler to ``depth``."""
    lines = []
    for qid, judged in qrels.items():
        docs = [d for d, _ in sorted(judged.items(), key=lambda kv: (-kv[1], kv[0])) if judged[d] > 0]
        if extra:
            docs = extra(qid, docs)
        docs += [f"filler-{qid}-{i}" for i in range(depth - len(docs))]
        for r, d in enumerate(docs[:max(depth, len(docs))], 1):
            lines.append(f"{qid} Q0 {d} {r} {1000 - r} test")
    return "\n".join(lines) + "\n"


@pytest.fixture
def board_qrels():
    return make_board_qrels()


def pytest_terminal_summary(terminalreporter):
    import test_acceptance as acc

    if not acc.RESULTS:
        return
    acc._skip_line()
    terminalreporter.section("acceptance criteria")
    for n in sorted(acc.RESULTS):
        terminalreporter.write_line(acc.RESULTS[n])
