"""Submission protocol: validation, scoring, rate limiting and the
append-only journal from which the public board is derived."""

from __future__ import annotations

import json
import os
import threading
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from zsir.data import Hit, QrelSet, Ranking, parse_run
from zsir.errors import DataError
from zsir.evaluation import macro_average, ndcg_at, recall_at
from zsir.registry import DatasetSpec, lookup

DEPTH_OUT_OF_RANGE = "DepthOutOfRange"
UNKNOWN_QUERY = "UnknownQuery"
MISSING_DATASET = "MissingDataset"
MALFORMED_RUN = "MalformedRun"


@dataclass
class Problem:
    kind: str
    dataset: str
    detail: str
    query: str | None = None


@dataclass
class ValidationReport:
    problems: list[Problem] = field(default_factory=list)
    runs: dict[str, Ranking] = field(default_factory=dict)
    self_hits_removed: int = 0

    @property
    def ok(self) -> bool:
        return not self.problems

    def summary(self) -> list[dict]:
        return [asdict(p) for p in self.problems]


def drop_self_hits(hits: list[Hit], qid: str) -> list[Hit]:
    """Remove results whose doc id equals the query id and renumber ranks."""
    kept = [h for h in hits if h.doc_id != qid]
    return [Hit(h.doc_id, h.score, i + 1) for i, h in enumerate(kept)]


def _resolve(name: str, specs: list[DatasetSpec]) -> DatasetSpec | None:
    for s in specs:
        if name in (s.slug, s.name):
            return s
    try:
        spec = lookup(name)
    except KeyError:
        return None
    return spec if spec in specs else None


def validate_submission(runs: Mapping[str, Ranking | str], registry: list[DatasetSpec],
                        qrels_store: Mapping[str, QrelSet],
                        query_ids: Mapping[str, set[str]] | None = None,
                        min_depth: int = 10, max_depth: int = 100) -> ValidationReport:
    """Check a submission dataset by dataset.

    Self-retrieved documents are filtered first; the depth rule is applied to
    what remains. ``runs`` values may be parsed rankings or raw TREC text.
    Keys may be dataset slugs or display names; the report's ``runs`` are
    keyed by slug.
    """
    report = ValidationReport()
    for key, run in runs.items():
        spec = _resolve(key, registry)
        if spec is None:
            report.problems.append(Problem(MALFORMED_RUN, key, "unknown dataset"))
            continue
        if isinstance(run, str):
            try:
                run = parse_run(run.splitlines(), spec.slug)
            except DataError as e:
                report.problems.append(Problem(MALFORMED_RUN, spec.slug, str(e)))
                continue
        known = query_ids[spec.slug] if query_ids and spec.slug in query_ids \
            else set(qrels_store.get(spec.slug, {}))
        filtered = {}
        for qid, hits in run.results.items():
            if qid not in known:
                report.problems.append(Problem(UNKNOWN_QUERY, spec.slug, "query not in dataset", qid))
                continue
            kept = drop_self_hits(hits, qid)
            report.self_hits_removed += len(hits) - len(kept)
            if not min_depth <= len(kept) <= max_depth:
                report.problems.append(Problem(
                    DEPTH_OUT_OF_RANGE, spec.slug,
                    f"{len(kept)} results; need {min_depth}..{max_depth}", qid))
            filtered[qid] = kept
        report.runs[spec.slug] = Ranking(filtered, run.tag)
    for spec in registry:
        if spec.slug not in report.runs and not any(p.dataset == spec.slug for p in report.problems):
            report.problems.append(Problem(MISSING_DATASET, spec.slug, f"no run for {spec.name}"))
    return report


@dataclass
class LeaderboardEntry:
    submission_id: str
    model_name: str
    user: str
    ndcg: dict[str, float]
    macro_avg: float
    recall_available: bool
    submitted_at: str
    recall: dict[str, float] | None = None
    recall_macro_avg: float | None = None


def score_submission(runs: Mapping[str, Ranking], qrels_store: Mapping[str, QrelSet],
                     registry: list[DatasetSpec], *, submission_id: str = "", model_name: str = "",
                     user: str = "", submitted_at: str = "", recall_depth: int = 100) -> LeaderboardEntry:
    """nDCG@10 per dataset (complete-set), macro-averaged over the registry.

    Recall@100 is reported only when every query in every dataset returned
    exactly ``recall_depth`` results.
    """
    ndcg, recall = {}, {}
    full_depth = True
    for spec in registry:
        run, qrels = runs[spec.slug], qrels_store[spec.slug]
        ndcg[spec.slug] = ndcg_at(run, qrels, 10, complete_set=True).aggregate
        recall[spec.slug] = recall_at(run, qrels, recall_depth, complete_set=True).aggregate
        full_depth &= all(len(h) == recall_depth for h in run.results.values())
    return LeaderboardEntry(
        submission_id, model_name, user, ndcg, macro_average(ndcg, registry), full_depth, submitted_at,
        recall if full_depth else None, macro_average(recall, registry) if full_depth else None)


# Journal ---------------------------------------------------------------------

def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def _ts(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).isoformat()


@dataclass
class Submission:
    id: str
    user: str
    model_name: str
    created_at: datetime
    visibility: str = "public"
    status: str = "pending"
    reasons: list[dict] = field(default_factory=list)
    entry: LeaderboardEntry | None = None
    diagnostic: str | None = None
    withdrawn: bool = False

    def public_view(self) -> dict:
        d = {"id": self.id, "user": self.user, "model_name": self.model_name,
             "created_at": _ts(self.created_at), "visibility": self.visibility,
             "status": self.status, "withdrawn": self.withdrawn}
        if self.reasons:
            d["problems"] = self.reasons
        if self.entry:
            d["entry"] = asdict(self.entry)
        if self.diagnostic:
            d["diagnostic"] = self.diagnostic
        return d


def apply_event(state: dict[str, Submission], ev: dict) -> None:
    """Fold one journal event into ``state`` (used for both live updates and replay)."""
    kind, sid = ev["type"], ev["id"]
    if kind == "created":
        state[sid] = Submission(sid, ev["user"], ev["model_name"],
                                datetime.fromisoformat(ev["created_at"]), ev.get("visibility", "public"))
        return
    sub = state[sid]
    if kind == "rejected" and sub.status == "pending":
        sub.status, sub.reasons = "rejected", ev["problems"]
    elif kind == "scored" and sub.status == "pending":
        sub.status, sub.entry, sub.diagnostic = "scored", LeaderboardEntry(**ev["entry"]), None
    elif kind == "failed" and sub.status == "pending":
        sub.diagnostic = ev["diagnostic"]
    elif kind == "withdrawn":
        sub.withdrawn = True


class Journal:
    """Append-only line-delimited event log; appends are serialized."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def append(self, event: dict) -> None:
        line = json.dumps(event, sort_keys=True, ensure_ascii=False) + "\n"
        with self._lock, open(self.path, "a", encoding="utf-8") as f:
            f.write(line)
            f.flush()
            os.fsync(f.fileno())

    def events(self) -> Iterator[dict]:
        if not self.path.exists():
            return
        with open(self.path, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    yield json.loads(line)

    def replay(self) -> dict[str, Submission]:
        state: dict[str, Submission] = {}
        for ev in self.events():
            apply_event(state, ev)
        return state


def board(submissions: Iterable[Submission]) -> list[dict]:
    """Public scored entries: macro desc, then earlier submission, then id."""
    entries = [s.entry for s in submissions
               if s.status == "scored" and s.visibility == "public" and not s.withdrawn and s.entry]
    entries.sort(key=lambda e: (-e.macro_avg, e.submitted_at, e.submission_id))
    return [dict(asdict(e), position=i + 1) for i, e in enumerate(entries)]


def rebuild_board(journal_path: str | os.PathLike) -> list[dict]:
    return board(Journal(journal_path).replay().values())


def write_snapshot(path: str | os.PathLike, rows: list[dict]) -> None:
    """Atomically replace the materialized board."""
    path = Path(path)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}.{threading.get_ident()}")
    tmp.write_text(json.dumps(rows, indent=1, sort_keys=True), encoding="utf-8")
    os.replace(tmp, path)


@dataclass(frozen=True)
class RateDecision:
    allowed: bool
    retry_after: timedelta = timedelta(0)


def check_rate_limit(user: str, now: datetime, submissions: Iterable[Submission],
                     window: timedelta = timedelta(hours=24)) -> RateDecision:
    """Rolling window: one non-rejected submission per user per ``window``."""
    recent = [s.created_at for s in submissions
              if s.user == user and s.status != "rejected" and now - window < s.created_at <= now]
    if not recent:
        return RateDecision(True)
    return RateDecision(False, max(recent) + window - now)
