import json
import time
from datetime import datetime, timedelta, timezone

import pytest
from fastapi.testclient import TestClient

from conftest import ideal_run_text, make_board_qrels
from zsir.data import Hit, parse_run
from zsir.leaderboard import protocol as P
from zsir.leaderboard.service import LeaderboardService, ServiceConfig, create_app, load_qrels_store
from zsir.registry import registry

T0 = datetime(2026, 3, 1, 12, tzinfo=timezone.utc)
SPECS = registry()


class Clock:
    def __init__(self, now=T0):
        self.now = now

    def __call__(self):
        return self.now

    def advance(self, **kw):
        self.now += timedelta(**kw)


def all_runs(qrels, depth=10, extra=None, override=None):
    runs = {s.slug: ideal_run_text(s.slug, qrels[s.slug], depth, extra) for s in SPECS}
    runs.update(override or {})
    return runs


def kinds(report):
    return sorted({p.kind for p in report.problems})


# protocol


def test_depth_bounds(board_qrels):
    ok = P.validate_submission(all_runs(board_qrels, 100), SPECS, board_qrels)
    assert ok.ok
    deep = all_runs(board_qrels, override={"nq": ideal_run_text("nq", board_qrels["nq"], 101)})
    bad = P.validate_submission(deep, SPECS, board_qrels)
    assert kinds(bad) == [P.DEPTH_OUT_OF_RANGE]
    assert {p.dataset for p in bad.problems} == {"nq"}
    shallow = all_runs(board_qrels, override={"nq": ideal_run_text("nq", board_qrels["nq"], 9)})
    assert kinds(P.validate_submission(shallow, SPECS, board_qrels)) == [P.DEPTH_OUT_OF_RANGE]


def test_self_retrieval_filtered_before_depth_check(board_qrels):
    # 101 results of which one is the query itself: 100 remain, accepted
    def add_self(qid, docs):
        return docs[:1] + [qid] + docs[1:]
    runs = all_runs(board_qrels, 101, extra=add_self)
    report = P.validate_submission(runs, SPECS, board_qrels)
    assert report.ok
    assert report.self_hits_removed == 3 * 18
    hits = report.runs["scifact"]["q0"]
    assert len(hits) == 100
    assert [h.rank for h in hits] == list(range(1, 101))
    assert "q0" not in [h.doc_id for h in hits]


def test_drop_self_hits_compacts_ranks():
    hits = [Hit("a", 3, 1), Hit("q", 2, 2), Hit("b", 1, 3)]
    assert P.drop_self_hits(hits, "q") == [Hit("a", 3, 1), Hit("b", 1, 2)]


def test_unknown_query_and_missing_dataset(board_qrels):
    runs = all_runs(board_qrels)
    runs["fiqa"] += "".join(f"zz Q0 d{i} {i} {20 - i} t\n" for i in range(1, 11))
    del runs["scifact"]
    report = P.validate_submission(runs, SPECS, board_qrels)
    assert kinds(report) == [P.MISSING_DATASET, P.UNKNOWN_QUERY]
    assert any(p.query == "zz" and p.dataset == "fiqa" for p in report.problems)
    assert any(p.dataset == "scifact" for p in report.problems if p.kind == P.MISSING_DATASET)


def test_malformed_run(board_qrels):
    runs = all_runs(board_qrels, override={"nq": "q0 Q0 d1 1 0.5\n"})
    assert kinds(P.validate_submission(runs, SPECS, board_qrels)) == [P.MALFORMED_RUN]


def sub(user, hours_ago, status="scored"):
    s = P.Submission(f"s{hours_ago}", user, "m", T0 - timedelta(hours=hours_ago))
    s.status = status
    return s


def test_rate_limit_window():
    d = P.check_rate_limit("u", T0, [sub("u", 2)])
    assert not d.allowed and d.retry_after == timedelta(hours=22)
    assert P.check_rate_limit("u", T0, [sub("u", 25)]).allowed
    assert P.check_rate_limit("u", T0, [sub("u", 2, "rejected")]).allowed
    assert P.check_rate_limit("u", T0, [sub("other", 2)]).allowed
    assert not P.check_rate_limit("u", T0, [sub("u", 2, "pending")]).allowed


def parsed(runs):
    return {k: parse_run(v.splitlines()) for k, v in runs.items()}


def test_scoring_ideal_runs(board_qrels):
    e10 = P.score_submission(parsed(all_runs(board_qrels, 10)), board_qrels, SPECS)
    assert e10.macro_avg == pytest.approx(1.0)
    assert not e10.recall_available and e10.recall is None
    e100 = P.score_submission(parsed(all_runs(board_qrels, 100)), board_qrels, SPECS)
    assert e100.recall_available and e100.recall_macro_avg == pytest.approx(1.0)


def test_board_ordering_and_visibility():
    def scored(sid, macro, at, vis="public", withdrawn=False):
        s = P.Submission(sid, "u", "m", at, vis, "scored")
        s.entry = P.LeaderboardEntry(sid, "m", "u", {}, macro, False, P._ts(at))
        s.withdrawn = withdrawn
        return s
    subs = [scored("b", 0.5, T0), scored("a", 0.5, T0), scored("c", 0.5, T0 - timedelta(hours=1)),
            scored("d", 0.9, T0), scored("p", 1.0, T0, "private"), scored("w", 1.0, T0, withdrawn=True)]
    rows = P.board(subs)
    assert [r["submission_id"] for r in rows] == ["d", "c", "a", "b"]
    assert [r["position"] for r in rows] == [1, 2, 3, 4]


# service and HTTP


@pytest.fixture
def service(tmp_path):
    clock = Clock()
    cfg = ServiceConfig(data_dir=str(tmp_path / "lb"), tokens={"tok-a": "alice", "tok-b": "bob"})
    svc = LeaderboardService(cfg, qrels=make_board_qrels(), clock=clock)
    svc.clock_ctl = clock
    yield svc
    svc.close()


def files_for(runs):
    return [("files", (f"{slug}.trec", text.encode(), "text/plain")) for slug, text in runs.items()]


def post(client, token, runs, model="m", visibility="public"):
    return client.post("/api/submissions", headers={"Authorization": f"Bearer {token}"},
                       data={"model_name": model, "visibility": visibility}, files=files_for(runs))


def wait_scored(client, sid, timeout=5.0):
    end = time.monotonic() + timeout
    while time.monotonic() < end:
        body = client.get(f"/api/submissions/{sid}").json()
        if body["status"] != "pending":
            return body
        time.sleep(0.02)
    raise AssertionError("submission not scored in time")


def test_end_to_end_http(service):
    qrels = service.qrels
    t0 = time.perf_counter()
    with TestClient(create_app(service.config, service)) as client:
        r = post(client, "tok-a", all_runs(qrels), "ideal")
        assert r.status_code == 202
        body = wait_scored(client, r.json()["id"])
        assert body["status"] == "scored"
        assert body["entry"]["macro_avg"] == pytest.approx(1.0)
        board = client.get("/api/leaderboard").json()
        assert [row["model_name"] for row in board] == ["ideal"]
    assert time.perf_counter() - t0 < 5


def test_http_rate_limit_private_and_withdraw(service):
    qrels = service.qrels
    clock = service.clock_ctl
    with TestClient(create_app(service.config, service)) as client:
        assert post(client, "nope", {}).status_code == 401

        # rejected submission does not count toward the limit
        bad = post(client, "tok-a", all_runs(qrels, override={"nq": ideal_run_text("nq", qrels["nq"], 101)}))
        assert bad.status_code == 400
        assert {p["kind"] for p in bad.json()["problems"]} == {P.DEPTH_OUT_OF_RANGE}

        first = post(client, "tok-a", all_runs(qrels), "alice-1")
        assert first.status_code == 202
        clock.advance(hours=2)
        limited = post(client, "tok-a", all_runs(qrels), "alice-2")
        assert limited.status_code == 429
        assert limited.headers["Retry-After"] == str(22 * 3600)
        clock.advance(hours=23)
        assert post(client, "tok-a", all_runs(qrels), "alice-3").status_code == 202

        hidden = post(client, "tok-b", all_runs(qrels), "bob-private", visibility="private")
        assert hidden.status_code == 202
        service.drain(5)
        names = [row["model_name"] for row in client.get("/api/leaderboard").json()]
        assert sorted(names) == ["alice-1", "alice-3"]
        assert wait_scored(client, hidden.json()["id"])["visibility"] == "private"

        sid = first.json()["id"]
        assert client.delete(f"/api/submissions/{sid}", headers={"Authorization": "Bearer tok-b"}).status_code == 403
        assert client.delete(f"/api/submissions/{sid}", headers={"Authorization": "Bearer tok-a"}).status_code == 200
        assert client.delete("/api/submissions/none", headers={"Authorization": "Bearer tok-a"}).status_code == 404
        assert client.get("/api/submissions/none").status_code == 404
        assert [row["model_name"] for row in client.get("/api/leaderboard").json()] == ["alice-3"]
        assert len(client.get("/api/datasets").json()) == 18

    journal = service.root / "journal.jsonl"
    snapshot = json.loads((service.root / "board.json").read_text())
    assert P.rebuild_board(journal) == snapshot


def test_restart_replays_journal(service, tmp_path):
    service.submit("alice", "m1", all_runs(service.qrels))
    service.drain(5)
    before = service.leaderboard()
    service.close()
    again = LeaderboardService(service.config, qrels=service.qrels)
    try:
        assert again.leaderboard() == before
        assert len(before) == 1
    finally:
        again.close()


def test_pending_resumed_after_restart(tmp_path):
    cfg = ServiceConfig(data_dir=str(tmp_path / "lb"))
    qrels = make_board_qrels()
    svc = LeaderboardService(cfg, qrels=qrels)
    # simulate a crash between "created" and scoring
    svc._enqueue = lambda sid: None
    status, body = svc.submit("alice", "m", all_runs(qrels))
    assert status == 202 and svc.get(body["id"])["status"] == "pending"
    svc.close()
    svc2 = LeaderboardService(cfg, qrels=qrels)
    try:
        svc2.drain(5)
        assert svc2.get(body["id"])["status"] == "scored"
    finally:
        svc2.close()


def test_config_env_overrides(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"port": 9000, "tokens": {"t": "u"}}))
    cfg = ServiceConfig.load(p, env={"ZSIR_BIND": "0.0.0.0:8123", "ZSIR_RATE_LIMIT_HOURS": "12"})
    assert (cfg.host, cfg.port, cfg.rate_limit_hours, cfg.tokens) == ("0.0.0.0", 8123, 12.0, {"t": "u"})


def test_load_qrels_store(tmp_path):
    for s in SPECS[:-1]:
        (tmp_path / f"{s.slug}.tsv").write_text("q1\td1\t1\n")
    with pytest.raises(Exception, match="scifact"):
        load_qrels_store(tmp_path, SPECS)
    (tmp_path / "scifact.txt").write_text("q1 0 d1 1\n")
    assert load_qrels_store(tmp_path, SPECS)["scifact"] == {"q1": {"d1": 1}}
