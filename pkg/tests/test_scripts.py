import json
import shutil
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def script(name, *args, **kw):
    return subprocess.run([sys.executable, str(ROOT / "scripts" / name), *map(str, args)],
                          capture_output=True, text=True, timeout=120, **kw)


def test_radar_figures(tmp_path):
    proc = script("radar_figures.py", "--output", tmp_path)
    assert proc.returncode == 0, proc.stderr
    svgs = sorted(tmp_path.glob("*.svg"))
    assert len(svgs) == 5
    for p in svgs:
        ET.parse(p)


def test_leaderboard_demo(tmp_path):
    proc = script("leaderboard_demo.py", "--data-dir", tmp_path, "--queries", "3")
    assert proc.returncode == 0, proc.stderr
    rows = [json.loads(l) for l in proc.stdout.splitlines() if l.startswith("{")]
    assert [r["model_name"] for r in rows] == ["ideal", "shuffled"]
    assert rows[0]["macro_avg"] > rows[1]["macro_avg"]


def test_scifact_script_on_local_layout(tmp_path):
    # demo files arranged like the public download; only the plumbing is checked
    root = tmp_path / "scifact"
    (root / "qrels").mkdir(parents=True)
    shutil.copy(ROOT / "demo" / "corpus.jsonl", root / "corpus.jsonl")
    shutil.copy(ROOT / "demo" / "qrels.tsv", root / "qrels" / "test.tsv")
    with open(root / "queries.jsonl", "w") as f:
        for line in (ROOT / "demo" / "queries.tsv").read_text().splitlines():
            qid, text = line.split("\t")
            f.write(json.dumps({"_id": qid, "text": text}) + "\n")
    proc = script("reproduce_scifact.py", "--data", root, "--run", tmp_path / "run.trec")
    assert proc.returncode in (0, 1), proc.stderr
    assert "nDCG@10=0.8801" in proc.stdout
    assert (tmp_path / "run.trec").exists()
