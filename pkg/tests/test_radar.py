import math
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, strategies as st

from conftest import DATA
from zsir.errors import DataError
from zsir.radar import (
    ModelSeries, RadarSpec, axis_angle, load_metrics, radar_radius, render_radar, spec_from_metrics, vertices,
)
from zsir.registry import registry

SVG = "{http://www.w3.org/2000/svg}"
AXES = [s.name for s in registry()]
R = 200.0


@pytest.mark.parametrize("score,base,expected", [
    (0.4, 0.4, 100.0), (0.8, 0.4, 200.0), (1.2, 0.4, 200.0), (0.2, 0.4, 50.0), (0.0, 0.4, 0.0),
    (0.0, 0.0, 100.0), (0.3, 0.0, 200.0),
])
def test_ratio_radius(score, base, expected):
    assert radar_radius(score, base, R) == pytest.approx(expected)


def test_additive_radius():
    assert radar_radius(0.5, 0.5, R, "additive") == 100
    assert radar_radius(0.6, 0.5, R, "additive") == pytest.approx(120)
    assert radar_radius(0.0, 0.9, R, "additive") == 0
    assert radar_radius(0.6, 0.5, R, "additive", gain=500) == pytest.approx(150)


def test_radius_errors():
    with pytest.raises(ValueError):
        radar_radius(-0.1, 0.4, R)
    with pytest.raises(ValueError):
        radar_radius(0.1, 0.4, 0)
    with pytest.raises(ValueError):
        radar_radius(0.1, 0.4, R, "log")


def test_axis_layout():
    assert math.degrees(axis_angle(0)) == pytest.approx(90)
    assert math.degrees(axis_angle(1)) == pytest.approx(70)
    assert math.degrees(axis_angle(9)) == pytest.approx(-90)


def uniform(v):
    return {a: v for a in AXES}


@given(st.lists(st.floats(0.01, 1.0), min_size=18, max_size=18))
def test_baseline_vertices_sit_at_half_radius(scores):
    base = ModelSeries("base", dict(zip(AXES, scores)))
    spec = RadarSpec(base, [])
    for x, y, clamped in vertices(spec, base):
        assert abs(math.hypot(x - 320, y - 320) - R / 2) <= 1e-9
        assert not clamped


@given(st.lists(st.floats(0.01, 0.5), min_size=18, max_size=18))
def test_double_baseline_reaches_rim(scores):
    base = ModelSeries("base", dict(zip(AXES, scores)))
    double = ModelSeries("x2", {a: 2 * s for a, s in base.scores.items()})
    for x, y, clamped in vertices(RadarSpec(base, [double]), double):
        assert abs(math.hypot(x - 320, y - 320) - R) <= 1e-9
        assert not clamped


def table_spec(metric="ndcg_cut.10"):
    return spec_from_metrics(load_metrics(DATA / "main_results.tsv", metric), "BM25",
                             ["uniCOIL", "SPLADE", "TAS-B", "Contriever"], title="nDCG@10 vs BM25")


def test_svg_is_xml_and_deterministic():
    a, b = render_radar(table_spec()), render_radar(table_spec())
    assert a == b
    root = ET.fromstring(a.encode())
    polys = root.findall(f".//{SVG}polygon")
    assert [p.get("data-name") for p in polys] == ["BM25", "uniCOIL", "SPLADE", "TAS-B", "Contriever"]
    assert polys[0].get("class") == "baseline" and polys[0].get("stroke-dasharray") == "2,3"
    assert all(len(p.get("points").split()) == 18 for p in polys)


def radius_on(spec, model_name, axis):
    m = next(m for m in spec.models if m.name == model_name)
    x, y, _ = vertices(spec, m)[spec.axes.index(axis)]
    return math.hypot(x - 320, y - 320)


def test_table_values_place_splade_correctly():
    spec = table_spec()
    assert radius_on(spec, "SPLADE", "NQ") > R / 2
    assert radius_on(spec, "SPLADE", "Touché-2020") < R / 2


def test_overflow_marker_for_clamped_vertex():
    base = ModelSeries("b", uniform(0.2))
    scores = uniform(0.2)
    scores[AXES[3]] = 0.9
    spec = RadarSpec(base, [ModelSeries("m", scores)])
    root = ET.fromstring(render_radar(spec).encode())
    markers = root.findall(f".//{SVG}circle[@class='overflow']")
    assert len(markers) == 1
    flags = [c for *_, c in vertices(spec, spec.models[0])]
    assert flags.index(True) == 3 and flags.count(True) == 1


def test_single_elevated_axis_only_moves_that_vertex():
    base = ModelSeries("b", uniform(0.4))
    scores = uniform(0.4)
    scores[AXES[5]] = 0.6
    spec = RadarSpec(base, [ModelSeries("m", scores)])
    for i, (x, y, _) in enumerate(vertices(spec, spec.models[0])):
        r = math.hypot(x - 320, y - 320)
        assert r == pytest.approx(150 if i == 5 else 100)


def test_additive_mode_svg():
    spec = table_spec()
    spec.mode = "additive"
    assert ET.fromstring(render_radar(spec).encode()) is not None


def test_missing_axis_is_reported():
    base = ModelSeries("b", uniform(0.4))
    bad = uniform(0.4)
    del bad["SciFact"]
    with pytest.raises(DataError, match="SciFact"):
        render_radar(RadarSpec(base, [ModelSeries("m", bad)]))


def test_title_is_escaped():
    spec = RadarSpec(ModelSeries("a<b", uniform(0.3)), [], title="x & y")
    ET.fromstring(render_radar(spec).encode())


def test_load_metrics_formats(tmp_path):
    tsv = tmp_path / "m.tsv"
    tsv.write_text("model\tdataset\tscore\nBM25\tscifact\t0.665\nBM25\tNQ\t0.329\n")
    assert load_metrics(tsv) == {"BM25": {"SciFact": 0.665, "NQ": 0.329}}
    jl = tmp_path / "m.jsonl"
    jl.write_text('{"model": "X", "dataset": "fever", "score": 0.7, "metric": "ndcg_cut.10"}\n')
    assert load_metrics(jl) == {"X": {"FEVER": 0.7}}
    with pytest.raises(DataError):
        load_metrics(DATA / "main_results.tsv")
    bad = tmp_path / "b.tsv"
    bad.write_text("BM25\tmsmarco\t0.2\n")
    with pytest.raises(DataError, match="msmarco"):
        load_metrics(bad)
