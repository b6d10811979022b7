import json
import math
import random

import pytest

import greater


def planted_child(subjects=30, seed=1):
    rng = random.Random(seed)
    rows = []
    for s in range(subjects):
        gender = str(s % 2)
        for _ in range(rng.randint(1, 5)):
            ad = str(rng.randint(0, 3))
            click = ad if rng.random() < 0.8 else str(rng.randint(0, 3))
            rows.append([f"u{s}", gender, ad, click, str(rng.randint(0, 4))])
    return greater.Table(["uid", "gender", "ad", "click", "noise"], rows, subject="uid")


def test_table_basics():
    t = planted_child()
    assert t.subject_column == "uid"
    assert t.payload_columns == ["gender", "ad", "click", "noise"]
    assert len(t.column("ad")) == len(t)
    assert t.to_csv().splitlines()[0] == "uid,gender,ad,click,noise"


def test_errors_carry_kind():
    t = planted_child()
    with pytest.raises(greater.GreaterError) as info:
        t.column("price")
    assert info.value.kind == "schema"
    with pytest.raises(greater.GreaterError):
        greater.Table(["a", "a"], [])


def naive_cramers_v(a, b):
    n = len(a)
    ra, cb = sorted(set(a)), sorted(set(b))
    if len(ra) < 2 or len(cb) < 2:
        return 0.0
    chi2 = 0.0
    for x in ra:
        for y in cb:
            o = sum(1 for p, q in zip(a, b) if p == x and q == y)
            e = a.count(x) * b.count(y) / n
            chi2 += (o - e) ** 2 / e
    return math.sqrt(chi2 / (n * (min(len(ra), len(cb)) - 1)))


def test_cramers_v_matches_naive():
    rng = random.Random(5)
    for _ in range(50):
        n = rng.randint(2, 40)
        a = [str(rng.randint(0, 3)) for _ in range(n)]
        b = [str(rng.randint(0, 2)) for _ in range(n)]
        assert greater.cramers_v(a, b) == pytest.approx(naive_cramers_v(a, b), abs=1e-12)
    assert greater.cramers_v(["x", "y"], ["x", "y"]) == pytest.approx(1.0)


def test_contextual_and_parent():
    t = planted_child()
    report = greater.detect_contextual(t)
    assert report["gender"] == (1.0, True)
    assert not report["ad"][1]
    parent, residual = greater.extract_parent(t, ["gender"])
    assert parent.columns == ["uid", "gender"]
    assert len(parent) == 30
    assert residual.columns == ["uid", "ad", "click", "noise"]
    assert len(greater.attach_parent(residual, parent)) == len(t)


def test_connect_partitions():
    t = planted_child(subjects=200)
    labels, values = greater.association_matrix(t, ["ad", "click", "noise"])
    assert labels == ["ad", "click", "noise"]
    assert values[0][0] == pytest.approx(1.0)
    p = greater.threshold_independent(t, ["ad", "click", "noise"], "mean")
    assert p["independent"] == ["noise"]
    assert sorted(p["core"]) == ["ad", "click"]
    h = greater.hierarchical_independent(t, ["ad", "click", "noise"], clusters=2)
    assert h["independent"] == ["noise"]
    with pytest.raises(greater.GreaterError):
        greater.threshold_independent(t, ["ad", "click"], "magic")


def test_textual_round_trip():
    cols = ["Name", "City", "Note"]
    values = ["Grace", "New York", "a, b"]
    sentence = greater.encode_row(values, cols)
    assert sentence == "Name: Grace, City: New York, Note: a, b"
    assert greater.decode_sentence(sentence, cols) == values
    shuffled = greater.encode_row(values, cols, permute_seed=3, row_index=1)
    assert greater.decode_sentence(shuffled, cols) == values
    with pytest.raises(ValueError, match="missing_column"):
        greater.decode_sentence("Name: Grace, City: Paris", cols)


def test_fidelity_fixed_point():
    t = planted_child()
    report = greater.fidelity_report(t, t)
    assert report["pairs"] == 12
    assert all(s["z"] == 1.0 for s in report["ks_p"]["scores"])
    assert greater.ks_p(["a", "b"], ["a", "b"]) == 1.0
    assert greater.ks_statistic(["a", "a", "b"], ["b", "b", "b"]) == pytest.approx(2 / 3)
    assert greater.w_dist(["a"], ["c", "c", "b"]) == pytest.approx(1 + 2 / 3 * 1)


def test_pipeline_run(tmp_path):
    child = planted_child()
    rows_b = [[f"u{s}", str(10 + s % 3), str(s % 4)] for s in range(30) for _ in range(2)]
    greater.write_csv(child, tmp_path / "a.csv")
    greater.write_csv(greater.Table(["uid", "city", "item"], rows_b, subject="uid"), tmp_path / "b.csv")
    doc = {
        "subject_column": "uid",
        "tables": {
            "a": {"path": "a.csv", "columns": ["gender", "ad", "click", "noise"]},
            "b": {"path": "b.csv", "columns": ["city", "item"]},
        },
        "synthesizer": {"backend": "identity"},
        "seed": 2,
        "output_dir": "out",
    }
    (tmp_path / "cfg.json").write_text(json.dumps(doc))
    cfg = greater.load_config(tmp_path / "cfg.json")
    assert cfg.to_dict()["seed"] == 2
    greater.run(cfg)
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["fidelity"]["ks_p_mean"] == 1.0

    cfg.output_dir = tmp_path / "staged"
    (tmp_path / "staged").mkdir()
    for stage in greater.STAGES[:3]:
        greater.run_stage(cfg, stage)
    assert (tmp_path / "staged" / "parent.csv").exists()
    with pytest.raises(greater.GreaterError) as info:
        greater.run_stage(cfg, "fit")
    assert info.value.kind == "io"
