from __future__ import annotations

import json

import pytest

from projfinsler import cli
from projfinsler.report import dumps


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_bergman(capsys):
    code, out, _ = run(capsys, "classify", "--metric", "bergman", "--n", "2", "--seed", "7", "--count", "6")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == 1 and doc["command"] == "classify"
    assert doc["config"]["tolerance"] == 1e-8 and doc["config"]["sampling"]["count"] == 6
    res = doc["results"][0]
    assert res["verdicts"]["douglas"]
    assert res["constant_KF"] == pytest.approx(-4, abs=1e-8)


def test_compare_euclidean_bergman(capsys):
    code, out, _ = run(capsys, "compare", "euclidean", "bergman", "--n", "1", "--count", "5")
    assert code == 0
    doc = json.loads(out)
    assert doc["related"] and doc["paths_agree"]
    assert len(doc["points"]) == 5
    p = doc["points"][0]
    assert set(p["P"]) == {"re", "im"}
    assert all(g["coincide"] for g in doc["geodesic_probes"])


def test_compare_not_related(capsys):
    code, out, _ = run(capsys, "compare", "euclidean", "conformal", "--n", "2", "--count", "4")
    assert code == 0
    assert json.loads(out)["verdict"] == "not related"


def test_validate_euclidean(capsys):
    code, out, _ = run(capsys, "validate", "--metric", "euclidean", "--n", "3")
    assert code == 0
    assert json.loads(out)["results"][0]["passed"]


def test_validate_failure_exit_code(capsys):
    code, out, _ = run(capsys, "validate", "--L", "e1*e1", "--n", "1", "--count", "3")
    assert code == 1
    assert not json.loads(out)["passed"]


@pytest.mark.parametrize(
    "argv",
    [
        ["classify", "--metric", "nosuch"],
        ["classify", "--L", "e1*eb1 + (", "--n", "1"],
        ["classify"],
        ["classify", "--metric", "bergman", "--tol", "-1"],
        ["compare", "euclidean(1)", "bergman(2)", "--count", "2"],
        ["geodesic", "--metric", "euclidean(1)", "--eta0", "0"],
    ],
)
def test_config_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "error" in err


def test_evaluation_error_exit_3(capsys):
    code, _, err = run(capsys, "tensors", "--L", "e1*eb1/(z1 - z1*zb1)", "--n", "1", "--names", "g", "--z-radius", "0")
    assert code == 3
    assert "evaluation error" in err


def test_tensors_dump(capsys):
    code, out, _ = run(capsys, "tensors", "--metric", "bergman(1)", "--count", "2", "--names", "g,G,KF")
    assert code == 0
    rows = json.loads(out)["results"][0]["points"]
    assert len(rows) == 2 and {"z", "eta", "g", "G", "KF"} <= set(rows[0])
    assert rows[0]["KF"] == pytest.approx(-4, abs=1e-10)


def test_unknown_tensor(capsys):
    code, _, _ = run(capsys, "tensors", "--metric", "bergman(1)", "--names", "nope")
    assert code == 2


def test_geodesic_csv(tmp_path, capsys):
    path = tmp_path / "trace.csv"
    code, out, _ = run(capsys, "geodesic", "--metric", "bergman(1)", "--z0", "0", "--eta0", "1", "--steps", "10", "--csv", str(path))
    assert code == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "s,re_z1,im_z1" and len(lines) == 12
    assert json.loads(out)["samples"] == 11


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(
        json.dumps(
            {
                "metrics": ["euclidean(2)", {"L": "exp(z1*zb1)*(e1*eb1 + e2*eb2)", "n": 2, "label": "conf"}],
                "sampling": {"count": 3, "seed": 4},
                "tolerance": 1e-9,
            }
        )
    )
    code, out, _ = run(capsys, "classify", "--config", str(cfg))
    assert code == 0
    doc = json.loads(out)
    assert [r["metric"] for r in doc["results"]] == ["euclidean(n=2)", "conf"]
    assert doc["config"]["tolerance"] == 1e-9


def test_bad_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text('{"metrics": ["euclidean(1)"], "colour": 1}')
    assert run(capsys, "validate", "--config", str(cfg))[0] == 2
    assert run(capsys, "validate", "--config", str(tmp_path / "missing.json"))[0] == 2


def test_metric_entries():
    assert cli.metric_from_entry("quartic(n=2, eps=0.2)").label == "quartic(n=2,eps=0.2)"
    assert cli.metric_from_entry("bergman(2)").n == 2
    assert cli.metric_from_entry({"name": "conformal"}, n=3).n == 3
    with pytest.raises(cli.ConfigError):
        cli.metric_from_entry({"L": "e1*eb1"})


def test_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert cli.main(["classify", "--metric", "conformal(2)", "--count", "3", "--seed", "5", "-o", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_float_formatting():
    text = dumps({"x": 0.1, "c": 1 + 2j, "z": -0.0, "big": 1e300, "ok": True, "none": None})
    assert '"x": 0.10000000000000001' in text
    assert '"c": {\n    "re": 1.0,\n    "im": 2.0\n  }' in text
    assert '"z": 0.0' in text and '"none": null' in text
