import json
from pathlib import Path

import jsonschema
import pytest
from referencing import Registry, Resource

from cachezf import cli
from cachezf.converse import load_instance

SCHEMAS = Path(__file__).resolve().parents[1] / "docs" / "schemas"


def _schema(name):
    return json.loads((SCHEMAS / name).read_text())


def _registry():
    return Registry().with_resources(
        (f"cachezf/{p.name}", Resource.from_contents(_schema(p.name))) for p in SCHEMAS.glob("*.json")
    )


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_demo(capsys):
    code, out, err = run(capsys, "demo")
    assert code == 0, err
    doc = json.loads(out)
    assert doc["groups"][0] == ["A_{12,2}", "B_{23,3}", "C_{13,1}"]
    assert doc["records"][0]["dof"] == "3" and doc["records"][0]["blocks"] == 6
    jsonschema.validate(doc, _schema("report.schema.json"))


def test_reports_are_byte_identical(capsys):
    _, a, _ = run(capsys, "demo", "--seed", "77")
    _, b, _ = run(capsys, "demo", "--seed", "77")
    _, c, _ = run(capsys, "demo", "--seed", "78")
    assert a == b
    assert a != c
    assert json.loads(a)["groups"] == json.loads(c)["groups"]


def test_seed_env_fallback(capsys, monkeypatch):
    monkeypatch.setenv(cli.SEED_ENV, "5")
    _, out, _ = run(capsys, "demo")
    assert json.loads(out)["seed"] == 5
    monkeypatch.delenv(cli.SEED_ENV)
    _, out, _ = run(capsys, "demo")
    assert json.loads(out)["seed"] == cli.DEFAULT_SEED
    code, _, err = run(capsys, "demo", "--seed", str(2**64))
    assert code == 2 and "64-bit" in err


def test_sweep_csv(capsys):
    code, out, _ = run(capsys, "sweep", "--kt", "1:2", "--kr", "1:3", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == ",".join(cli.CSV_COLUMNS)
    rows = [dict(zip(cli.CSV_COLUMNS, l.split(","))) for l in lines[1:]]
    assert all(r["dof"] in (r["dof_lower"], "no-delivery-needed") for r in rows)
    # K_T = 1, M_T = N rows: DoF 1 + K_R M_R / N capped at K_R
    from fractions import Fraction
    for r in rows:
        if r["k_t"] == "1" and r["dof"] != "no-delivery-needed":
            kr, n, m_r = int(r["k_r"]), int(r["n"]), Fraction(r["m_r"])
            assert Fraction(r["dof"]) == min(1 + kr * m_r / n, kr)


def test_single_config_sweep(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"k_t": 3, "k_r": 3, "n_files": 4, "m_t": 4, "m_r": "4/3"}))
    code, out, err = run(capsys, "sweep", "--config", str(cfg))
    assert code == 0, err
    doc = json.loads(out)
    assert len(doc["records"]) == 24
    jsonschema.validate(doc, _schema("report.schema.json"))


def test_verify_and_bounds(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"k_t": 2, "k_r": 3, "n_files": 3, "m_t": "3/2", "m_r": 1}))
    code, out, _ = run(capsys, "verify", "--config", str(cfg), "--demand", "2,2,1")
    assert code == 0
    assert json.loads(out)["records"][0]["demand"] == "2-2-1"
    code, out, _ = run(capsys, "bounds", "--config", str(cfg))
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, _schema("report.schema.json"))
    assert doc["records"][0]["dof_lower"] == "2"
    code, out, _ = run(capsys, "bounds", "--grid", "3", "--format", "csv")
    assert code == 0 and out.startswith("k_t,k_r,n,")
    code, _, err = run(capsys, "verify")
    assert code == 2 and "--config" in err


@pytest.mark.parametrize("name,exact,greedy,lb", [
    ("three_by_three", 6, 6, "4"), ("two_by_two", 2, 2, "1"), ("mixed_2x2", 5, 5, "3"),
])
def test_exact_bundled(capsys, name, exact, greedy, lb):
    code, out, err = run(capsys, "exact", f"bundled:{name}")
    assert code == 0, err
    rec = json.loads(out)["records"][0]
    assert (rec["exact"], rec["greedy"], rec["analytic_block_lb"]) == (exact, greedy, lb)


def test_exact_cap_and_empty(capsys, tmp_path):
    code, out, err = run(capsys, "exact", "bundled:three_by_three", "--exact-cap", "10")
    assert code == 1 and "greedy" in err
    assert json.loads(out)["records"][0]["exact"] is None
    empty = tmp_path / "e.json"
    empty.write_text('{"format": "cachezf-instance/1", "packets": []}')
    code, out, _ = run(capsys, "exact", str(empty))
    assert code == 0 and json.loads(out)["records"][0]["exact"] == 0


def test_exact_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n "packets": [\n  {"tx": [1], "rx": [], "to": }\n ]\n}')
    code, _, err = run(capsys, "exact", str(bad))
    assert code == 2 and "line 3" in err
    bad.write_text('{"packets": [{"tx": [1], "rx": []}]}')
    code, _, err = run(capsys, "exact", str(bad))
    assert code == 2 and "packets[0].to" in err
    wrong = tmp_path / "wrong.json"
    doc = json.loads((Path(cli.__file__).parent / "data" / "two_by_two.json").read_text())
    doc["meta"]["expected"]["min_blocks"] = 3
    wrong.write_text(json.dumps(doc))
    code, _, err = run(capsys, "exact", str(wrong))
    assert code == 1 and "expects 3" in err
    code, _, err = run(capsys, "exact", "bundled:nope")
    assert code == 2 and "three_by_three" in err


def test_out_and_timing(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, stdout, _ = run(capsys, "exact", "bundled:two_by_two", "--out", str(out), "--timing")
    assert code == 0 and stdout == ""
    assert "elapsed_s" in json.loads(out.read_text())


def test_bundled_instances_match_schema():
    schema = _schema("instance.schema.json")
    validator = jsonschema.Draft202012Validator(schema, registry=_registry())
    for name in cli.bundled_instances():
        doc = json.loads((Path(cli.__file__).parent / "data" / f"{name}.json").read_text())
        validator.validate(doc)
        jsonschema.validate(doc["config"], _schema("config.schema.json"))
    assert set(cli.bundled_instances()) >= {"three_by_three", "two_by_two", "mixed_2x2"}


def test_demand_sampling():
    from fractions import Fraction
    from cachezf.placement import NetworkConfig
    small = NetworkConfig(2, 3, 4, Fraction(2), Fraction(0))
    assert len(cli.demand_samples(small, 1)) == 24
    big = NetworkConfig(2, 4, 8, Fraction(4), Fraction(0))
    a, b = cli.demand_samples(big, 1), cli.demand_samples(big, 1)
    assert a == b and len(a) == 100 and len(set(a)) == 100
    assert all(len(set(d)) == 4 for d in a)
