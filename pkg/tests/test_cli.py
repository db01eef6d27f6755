import json
import logging
import math

import numpy as np
import pytest

from hitchinq import cli
from hitchinq.errors import ValidationError

SYM = [{"z": [float(k), 0.0], "delta": [0.1, 0.0]} for k in range(4)]


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return p


def strip_timing(line):
    rec = json.loads(line)
    rec.pop("timing_ms")
    return rec


def test_dumps_format():
    s = cli.dumps({"b": 1 + 2j, "a": [np.float64(0.1), np.int64(3), None, True],
                   "c": float("nan"), "d": np.array([1.5, -math.inf])})
    assert s == ('{"a":[0.10000000000000001,3,null,true],"b":[1,2],"c":"nan",'
                 '"d":[1.5,"-inf"]}')
    x = 0.1 + 0.2
    assert float(cli.dumps(x)) == x
    with pytest.raises(TypeError):
        cli.dumps(object())


def test_cx():
    assert cli.cx([1, 2]) == 1 + 2j and cli.cx(3) == 3


def test_hash_depends_on_overrides():
    m = {"epsilon1": 1.0, "punctures": SYM}
    a = cli.manifest_hash("fn", m, {"tol": None, "seed": 0})
    assert a == cli.manifest_hash("fn", dict(m), {"tol": None, "seed": 0})
    assert a != cli.manifest_hash("fn", m, {"tol": None, "seed": 1})
    assert a != cli.manifest_hash("monodromy", m, {"tol": None, "seed": 0})


def test_schema():
    cli.validate_manifest({"epsilon1": [1, 0], "punctures": SYM, "labels": [{"n": 1, "m": 0}]})
    for bad in ({"epsilon1": 1, "bogus": 1},
                {"punctures": [{"z": 0}, {"z": 1, "delta": 0}, {"z": 2, "delta": 0}]},
                {"labels": [{"n": 1, "m": 0, "nu": 3}]},
                {"epsilon1": [1, 2, 3]}):
        with pytest.raises(ValidationError):
            cli.validate_manifest(bad)


def test_fn_example(tmp_path):
    man = write(tmp_path, "m.json", {"fn": {"lambda": math.pi, "kappa": 0, "boundary": [0, 0, 0, 0]}})
    out = tmp_path / "out.jsonl"
    assert cli.main(["fn", "--manifest", str(man), "--out", str(out)]) == 0
    rec = json.loads(out.read_text())
    tr = rec["results"]["traces"]
    assert abs(complex(*tr["Ls"])) < 1e-15
    assert complex(*tr["Lt"]) == pytest.approx(2)
    assert abs(complex(*tr["Lu"])) < 1e-15
    assert set(rec) == {"command", "hash", "version", "results", "residuals", "warnings",
                        "timing_ms"}


def test_fn_inverse_block():
    rec, code, _ = cli.run("fn", {"traces": {"L": [0, 0, 0, 0], "Ls": 0, "Lt": 2, "Lu": 0}})
    assert code == 0
    assert complex(rec["results"]["fn"]["lambda"]) == pytest.approx(math.pi)
    assert rec["residuals"]["round_trip"] < 1e-12


def test_solve_zero_oper_exit_3(tmp_path, capsys):
    m = {"epsilon1": 1, "punctures": [{"z": k, "delta": 0} for k in range(4)],
         "labels": [{"n": 1, "m": 0}], "initial_guess": 0}
    man = write(tmp_path, "m.json", m)
    out = tmp_path / "o.jsonl"
    assert cli.main(["solve", "--manifest", str(man), "--out", str(out)]) == 3
    rec = json.loads(out.read_text())
    assert rec["error"]["type"] == "DegenerateLocusError"
    assert "DegenerateLocusError" in capsys.readouterr().err


def test_invalid_inputs_exit_2(tmp_path):
    bad_schema = write(tmp_path, "a.json", {"nonsense": 1})
    bad_json = write(tmp_path, "b.json", "{not json")
    no_block = write(tmp_path, "c.json", {"epsilon1": 1})
    for p in (bad_schema, bad_json, no_block, tmp_path / "missing.json"):
        assert cli.main(["fn", "--manifest", str(p)]) == 2


def test_cache_roundtrip(tmp_path, caplog):
    cache = tmp_path / "cache.jsonl"
    m = {"fn": {"lambda": 1.0, "kappa": [0.2, 0.1], "boundary": [0.1, 0.2, 0.3, 0.4]}}
    key = cli.manifest_hash("fn", m, {"tol": None, "seed": 0})
    assert cli.cache_lookup(cache, key) is None
    fresh, _, _ = cli.run("fn", m, cache=cache)
    hit, code, _ = cli.run("fn", m, cache=cache)
    assert code == 0
    a, b = json.loads(cli.dumps(fresh)), dict(hit)
    a.pop("timing_ms"), b.pop("timing_ms")
    assert a == b
    # corrupt line followed by a valid record
    other = {"fn": {"lambda": 2.0, "kappa": 0, "boundary": [0, 0, 0, 0]}}
    with cache.open("a") as fh:
        fh.write("{truncated\n")
    cli.run("fn", other, cache=cache)
    with caplog.at_level(logging.WARNING):
        key2 = cli.manifest_hash("fn", other, {"tol": None, "seed": 0})
        assert cli.cache_lookup(cache, key2)["hash"] == key2
        assert cli.cache_lookup(cache, key)["hash"] == key
    assert "corrupt cache line" in caplog.text


def test_cache_env_and_flag_precedence(tmp_path, monkeypatch):
    man = write(tmp_path, "m.json", {"fn": {"lambda": 1.0, "kappa": 0, "boundary": [0] * 4}})
    env_cache, flag_cache = tmp_path / "env.jsonl", tmp_path / "flag.jsonl"
    monkeypatch.setenv(cli.CACHE_ENV, str(env_cache))
    assert cli.main(["fn", "--manifest", str(man), "--out", str(tmp_path / "o")]) == 0
    assert env_cache.exists()
    assert cli.main(["fn", "--manifest", str(man), "--out", str(tmp_path / "o"),
                     "--cache", str(flag_cache)]) == 0
    assert flag_cache.exists()
    assert len(env_cache.read_text().splitlines()) == 1


def test_monodromy_command_and_determinism(tmp_path):
    man = write(tmp_path, "m.json", {"epsilon1": 1, "punctures": SYM, "accessory_free": [-0.2]})
    outs = []
    for k in range(2):
        out = tmp_path / f"o{k}.jsonl"
        assert cli.main(["monodromy", "--manifest", str(man), "--out", str(out)]) == 0
        outs.append(strip_timing(out.read_text()))
    assert outs[0] == outs[1]
    res = outs[0]["residuals"]
    assert res["det"] < 1e-10 and res["cyclic"] < 1e-8 and abs(complex(*res["quartic"])) < 1e-8


def test_monodromy_ensemble_seed():
    m = {"ensemble": {"count": 2}}
    a, _, _ = cli.run("monodromy", m, seed=5)
    b, _, _ = cli.run("monodromy", m, seed=5)
    c, _, _ = cli.run("monodromy", m, seed=6)
    assert a["residuals"] == b["residuals"] != c["residuals"]
    assert a["residuals"]["cyclic"] < 1e-8


def test_solve_csv(tmp_path):
    m = {"epsilon1": 1, "punctures": SYM, "reference": 0,
         "labels": [{"n": 1, "m": -1, "initial_guess": -0.2}]}
    man = write(tmp_path, "m.json", m)
    csv_path = tmp_path / "t.csv"
    assert cli.main(["solve", "--manifest", str(man), "--out", str(tmp_path / "o"),
                     "--emit-csv", str(csv_path), "--threads", "2"]) == 0
    rows = csv_path.read_text().splitlines()
    assert rows[0] == "n,m,re_E,im_E"
    n, mm, re, im = rows[1].split(",")
    assert (n, mm) == ("1", "-1") and abs(float(re) + 0.2032365) < 1e-6
    rec = json.loads((tmp_path / "o").read_text())
    sp = rec["results"]["spectrum"][0]
    assert sp["accepted"] and sp["holonomy_class"] == "SL2R"


def test_semiclassical_command():
    m = {"epsilon1": 1, "punctures": SYM, "accessory_free": [-0.2],
         "cycles": [{"circle": {"center": 0.5, "radius": 0.75}},
                    {"circle": {"center": 2.5, "radius": 0.75}}],
         "bs": {"n": 0, "m": 0, "eps1": 0.1}}
    rec, code, _ = cli.run("semiclassical", m)
    assert code == 0
    assert len(rec["results"]["branch_points"]) == 4
    a = rec["results"]["periods"][0]
    assert abs(abs(a) - 5.213) < 1e-3
    assert rec["residuals"]["bs"][0] == pytest.approx(a.real)
    with pytest.raises(ValidationError):
        cli.run("semiclassical", dict(m, eps_sweep=[0.2], wkb_cycle=5))


def test_yang_command_special_functions():
    rec, code, _ = cli.run("yang", {"upsilon": [0.5, [0.3, 0.1]], "pants": [[0, 0, 0]]})
    assert code == 0
    assert rec["results"]["upsilon"][0]["value"] == 0
    assert len(rec["results"]["pants_N"]) == 1


def test_sov_check_command():
    m = {"epsilon1": 1, "punctures": SYM, "accessory_free": [0.3]}
    rec, code, _ = cli.run("sov-check", m)
    assert code == 0
    assert rec["results"]["holonomy_class"] in {"SL2R", "SU2", "REDUCIBLE", "NONE"}
    assert len(rec["residuals"]["single_valuedness"]) == 4
