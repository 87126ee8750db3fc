import json

import jsonschema
import pytest

from brstlab import cli

GOLDEN = __import__("pathlib").Path(__file__).parent / "golden" / "pages_grade8.json"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    rep = json.loads(out)
    jsonschema.validate(rep, cli.REPORT_SCHEMA)
    return code, rep


def test_verify_flow0(capsys):
    code, rep = report(capsys, "verify", "--flow", "0", "--max-grade", "6", "--window", "4")
    assert code == 0 and rep["ok"]
    assert rep["betti"]["stabilized"]["entries"] == [[0, 0, 1]]
    assert rep["schema_version"] == "brstlab-report/1"
    assert set(rep["checks"]) == set(cli.DEFAULT_CHECKS)


def test_verify_flow1_zero(capsys):
    code, rep = report(capsys, "verify", "--flow", "1", "--max-grade", "4", "--window", "4")
    assert code == 0
    assert rep["betti"]["stabilized"]["entries"] == []


@pytest.mark.parametrize("argv", [
    ["verify", "--flow", "0", "--max-grade", "-1"],
    ["verify", "--window", "1"],
    ["verify", "--checks", "d2,bogus"],
    ["catalog", "--u", "4", "--v", "2"],
    ["catalog", "--u", "1", "--v", "1"],
    ["verify", "--module-dims", "0:x"],
])
def test_config_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == ""
    assert "configuration error" in err


def test_bad_config_file(capsys, tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"flow": 0, "colour": 1}')
    assert run(capsys, "verify", "--config", str(p))[0] == 2
    p.write_text("not json")
    assert run(capsys, "verify", "--config", str(p))[0] == 2


def test_check_failure_exit_1(capsys, monkeypatch):
    real = cli.verify

    def broken(spec, **kw):
        rec = real(spec, **kw)
        rec.d_squared_zero = False
        rec.failures["d2"] = [[0, 1]]
        return rec

    monkeypatch.setattr(cli, "verify", broken)
    code, out, err = run(capsys, "verify", "--max-grade", "2")
    assert code == 1
    assert "d2" in err and "[0, 1]" in err
    assert json.loads(out)["checks"]["d2"] is False


@pytest.mark.parametrize("argv", [
    ["verify", "--flow", "-1", "--max-grade", "4", "--checks", "d2,betti,pages,audit"],
    ["pages", "--max-grade", "4", "--flow", "-1"],
    ["catalog", "--u", "3", "--v", "4"],
    ["appendix-b", "--max-grade", "4"],
    ["reduce", "--module-dims", "0:1,1:2", "--max-grade", "3"],
])
def test_byte_identical_and_schema(capsys, argv):
    a = run(capsys, *argv)
    b = run(capsys, *argv)
    assert a == b
    jsonschema.validate(json.loads(a[1]), cli.REPORT_SCHEMA)


def test_timings_opt_in(capsys):
    _, rep = report(capsys, "verify", "--max-grade", "2")
    assert "timings" not in rep
    _, rep = report(capsys, "verify", "--max-grade", "2", "--timings")
    assert set(rep["timings"]) == {"verify"}


def test_config_precedence(capsys, tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"flow": 1, "max_grade": 3, "window": 3}))
    _, rep = report(capsys, "verify", "--config", str(p), "--window", "2")
    cfg = rep["config"]
    assert (cfg["flow"], cfg["max_grade"], cfg["window"]) == (1, 3, 2)
    assert cfg["mu_start"] == cli.DEFAULTS["mu_start"]
    assert "jobs" not in cfg


def test_module_dims_file(capsys, tmp_path):
    p = tmp_path / "dims.txt"
    p.write_text("# toy module\n0 1\n1 2   # two states\n\n2 3\n")
    assert cli.parse_module_dims(p.read_text()) == {0: 1, 1: 2, 2: 3}
    code, rep = report(capsys, "reduce", "--module-dims", str(p), "--max-grade", "4")
    assert code == 0
    assert rep["betti"]["stabilized"]["entries"] == [[0, 0, 1], [0, 1, 2], [0, 2, 3]]
    assert rep["config"]["module_dims"] == {"0": 1, "1": 2, "2": 3}
    with pytest.raises(cli.ConfigError):
        cli.parse_module_dims("0 1 2\n")


def test_jobs_env(monkeypatch, capsys):
    monkeypatch.setenv("BRSTLAB_JOBS", "2")
    args = cli._parser().parse_args(["verify"])
    assert cli.effective_config(args)["jobs"] == 2
    args = cli._parser().parse_args(["verify", "--jobs", "3"])
    assert cli.effective_config(args)["jobs"] == 3
    serial = run(capsys, "verify", "--max-grade", "3", "--jobs", "1")
    parallel = run(capsys, "verify", "--max-grade", "3", "--jobs", "2")
    assert serial == parallel


def test_catalog_tables(capsys):
    code, rep = report(capsys, "catalog", "--u", "3", "--v", "4")
    assert code == 0
    hs = {row["h"] for row in rep["catalog"]["rows"]}
    assert {"0/1", "1/2", "1/16"} <= hs
    assert rep["catalog"]["central_charges"]["c_vir"] == "1/2"
    _, rep = report(capsys, "catalog", "--u", "3", "--v", "2")
    assert rep["catalog"]["central_charges"]["c_vir"] == "0/1"
    assert any(r["result"] == "unknown, out of scope" for r in rep["reductions"])
    _, rep = report(capsys, "catalog", "--u", "5", "--v", "1")
    assert rep["reductions"] == []


def test_text_format(capsys):
    code, out, _ = run(capsys, "verify", "--max-grade", "3", "--format", "text")
    assert code == 0
    assert out.startswith("brstlab-report/1 verify")
    assert "betti stabilized: (0,0)=1" in out
    assert out.rstrip().endswith("ok")


def test_output_file(capsys, tmp_path):
    dest = tmp_path / "r.json"
    code, out, _ = run(capsys, "appendix-b", "--max-grade", "4", "-o", str(dest))
    assert code == 0 and out == ""
    rep = json.loads(dest.read_text())
    assert all(rep["checks"].values())
    assert {tuple(e) for e in rep["betti"]["cartan"]["entries"]} == {(0, 0, 1)}


def test_pages_default(capsys):
    code, rep = report(capsys, "pages")
    assert code == 0
    assert rep["pages"]["r_max"] == 1
    assert rep["pages"]["E1"] == [[0, 0, 1]]


def test_pages_trivial_filtration(capsys):
    _, rep = report(capsys, "pages", "--filtration", "trivial", "--max-grade", "4")
    # E1 of the one-step filtration is the cohomology itself
    assert rep["pages"]["E1"] == rep["pages"]["Einf"] == [[0, 0, 1]]


@pytest.mark.slow
def test_pages_golden_grade8(capsys):
    _, rep = report(capsys, "pages", "--max-grade", "8")
    golden = json.loads(GOLDEN.read_text())
    assert {k: rep["pages"][k] for k in golden} == golden
