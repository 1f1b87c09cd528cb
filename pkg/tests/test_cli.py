import json
import subprocess
import sys

import pytest

from padic_incidence.cli import EXPERIMENT_SCHEMA, main


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("suite", ["fourier", "geometry", "counting", "multiscale"])
def test_verify_suites_pass(suite, capsys):
    code, _, err = run(["verify", suite, "--trials", "3", "--seed", "1"], capsys)
    assert code == 0, err


def test_verify_highlow_csv(tmp_path, capsys):
    out = tmp_path / "hl.csv"
    code, _, _ = run(["verify", "highlow", "--p", "3", "--n", "3", "--trials", "5", "--seed", "7", "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "trial,k,I,L,H,low_exact,high_bound,lhs,rhs"
    assert len(lines) == 1 + 5 * 2


def test_verify_unknown_suite(capsys):
    assert run(["verify", "nope"], capsys)[0] == 2


def test_usage_errors_exit_2():
    for argv in (["frobnicate"], ["richtubes"]):
        with pytest.raises(SystemExit) as e:
            main(argv)
        assert e.value.code == 2


def test_gen_check_pipeline(tmp_path, capsys):
    cfg = tmp_path / "c.txt"
    code, _, _ = run(["gen", "--kind", "product", "--p", "3", "--n", "2", "--a-digits", "0,1",
                      "--b-digits", "0,1", "--slope-digits", "0,1", "--out", str(cfg)], capsys)
    assert code == 0
    code, out, _ = run(["check", str(cfg), "--s", "log:2"], capsys)
    assert code == 0
    assert "kind=nice s=log:2 C=1 M_min=4 M_max=4" in out
    code, out, _ = run(["incidence", str(cfg)], capsys)
    assert out.startswith("incidences=64 ")
    code, out, _ = run(["dft", str(cfg)], capsys)
    assert code == 0 and out.count("\n") == 2


def test_gen_random_needs_seed(capsys):
    assert run(["gen", "--kind", "random", "--p", "2", "--n", "2", "--size", "3", "--M", "1"], capsys)[0] == 2


def test_uniformize_full_grid(tmp_path, capsys):
    cfg = tmp_path / "g.txt"
    run(["gen", "--kind", "product", "--p", "2", "--n", "2", "--slope-digits", "0", "--out", str(cfg)], capsys)
    code, out, _ = run(["uniformize", str(cfg)], capsys)
    assert code == 0
    assert out.splitlines()[-1] == "total,,1"


def test_richtubes_full_grid(tmp_path, capsys):
    cfg = tmp_path / "g.txt"
    run(["gen", "--kind", "product", "--p", "2", "--n", "3", "--slope-digits", "0", "--out", str(cfg)], capsys)
    code, out, _ = run(["richtubes", str(cfg), "--delta", "1", "--a", "2", "--b", "4"], capsys)
    assert code == 0
    assert len(out.splitlines()) == 1 + 2**6


def test_buildscale_product(tmp_path, capsys):
    cfg = tmp_path / "c.txt"
    run(["gen", "--kind", "product", "--p", "3", "--n", "4", "--a-digits", "0,1",
         "--b-digits", "0,1", "--slope-digits", "0,1", "--out", str(cfg)], capsys)
    code, out, _ = run(["buildscale", str(cfg), "--delta", "2", "--s", "log:2",
                        "--write-delta", str(tmp_path / "d.txt")], capsys)
    assert code == 0
    header, row = out.splitlines()
    rec = dict(zip(header.split(","), row.split(",")))
    assert rec["cover_ratio"] == "1" and rec["C_delta"] == "1" and rec["M_delta"] == "4"
    assert (tmp_path / "d.txt").read_text().startswith("3 2\n")


def _plan(tmp_path, **kw):
    plan = {"command": "sweep", "p": 3, "seed": 9,
            "generator": {"kind": "product", "a_digits": [0], "b_digits": [0, 1], "slope_digits": [0, 1]},
            "t": "log:2"}
    plan.update(kw)
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(plan))
    return path


def test_sweep_empty_grid_header_only(tmp_path, capsys):
    code, out, _ = run(["sweep", "--config", str(_plan(tmp_path, n_values=[]))], capsys)
    assert code == 0 and out.count("\n") == 1


def test_sweep_invalid_field_named(tmp_path, capsys):
    code, _, err = run(["sweep", "--config", str(_plan(tmp_path, n_values=[2], t="two"))], capsys)
    assert code == 2 and "t" in err
    code, _, err = run(["sweep", "--config", str(_plan(tmp_path, n_values=[0]))], capsys)
    assert code == 2 and "n_values" in err


def test_sweep_random_deterministic_across_threads(tmp_path, monkeypatch, capsys):
    plan = _plan(tmp_path, n_values=[2, 3, 3], eps=["1/10", "1/5"],
                 generator={"kind": "random", "size": 5, "M": 2, "slope_digits": [0, 1]},
                 rich={"delta": 1, "a": 1, "b": 1})
    monkeypatch.setenv("PIL_THREADS", "1")
    _, one, _ = run(["sweep", "--config", str(plan)], capsys)
    monkeypatch.setenv("PIL_THREADS", "4")
    _, four, _ = run(["sweep", "--config", str(plan)], capsys)
    assert one == four
    assert [r.split(",")[0] for r in one.splitlines()[1:]] == [str(i) for i in range(6)]


def test_schema_is_valid_json_schema():
    import jsonschema

    jsonschema.Draft202012Validator.check_schema(EXPERIMENT_SCHEMA)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "padic_incidence", "verify", "geometry", "--p", "2", "--n", "2"],
                         capture_output=True, text=True)
    assert res.returncode == 0
