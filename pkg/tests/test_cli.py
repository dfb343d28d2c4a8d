import json
import math
import subprocess
import sys

import pytest

from resonance_atlas.cli import jsonable, main
from resonance_atlas.config import fixture_path, load_config, parse_config
from resonance_atlas.errors import ParseError, ValidationError


def fixture_dict(name):
    return json.loads(fixture_path(name).read_text())


def write_cfg(tmp_path, d, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return p


def test_fixture_round_trip():
    cfg = load_config(fixture_path("case_T"))
    assert cfg.problem.nu == 1.0 and cfg.problem.E0 == 0.5
    assert cfg.h_list == (0.05, 0.03, 0.02)
    assert cfg.spectral.theta == 0.3 and cfg.spectral.N == 1600
    assert cfg.run_hash() == load_config(fixture_path("case_T")).run_hash()


def test_nu_rejected():
    d = fixture_dict("case_T")
    d["problem"]["nu"] = 0.4
    with pytest.raises(ValidationError, match="nu must exceed 1/2") as exc:
        parse_config(json.dumps(d))
    assert exc.value.field == "problem.nu"


def test_h_list_order():
    d = fixture_dict("case_T")
    d["h_list"] = [0.02, 0.05]
    with pytest.raises(ValidationError, match="h_list must be descending"):
        parse_config(json.dumps(d))
    d["h_list"] = [1.5, 0.5]
    with pytest.raises(ValidationError, match="h_list"):
        parse_config(json.dumps(d))


def test_unknown_key_named():
    d = fixture_dict("case_T")
    d["spectral"]["thetaa"] = 0.3
    with pytest.raises(ValidationError) as exc:
        parse_config(json.dumps(d))
    assert exc.value.field == "spectral.thetaa"
    d = fixture_dict("case_T")
    d["problem"]["V1"][0]["sharpness"] = 2
    with pytest.raises(ValidationError) as exc:
        parse_config(json.dumps(d))
    assert "sharpness" in exc.value.field


def test_parse_error_location():
    with pytest.raises(ParseError) as exc:
        parse_config(b'{\n  "problem": {,\n}')
    assert exc.value.line == 2 and exc.value.column == 15
    with pytest.raises(ParseError):
        parse_config(b'{"a": "\xff"}')


def test_other_invariants():
    d = fixture_dict("case_T")
    d["safety_c"] = 1.2
    with pytest.raises(ValidationError, match="safety_c"):
        parse_config(json.dumps(d))
    d = fixture_dict("case_T")
    d["search_rect"]["im"] = [-0.1, 0.2]
    with pytest.raises(ValidationError, match="search_rect"):
        parse_config(json.dumps(d))
    d = fixture_dict("case_T")
    d["spectral"]["theta_p"] = 0.2
    with pytest.raises(ValidationError, match="theta"):
        parse_config(json.dumps(d))


def test_jsonable():
    out = jsonable({"z": 1 + 2j, "inf": math.inf, "arr": [float("nan")]})
    assert out == {"z": [1.0, 2.0], "inf": "inf", "arr": ["nan"]}


def run_cli(args, tmp_path):
    return main(list(args) + ["--out", str(tmp_path)])


def test_analyze_case_T(tmp_path, capsys):
    assert run_cli(["analyze", "--config", str(fixture_path("case_T"))], tmp_path) == 0
    run_dir = capsys.readouterr().out.strip()
    rep = json.loads((tmp_path / run_dir.split("/")[-1] / "analyze.json").read_text())
    s = rep["summary"]
    assert s["n_pr_cycles"] == 1 and s["n_cycles"] == 1
    assert s["M"] == pytest.approx(1.0 / s["T_E0"], rel=1e-15)
    assert rep["hypotheses"]["passed"]
    assert rep["tolerances"]["quad_tol"] == 1e-10
    assert all("time_err" in e for e in rep["graph"]["edges"])


def test_analyze_gap(tmp_path, capsys):
    assert run_cli(["analyze", "--config", str(fixture_path("gap"))], tmp_path) == 0
    run_dir = tmp_path / capsys.readouterr().out.strip().split("/")[-1]
    s = json.loads((run_dir / "analyze.json").read_text())["summary"]
    assert s["n_cycles"] == 0 and s["M"] == "arbitrary"


def test_hypothesis_failure_exit_1(tmp_path):
    d = fixture_dict("case_T")
    d["problem"]["W"] = {"r0": [], "r1": []}  # w(rho) = 0 at the crossing
    assert run_cli(["analyze", "--config", str(write_cfg(tmp_path, d))], tmp_path) == 1


def test_bad_config_exit(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    assert run_cli(["analyze", "--config", str(p)], tmp_path) == 1


def test_candidates_and_amplitude(tmp_path, capsys):
    cfgp = str(fixture_path("case_T"))
    assert run_cli(["candidates", "--config", cfgp], tmp_path) == 0
    assert run_cli(["amplitude", "--config", cfgp], tmp_path) == 0
    run_dir = tmp_path / capsys.readouterr().out.split()[-1].split("/")[-1]
    cand = json.loads((run_dir / "candidates.json").read_text())
    for entry in cand["per_h"]:
        assert entry["count_matches"]
    amp = json.loads((run_dir / "amplitude.json").read_text())
    assert amp["bound_holds"]
    assert (run_dir / "amplitude_h0.05.csv").read_text().startswith("h,re_E,im_E,abs_C")


def test_no_cycle_candidates(tmp_path):
    assert run_cli(["candidates", "--config", str(fixture_path("case_N"))], tmp_path) == 0


def small_spectral(tmp_path):
    d = fixture_dict("case_T")
    d["h_list"] = [0.05]
    d["spectral"]["N"] = 400
    return write_cfg(tmp_path, d, "small.json")


def test_reports_are_byte_identical(tmp_path):
    cfgp = str(small_spectral(tmp_path))
    outs = []
    for k, jobs in enumerate(("1", "2")):
        out = tmp_path / f"run{k}"
        assert main(["candidates", "--config", cfgp, "--out", str(out), "--jobs", jobs]) == 0
        status = main(["verify", "--config", cfgp, "--out", str(out), "--jobs", jobs])
        outs.append((out, status))
    (a, sa), (b, sb) = outs
    assert sa == sb
    da, db = next(a.iterdir()), next(b.iterdir())
    assert da.name == db.name
    for f in ("candidates.json", "verify.json", "config.json"):
        assert (da / f).read_bytes() == (db / f).read_bytes()


def test_verify_exit_matches_report(tmp_path):
    cfgp = str(small_spectral(tmp_path))
    status = main(["verify", "--config", cfgp, "--out", str(tmp_path)])
    run_dir = next(p for p in tmp_path.iterdir() if p.is_dir())
    rep = json.loads((run_dir / "verify.json").read_text())
    assert status == (0 if rep["band_empty"] else 3)
    assert rep["per_h"][0]["spectrum"]["metadata"]["class_tol"] == pytest.approx(5e-5)


def test_resonances_writes_csv(tmp_path):
    cfgp = str(small_spectral(tmp_path))
    assert main(["resonances", "--config", cfgp, "--out", str(tmp_path)]) == 0
    run_dir = next(p for p in tmp_path.iterdir() if p.is_dir())
    assert (run_dir / "eigenvalues_h0.05.csv").exists()


def test_console_entry_and_log_env(tmp_path):
    env = {"RA_LOG": "INFO", "PATH": "/usr/bin:/bin"}
    r = subprocess.run([sys.executable, "-m", "resonance_atlas.cli", "analyze", "--config",
                        str(fixture_path("case_N")), "--out", str(tmp_path)],
                       capture_output=True, text=True, env=env)
    assert r.returncode == 0
    assert "INFO" in r.stderr
