from __future__ import annotations

import json
import subprocess
import sys

import pytest

from hdx.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, canonical_digest, dumps, main, parse_rational

TRIANGLE = "a\tb\tc\nb\tc\ta\na\tc\tb\n"


def run(capsys, *argv: str) -> tuple[int, dict]:
    code = main(list(argv))
    return code, json.loads(capsys.readouterr().out)


def test_johnson_certify_report(capsys):
    code, rep = run(capsys, "johnson", "--n", "8", "--eps", "1/2", "--k", "2", "--certify")
    assert code == EXIT_OK and rep["ok"] and rep["exit_code"] == 0
    assert rep["config"]["n"] == 8 and rep["version"]
    assert rep["face_pattern"]["ok"]
    assert rep["certify"]["skeleton_lambda"] == pytest.approx(1 / 7, abs=1e-9)
    assert "wall_clock_s" in rep


def test_bad_eps_is_a_usage_error(capsys):
    code, rep = run(capsys, "johnson", "--n", "8", "--eps", "1/3", "--k", "2")
    assert code == EXIT_USAGE and rep["error"]["type"] == "ValueError"
    with pytest.raises(SystemExit) as exc:
        main(["johnson", "--n", "8", "--eps", "x/y"])
    assert exc.value.code == 2


def test_failed_check_exits_one(capsys):
    code, rep = run(capsys, "cayley", "basify", "--n", "3", "--d", "1")
    assert code == EXIT_FAILED and rep["ok"] is False


def test_out_directory_holds_the_printed_report(tmp_path, capsys):
    code = main(["cob", "worked", "--out", str(tmp_path / "r")])
    printed = capsys.readouterr().out
    assert code == EXIT_OK
    saved = (tmp_path / "r" / "report.json").read_text()
    assert saved == printed
    rep = json.loads(saved)
    assert rep["faces"] == [2, 3, 2] and rep["triangles"] == 7


def test_digest_ignores_wall_clock_only(capsys):
    _, a = run(capsys, "cob", "beta", "--vertices", "4", "--group", "Z3")
    _, b = run(capsys, "cob", "beta", "--vertices", "4", "--group", "Z3")
    assert canonical_digest(a) == canonical_digest(b)
    changed = dict(a, cone_area=a["cone_area"] + 1)
    assert canonical_digest(changed) != canonical_digest(a)
    assert dumps(a) == json.dumps(a, sort_keys=True, indent=2) + "\n"


def test_cob_beta_meets_bound(capsys):
    code, rep = run(capsys, "cob", "beta", "--vertices", "4", "--group", "S3")
    assert code == EXIT_OK
    assert rep["cone_area"] == 1
    assert rep["beta"]["beta_float"] >= 1


def test_cob_beta_unknown_group(capsys):
    code, rep = run(capsys, "cob", "beta", "--group", "Q8")
    assert code == EXIT_USAGE and "Q8" in rep["error"]["message"]


def test_degbound_from_tsv(tmp_path, capsys):
    path = tmp_path / "link.tsv"
    path.write_text(TRIANGLE)
    code, rep = run(capsys, "cayley", "degbound", "--link", str(path), "--n", "2")
    assert code == EXIT_OK and rep["nice"]
    assert rep["report"]["bound"] == 3
    bad = tmp_path / "bad.tsv"
    bad.write_text("a\tb\n")
    code, rep = run(capsys, "cayley", "degbound", "--link", str(bad), "--n", "2")
    assert code == EXIT_USAGE
    code, _ = run(capsys, "cayley", "degbound", "--link", str(tmp_path / "missing.tsv"), "--n", "2")
    assert code == EXIT_USAGE


def test_seed_is_required_for_randomised_commands():
    with pytest.raises(SystemExit):
        main(["cob", "matrix-link"])


def test_grassmann_graphs_ds(capsys):
    code, rep = run(capsys, "grassmann", "graphs", "--kind", "DS", "--l", "3")
    assert code == EXIT_OK
    assert rep["left"] == 28 and rep["degree_left"] == [6, 6]


def test_parse_rational():
    assert str(parse_rational("1/2")) == "1/2"


def test_selftest_console_script():
    proc = subprocess.run([sys.executable, "-m", "hdx", "selftest"], capture_output=True, text=True, timeout=600)
    rep = json.loads(proc.stdout)
    assert proc.returncode == 0 and rep["ok"]
    assert all(r["deterministic"] and r["passed"] for r in rep["runs"])
