import json
import subprocess
import sys

import pytest

from treeshift.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def structured(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--format", "structured")
    return code, json.loads(out)


@pytest.mark.parametrize(
    "name, n, count",
    [("one-zero-row", 3, 30), ("full", 2, 8), ("golden-mean", 3, 41), ("golden-mean-string", 4, 8)],
)
def test_blocks_counts(capsys, name, n, count):
    code, out, _ = run(capsys, "blocks", "--builtin", name, "-n", str(n))
    assert code == 0
    assert f"count={count}" in out.splitlines()


def test_blocks_listing(capsys):
    code, data = structured(capsys, "blocks", "--builtin", "golden-mean", "-n", "2", "--list")
    assert code == 0
    assert data["count"] == 5
    assert data["blocks"] == ["0 0 0", "0 0 1", "0 1 0", "0 1 1", "1 0 0"]


def test_structured_output_is_byte_identical(capsys):
    args = ("stability", "--builtin", "golden-mean", "-m", "2", "--seed", "7", "--format", "structured")
    first = run(capsys, *args)
    second = run(capsys, *args)
    assert first == second
    assert json.loads(first[1])["failures"] == 0


def test_shadow_true_success_and_failure(capsys, tmp_path):
    code, data = structured(capsys, "shadow", "--builtin", "golden-mean", "-m", "2", "-N", "3", "--seed", "1")
    assert code == 0
    assert data["membership"] == "InX-certified" and data["tracing"] is True and data["bound"] == 2

    orbit = tmp_path / "converse.txt"
    assert run(capsys, "make-orbit", "--converse", "3", "-o", str(orbit))[0] == 0
    code, data = structured(capsys, "shadow", "--builtin", "one-zero-row", "--orbit", str(orbit))
    assert code == 1
    assert data["membership"] == "NotInX"
    assert data["membership_witness"] == "level 5"


def test_shadow_reports_low_resolution(capsys):
    code, out, _ = run(capsys, "shadow", "--builtin", "golden-mean", "-m", "3", "-n", "1", "--seed", "2")
    assert "warning: resolution 1 is below the bound 3" in out
    assert code in (0, 1)


def test_shadow_true_orbit_file(capsys, tmp_path):
    from random import Random

    from treeshift.formats import dump_orbit
    from treeshift.shadowing import true_orbit
    from treeshift.shifts import full_shift
    from treeshift.trees import Alphabets

    s = full_shift().engine.random_tree(6, Random(0))
    path = tmp_path / "orbit.txt"
    path.write_text(dump_orbit(true_orbit(s, 3, 4, Alphabets.binary(), 2)))
    code, out, _ = run(capsys, "shadow", "--builtin", "full", "--orbit", str(path), "-m", "2")
    assert code == 0
    assert "tracing=true" in out


def test_stability_pipeline_and_refusal(capsys):
    code, data = structured(capsys, "stability", "--builtin", "golden-mean", "-m", "1")
    assert code == 0
    assert data["M"] > max(1, data["resolution"])
    code, data = structured(capsys, "stability", "--builtin", "full", "--runs", "25", "-N", "3")
    assert code == 0 and data["runs"] == 25 and data["failures"] == 0
    code, data = structured(capsys, "stability", "--builtin", "singleton")
    assert code == 1
    assert data["perfect"] is False and data["rigid_block"] == "0"


def test_openness_verdicts(capsys):
    code, data = structured(capsys, "openness", "--builtin", "golden-mean", "--block", "100", "-i", "1",
                            "--probe-depth", "3")
    assert code == 0 and data["OpenCertified"] == 1
    code, data = structured(capsys, "openness", "--builtin", "one-zero-row", "--all-blocks", "-n", "3",
                            "--probe-depth", "4")
    assert code == 0 and data["OpenCertified"] == 60
    code, data = structured(capsys, "openness", "--builtin", "at-most-one-zero", "--block", "0 1 1",
                            "-i", "0", "--probe-depth", "3")
    assert code == 1
    (res,) = data["results"]
    assert res["verdict"] == "NotOpenWitness"
    assert res["outside"] == "1 1 1 0 1 1 1"


def test_openness_inconclusive_on_budget(capsys):
    code, data = structured(capsys, "openness", "--builtin", "at-most-one-zero", "--block", "111", "-i", "0",
                            "--probe-depth", "4", "--budget", "3")
    assert code == 2
    assert data["Inconclusive"] == 1


def test_openness_rejects_non_language_block(capsys):
    code, _, err = run(capsys, "openness", "--builtin", "golden-mean", "--block", "110", "--probe-depth", "3")
    assert code == 3
    assert "not in the language" in err


def test_perfect_and_empty(capsys):
    code, out, _ = run(capsys, "perfect", "--builtin", "full")
    assert code == 0 and "perfect=true" in out
    code, out, _ = run(capsys, "empty", "--builtin", "full")
    assert code == 0 and "empty=false" in out
    code, data = structured(capsys, "perfect", "--builtin", "singleton")
    assert code == 1 and data["rigid"] == ["0"]


def test_gap_headline(capsys):
    code, data = structured(capsys, "gap", "--builtin", "one-zero-row", "--upto", "5")
    assert code == 0
    assert [r["gap"] for r in data["results"]] == [True] * 5
    assert data["finite_type_ruled_out_upto"] == 5
    code, data = structured(capsys, "gap", "--builtin", "golden-mean", "-n", "2")
    assert code == 0 and data["results"][0]["gap"] is False


def test_export_round_trip(capsys, tmp_path):
    path = tmp_path / "gm.txt"
    assert run(capsys, "export", "--builtin", "golden-mean", "-o", str(path))[0] == 0
    code, out, _ = run(capsys, "blocks", "--shift", str(path), "-n", "3")
    assert code == 0 and "count=41" in out
    code, _, err = run(capsys, "export", "--builtin", "one-zero-row")
    assert code == 3 and "no forbidden set" in err


def test_budget_exceeded_is_exit_two(capsys):
    code, data = structured(capsys, "blocks", "--builtin", "full", "-n", "3", "--list", "--budget", "10")
    assert code == 2
    assert "budget" in data["budget_exceeded"]


@pytest.mark.parametrize(
    "argv",
    [
        ["blocks", "--builtin", "full"],
        ["blocks", "--builtin", "nope", "-n", "1"],
        ["blocks", "-n", "2"],
        ["openness", "--builtin", "full", "--probe-depth", "3"],
        ["shadow", "--builtin", "full", "--orbit", "/nonexistent/orbit.txt"],
        ["stability", "--builtin", "one-zero-row"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors_exit_three(capsys, argv):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 3


def test_malformed_orbit_file(capsys, tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("arity=2 labels=0,1 order=2 depth=2\ne: 1 1 1\n")
    code, _, err = run(capsys, "shadow", "--builtin", "full", "--orbit", str(path))
    assert code == 3 and "bad.txt" in err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "treeshift", "blocks", "--builtin", "full", "-n", "3"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[-1] == "count=128"
