import json
from pathlib import Path

import pytest

from bandforge.cli import main

FIX = Path(__file__).resolve().parent.parent / "fixtures"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_inspect_text(capsys):
    code, out, _ = run(capsys, "inspect", FIX / "shift.json")
    assert code == 0
    assert "excess: -1" in out and "annulus-free: yes" in out


def test_inspect_annulus(capsys):
    code, out, _ = run(capsys, "inspect", FIX / "annulus.json", "--json")
    assert code == 0 and json.loads(out)["annulus_free"] == "no"


def test_malformed_input(capsys):
    code, _, err = run(capsys, "inspect", FIX / "malformed.json")
    assert code == 2 and err.startswith("bandforge:")


def test_missing_file(capsys):
    code, _, err = run(capsys, "inspect", FIX / "nope.json")
    assert code == 2 and "no such file" in err


def test_unknown_flag(capsys):
    assert run(capsys, "rips", FIX / "shift.json", "--bogus")[0] == 2


def test_rips_zero_steps(capsys, tmp_path):
    code, _, _ = run(capsys, "rips", FIX / "shift.json", "--max-steps", 0, "--out", tmp_path)
    assert code == 0
    assert len((tmp_path / "trace.jsonl").read_text().splitlines()) == 1


def test_rips_is_byte_stable(capsys, tmp_path):
    for d in ("a", "b"):
        run(capsys, "rips", FIX / "remark3band.json", "--policy", "random", "--seed", 4,
            "--max-steps", 30, "--out", tmp_path / d)
    assert (tmp_path / "a" / "trace.jsonl").read_bytes() == (tmp_path / "b" / "trace.jsonl").read_bytes()


def test_rips_shift_band(capsys, tmp_path):
    run(capsys, "rips", FIX / "shift.json", "--out", tmp_path)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["final_total_width"] == "0" and summary["halted"] == "no_free_arc"


def test_ends_shift(capsys, tmp_path):
    code, out, _ = run(capsys, "ends", FIX / "shift.json", "--samples", 20, "--radius", 12,
                       "--out", tmp_path)
    assert code == 0
    assert (tmp_path / "ends.svg").read_text().startswith("<svg")
    rows = dict(line.split(",")[:2] for line in out.splitlines()[1:])
    assert rows["0"] == "20"


def test_ends_radius_too_small(capsys):
    code, _, err = run(capsys, "ends", FIX / "shift.json", "--radius", 10, "--ladder", "5,10")
    assert code == 2 and "radius" in err


def test_gallery_areas(capsys):
    code, out, _ = run(capsys, "gallery", FIX / "doubling.json", "--areas")
    assert code == 0
    areas = json.loads(out)["areas"]
    assert all(a["inequality"] and a["certificate"] for a in areas[:-2])


def test_gallery_fixed_point(capsys):
    code, out, _ = run(capsys, "gallery", "--fixed-point", "1,1")
    fp = json.loads(out)["fixed_point"]
    assert code == 0 and fp["residual"] < 1e-9 and len(fp["widths"]) == 5


def test_gallery_needs_an_action(capsys):
    assert run(capsys, "gallery")[0] == 2


def test_gallery_step_budget(capsys, monkeypatch):
    monkeypatch.setenv("BANDFORGE_BUDGET", "3")
    code, out, _ = run(capsys, "gallery", "--verify-step", "1,1")
    assert code == 4 and json.loads(out)["verify_step"]["status"] == "exhausted"


def test_spectral_constant(capsys):
    code, out, _ = run(capsys, "spectral", "--constant", "1,1")
    doc = json.loads(out)
    assert code == 0 and 1 < doc["dimension"] < 2
    assert doc["mu"] == pytest.approx(9.966803276449, abs=1e-9)


def test_spectral_hypothesis(capsys):
    code, _, err = run(capsys, "spectral", "--mu", 5, "--lambda", 4)
    assert code == 3 and "hypothesis" in err


def test_spectral_derive(capsys):
    code, out, _ = run(capsys, "spectral", "--constant", "1,1", "--derive")
    assert code == 0 and json.loads(out)["A_derived_matches"] is True
